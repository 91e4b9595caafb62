//! 2D embedding of a dissimilarity matrix by stress majorization (SMACOF
//! with unit weights).
//!
//! Each step applies the Guttman transform `X <- B(X) X / n`, which never
//! increases raw stress `sum_{i<j} (d_ij - delta_ij)^2`. A step that would
//! increase it (floating-point noise near a fixed point) ends the run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            iterations: 300,
            tolerance: 1e-9,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MdsOutcome {
    pub coords: Vec<[f64; 2]>,
    pub stress: f64,
    /// Stress of the random start followed by the stress after every
    /// accepted iteration.
    pub stress_trace: Vec<f64>,
}

impl MdsOutcome {
    pub fn iterations(&self) -> usize {
        self.stress_trace.len() - 1
    }
}

fn validate(delta: &[Vec<f64>]) -> Result<()> {
    let n = delta.len();
    if n == 0 {
        return Err(Error::invalid("dissimilarity matrix is empty"));
    }
    for (i, row) in delta.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "dissimilarity ({i}, {j}) = {v} is not a finite non-negative number"
                )));
            }
            if i == j && v != 0.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry {i} is {v}, expected 0"
                )));
            }
            if (v - delta[j][i]).abs() > SYMMETRY_EPS {
                return Err(Error::invalid(format!(
                    "dissimilarity matrix is asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Raw stress of `coords` against `delta`.
pub fn stress(coords: &[[f64; 2]], delta: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            let r = distance(coords[i], coords[j]) - delta[i][j];
            total += r * r;
        }
    }
    total
}

fn guttman_transform(coords: &[[f64; 2]], delta: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = coords.len();
    let mut next = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut acc = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distance(coords[i], coords[j]);
            if d > 0.0 {
                // b_ij = -delta/d off the diagonal, b_ii = -sum of the row.
                let b = delta[i][j] / d;
                acc[0] += b * (coords[i][0] - coords[j][0]);
                acc[1] += b * (coords[i][1] - coords[j][1]);
            }
        }
        next[i] = [acc[0] / n as f64, acc[1] / n as f64];
    }
    next
}

pub fn mds_layout(delta: &[Vec<f64>], params: &LayoutParams) -> Result<MdsOutcome> {
    validate(delta)?;
    if params.tolerance.is_nan() || params.tolerance <= 0.0 {
        return Err(Error::invalid("layout tolerance must be positive"));
    }
    let n = delta.len();
    if n == 1 {
        return Ok(MdsOutcome {
            coords: vec![[0.0, 0.0]],
            stress: 0.0,
            stress_trace: vec![0.0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
        .collect();
    let centroid = coords
        .iter()
        .fold([0.0, 0.0], |c, p| [c[0] + p[0], c[1] + p[1]]);
    for p in &mut coords {
        p[0] -= centroid[0] / n as f64;
        p[1] -= centroid[1] / n as f64;
    }

    let mut current = stress(&coords, delta);
    let mut trace = vec![current];
    for _ in 0..params.iterations {
        if current == 0.0 {
            break;
        }
        let next = guttman_transform(&coords, delta);
        let next_stress = stress(&next, delta);
        if next_stress > current {
            break;
        }
        let relative = (current - next_stress) / current;
        coords = next;
        current = next_stress;
        trace.push(current);
        if relative < params.tolerance {
            break;
        }
    }
    Ok(MdsOutcome {
        coords,
        stress: current,
        stress_trace: trace,
    })
}
