//! Vote distribution of a 1–5 rating questionnaire: the share of each note
//! among all votes, as a percentage.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

pub const NOTES: std::ops::RangeInclusive<u8> = 1..=5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoteTable {
    counts: [u64; 5],
}

impl VoteTable {
    /// Counts for notes 1 through 5, in order.
    pub fn new(counts: [u64; 5]) -> Self {
        VoteTable { counts }
    }

    /// Requires exactly the notes 1..=5 as keys.
    pub fn from_map(map: &BTreeMap<u8, u64>) -> Result<Self> {
        if !map.keys().copied().eq(NOTES) {
            return Err(Error::invalid("vote table must list exactly notes 1 to 5"));
        }
        let mut counts = [0; 5];
        for (&note, &votes) in map {
            counts[usize::from(note - 1)] = votes;
        }
        Ok(VoteTable { counts })
    }

    pub fn count(&self, note: u8) -> Option<u64> {
        NOTES
            .contains(&note)
            .then(|| self.counts[usize::from(note - 1)])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoteShare {
    pub note: u8,
    pub votes: u64,
    /// Exact `votes / total * 100`.
    #[serde(serialize_with = "ratio_as_f64")]
    pub raw: Ratio<u64>,
    /// `raw` rounded half-up to an integer.
    pub percent: u64,
}

fn ratio_as_f64<S: serde::Serializer>(
    r: &Ratio<u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

pub fn evalstats(votes: &VoteTable) -> Result<Vec<NoteShare>> {
    let total = votes.total();
    if total == 0 {
        return Err(Error::invalid("no votes"));
    }
    Ok(NOTES
        .zip(votes.counts)
        .map(|(note, count)| {
            let scaled = u128::from(count) * 100;
            let total = u128::from(total);
            // floor(x + 1/2) with x = scaled / total, in integers.
            let percent = ((2 * scaled + total) / (2 * total)) as u64;
            NoteShare {
                note,
                votes: count,
                raw: Ratio::new(count * 100, total as u64),
                percent,
            }
        })
        .collect())
}
