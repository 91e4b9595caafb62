use serde::{Deserialize, Serialize};

use crate::corpus::ConceptId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CloudEntry {
    pub concept: ConceptId,
    pub pertinence: f64,
    pub font_size: f64,
}

/// Maps pertinence linearly onto `[font_min, font_max]`, preserving input
/// order. A cloud whose pertinences are all equal sits at the midpoint.
pub fn tag_cloud_sizes(
    pertinences: &[(ConceptId, f64)],
    font_min: f64,
    font_max: f64,
) -> Result<Vec<CloudEntry>> {
    if pertinences.is_empty() {
        return Err(Error::invalid("tag cloud needs at least one concept"));
    }
    if !(font_min.is_finite() && font_max.is_finite() && font_min <= font_max) {
        return Err(Error::invalid(format!(
            "bad font range [{font_min}, {font_max}]"
        )));
    }
    if let Some((c, p)) = pertinences.iter().find(|(_, p)| !p.is_finite()) {
        return Err(Error::invalid(format!("pertinence of concept {c} is {p}")));
    }
    let lo = pertinences
        .iter()
        .map(|&(_, p)| p)
        .fold(f64::INFINITY, f64::min);
    let hi = pertinences
        .iter()
        .map(|&(_, p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    Ok(pertinences
        .iter()
        .map(|&(concept, pertinence)| {
            let font_size = if span > 0.0 {
                let t = (pertinence - lo) / span;
                (font_min + t * (font_max - font_min)).clamp(font_min, font_max)
            } else {
                (font_min + font_max) / 2.0
            };
            CloudEntry {
                concept,
                pertinence,
                font_size,
            }
        })
        .collect())
}
