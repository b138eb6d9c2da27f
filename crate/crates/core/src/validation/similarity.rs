use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot(x, y) / (nx * ny)).clamp(-1.0, 1.0))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn group(ds: &Dataset) -> BTreeMap<u32, Vec<&[f64]>> {
    let mut g: BTreeMap<u32, Vec<&[f64]>> = BTreeMap::new();
    for s in ds.signatures() {
        g.entry(s.appliance_id).or_default().push(s.samples());
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApplianceMatch {
    pub synth_appliance: u32,
    pub real_appliance: u32,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchTable {
    /// `scores[s][r]`: similarity of synthetic appliance `s` to real appliance `r`.
    pub scores: Vec<Vec<f64>>,
    pub matches: Vec<ApplianceMatch>,
}

/// Finds, for every synthetic appliance, the most similar real appliance.
///
/// Each synthetic signature is compared with every signature of a real
/// appliance and keeps its best cosine similarity; the appliance-level score
/// is the mean of those over the synthetic appliance's signatures. Ties go to
/// the lowest real appliance id.
pub fn match_appliances(synth: &Dataset, real: &Dataset) -> Result<MatchTable> {
    if synth.is_empty() || real.is_empty() {
        return Err(Error::InvalidInput("both datasets must be nonempty".into()));
    }
    let synth_groups = group(synth);
    let real_groups = group(real);

    let mut scores = Vec::with_capacity(synth_groups.len());
    let mut matches = Vec::with_capacity(synth_groups.len());
    for (&sid, synth_sigs) in &synth_groups {
        let mut row = Vec::with_capacity(real_groups.len());
        for real_sigs in real_groups.values() {
            let mut total = 0.0;
            for x in synth_sigs {
                let mut best = f64::NEG_INFINITY;
                for y in real_sigs {
                    best = best.max(cosine_similarity(x, y)?);
                }
                total += best;
            }
            row.push(total / synth_sigs.len() as f64);
        }
        let (best_idx, &best) = row
            .iter()
            .enumerate()
            .fold((0, &row[0]), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        let real_id = *real_groups.keys().nth(best_idx).expect("index within groups");
        matches.push(ApplianceMatch {
            synth_appliance: sid,
            real_appliance: real_id,
            similarity: best,
        });
        scores.push(row);
    }
    Ok(MatchTable { scores, matches })
}
