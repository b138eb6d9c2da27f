use crate::error::{Error, Result};

/// Additive smoothing applied to `Q` when it has empty bins where `P` has mass.
pub const SMOOTHING_EPS: f64 = 1e-10;

/// Histograms of two samples over shared, equal-width bins spanning their
/// joint range, normalized to probability mass. `None` when every value in
/// both samples is the same.
pub fn shared_histograms(p: &[f64], q: &[f64], bins: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = p
        .iter()
        .chain(q)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return None;
    }
    let width = hi - lo;
    let mass = |xs: &[f64]| {
        let mut counts = vec![0usize; bins];
        for &x in xs {
            let idx = (((x - lo) / width) * bins as f64).floor() as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        let n = xs.len() as f64;
        counts.into_iter().map(|c| c as f64 / n).collect::<Vec<_>>()
    };
    Some((mass(p), mass(q)))
}

/// `Σ P log(P/Q)` over probability masses, with `0·log(0/q) = 0`.
///
/// If some bin has `P > 0` and `Q = 0`, `Q` is first smoothed by adding `eps`
/// to every bin and renormalizing; otherwise the sum is taken as is.
pub fn kl_divergence(p: &[f64], q: &[f64], eps: f64) -> f64 {
    assert_eq!(p.len(), q.len(), "mass vectors must have the same length");
    let needs_smoothing = p.iter().zip(q).any(|(&p, &q)| p > 0.0 && q <= 0.0);
    let norm = 1.0 + eps * q.len() as f64;
    p.iter()
        .zip(q)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| {
            let q = if needs_smoothing { (q + eps) / norm } else { q };
            p * (p / q).ln()
        })
        .sum()
}

/// KL divergence of the synthetic scores from the real ones, per component.
/// Both inputs hold one score vector per signature.
pub fn kl_per_component(real: &[Vec<f64>], synth: &[Vec<f64>], bins: usize) -> Result<Vec<f64>> {
    kl_per_component_eps(real, synth, bins, SMOOTHING_EPS)
}

pub fn kl_per_component_eps(real: &[Vec<f64>], synth: &[Vec<f64>], bins: usize, eps: f64) -> Result<Vec<f64>> {
    if real.is_empty() || synth.is_empty() {
        return Err(Error::InvalidInput("both projections must be nonempty".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bins, got {bins}")));
    }
    let k = real[0].len();
    if let Some(bad) = real.iter().chain(synth).find(|v| v.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: bad.len(),
        });
    }
    let column = |rows: &[Vec<f64>], j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok((0..k)
        .map(|j| match shared_histograms(&column(real, j), &column(synth, j), bins) {
            Some((p, q)) => kl_divergence(&p, &q, eps),
            None => 0.0,
        })
        .collect())
}
