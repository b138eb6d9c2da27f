//! Dataset similarity: PCA on the real data, per-component histogram KL
//! divergence of the synthetic scores from the real ones, and cosine matching
//! of synthetic appliances to real ones.

mod kl;
mod pca;
mod similarity;

pub use kl::{kl_divergence, kl_per_component, kl_per_component_eps, shared_histograms, SMOOTHING_EPS};
pub use pca::{pca_fit, pca_fit_rows, pca_project, PcaModel};
pub use similarity::{cosine_similarity, match_appliances, ApplianceMatch, MatchTable};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FORMAT_VERSION};
use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 6;
pub const DEFAULT_BINS: usize = 100;

/// Right-pads with zeros or crops every signature to exactly `len` samples.
pub fn standardize_lengths(ds: &Dataset, len: usize) -> Result<Dataset> {
    if ds.is_empty() {
        return Err(Error::InvalidInput("cannot standardize an empty dataset".into()));
    }
    if len < 1 {
        return Err(Error::InvalidInput("target length must be >= 1".into()));
    }
    ds.map_samples(|x| {
        let mut out = x[..x.len().min(len)].to_vec();
        out.resize(len, 0.0);
        out
    })
}

/// Scales every signature to unit peak absolute value. All-zero signatures
/// are left alone.
pub fn normalize_amplitudes(ds: &Dataset) -> Result<Dataset> {
    ds.map_samples(|x| {
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            x.iter().map(|v| v / peak).collect()
        } else {
            x.to_vec()
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub components: usize,
    pub bins: usize,
    /// Common signature length; defaults to the longest real signature.
    pub length: Option<usize>,
    pub normalize_amplitude: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            bins: DEFAULT_BINS,
            length: None,
            normalize_amplitude: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub format_version: u32,
    pub n_components: usize,
    pub bins: usize,
    pub length: usize,
    pub real_signatures: usize,
    pub synth_signatures: usize,
    pub kl_per_component: Vec<f64>,
    pub mean_kl: f64,
    pub explained_variance: Vec<f64>,
}

impl ValidationReport {
    /// Plain-text table: one column per principal component plus the mean.
    pub fn to_table(&self) -> String {
        let mut head = String::from("            ");
        let mut kl = String::from("D_KL        ");
        let mut ev = String::from("explained   ");
        for (i, (k, e)) in self.kl_per_component.iter().zip(&self.explained_variance).enumerate() {
            head.push_str(&format!("{:>9}", format!("PC{}", i + 1)));
            kl.push_str(&format!("{k:>9.4}"));
            ev.push_str(&format!("{e:>9.4}"));
        }
        head.push_str(&format!("{:>9}", "mean"));
        kl.push_str(&format!("{:>9.4}", self.mean_kl));
        format!(
            "real: {} signatures, synthetic: {} signatures, length {}, {} bins\n{head}\n{kl}\n{ev}\n",
            self.real_signatures, self.synth_signatures, self.length, self.bins
        )
    }
}

/// Both datasets after length standardization and optional amplitude
/// normalization, ready for PCA.
pub fn prepare(real: &Dataset, synth: &Dataset, opts: &ValidateOptions) -> Result<(Dataset, Dataset)> {
    if real.is_empty() || synth.is_empty() {
        return Err(Error::InvalidInput("both datasets must be nonempty".into()));
    }
    let len = opts
        .length
        .unwrap_or_else(|| real.signatures().iter().map(|s| s.len()).max().unwrap_or(1));
    let mut real = standardize_lengths(real, len)?;
    let mut synth = standardize_lengths(synth, len)?;
    if opts.normalize_amplitude {
        real = normalize_amplitudes(&real)?;
        synth = normalize_amplitudes(&synth)?;
    }
    Ok((real, synth))
}

/// Fits PCA on the real dataset, projects both datasets on it and measures
/// the histogram KL divergence per component.
pub fn validate(real: &Dataset, synth: &Dataset, opts: &ValidateOptions) -> Result<ValidationReport> {
    let (real, synth) = prepare(real, synth, opts)?;
    let model = pca_fit(&real, opts.components)?;
    let real_proj = pca_project(&model, &real)?;
    let synth_proj = pca_project(&model, &synth)?;
    let kl = kl_per_component(&real_proj, &synth_proj, opts.bins)?;
    let mean_kl = kl.iter().sum::<f64>() / kl.len() as f64;
    Ok(ValidationReport {
        format_version: FORMAT_VERSION,
        n_components: opts.components,
        bins: opts.bins,
        length: model.dim(),
        real_signatures: real.len(),
        synth_signatures: synth.len(),
        kl_per_component: kl,
        mean_kl,
        explained_variance: model.explained_variance_ratio().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Manifest, Signature, SignatureKey};
    use crate::rng::derive_stream;

    fn ds(rows: Vec<Vec<f64>>) -> Dataset {
        let sigs = rows
            .into_iter()
            .enumerate()
            .map(|(i, x)| Signature::new(SignatureKey::new(0, i as u32), x, 1.0).unwrap())
            .collect();
        Dataset::new(sigs, Manifest::External).unwrap()
    }

    fn random(seed: u64, n: usize, len: usize) -> Dataset {
        let mut s = derive_stream(seed, 0, 0);
        ds((0..n).map(|_| (0..len).map(|_| s.standard_normal()).collect()).collect())
    }

    #[test]
    fn pad_crop_identity() {
        let d = ds(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]);
        let out = standardize_lengths(&d, 5).unwrap();
        assert_eq!(out.signatures()[0].samples(), &[1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(out.signatures()[1].samples(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let out = standardize_lengths(&d, 4).unwrap();
        assert_eq!(out.signatures()[1].samples(), &[1.0, 2.0, 3.0, 4.0]);
        let same = ds(vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(standardize_lengths(&same, 3).unwrap(), same);
        let empty = Dataset::new(vec![], Manifest::External).unwrap();
        assert!(matches!(standardize_lengths(&empty, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn self_validation_is_zero() {
        let d = random(1, 60, 20);
        let r = validate(&d, &d, &ValidateOptions::default()).unwrap();
        assert_eq!(r.n_components, 6);
        assert_eq!(r.kl_per_component.len(), 6);
        assert!(r.kl_per_component.iter().all(|v| v.abs() < 1e-12));
        assert!(r.mean_kl < 1e-12);
    }

    #[test]
    fn report_mean_is_average() {
        let r = validate(&random(1, 80, 16), &random(2, 80, 16), &ValidateOptions::default()).unwrap();
        let avg = r.kl_per_component.iter().sum::<f64>() / 6.0;
        assert_eq!(r.mean_kl, avg);
        assert!(r.kl_per_component.iter().all(|&v| v >= -1e-12));
        assert!(r.mean_kl > 0.0);
        assert!(r.to_table().contains("PC6"));
    }

    #[test]
    fn scaled_copy_validates_to_zero() {
        let d = random(3, 40, 12);
        let scaled = d.map_samples(|x| x.iter().map(|v| 1000.0 * v).collect()).unwrap();
        let r = validate(&d, &scaled, &ValidateOptions { components: 3, ..Default::default() }).unwrap();
        assert!(r.mean_kl < 1e-9, "{r:?}");
    }
}
