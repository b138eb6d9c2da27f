use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GenConfig, HfCentroid, LfCentroid};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignatureKey {
    pub appliance: u32,
    pub signature: u32,
}

impl SignatureKey {
    pub const fn new(appliance: u32, signature: u32) -> Self {
        Self {
            appliance,
            signature,
        }
    }
}

/// One labeled sample sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub appliance_id: u32,
    pub signature_id: u32,
    samples: Vec<f64>,
    rate_hz: f64,
}

impl Signature {
    pub fn new(key: SignatureKey, samples: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput(format!(
                "signature ({}, {}) has no samples",
                key.appliance, key.signature
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "signature ({}, {}) has a non-finite sample at index {i}",
                key.appliance, key.signature
            )));
        }
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(Error::InvalidInput(format!("sampling rate must be > 0, got {rate_hz}")));
        }
        Ok(Self {
            appliance_id: key.appliance,
            signature_id: key.signature,
            samples,
            rate_hz,
        })
    }

    pub fn key(&self) -> SignatureKey {
        SignatureKey::new(self.appliance_id, self.signature_id)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Same labels, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Signature::new(self.key(), samples, self.rate_hz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Hf,
    Lf,
}

/// Centroids of one generator family, tagged by kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "centroids", rename_all = "lowercase")]
pub enum CentroidSet {
    Hf(Vec<HfCentroid>),
    Lf(Vec<LfCentroid>),
}

impl CentroidSet {
    pub fn kind(&self) -> SignalKind {
        match self {
            CentroidSet::Hf(_) => SignalKind::Hf,
            CentroidSet::Lf(_) => SignalKind::Lf,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CentroidSet::Hf(c) => c.len(),
            CentroidSet::Lf(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything needed to regenerate a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub config: GenConfig,
    #[serde(flatten)]
    pub centroids: CentroidSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum Manifest {
    /// Data ingested from outside, e.g. a real measurement export.
    External,
    Generated(GenerationManifest),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    signatures: Vec<Signature>,
    manifest: Manifest,
}

impl Dataset {
    /// Checks that appliance ids cover `0..K` and that no key repeats.
    pub fn new(signatures: Vec<Signature>, manifest: Manifest) -> Result<Self> {
        let mut keys = BTreeSet::new();
        let mut appliances = BTreeSet::new();
        for s in &signatures {
            if !keys.insert(s.key()) {
                return Err(Error::Integrity(format!(
                    "duplicate (appliance_id, signature_id) = ({}, {})",
                    s.appliance_id, s.signature_id
                )));
            }
            appliances.insert(s.appliance_id);
        }
        if let Some(&max) = appliances.last() {
            if max as usize + 1 != appliances.len() {
                return Err(Error::Integrity(format!(
                    "appliance ids must form a contiguous range starting at 0 ({} distinct ids, max {max})",
                    appliances.len()
                )));
            }
        }
        Ok(Self {
            signatures,
            manifest,
        })
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn appliance_count(&self) -> usize {
        self.signatures
            .iter()
            .map(|s| s.appliance_id as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Applies `f` to every signature's samples, keeping labels and manifest.
    pub fn map_samples(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Dataset> {
        let signatures = self
            .signatures
            .iter()
            .map(|s| s.with_samples(f(s.samples())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            signatures,
            manifest: self.manifest.clone(),
        })
    }
}

/// How per-signature generation work is scheduled. Both schedules produce
/// identical output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    #[default]
    Parallel,
}

/// Runs `f` over `keys` and returns results in key order.
pub(crate) fn run_keyed<T, F>(keys: &[SignatureKey], schedule: Schedule, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SignatureKey) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    match schedule {
        Schedule::Sequential => keys.iter().map(|&k| f(k)).collect(),
        Schedule::Parallel => keys.par_iter().map(|&k| f(k)).collect(),
    }
}

/// `appliances x per_appliance` keys, appliance-major.
pub(crate) fn grid_keys(appliances: usize, per_appliance: usize) -> Vec<SignatureKey> {
    (0..appliances as u32)
        .flat_map(|a| (0..per_appliance as u32).map(move |s| SignatureKey::new(a, s)))
        .collect()
}
