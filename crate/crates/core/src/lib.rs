//! Synthetic appliance load signatures for energy disaggregation.
//!
//! Two generators are provided: [`hf`] builds high sampling rate current
//! waveforms from randomized harmonic spectra, and [`lf`] builds low sampling
//! rate (RMS) power traces from products of simple basis functions. The
//! [`validation`] module compares any two datasets through PCA projections and
//! per-component KL divergence, and [`io`] / [`cli`] handle CSV exchange,
//! provenance manifests and the command-line front end.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod hf;
pub mod io;
pub mod lf;
pub mod rng;
pub mod types;
pub mod validation;

pub use dataset::{Dataset, Manifest, Signature, SignatureKey};
pub use error::{Error, Result};
pub use rng::{derive_stream, sample_folded_normal, RngStream};
pub use types::{GenConfig, HfCentroid, LfCentroid, UniformRange};
