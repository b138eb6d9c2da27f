//! High sampling rate signatures.
//!
//! A cycle is built from a one-sided harmonic spectrum `z_0..z_n`. Each
//! harmonic sits at `(re0, im0) + r·e^{jφ}` in the complex plane, is pushed
//! into the lower half-plane, scaled by a log-normal envelope over the
//! harmonic order and optionally dropped by parity. The radii and angles drift
//! from cycle to cycle as folded AR(1) processes. Cycles are turned into
//! waveforms by an inverse DFT, normalized to the cycle amplitude,
//! concatenated, and shaped by an exponential start-up transient.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataset::{grid_keys, run_keyed, CentroidSet, Dataset, GenerationManifest, Manifest};
use crate::dataset::{Schedule, Signature, SignatureKey};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, sample_folded_normal, RngStream, StreamDomain};
use crate::types::{sample_count, GenConfig, HfCentroid, UniformRange};

/// One cycle's one-sided spectrum. Index 0 is DC, index `i` the i-th harmonic.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFrame {
    z: Vec<Complex64>,
}

impl SpectrumFrame {
    /// Wraps a raw spectrum. The DC term is forced to zero.
    pub fn from_harmonics(mut z: Vec<Complex64>) -> Self {
        if let Some(dc) = z.first_mut() {
            *dc = Complex64::new(0.0, 0.0);
        }
        Self { z }
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn harmonics(&self) -> usize {
        self.z.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.z.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// Per-harmonic radii and angles of the spectrum drift, plus the current
/// cycle amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ArState {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub amplitude: f64,
}

impl ArState {
    /// Starts the process from the noise itself: `r = |ε|`, `φ = |ε'| mod 2π`.
    fn init(n: usize, var_d: f64, amplitude: f64, stream: &mut RngStream) -> Self {
        let r = (0..n).map(|_| stream.normal(0.0, var_d).abs()).collect();
        let phi = (0..n)
            .map(|_| stream.normal(0.0, var_d).abs() % TAU)
            .collect();
        Self { r, phi, amplitude }
    }

    fn advance(&mut self, rho: f64, var_d: f64, stream: &mut RngStream) {
        for r in &mut self.r {
            *r = ar1_step(*r, rho, stream.normal(0.0, var_d), false);
        }
        for phi in &mut self.phi {
            *phi = ar1_step(*phi, rho, stream.normal(0.0, var_d), true);
        }
    }
}

/// Folded AR(1) update `|rho·prev + eps|`, reduced into `[0, 2π)` when
/// `wrap_2pi` is set.
pub fn ar1_step(prev: f64, rho: f64, eps: f64, wrap_2pi: bool) -> f64 {
    let next = (rho * prev + eps).abs();
    if wrap_2pi {
        next % TAU
    } else {
        next
    }
}

/// Log-normal density over harmonic order, evaluated at `i >= 1`.
pub fn lognormal_envelope(i: usize, mu: f64, sigma: f64) -> f64 {
    let x = i as f64;
    let d = x.ln() - mu;
    (-(d * d) / (2.0 * sigma * sigma)).exp() / (x * sigma * (2.0 * PI).sqrt())
}

/// Whether harmonic `i` is removed by the parity rule.
pub fn is_dropped(i: usize, m: u8, d: u8) -> bool {
    d == 1 && i > 1 && (i + m as usize) % 2 == 0
}

pub fn build_spectrum_frame(c: &HfCentroid, state: &ArState) -> Result<SpectrumFrame> {
    if state.r.len() != c.n || state.phi.len() != c.n {
        return Err(Error::InvalidArgument(format!(
            "AR state has {} radii and {} angles, centroid has {} harmonics",
            state.r.len(),
            state.phi.len(),
            c.n
        )));
    }
    let mut z = Vec::with_capacity(c.n + 1);
    z.push(Complex64::new(0.0, 0.0));
    for i in 1..=c.n {
        if is_dropped(i, c.m, c.d) {
            z.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let (r, phi) = (state.r[i - 1], state.phi[i - 1]);
        let re = c.re0 + r * phi.cos();
        let im = -(c.im0 + r * phi.sin()).abs();
        let scale = lognormal_envelope(i, c.mu, c.sigma);
        z.push(Complex64::new(re * scale, im * scale));
    }
    Ok(SpectrumFrame { z })
}

/// Inverse transform of one-sided spectra into fixed-length cycles.
#[derive(Clone)]
pub struct CycleSynth {
    len: usize,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CycleSynth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CycleSynth").field("len", &self.len).finish()
    }
}

impl CycleSynth {
    pub fn new(samples_per_cycle: usize) -> Self {
        let ifft = FftPlanner::new().plan_fft_inverse(samples_per_cycle);
        Self {
            len: samples_per_cycle,
            ifft,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Complex inverse DFT of the Hermitian extension of `frame`. The
    /// imaginary parts are zero up to rounding.
    pub fn inverse(&self, frame: &SpectrumFrame) -> Result<Vec<Complex64>> {
        let n = frame.harmonics();
        if 2 * n > self.len {
            return Err(Error::param(format!(
                "{n} harmonics need at least {} samples per cycle, got {}",
                2 * n,
                self.len
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (i, &z) in frame.z().iter().enumerate().skip(1) {
            buf[i] += z;
            buf[self.len - i] += z.conj();
        }
        self.ifft.process(&mut buf);
        Ok(buf)
    }

    /// Real waveform scaled so that its peak absolute sample equals `amplitude`.
    pub fn synth(&self, frame: &SpectrumFrame, amplitude: f64) -> Result<Vec<f64>> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::param(format!("cycle amplitude must be > 0, got {amplitude}")));
        }
        if frame.is_zero() {
            return Err(Error::DegenerateSpectrum);
        }
        let raw: Vec<f64> = self.inverse(frame)?.into_iter().map(|c| c.re).collect();
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(raw.into_iter().map(|v| amplitude * (v / peak)).collect())
    }
}

pub fn synth_cycle(frame: &SpectrumFrame, amplitude: f64, samples_per_cycle: usize) -> Result<Vec<f64>> {
    CycleSynth::new(samples_per_cycle).synth(frame, amplitude)
}

/// `1 + (A - 1)·exp(-tau·t)`. Exactly `A` at `t = 0` and never increasing in `t`.
pub fn transient_multiplier(a_peak: f64, tau: f64, t: usize) -> f64 {
    let decay = (-tau * t as f64).exp();
    (a_peak - 1.0).mul_add(decay, 1.0)
}

pub fn apply_transient(w: &[f64], a_peak: f64, tau: f64) -> Vec<f64> {
    w.iter()
        .enumerate()
        .map(|(t, &v)| v * transient_multiplier(a_peak, tau, t))
        .collect()
}

/// Intermediate products of one HF signature, before the transient.
#[derive(Clone, Debug)]
pub struct HfCycles {
    pub frames: Vec<SpectrumFrame>,
    pub amplitudes: Vec<f64>,
    pub cycles: Vec<Vec<f64>>,
}

impl HfCycles {
    pub fn concat(&self) -> Vec<f64> {
        self.cycles.concat()
    }
}

pub fn synth_hf_cycles(c: &HfCentroid, cfg: &GenConfig, stream: &mut RngStream) -> Result<HfCycles> {
    c.validate()?;
    cfg.validate()?;
    synth_cycles_with(&CycleSynth::new(cfg.samples_per_cycle), c, cfg, stream)
}

fn synth_cycles_with(
    synth: &CycleSynth,
    c: &HfCentroid,
    cfg: &GenConfig,
    stream: &mut RngStream,
) -> Result<HfCycles> {
    let var_d = cfg.var_d;
    let amplitude = sample_folded_normal(stream, c.a, var_d)?;
    let mut state = ArState::init(c.n, var_d, amplitude, stream);

    let p = cfg.cycles_per_signature;
    let mut out = HfCycles {
        frames: Vec::with_capacity(p),
        amplitudes: Vec::with_capacity(p),
        cycles: Vec::with_capacity(p),
    };
    for t in 0..p {
        state.advance(c.rho, var_d, stream);
        if cfg.time_correlated_amplitude && t > 0 {
            // AR(1) around the centroid amplitude, folded like the radii.
            let eps = stream.normal(0.0, var_d);
            state.amplitude = (c.rho * state.amplitude + (1.0 - c.rho) * c.a + eps).abs();
        }
        let frame = build_spectrum_frame(c, &state)?;
        let cycle = synth.synth(&frame, state.amplitude)?;
        out.frames.push(frame);
        out.amplitudes.push(state.amplitude);
        out.cycles.push(cycle);
    }
    Ok(out)
}

pub fn synth_hf_signature(
    c: &HfCentroid,
    cfg: &GenConfig,
    key: SignatureKey,
    stream: &mut RngStream,
) -> Result<Signature> {
    let cycles = synth_hf_cycles(c, cfg, stream)?;
    let samples = apply_transient(&cycles.concat(), c.a_peak, c.tau);
    Signature::new(key, samples, cfg.hf_rate_hz())
}

/// Uniform bounds for every continuous HF centroid coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfCentroidRanges {
    pub re0: UniformRange,
    pub im0: UniformRange,
    pub mu: UniformRange,
    pub sigma: UniformRange,
    pub rho: UniformRange,
    pub a: UniformRange,
    pub a_peak: UniformRange,
    pub tau: UniformRange,
    /// Poisson mean of the harmonic count.
    pub lambda: f64,
}

impl Default for HfCentroidRanges {
    fn default() -> Self {
        Self {
            re0: UniformRange::new(-1.0, 1.0),
            im0: UniformRange::new(-1.0, 1.0),
            mu: UniformRange::new(0.0, 1.5),
            sigma: UniformRange::new(0.3, 1.5),
            rho: UniformRange::new(0.0, 0.9),
            a: UniformRange::new(0.5, 5.0),
            a_peak: UniformRange::new(1.0, 3.0),
            tau: UniformRange::new(5e-4, 5e-3),
            lambda: 15.0,
        }
    }
}

impl HfCentroidRanges {
    fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("re0", &self.re0),
            ("im0", &self.im0),
            ("mu", &self.mu),
            ("sigma", &self.sigma),
            ("rho", &self.rho),
            ("a", &self.a),
            ("a_peak", &self.a_peak),
            ("tau", &self.tau),
        ] {
            r.validate(name)?;
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::param(format!("poisson mean must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

pub fn sample_hf_centroids(
    k: usize,
    ranges: &HfCentroidRanges,
    stream: &mut RngStream,
) -> Result<Vec<HfCentroid>> {
    ranges.validate()?;
    (0..k)
        .map(|_| {
            let c = HfCentroid {
                n: sample_count(stream, ranges.lambda)?,
                re0: ranges.re0.sample(stream),
                im0: ranges.im0.sample(stream),
                mu: ranges.mu.sample(stream),
                sigma: ranges.sigma.sample(stream),
                m: (stream.unit() < 0.5) as u8,
                d: (stream.unit() < 0.5) as u8,
                rho: ranges.rho.sample(stream),
                a: ranges.a.sample(stream),
                a_peak: ranges.a_peak.sample(stream),
                tau: ranges.tau.sample(stream),
            };
            c.validate()?;
            Ok(c)
        })
        .collect()
}

/// Centroid stream for a master seed.
pub fn centroid_stream(master_seed: u64) -> RngStream {
    RngStream::new(master_seed, StreamDomain::HfCentroids, 0, 0)
}

/// `cfg.signatures_per_appliance` signatures for every centroid.
pub fn generate_hf_dataset(
    centroids: &[HfCentroid],
    cfg: &GenConfig,
    schedule: Schedule,
) -> Result<Dataset> {
    cfg.validate()?;
    for c in centroids {
        c.validate()?;
    }
    let synth = CycleSynth::new(cfg.samples_per_cycle);
    let keys = grid_keys(centroids.len(), cfg.signatures_per_appliance);
    let signatures = run_keyed(&keys, schedule, |key| {
        let c = &centroids[key.appliance as usize];
        let mut stream = derive_stream(cfg.master_seed, key.appliance, key.signature);
        let cycles = synth_cycles_with(&synth, c, cfg, &mut stream)?;
        let samples = apply_transient(&cycles.concat(), c.a_peak, c.tau);
        Signature::new(key, samples, cfg.hf_rate_hz())
    })?;
    let manifest = Manifest::Generated(GenerationManifest {
        config: cfg.clone(),
        centroids: CentroidSet::Hf(centroids.to_vec()),
    });
    Dataset::new(signatures, manifest)
}
