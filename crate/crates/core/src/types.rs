//! Appliance centroids and generation settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Identity of a high sampling rate appliance in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfCentroid {
    /// Number of harmonics.
    pub n: usize,
    /// Centroid of the harmonic cloud in the complex plane.
    pub re0: f64,
    pub im0: f64,
    /// Log-normal envelope shape over harmonic order.
    pub mu: f64,
    pub sigma: f64,
    /// Parity selector: with `d = 1`, harmonics `i > 1` with `(i + m)` even are dropped.
    pub m: u8,
    pub d: u8,
    /// AR(1) coefficient driving spectrum drift.
    pub rho: f64,
    /// Mean cycle amplitude.
    pub a: f64,
    /// Peak to steady-state ratio of the start-up transient.
    pub a_peak: f64,
    /// Transient decay rate per sample.
    pub tau: f64,
}

impl HfCentroid {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.re0, self.im0, self.mu, self.sigma, self.rho, self.a, self.a_peak, self.tau,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("hf centroid has a non-finite coordinate"));
        }
        if self.n < 1 {
            return Err(Error::param("hf centroid needs n >= 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::param(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if !(self.a > 0.0) {
            return Err(Error::param(format!("a must be > 0, got {}", self.a)));
        }
        if !(self.a_peak >= 1.0) {
            return Err(Error::param(format!("a_peak must be >= 1, got {}", self.a_peak)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::param(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.m > 1 || self.d > 1 {
            return Err(Error::param("m and d must be 0 or 1"));
        }
        Ok(())
    }
}

/// Which optional basis factors an LF appliance uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisMask {
    pub p2: bool,
    pub p3: bool,
}

/// Identity of a low sampling rate appliance in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LfCentroid {
    pub a: f64,
    pub a_peak: f64,
    /// Decay constant of the start-up factor, 1/s.
    pub tau: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Primitive cycle duration, seconds.
    pub dt: f64,
    /// Idle time between consecutive cycles, seconds.
    pub dd: f64,
    /// Cycles per signature.
    pub n: usize,
    pub sigma_n: f64,
    pub basis_mask: BasisMask,
}

impl LfCentroid {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("a_peak", self.a_peak),
            ("tau", self.tau),
            ("q0", self.q0),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q3", self.q3),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("dt", self.dt),
            ("dd", self.dd),
            ("sigma_n", self.sigma_n),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.basis_mask.p3 && !(self.q1 > 0.0) {
            return Err(Error::param("q1 must be > 0 when p3 is enabled"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::param("alpha and beta must be > 0"));
        }
        if self.n < 1 {
            return Err(Error::param("lf centroid needs n >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub master_seed: u64,
    /// Diversity variance applied to every sampled parameter.
    pub var_d: f64,
    /// HF samples per mains cycle.
    pub samples_per_cycle: usize,
    /// HF cycles per signature.
    pub cycles_per_signature: usize,
    /// Mains frequency, used only to label HF sampling rates.
    pub mains_hz: f64,
    /// Let the HF cycle amplitude drift as an AR(1) process.
    pub time_correlated_amplitude: bool,
    /// LF sampling rate in Hz.
    pub sample_rate_lf: f64,
    /// Probability of switching off the Beta factor on a cycle.
    pub p_b: f64,
    pub signatures_per_appliance: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            var_d: 0.05,
            samples_per_cycle: 500,
            cycles_per_signature: 10,
            mains_hz: 60.0,
            time_correlated_amplitude: false,
            sample_rate_lf: 1.0,
            p_b: 0.8,
            signatures_per_appliance: 10,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.var_d >= 0.0) || !self.var_d.is_finite() {
            return Err(Error::param(format!("var_d must be finite and >= 0, got {}", self.var_d)));
        }
        if self.samples_per_cycle < 4 {
            return Err(Error::param("samples_per_cycle must be >= 4"));
        }
        if self.cycles_per_signature < 1 {
            return Err(Error::param("cycles_per_signature must be >= 1"));
        }
        if !(self.mains_hz > 0.0) || !self.mains_hz.is_finite() {
            return Err(Error::param("mains_hz must be > 0"));
        }
        if !(self.sample_rate_lf > 0.0) || !self.sample_rate_lf.is_finite() {
            return Err(Error::param("sample_rate_lf must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.p_b) {
            return Err(Error::param(format!("p_b must lie in [0, 1], got {}", self.p_b)));
        }
        if self.signatures_per_appliance < 1 {
            return Err(Error::param("signatures_per_appliance must be >= 1"));
        }
        Ok(())
    }

    /// HF sampling rate in Hz.
    pub fn hf_rate_hz(&self) -> f64 {
        self.samples_per_cycle as f64 * self.mains_hz
    }
}

/// Closed interval `[lo, hi]` for uniform centroid sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

impl UniformRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::param(format!(
                "range for {name} is invalid: [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        let u = stream.unit();
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }
}

/// Poisson draw clamped to at least one.
pub(crate) fn sample_count(stream: &mut RngStream, lambda: f64) -> Result<usize> {
    use rand_distr::{Distribution, Poisson};
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::param(format!("poisson mean {lambda}: {e}")))?;
    let draw: f64 = poisson.sample(stream);
    Ok((draw as usize).max(1))
}
