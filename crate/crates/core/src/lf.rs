//! Low sampling rate (RMS) signatures.
//!
//! A signature is a run of primitive cycles separated by idle gaps. Each
//! cycle is the pointwise product of up to five basis factors:
//!
//! | factor | shape |
//! |--------|-------|
//! | p1 | constant amplitude `a` |
//! | p2 | start-up decay `1 + A·exp(-τt)` |
//! | p3 | `1 + h(t)`, `h` the impulse response of `q0 / (q1 s² + q2 s + q3)` |
//! | p4 | per-sample noise `N(1, σ_n²)` |
//! | p5 | per-sample `Beta(α, β)` draw |
//!
//! p1 and p4 are always on, p2 and p3 follow the appliance's basis mask, and
//! p5 is switched per cycle.

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dataset::{grid_keys, run_keyed, CentroidSet, Dataset, GenerationManifest, Manifest};
use crate::dataset::{Schedule, Signature, SignatureKey};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, sample_folded_normal, RngStream, StreamDomain};
use crate::types::{sample_count, BasisMask, GenConfig, LfCentroid, UniformRange};

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveCycleParams {
    pub a: f64,
    pub a_peak: f64,
    pub tau: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma_n: f64,
    pub dt_samples: usize,
    pub use_p2: bool,
    pub use_p3: bool,
    pub use_p5: bool,
}

impl PrimitiveCycleParams {
    pub fn validate(&self) -> Result<()> {
        if self.dt_samples < 1 {
            return Err(Error::param("a primitive cycle needs at least one sample"));
        }
        for (name, v) in [
            ("a", self.a),
            ("a_peak", self.a_peak),
            ("tau", self.tau),
            ("q0", self.q0),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q3", self.q3),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma_n", self.sigma_n),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.use_p3 && !(self.q1 > 0.0) {
            return Err(Error::param("q1 must be > 0 when p3 is enabled"));
        }
        if self.use_p5 && !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::param("alpha and beta must be > 0 when p5 is enabled"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LfSignaturePlan {
    pub cycles: Vec<PrimitiveCycleParams>,
    /// Zero samples appended after each cycle except the last.
    pub gaps: Vec<usize>,
    pub rate_hz: f64,
}

impl LfSignaturePlan {
    pub fn validate(&self) -> Result<()> {
        if self.cycles.is_empty() {
            return Err(Error::param("a signature plan needs at least one cycle"));
        }
        if self.gaps.len() + 1 != self.cycles.len() {
            return Err(Error::param(format!(
                "{} cycles need {} gaps, got {}",
                self.cycles.len(),
                self.cycles.len() - 1,
                self.gaps.len()
            )));
        }
        if !(self.rate_hz > 0.0) || !self.rate_hz.is_finite() {
            return Err(Error::param("sampling rate must be > 0"));
        }
        self.cycles.iter().try_for_each(PrimitiveCycleParams::validate)
    }

    /// Sample count of the assembled signature.
    pub fn total_len(&self) -> usize {
        self.cycles.iter().map(|c| c.dt_samples).sum::<usize>() + self.gaps.iter().sum::<usize>()
    }

    /// Half-open sample ranges of the idle gaps in the assembled signature.
    pub fn gap_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut at = 0;
        self.cycles
            .iter()
            .zip(&self.gaps)
            .map(|(c, &g)| {
                at += c.dt_samples;
                let r = at..at + g;
                at += g;
                r
            })
            .collect()
    }

    pub fn mean_amplitude(&self) -> f64 {
        self.cycles.iter().map(|c| c.a).sum::<f64>() / self.cycles.len() as f64
    }
}

/// Sample times in seconds for `len` samples at `rate_hz`.
pub fn time_grid(len: usize, rate_hz: f64) -> Vec<f64> {
    (0..len).map(|k| k as f64 / rate_hz).collect()
}

pub fn eval_p2(a_peak: f64, tau: f64, t: &[f64]) -> Vec<f64> {
    t.iter().map(|&t| 1.0 + a_peak * (-tau * t).exp()).collect()
}

/// Impulse response of `q0 / (q1 s² + q2 s + q3)`, solved in closed form
/// from the roots of the denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SecondOrderResponse {
    /// Roots `s1 != s2`, both real.
    Overdamped { gain: f64, s1: f64, s2: f64 },
    /// Double root `s0`.
    Critical { gain: f64, s0: f64 },
    /// Roots `sigma ± j·omega`.
    Underdamped { gain: f64, sigma: f64, omega: f64 },
}

impl SecondOrderResponse {
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self> {
        if !(q1 != 0.0) || !q1.is_finite() {
            return Err(Error::param(format!("q1 must be nonzero, got {q1}")));
        }
        let gain = q0 / q1;
        let center = -q2 / (2.0 * q1);
        let disc = q2 * q2 - 4.0 * q1 * q3;
        let half_width = disc.abs().sqrt() / (2.0 * q1.abs());
        Ok(if disc > 0.0 {
            Self::Overdamped {
                gain,
                s1: center + half_width,
                s2: center - half_width,
            }
        } else if disc == 0.0 {
            Self::Critical { gain, s0: center }
        } else {
            Self::Underdamped {
                gain,
                sigma: center,
                omega: half_width,
            }
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Overdamped { gain, s1, s2 } => {
                // (e^{s1 t} - e^{s2 t}) / (s1 - s2) = e^{c t} sinh(g t) / g
                let c = 0.5 * (s1 + s2);
                let g = 0.5 * (s1 - s2);
                let x = g * t;
                let shape = if x < 20.0 {
                    (c * t).exp() * x.sinh()
                } else {
                    0.5 * (((c + g) * t).exp() - ((c - g) * t).exp())
                };
                gain * shape / g
            }
            Self::Critical { gain, s0 } => gain * t * (s0 * t).exp(),
            Self::Underdamped { gain, sigma, omega } => {
                gain / omega * (sigma * t).exp() * (omega * t).sin()
            }
        }
    }
}

pub fn eval_p3(q0: f64, q1: f64, q2: f64, q3: f64, t: &[f64]) -> Result<Vec<f64>> {
    let h = SecondOrderResponse::new(q0, q1, q2, q3)?;
    Ok(t.iter().map(|&t| 1.0 + h.eval(t)).collect())
}

pub fn synth_primitive_cycle(
    p: &PrimitiveCycleParams,
    rate_hz: f64,
    stream: &mut RngStream,
) -> Result<Vec<f64>> {
    p.validate()?;
    let t = time_grid(p.dt_samples, rate_hz);
    let mut w = vec![p.a; p.dt_samples];
    if p.use_p2 {
        for (w, f) in w.iter_mut().zip(eval_p2(p.a_peak, p.tau, &t)) {
            *w *= f;
        }
    }
    if p.use_p3 {
        for (w, f) in w.iter_mut().zip(eval_p3(p.q0, p.q1, p.q2, p.q3, &t)?) {
            *w *= f;
        }
    }
    for w in w.iter_mut() {
        *w *= 1.0 + p.sigma_n * stream.standard_normal();
    }
    if p.use_p5 {
        let beta = Beta::new(p.alpha, p.beta)
            .map_err(|e| Error::param(format!("beta({}, {}): {e}", p.alpha, p.beta)))?;
        for w in w.iter_mut() {
            *w *= beta.sample(stream);
        }
    }
    Ok(w)
}

/// Seconds to samples, rounding half up.
fn to_samples(seconds: f64, rate_hz: f64) -> usize {
    (seconds * rate_hz + 0.5).floor() as usize
}

pub fn plan_lf_signature(c: &LfCentroid, cfg: &GenConfig, stream: &mut RngStream) -> Result<LfSignaturePlan> {
    c.validate()?;
    cfg.validate()?;
    let var = cfg.var_d;
    let rate = cfg.sample_rate_lf;
    let mut draw = |mean: f64| sample_folded_normal(stream, mean, var);

    let mut cycles = Vec::with_capacity(c.n);
    let mut gaps = Vec::with_capacity(c.n - 1);
    for i in 0..c.n {
        cycles.push(PrimitiveCycleParams {
            a: draw(c.a)?,
            a_peak: draw(c.a_peak)?,
            tau: draw(c.tau)?,
            q0: draw(c.q0)?,
            q1: draw(c.q1)?,
            q2: draw(c.q2)?,
            q3: draw(c.q3)?,
            alpha: draw(c.alpha)?,
            beta: draw(c.beta)?,
            sigma_n: draw(c.sigma_n)?,
            dt_samples: to_samples(draw(c.dt)?, rate).max(1),
            use_p2: c.basis_mask.p2,
            use_p3: c.basis_mask.p3,
            use_p5: true,
        });
        if i + 1 < c.n {
            gaps.push(to_samples(draw(c.dd)?, rate));
        }
    }

    let mean_a = cycles.iter().map(|p| p.a).sum::<f64>() / cycles.len() as f64;
    for p in &mut cycles {
        let switched_off = stream.unit() < cfg.p_b;
        p.use_p5 = !switched_off && p.a <= mean_a;
    }

    let plan = LfSignaturePlan {
        cycles,
        gaps,
        rate_hz: rate,
    };
    plan.validate()?;
    Ok(plan)
}

pub fn assemble_signature(plan: &LfSignaturePlan, key: SignatureKey, stream: &mut RngStream) -> Result<Signature> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.total_len());
    for (i, p) in plan.cycles.iter().enumerate() {
        out.extend(synth_primitive_cycle(p, plan.rate_hz, stream)?);
        if let Some(&gap) = plan.gaps.get(i) {
            out.resize(out.len() + gap, 0.0);
        }
    }
    Signature::new(key, out, plan.rate_hz)
}

/// Plans and assembles one signature from a single stream.
pub fn synth_lf_signature(
    c: &LfCentroid,
    cfg: &GenConfig,
    key: SignatureKey,
    stream: &mut RngStream,
) -> Result<(LfSignaturePlan, Signature)> {
    let plan = plan_lf_signature(c, cfg, stream)?;
    let sig = assemble_signature(&plan, key, stream)?;
    Ok((plan, sig))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LfCentroidRanges {
    pub a: UniformRange,
    pub a_peak: UniformRange,
    pub tau: UniformRange,
    pub q0: UniformRange,
    pub q1: UniformRange,
    pub q2: UniformRange,
    pub q3: UniformRange,
    pub alpha: UniformRange,
    pub beta: UniformRange,
    pub dt: UniformRange,
    pub dd: UniformRange,
    pub sigma_n: UniformRange,
    /// Poisson mean of the cycle count.
    pub lambda_n: f64,
    pub p2_probability: f64,
    pub p3_probability: f64,
}

impl Default for LfCentroidRanges {
    fn default() -> Self {
        Self {
            a: UniformRange::new(0.2, 1.0),
            a_peak: UniformRange::new(0.0, 2.0),
            tau: UniformRange::new(0.01, 0.2),
            q0: UniformRange::new(0.0, 2.0),
            q1: UniformRange::new(0.5, 2.0),
            q2: UniformRange::new(0.1, 2.0),
            q3: UniformRange::new(0.5, 3.0),
            alpha: UniformRange::new(0.5, 5.0),
            beta: UniformRange::new(0.5, 5.0),
            dt: UniformRange::new(20.0, 300.0),
            dd: UniformRange::new(10.0, 200.0),
            sigma_n: UniformRange::new(0.0, 0.05),
            lambda_n: 3.0,
            p2_probability: 0.8,
            p3_probability: 0.3,
        }
    }
}

impl LfCentroidRanges {
    fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("a", &self.a),
            ("a_peak", &self.a_peak),
            ("tau", &self.tau),
            ("q0", &self.q0),
            ("q1", &self.q1),
            ("q2", &self.q2),
            ("q3", &self.q3),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("dt", &self.dt),
            ("dd", &self.dd),
            ("sigma_n", &self.sigma_n),
        ] {
            r.validate(name)?;
            if r.lo < 0.0 {
                return Err(Error::param(format!("range for {name} must be nonnegative")));
            }
        }
        if !(self.lambda_n > 0.0) || !self.lambda_n.is_finite() {
            return Err(Error::param(format!("poisson mean must be > 0, got {}", self.lambda_n)));
        }
        for p in [self.p2_probability, self.p3_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("basis probability must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

pub fn sample_lf_centroids(k: usize, ranges: &LfCentroidRanges, stream: &mut RngStream) -> Result<Vec<LfCentroid>> {
    ranges.validate()?;
    (0..k)
        .map(|_| {
            let c = LfCentroid {
                n: sample_count(stream, ranges.lambda_n)?,
                a: ranges.a.sample(stream),
                a_peak: ranges.a_peak.sample(stream),
                tau: ranges.tau.sample(stream),
                q0: ranges.q0.sample(stream),
                q1: ranges.q1.sample(stream),
                q2: ranges.q2.sample(stream),
                q3: ranges.q3.sample(stream),
                alpha: ranges.alpha.sample(stream),
                beta: ranges.beta.sample(stream),
                dt: ranges.dt.sample(stream),
                dd: ranges.dd.sample(stream),
                sigma_n: ranges.sigma_n.sample(stream),
                basis_mask: BasisMask {
                    p2: stream.unit() < ranges.p2_probability,
                    p3: stream.unit() < ranges.p3_probability,
                },
            };
            c.validate()?;
            Ok(c)
        })
        .collect()
}

pub fn centroid_stream(master_seed: u64) -> RngStream {
    RngStream::new(master_seed, StreamDomain::LfCentroids, 0, 0)
}

pub fn generate_lf_dataset(centroids: &[LfCentroid], cfg: &GenConfig, schedule: Schedule) -> Result<Dataset> {
    cfg.validate()?;
    for c in centroids {
        c.validate()?;
    }
    let keys = grid_keys(centroids.len(), cfg.signatures_per_appliance);
    let signatures = run_keyed(&keys, schedule, |key| {
        let c = &centroids[key.appliance as usize];
        let mut stream = derive_stream(cfg.master_seed, key.appliance, key.signature);
        synth_lf_signature(c, cfg, key, &mut stream).map(|(_, s)| s)
    })?;
    let manifest = Manifest::Generated(GenerationManifest {
        config: cfg.clone(),
        centroids: CentroidSet::Lf(centroids.to_vec()),
    });
    Dataset::new(signatures, manifest)
}
