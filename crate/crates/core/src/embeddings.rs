//! Bessel-type radial and angular embeddings with a polynomial cutoff envelope.
//!
//! Radial: `ℛₘ(r) = ω(r/r_c)/r · sin(r·λₘ/r_c)`.
//! Angular, per component `c` of a unit vector:
//! `θₘ(c) = ω(|c|)/|c| · sin(|c|·λₘ) · sign(c)` with `sign(0) = 0`.

use std::f64::consts::PI;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;
use crate::nn::tape::{CustomOp, Tape, Var};
use crate::nn::tensor::Tensor;

/// Allowed deviation of `‖u‖` from 1 in [`angular_embed`].
pub const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesselConfig {
    pub num_radial: usize,
    pub num_angular: usize,
    pub cutoff: f64,
    pub envelope_degree: u32,
    /// Initial radial frequencies; empty means `m·π`, `m = 1..num_radial`.
    pub radial_frequencies: Vec<f64>,
    pub angular_frequencies: Vec<f64>,
}

impl Default for BesselConfig {
    fn default() -> Self {
        Self::new(32, 20, 5.0)
    }
}

impl BesselConfig {
    pub fn new(num_radial: usize, num_angular: usize, cutoff: f64) -> Self {
        Self {
            num_radial,
            num_angular,
            cutoff,
            envelope_degree: 6,
            radial_frequencies: Vec::new(),
            angular_frequencies: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::config("cutoff", "must be positive"));
        }
        if self.num_radial == 0 {
            return Err(Error::config("num_radial", "must be at least 1"));
        }
        if self.envelope_degree == 0 {
            return Err(Error::config("envelope_degree", "must be at least 1"));
        }
        for (field, list, n) in [
            ("radial_frequencies", &self.radial_frequencies, self.num_radial),
            ("angular_frequencies", &self.angular_frequencies, self.num_angular),
        ] {
            if !list.is_empty() && list.len() != n {
                return Err(Error::config(field, format!("expected {n} values, got {}", list.len())));
            }
        }
        Ok(())
    }

    pub fn radial_freqs(&self) -> Vec<f64> {
        init_freqs(&self.radial_frequencies, self.num_radial)
    }

    pub fn angular_freqs(&self) -> Vec<f64> {
        init_freqs(&self.angular_frequencies, self.num_angular)
    }

    /// Length of [`angular_embed`] output.
    pub fn angular_dim(&self) -> usize {
        3 * self.num_angular
    }

    /// Registers learnable `{name}.radial_freq` and `{name}.angular_freq`.
    pub fn init_params(&self, params: &mut ParamStore, name: &str) {
        params.insert(format!("{name}.radial_freq"), Tensor::row_vector(self.radial_freqs()), true);
        params.insert(format!("{name}.angular_freq"), Tensor::row_vector(self.angular_freqs()), true);
    }
}

fn init_freqs(given: &[f64], n: usize) -> Vec<f64> {
    if given.is_empty() {
        (1..=n).map(|m| m as f64 * PI).collect()
    } else {
        given.to_vec()
    }
}

/// `ω(x) = 1 − (p+1)(p+2)/2·xᵖ + p(p+2)·xᵖ⁺¹ − p(p+1)/2·xᵖ⁺²` on `[0, 1]`, zero beyond.
pub fn envelope(x: f64, p: u32) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let pf = p as f64;
    let xp = x.powi(p as i32);
    1.0 - (pf + 1.0) * (pf + 2.0) / 2.0 * xp + pf * (pf + 2.0) * xp * x
        - pf * (pf + 1.0) / 2.0 * xp * x * x
}

/// `ω′(x) = −p(p+1)(p+2)/2 · xᵖ⁻¹(1−x)²`.
pub fn envelope_derivative(x: f64, p: u32) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let pf = p as f64;
    -pf * (pf + 1.0) * (pf + 2.0) / 2.0 * x.powi(p as i32 - 1) * (1.0 - x) * (1.0 - x)
}

// Below this |a·r| the series forms are used.
const SERIES_CUTOFF: f64 = 1e-4;

/// `sin(a·r)/r` including the `r → 0` limit `a`.
fn sin_over(a: f64, r: f64) -> f64 {
    let z = a * r;
    if z.abs() < SERIES_CUTOFF {
        a * (1.0 - z * z / 6.0 + z.powi(4) / 120.0)
    } else {
        z.sin() / r
    }
}

/// `d/dr [sin(a·r)/r]`.
fn sin_over_dr(a: f64, r: f64) -> f64 {
    let z = a * r;
    if z.abs() < SERIES_CUTOFF {
        a * a * a * r * (-1.0 / 3.0 + z * z / 30.0)
    } else {
        (z * z.cos() - z.sin()) / (r * r)
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r < 0.0 || r.is_nan() {
        Err(Error::NegativeDistance(r))
    } else {
        Ok(())
    }
}

fn radial_into(r: f64, cutoff: f64, p: u32, freqs: &[f64], out: &mut [f64]) {
    let w = envelope(r / cutoff, p);
    for (o, &lam) in out.iter_mut().zip(freqs) {
        *o = if w == 0.0 { 0.0 } else { w * sin_over(lam / cutoff, r) };
    }
}

fn angular_component(c: f64, p: u32, lam: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let x = c.abs();
    envelope(x, p) * sin_over(lam, x) * c.signum()
}

/// Radial embedding with the configured frequencies.
pub fn radial_embed(cfg: &BesselConfig, r: f64) -> Result<Vec<f64>> {
    radial_embed_with(cfg, &cfg.radial_freqs(), r)
}

/// Radial embedding with explicit frequencies.
pub fn radial_embed_with(cfg: &BesselConfig, freqs: &[f64], r: f64) -> Result<Vec<f64>> {
    check_distance(r)?;
    let mut out = vec![0.0; freqs.len()];
    radial_into(r, cfg.cutoff, cfg.envelope_degree, freqs, &mut out);
    Ok(out)
}

/// `∂ℛₘ/∂r`.
pub fn radial_embed_dr(cfg: &BesselConfig, freqs: &[f64], r: f64) -> Result<Vec<f64>> {
    check_distance(r)?;
    let rc = cfg.cutoff;
    let p = cfg.envelope_degree;
    let (w, dw) = (envelope(r / rc, p), envelope_derivative(r / rc, p) / rc);
    Ok(freqs
        .iter()
        .map(|&lam| {
            let a = lam / rc;
            dw * sin_over(a, r) + w * sin_over_dr(a, r)
        })
        .collect())
}

/// `∂ℛₘ/∂λₘ = ω·cos(r·λₘ/r_c)/r_c`.
pub fn radial_embed_dfreq(cfg: &BesselConfig, freqs: &[f64], r: f64) -> Result<Vec<f64>> {
    check_distance(r)?;
    let rc = cfg.cutoff;
    let w = envelope(r / rc, cfg.envelope_degree);
    Ok(freqs.iter().map(|&lam| w * (r * lam / rc).cos() / rc).collect())
}

fn check_unit(u: &[f64; 3]) -> Result<()> {
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (n - 1.0).abs() > UNIT_TOL || n.is_nan() {
        Err(Error::NotNormalized(n))
    } else {
        Ok(())
    }
}

/// `θ(u_x) ∥ θ(u_y) ∥ θ(u_z)` with the configured angular frequencies.
pub fn angular_embed(cfg: &BesselConfig, u: &[f64; 3]) -> Result<Vec<f64>> {
    angular_embed_with(cfg, &cfg.angular_freqs(), u)
}

pub fn angular_embed_with(cfg: &BesselConfig, freqs: &[f64], u: &[f64; 3]) -> Result<Vec<f64>> {
    check_unit(u)?;
    let mut out = Vec::with_capacity(3 * freqs.len());
    for &c in u {
        out.extend(freqs.iter().map(|&lam| angular_component(c, cfg.envelope_degree, lam)));
    }
    Ok(out)
}

struct RadialOp {
    r: Rc<Vec<f64>>,
    cutoff: f64,
    p: u32,
}

impl CustomOp for RadialOp {
    fn name(&self) -> &'static str {
        "radial_bessel"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Option<Tensor>> {
        let freqs = inputs[0].data();
        let mut g = Tensor::zeros(1, freqs.len());
        for (e, &r) in self.r.iter().enumerate() {
            let w = envelope(r / self.cutoff, self.p);
            if w == 0.0 {
                continue;
            }
            for (m, &lam) in freqs.iter().enumerate() {
                let d = w * (r * lam / self.cutoff).cos() / self.cutoff;
                g.data_mut()[m] += grad.get(e, m) * d;
            }
        }
        vec![Some(g)]
    }
}

struct AngularOp {
    u: Rc<Vec<[f64; 3]>>,
    p: u32,
}

impl CustomOp for AngularOp {
    fn name(&self) -> &'static str {
        "angular_bessel"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Option<Tensor>> {
        let freqs = inputs[0].data();
        let n = freqs.len();
        let mut g = Tensor::zeros(1, n);
        for (e, u) in self.u.iter().enumerate() {
            for (k, &c) in u.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let x = c.abs();
                let w = envelope(x, self.p) * c.signum();
                for (m, &lam) in freqs.iter().enumerate() {
                    g.data_mut()[m] += grad.get(e, k * n + m) * w * (x * lam).cos();
                }
            }
        }
        vec![Some(g)]
    }
}

/// `[E, num_radial]` radial embeddings of `distances`, differentiable in the
/// frequency row `freqs` (`[1, num_radial]`).
pub fn radial_embed_tape(tape: &mut Tape, cfg: &BesselConfig, freqs: Var, distances: Rc<Vec<f64>>) -> Result<Var> {
    let (_, n) = tape.shape(freqs);
    let f = tape.value(freqs).data().to_vec();
    let mut out = Tensor::zeros(distances.len(), n);
    for (e, &r) in distances.iter().enumerate() {
        check_distance(r)?;
        radial_into(r, cfg.cutoff, cfg.envelope_degree, &f, out.row_mut(e));
    }
    let op = RadialOp {
        r: distances,
        cutoff: cfg.cutoff,
        p: cfg.envelope_degree,
    };
    Ok(tape.custom(&[freqs], out, Box::new(op)))
}

/// `[E, 3·num_angular]` angular embeddings of unit vectors.
pub fn angular_embed_tape(tape: &mut Tape, cfg: &BesselConfig, freqs: Var, units: Rc<Vec<[f64; 3]>>) -> Result<Var> {
    let (_, n) = tape.shape(freqs);
    let f = tape.value(freqs).data().to_vec();
    let mut out = Tensor::zeros(units.len(), 3 * n);
    for (e, u) in units.iter().enumerate() {
        check_unit(u)?;
        let row = out.row_mut(e);
        for (k, &c) in u.iter().enumerate() {
            for (m, &lam) in f.iter().enumerate() {
                row[k * n + m] = angular_component(c, cfg.envelope_degree, lam);
            }
        }
    }
    let op = AngularOp {
        u: units,
        p: cfg.envelope_degree,
    };
    Ok(tape.custom(&[freqs], out, Box::new(op)))
}
