//! Parameterized layers on top of the tape. Parameters are looked up by name
//! in a [`ParamStore`]; see [`ParamStore::init_linear`] and friends for the
//! naming scheme.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;
use crate::nn::tape::{Tape, Var};

/// `x·Wᵀ + b`.
pub fn linear(tape: &mut Tape, params: &ParamStore, name: &str, x: Var) -> Result<Var> {
    let w = tape.param(params, &format!("{name}.weight"))?;
    let (out, input) = tape.shape(w);
    if tape.shape(x).1 != input {
        return Err(Error::shape(
            format!("{name}: input width {input}"),
            tape.shape(x).1,
        ));
    }
    let y = tape.matmul_t(x, w)?;
    let bias_name = format!("{name}.bias");
    if params.contains(&bias_name) {
        let b = tape.param(params, &bias_name)?;
        debug_assert_eq!(tape.shape(b), (1, out));
        tape.add_row(y, b)
    } else {
        Ok(y)
    }
}

/// Number of linear layers registered under `name`.
pub fn mlp_depth(params: &ParamStore, name: &str) -> usize {
    (0..)
        .take_while(|i| params.contains(&format!("{name}.{i}.weight")))
        .count()
}

/// Stack of linear layers with SiLU between them and no activation after the last.
pub fn mlp(tape: &mut Tape, params: &ParamStore, name: &str, x: Var) -> Result<Var> {
    let depth = mlp_depth(params, name);
    if depth == 0 {
        return Err(Error::UnknownParam(format!("{name}.0.weight")));
    }
    let mut h = x;
    for i in 0..depth {
        h = linear(tape, params, &format!("{name}.{i}"), h)?;
        if i + 1 < depth {
            h = tape.silu(h);
        }
    }
    Ok(h)
}

/// Row-wise LayerNorm with learned scale and shift.
pub fn layernorm(tape: &mut Tape, params: &ParamStore, name: &str, x: Var) -> Result<Var> {
    let gamma = tape.param(params, &format!("{name}.gamma"))?;
    let beta = tape.param(params, &format!("{name}.beta"))?;
    let z = tape.standardize(x);
    let z = tape.mul_row(z, gamma)?;
    tape.add_row(z, beta)
}

/// Softmax over rows that share a segment id (e.g. edges with one destination).
pub fn softmax(tape: &mut Tape, x: Var, segment_ids: &Rc<Vec<usize>>, n_segments: usize) -> Result<Var> {
    tape.segment_softmax(x, segment_ids.clone(), n_segments)
}

/// Finite-difference gradient check settings.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub step: f64,
    /// Relative errors use `max(|analytic|, |numeric|, floor)` as denominator.
    pub floor: f64,
    /// Entries checked per parameter, spread evenly; `usize::MAX` checks all.
    pub max_entries_per_param: usize,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            step: 1e-5,
            floor: 1e-3,
            max_entries_per_param: usize::MAX,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub disconnected: Vec<String>,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Compares tape gradients of the scalar built by `f` against central
/// differences on every learnable parameter of `params`.
pub fn grad_check<F>(f: F, params: &ParamStore, cfg: GradCheck) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = f(params, &mut tape)?;
    let grads = tape.backward(loss)?;
    let mut work = params.clone();
    work.zero_grads();
    let disconnected = grads.accumulate_into(&mut work);

    let eval = |store: &ParamStore| -> Result<f64> {
        let mut t = Tape::new();
        let l = f(store, &mut t)?;
        Ok(t.value(l).item())
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        disconnected,
    };
    for name in params.names() {
        if !params.is_learnable(&name) {
            continue;
        }
        let analytic = work.grad(&name).expect("name from store").clone();
        let n = analytic.len();
        let stride = (n / cfg.max_entries_per_param.max(1)).max(1);
        for idx in (0..n).step_by(stride) {
            let orig = work.value(&name).expect("name from store").data()[idx];
            work.value_mut(&name).unwrap().data_mut()[idx] = orig + cfg.step;
            let plus = eval(&work)?;
            work.value_mut(&name).unwrap().data_mut()[idx] = orig - cfg.step;
            let minus = eval(&work)?;
            work.value_mut(&name).unwrap().data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * cfg.step);
            let a = analytic.data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
            report.checked += 1;
            if rel >= report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), idx));
            }
        }
    }
    Ok(report)
}
