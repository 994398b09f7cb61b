//! Row-wise group actions on the tape: row `e` of the output is `ρ(gₑ)·xₑ`.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::frames::{transition_unchecked, LocalFrames};
use crate::group::{inverse, GroupElement};
use crate::nn::tape::{CustomOp, Tape, Var};
use crate::nn::tensor::Tensor;
use crate::reps::action::RepAction;
use crate::reps::spec::RepSpec;

/// One precomputed action per row.
#[derive(Debug, Clone)]
pub struct RowActions {
    spec: Rc<RepSpec>,
    actions: Rc<Vec<RepAction>>,
}

impl RowActions {
    pub fn new(spec: &RepSpec, elements: &[GroupElement]) -> Result<Self> {
        let actions = elements
            .iter()
            .map(|g| RepAction::new(spec, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: Rc::new(spec.clone()),
            actions: Rc::new(actions),
        })
    }

    /// `F_dst·F_srcᵀ` for every `(src, dst)` edge.
    pub fn edge_transitions(spec: &RepSpec, frames: &LocalFrames, edges: &[(usize, usize)]) -> Result<Self> {
        let g: Vec<GroupElement> = edges.iter().map(|&(s, d)| transition_unchecked(frames, d, s)).collect();
        Self::new(spec, &g)
    }

    /// `F_dst` for every edge: global quantities into the receiver's frame.
    pub fn receiver_frames(spec: &RepSpec, frames: &LocalFrames, edges: &[(usize, usize)]) -> Result<Self> {
        let g: Vec<GroupElement> = edges.iter().map(|&(_, d)| frames.frame(d).clone()).collect();
        Self::new(spec, &g)
    }

    /// `Fᵢ` per node.
    pub fn node_frames(spec: &RepSpec, frames: &LocalFrames) -> Result<Self> {
        Self::new(spec, frames.frames())
    }

    /// `Fᵢᵀ` per node.
    pub fn node_frames_inverse(spec: &RepSpec, frames: &LocalFrames) -> Result<Self> {
        let g: Vec<GroupElement> = frames.frames().iter().map(inverse).collect();
        Self::new(spec, &g)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn spec(&self) -> &RepSpec {
        &self.spec
    }

    fn run(&self, x: &Tensor, transpose: bool) -> Tensor {
        let d = self.spec.total_dim();
        let mut out = Tensor::zeros(x.rows(), d);
        let mut scratch = vec![0.0; RepAction::scratch_len(&self.spec)];
        for (e, act) in self.actions.iter().enumerate() {
            if transpose {
                act.apply_transpose_into(&self.spec, x.row(e), out.row_mut(e), &mut scratch);
            } else {
                act.apply_into(&self.spec, x.row(e), out.row_mut(e), &mut scratch);
            }
        }
        out
    }

    /// Applies the actions to the rows of `x`, recording the op on `tape`.
    pub fn apply(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (rows, cols) = tape.shape(x);
        if rows != self.len() || cols != self.spec.total_dim() {
            return Err(Error::shape(
                format!("[{}, {}]", self.len(), self.spec.total_dim()),
                format!("[{rows}, {cols}]"),
            ));
        }
        if self.spec.is_trivial() {
            return Ok(x);
        }
        let out = self.run(tape.value(x), false);
        Ok(tape.custom(&[x], out, Box::new(TransportOp(self.clone()))))
    }
}

struct TransportOp(RowActions);

impl CustomOp for TransportOp {
    fn name(&self) -> &'static str {
        "transport"
    }

    fn backward(&self, _inputs: &[&Tensor], _output: &Tensor, grad: &Tensor) -> Vec<Option<Tensor>> {
        vec![Some(self.0.run(grad, true))]
    }
}
