//! Drop-in message passing with typed arguments.
//!
//! Each declared argument is either *local* (already expressed in its node's
//! frame; the sender copy is transported into the receiver's frame) or
//! *global* (expressed in the global frame; both copies are rotated into the
//! receiver's frame). The user's message function then only ever sees
//! receiver-frame quantities, so any function of them is invariant.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::frames::LocalFrames;
use crate::mp::transport::RowActions;
use crate::nn::tape::{Tape, Var};
use crate::reps::spec::RepSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    Local,
    Global,
}

#[derive(Debug, Clone)]
struct Arg {
    spec: RepSpec,
    kind: ArgKind,
}

/// Receiver-frame copies of every argument for each edge.
pub struct EdgeArgs {
    i: BTreeMap<String, Var>,
    j: BTreeMap<String, Var>,
    pub src: Rc<Vec<usize>>,
    pub dst: Rc<Vec<usize>>,
}

impl EdgeArgs {
    /// Receiver's own value, `[E, dim]`.
    pub fn i(&self, name: &str) -> Result<Var> {
        self.i.get(name).copied().ok_or_else(|| Error::UnknownParam(format!("{name}_i")))
    }

    /// Sender's value in the receiver's frame, `[E, dim]`.
    pub fn j(&self, name: &str) -> Result<Var> {
        self.j.get(name).copied().ok_or_else(|| Error::UnknownParam(format!("{name}_j")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct TfMessagePassing {
    args: BTreeMap<String, Arg>,
}

impl TfMessagePassing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn local(mut self, name: &str, spec: RepSpec) -> Self {
        self.args.insert(name.into(), Arg { spec, kind: ArgKind::Local });
        self
    }

    pub fn global(mut self, name: &str, spec: RepSpec) -> Self {
        self.args.insert(name.into(), Arg { spec, kind: ArgKind::Global });
        self
    }

    pub fn kind(&self, name: &str) -> Option<ArgKind> {
        self.args.get(name).map(|a| a.kind)
    }

    /// Computes `message(args)` per `(src, dst)` edge and sums messages into
    /// their destination nodes, giving `[N, message_width]`.
    pub fn propagate<F>(
        &self,
        tape: &mut Tape,
        frames: &LocalFrames,
        edges: &[(usize, usize)],
        inputs: &BTreeMap<String, Var>,
        mut message: F,
    ) -> Result<Var>
    where
        F: FnMut(&mut Tape, &EdgeArgs) -> Result<Var>,
    {
        let n = frames.len();
        let src = Rc::new(edges.iter().map(|e| e.0).collect::<Vec<_>>());
        let dst = Rc::new(edges.iter().map(|e| e.1).collect::<Vec<_>>());
        let mut ea = EdgeArgs {
            i: BTreeMap::new(),
            j: BTreeMap::new(),
            src: src.clone(),
            dst: dst.clone(),
        };
        for (name, arg) in &self.args {
            let x = *inputs
                .get(name)
                .ok_or_else(|| Error::config(format!("inputs.{name}"), "missing argument"))?;
            if tape.shape(x) != (n, arg.spec.total_dim()) {
                return Err(Error::shape(
                    format!("{name}: [{n}, {}]", arg.spec.total_dim()),
                    format!("{:?}", tape.shape(x)),
                ));
            }
            let xi = tape.gather(x, dst.clone())?;
            let xj = tape.gather(x, src.clone())?;
            let (xi, xj) = match arg.kind {
                ArgKind::Local => (xi, RowActions::edge_transitions(&arg.spec, frames, edges)?.apply(tape, xj)?),
                ArgKind::Global => {
                    let rot = RowActions::receiver_frames(&arg.spec, frames, edges)?;
                    (rot.apply(tape, xi)?, rot.apply(tape, xj)?)
                }
            };
            ea.i.insert(name.clone(), xi);
            ea.j.insert(name.clone(), xj);
        }
        let m = message(tape, &ea)?;
        if tape.shape(m).0 != edges.len() {
            return Err(Error::shape(format!("{} message rows", edges.len()), tape.shape(m).0));
        }
        tape.scatter_sum(m, dst, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{canonicalize, compute_frames};
    use crate::group::random_rotation;
    use crate::mp::graph::{complete_graph, radius_graph};
    use crate::nn::layers::mlp;
    use crate::nn::params::ParamStore;
    use crate::nn::tensor::Tensor;
    use crate::reps::spec::{parse_repspec, RepKind};
    use crate::reps::apply_rep;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edge_conv_is_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let feat = parse_repspec("2x0n+1x1n", RepKind::Cartesian).unwrap();
        let pos_spec = parse_repspec("1x1n", RepKind::Cartesian).unwrap();
        let mut params = ParamStore::new();
        params.init_mlp("conv", 5 + 5 + 3, &[16], 4, &mut rng);
        let layer = TfMessagePassing::new().local("x", feat.clone()).global("pos", pos_spec);

        let pos: Vec<[f64; 3]> = (0..8).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        // Global features: two scalars and one vector per node.
        let glob: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let run = |pos: &[[f64; 3]], glob: &[f64]| -> Tensor {
            let frames = compute_frames(pos, &complete_graph(&[0; 8]), None).unwrap();
            let edges = radius_graph(pos, &[0; 8], 0.9);
            let local = canonicalize(&feat, &frames, glob).unwrap();
            let mut tape = Tape::new();
            let mut inputs = BTreeMap::new();
            inputs.insert("x".to_string(), tape.constant(Tensor::from_vec(8, 5, local)));
            let flat: Vec<f64> = pos.iter().flatten().copied().collect();
            inputs.insert("pos".to_string(), tape.constant(Tensor::from_vec(8, 3, flat)));
            let out = layer
                .propagate(&mut tape, &frames, &edges, &inputs, |tape, a| {
                    let xi = a.i("x")?;
                    let dx = tape.sub(a.j("x")?, xi)?;
                    let dp = tape.sub(a.j("pos")?, a.i("pos")?)?;
                    let h = tape.concat(&[xi, dx, dp])?;
                    mlp(tape, &params, "conv", h)
                })
                .unwrap();
            tape.value(out).clone()
        };

        let base = run(&pos, &glob);
        assert!(base.max_abs() > 0.0);
        let q = random_rotation(&mut rng);
        let pos2: Vec<[f64; 3]> = pos
            .iter()
            .map(|p| {
                let v = q.matrix() * Vector3::from(*p);
                [v[0] - 2.0, v[1] + 1.0, v[2]]
            })
            .collect();
        let glob2: Vec<f64> = glob.chunks(5).flat_map(|c| apply_rep(&feat, &q, c).unwrap()).collect();
        assert!(run(&pos2, &glob2).max_abs_diff(&base) < 1e-10);
    }

    #[test]
    fn missing_argument_is_reported() {
        let layer = TfMessagePassing::new().local("x", RepSpec::scalars(RepKind::Cartesian, 1));
        assert_eq!(layer.kind("x"), Some(ArgKind::Local));
        let mut tape = Tape::new();
        let err = layer
            .propagate(&mut tape, &LocalFrames::identity(2), &[(0, 1)], &BTreeMap::new(), |_, a| a.i("x"))
            .unwrap_err();
        assert!(err.to_string().contains("inputs.x"));
    }
}
