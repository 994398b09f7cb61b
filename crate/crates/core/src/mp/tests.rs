use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::frames::LocalFrames;
use crate::group::{random_rotation, GroupElement};
use crate::nn::layers::{grad_check, GradCheck};
use crate::nn::tape::Tape;
use crate::nn::tensor::Tensor;

fn molecule(rng: &mut impl Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)])
        .collect()
}

fn batch(rng: &mut impl Rng, sizes: &[usize], cutoff: f64) -> Graph {
    let mut pos = Vec::new();
    let mut ids = Vec::new();
    for (b, &n) in sizes.iter().enumerate() {
        pos.extend(molecule(rng, n));
        ids.extend(std::iter::repeat(b).take(n));
    }
    let q: Vec<f64> = (0..pos.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Graph::new(pos, q, 1, ids, cutoff).unwrap()
}

fn moved(graph: &Graph, g: &GroupElement, t: [f64; 3]) -> Graph {
    let pos = graph
        .positions
        .iter()
        .map(|p| {
            let v = g.matrix() * Vector3::from(*p);
            [v[0] + t[0], v[1] + t[1], v[2] + t[2]]
        })
        .collect();
    Graph {
        positions: pos,
        ..graph.clone()
    }
}

fn small(mode: ModeKind, target: TargetKind) -> ModelConfig {
    ModelConfig {
        mode,
        target,
        hidden_rep: "2x0n+1x1n+1x2n".into(),
        num_layers: 2,
        num_heads: 2,
        attention_dim: 4,
        value_dim: 6,
        ffn_hidden: 8,
        gate_hidden: vec![6],
        attention_hidden: vec![4],
        rho_hidden: vec![6],
        readout_hidden: vec![8],
        cutoff: 2.0,
        num_radial: 4,
        num_angular: 2,
        ..ModelConfig::default()
    }
}

fn context(tape: &mut Tape, model: &Model, graph: &Graph, frames: &LocalFrames) -> EdgeContext {
    EdgeContext::new(
        tape,
        &model.params,
        "embed",
        &model.mode,
        &model.bessel,
        &graph.positions,
        &graph.edges,
        frames,
    )
    .unwrap()
}

#[test]
fn invariance_and_equivariance_all_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for mode in ModeKind::ALL {
        for target in TargetKind::ALL {
            let model = build_model(&small(mode, target), 1).unwrap();
            let graph = batch(&mut rng, &[5, 7, 4], 2.0);
            let base = model.predict(&graph).unwrap();
            for _ in 0..3 {
                let q = random_rotation(&mut rng);
                let t = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let got = model.predict(&moved(&graph, &q, t)).unwrap();
                let want: Vec<f64> = base
                    .data()
                    .chunks(target.dim())
                    .flat_map(|c| crate::reps::apply_rep(&target.output_spec(), &q, c).unwrap())
                    .collect();
                let err = got.data().iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err < 1e-10, "{mode} {target}: {err:e}");
            }
        }
    }
}

#[test]
fn edge_layer_identity_chain() {
    let mut cfg = small(ModeKind::Scalar, TargetKind::Scalar);
    cfg.hidden_rep = "3x0n".into();
    let mut model = build_model(&cfg, 2).unwrap();
    let p = &mut model.params;
    p.insert("e.B.weight", Tensor::identity(3), true);
    p.insert("e.B.bias", Tensor::zeros(1, 3), true);
    p.insert("e.A.weight", Tensor::identity(3), true);
    p.insert("e.A.bias", Tensor::zeros(1, 3), true);
    p.insert("e.gate.0.weight", Tensor::zeros(3, 10), true);
    p.insert("e.gate.0.bias", Tensor::filled(1, 3, 1.0), true);

    let graph = Graph::new(
        vec![[0.0; 3], [0.7, 0.0, 0.0]],
        vec![0.5, -0.25],
        1,
        vec![0, 0],
        2.0,
    )
    .unwrap();
    let frames = LocalFrames::identity(2);
    let mut tape = Tape::new();
    let ctx = context(&mut tape, &model, &graph, &frames);
    let f = vec![1.0, 2.0, 3.0, -4.0, 5.0, -6.0];
    let x = tape.constant(Tensor::from_vec(2, 3, f.clone()));
    let m = edge_layer(&mut tape, &model.params, "e", &ctx, x).unwrap();
    // Edges sorted by (dst, src): (1 → 0) then (0 → 1).
    assert_eq!(tape.value(m).row(0), &f[3..6]);
    assert_eq!(tape.value(m).row(1), &f[0..3]);

    // Zero input and zero biases before A leave exactly A's bias.
    model.params.insert("e.A.bias", Tensor::row_vector(vec![0.1, 0.2, 0.3]), true);
    model.params.value_mut("e.gate.0.bias").unwrap().fill(0.0);
    model.params.insert("e.gate.0.weight", Tensor::filled(3, 10, 0.7), true);
    let mut tape = Tape::new();
    let ctx = context(&mut tape, &model, &graph, &frames);
    let x = tape.constant(Tensor::zeros(2, 3));
    let m = edge_layer(&mut tape, &model.params, "e", &ctx, x).unwrap();
    for r in 0..2 {
        assert_eq!(tape.value(m).row(r), &[0.1, 0.2, 0.3]);
    }
}

#[test]
fn attention_weights_on_simple_neighborhoods() {
    let model = build_model(&small(ModeKind::Scalar, TargetKind::Scalar), 3).unwrap();
    let d = model.dim();
    // Node 0 has neighbors at ±x̂; node 3 is isolated.
    let graph = Graph::new(
        vec![[0.0; 3], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [10.0, 0.0, 0.0]],
        vec![0.0; 4],
        1,
        vec![0; 4],
        1.0,
    )
    .unwrap();
    let frames = LocalFrames::identity(4);
    let mut tape = Tape::new();
    let ctx = context(&mut tape, &model, &graph, &frames);
    let x = tape.constant(Tensor::from_vec(4, d, (0..4 * d).map(|i| ((i % d) as f64).sin()).collect()));
    let a = attention_weights(&mut tape, &model.params, "layer0.attn", &ctx, x, 2, None).unwrap();
    let alpha = tape.value(a);
    for (e, &(s, dst)) in graph.edges.iter().enumerate() {
        let want = if dst == 0 { 0.5 } else { 1.0 };
        for h in 0..2 {
            assert!((alpha.get(e, h) - want).abs() < 1e-12, "edge {s}->{dst}: {}", alpha.get(e, h));
        }
    }
    let upd = attention_block(&mut tape, &model.params, "layer0.attn", &ctx, x, 2, None).unwrap();
    assert!(tape.value(upd).row(3).iter().all(|&v| v == 0.0));
    let out = locaformer_layer(&mut tape, &model.params, "layer0", &ctx, &graph.batch_ids, x, 2, None).unwrap();
    // The isolated node still goes through the feed-forward branch only.
    assert_ne!(tape.value(out).row(3), tape.value(x).row(3));
}

#[test]
fn scalar_transport_ignores_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = build_model(&small(ModeKind::Scalar, TargetKind::Scalar), 4).unwrap();
    let graph = batch(&mut rng, &[6], 2.0);
    let d = model.dim();
    let feats = Tensor::from_vec(6, d, (0..6 * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut outs = Vec::new();
    for frames in [model.frames(&model.params, &graph).unwrap(), LocalFrames::random(6, &mut rng)] {
        let mut tape = Tape::new();
        let ctx = context(&mut tape, &model, &graph, &frames);
        let x = tape.constant(feats.clone());
        let t = ctx.transported(&mut tape, &model.params, "unused", x).unwrap();
        outs.push(tape.value(t).clone());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn zero_layers_reads_out_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cfg = small(ModeKind::Cartesian, TargetKind::Scalar);
    cfg.num_layers = 0;
    let model = build_model(&cfg, 5).unwrap();
    let graph = batch(&mut rng, &[4, 3], 2.0);
    let got = model.predict(&graph).unwrap();
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::from_vec(7, 1, graph.node_features.clone()));
    let h = crate::nn::layers::linear(&mut tape, &model.params, "embed.input", x).unwrap();
    let y = crate::nn::layers::mlp(&mut tape, &model.params, "readout", h).unwrap();
    let y = tape.value(y);
    let want = [y.data()[..4].iter().sum::<f64>(), y.data()[4..].iter().sum::<f64>()];
    assert!((got.data()[0] - want[0]).abs() < 1e-12 && (got.data()[1] - want[1]).abs() < 1e-12);
}

#[test]
fn permutation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let model = build_model(&small(ModeKind::Irrep, TargetKind::Vector), 6).unwrap();
    let graph = batch(&mut rng, &[6], 2.0);
    let perm = [4, 2, 0, 5, 1, 3];
    let permuted = Graph::new(
        perm.iter().map(|&p| graph.positions[p]).collect(),
        perm.iter().map(|&p| graph.node_features[p]).collect(),
        1,
        vec![0; 6],
        2.0,
    )
    .unwrap();
    let a = model.predict(&graph).unwrap();
    let b = model.predict(&permuted).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12);
}

fn check_model_grads(mode: ModeKind, target: TargetKind, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = small(mode, target);
    cfg.num_layers = 1;
    let model = build_model(&cfg, seed).unwrap();
    let graph = batch(&mut rng, &[4, 5], 2.0);
    let frames = model.frames(&model.params, &graph).unwrap();
    let w = Tensor::from_vec(2, target.dim(), (0..2 * target.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let report = grad_check(
        |p, tape| {
            let y = model.forward(tape, p, &graph, &frames, None)?;
            let wv = tape.constant(w.clone());
            let a = tape.mul(y, wv)?;
            let b = tape.mul(a, a)?;
            Ok(tape.sum(b))
        },
        &model.params,
        GradCheck {
            max_entries_per_param: 6,
            ..GradCheck::default()
        },
    )
    .unwrap();
    assert!(report.passed(1e-6), "{mode} {target}: {report:?}");
    assert!(report.disconnected.is_empty(), "{:?}", report.disconnected);
}

#[test]
fn model_gradients_cartesian() {
    check_model_grads(ModeKind::Cartesian, TargetKind::Tensor, 20);
}

#[test]
fn model_gradients_irrep() {
    check_model_grads(ModeKind::Irrep, TargetKind::Vector, 21);
}

#[test]
fn model_gradients_mlp_and_scalar() {
    check_model_grads(ModeKind::Mlp, TargetKind::Scalar, 22);
    check_model_grads(ModeKind::Scalar, TargetKind::Vector, 23);
}

#[test]
fn edge_layer_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for mode in ModeKind::ALL {
        let model = build_model(&small(mode, TargetKind::Scalar), 7).unwrap();
        let graph = batch(&mut rng, &[5], 2.0);
        let frames = model.frames(&model.params, &graph).unwrap();
        let d = model.dim();
        let mut params = model.params.clone();
        params.insert("x", Tensor::from_vec(5, d, (0..5 * d).map(|_| rng.gen_range(-1.0..1.0)).collect()), true);
        let e = graph.edges.len();
        let w = Tensor::from_vec(e, d, (0..e * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
        // Only the EDGE layer's own parameters, the features and the frequencies.
        for name in params.names() {
            let keep = name == "x" || name.starts_with("layer0.attn.") || name.starts_with("embed.") && name.ends_with("_freq");
            let keep = keep && !name.contains(".q.") && !name.contains(".k.") && !name.contains(".score.");
            params.set_learnable(&name, keep).unwrap();
        }
        let report = grad_check(
            |p, tape| {
                let ctx = EdgeContext::new(tape, p, "embed", &model.mode, &model.bessel, &graph.positions, &graph.edges, &frames)?;
                let x = tape.param(p, "x")?;
                let m = edge_layer(tape, p, "layer0.attn", &ctx, x)?;
                let wv = tape.constant(w.clone());
                let a = tape.mul(m, wv)?;
                let b = tape.mul(a, a)?;
                Ok(tape.sum(b))
            },
            &params,
            GradCheck::default(),
        )
        .unwrap();
        assert!(report.passed(1e-6), "{mode}: {report:?}");
    }
}

#[test]
fn attention_block_gradients_with_dropout_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let model = build_model(&small(ModeKind::Cartesian, TargetKind::Scalar), 8).unwrap();
    let graph = batch(&mut rng, &[6], 2.0);
    let frames = model.frames(&model.params, &graph).unwrap();
    let d = model.dim();
    let w = Tensor::from_vec(6, d, (0..6 * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut params = model.params.clone();
    params.insert("x", Tensor::from_vec(6, d, (0..6 * d).map(|_| rng.gen_range(-1.0..1.0)).collect()), true);
    for name in params.names() {
        let keep = name == "x" || name.starts_with("layer0.");
        params.set_learnable(&name, keep).unwrap();
    }
    let report = grad_check(
        |p, tape| {
            let ctx = EdgeContext::new(tape, p, "embed", &model.mode, &model.bessel, &graph.positions, &graph.edges, &frames)?;
            let x = tape.param(p, "x")?;
            // Same dropout draw on every evaluation.
            let mut drop_rng = ChaCha8Rng::seed_from_u64(99);
            let mut noise = layers::Noise {
                rng: &mut drop_rng,
                attention_dropout: 0.3,
                stochastic_depth: 0.0,
            };
            let y = locaformer_layer(tape, p, "layer0", &ctx, &graph.batch_ids, x, 2, Some(&mut noise))?;
            let wv = tape.constant(w.clone());
            let a = tape.mul(y, wv)?;
            let b = tape.mul(a, a)?;
            Ok(tape.sum(b))
        },
        &params,
        GradCheck::default(),
    )
    .unwrap();
    assert!(report.passed(1e-6), "{report:?}");
}

#[test]
fn training_noise_changes_output_but_not_eval() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let model = build_model(&small(ModeKind::Cartesian, TargetKind::Scalar), 9).unwrap();
    let graph = batch(&mut rng, &[6, 6, 6, 6], 2.0);
    let frames = model.frames(&model.params, &graph).unwrap();
    let eval = |noise: Option<&mut ChaCha8Rng>| {
        let mut tape = Tape::new();
        let y = model.forward(&mut tape, &model.params, &graph, &frames, noise).unwrap();
        tape.value(y).clone()
    };
    let a = eval(None);
    assert_eq!(a, eval(None));
    let mut n1 = ChaCha8Rng::seed_from_u64(5);
    let mut n2 = ChaCha8Rng::seed_from_u64(5);
    let b = eval(Some(&mut n1));
    assert_ne!(a, b);
    assert_eq!(b, eval(Some(&mut n2)));
}

#[test]
fn frames_used_by_model_are_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let model = build_model(&small(ModeKind::Cartesian, TargetKind::Scalar), 10).unwrap();
    let graph = batch(&mut rng, &[5, 5], 2.0);
    let f = model.frames(&model.params, &graph).unwrap();
    assert_eq!(f.num_degenerate(), 0);
    for i in 0..10 {
        assert!((f.matrix(i) * f.matrix(i).transpose() - Matrix3::identity()).amax() < 1e-12);
    }
}
