#![allow(dead_code)]

use locanon::mp::{ModeKind, ModelConfig, TargetKind};

/// Real spherical harmonics for `l ≤ 4` on a unit vector, ordered
/// `m = −l..=l`, normalized so each degree has unit norm on the sphere.
pub fn real_harmonics(l: usize, u: [f64; 3]) -> Vec<f64> {
    let [x, y, z] = u;
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    let s15 = 15f64.sqrt();
    let s35 = 35f64.sqrt();
    match l {
        0 => vec![1.0],
        1 => vec![y, z, x],
        2 => vec![
            s3 * x * y,
            s3 * y * z,
            0.5 * (3.0 * z * z - 1.0),
            s3 * x * z,
            0.5 * s3 * (x * x - y * y),
        ],
        3 => vec![
            (5.0f64 / 8.0).sqrt() * y * (3.0 * x * x - y * y),
            s15 * x * y * z,
            (3.0f64 / 8.0).sqrt() * y * (5.0 * z * z - 1.0),
            0.5 * z * (5.0 * z * z - 3.0),
            (3.0f64 / 8.0).sqrt() * x * (5.0 * z * z - 1.0),
            0.5 * s15 * z * (x * x - y * y),
            (5.0f64 / 8.0).sqrt() * x * (x * x - 3.0 * y * y),
        ],
        4 => vec![
            0.5 * s35 * x * y * (x * x - y * y),
            (35.0f64 / 8.0).sqrt() * y * z * (3.0 * x * x - y * y),
            0.5 * s5 * x * y * (7.0 * z * z - 1.0),
            (5.0f64 / 8.0).sqrt() * y * z * (7.0 * z * z - 3.0),
            (35.0 * z.powi(4) - 30.0 * z * z + 3.0) / 8.0,
            (5.0f64 / 8.0).sqrt() * x * z * (7.0 * z * z - 3.0),
            0.25 * s5 * (x * x - y * y) * (7.0 * z * z - 1.0),
            (35.0f64 / 8.0).sqrt() * x * z * (x * x - 3.0 * y * y),
            s35 / 8.0 * (x.powi(4) - 6.0 * x * x * y * y + y.powi(4)),
        ],
        _ => panic!("oracle covers l <= 4"),
    }
}

/// Narrow model used for equivariance and gradient checks.
pub fn small_model(mode: ModeKind, target: TargetKind) -> ModelConfig {
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
        attention_hidden: vec![5],
        rho_hidden: vec![6],
        readout_hidden: vec![8],
        cutoff: 1.5,
        num_radial: 4,
        num_angular: 2,
        ..ModelConfig::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
