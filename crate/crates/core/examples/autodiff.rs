//! The reverse-mode tape on its own: fit a tiny MLP with AdamW and compare
//! its gradients against finite differences.
//!
//!     cargo run --example autodiff

use std::rc::Rc;

use locanon::nn::{grad_check, mlp, AdamW, GradCheck, ParamStore, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locanon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ParamStore::new();
    params.init_mlp("f", 2, &[16], 1, &mut rng);

    let xs: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = xs.chunks(2).map(|p| (p[0] * 3.0).sin() * p[1]).collect();
    let x = Tensor::from_vec(32, 2, xs);
    let y = Rc::new(Tensor::from_vec(32, 1, ys));

    let loss = |params: &ParamStore, tape: &mut Tape| -> locanon::Result<locanon::nn::Var> {
        let input = tape.constant(x.clone());
        let out = mlp(tape, params, "f", input)?;
        tape.mse(out, y.clone())
    };

    let report = grad_check(loss, &params, GradCheck::default())?;
    println!("finite-difference check: max rel error {:.2e} over {} entries", report.max_rel_error, report.checked);

    let opt = AdamW {
        lr: 1e-2,
        ..AdamW::default()
    };
    for step in 0..=300 {
        let mut tape = Tape::new();
        let l = loss(&params, &mut tape)?;
        let grads = tape.backward(l)?;
        params.zero_grads();
        grads.accumulate_into(&mut params);
        params.adamw_step(&opt);
        if step % 50 == 0 {
            println!("step {step:>3} mse {:.5}", tape.value(l).item());
        }
    }
    Ok(())
}
