//! Finite-difference gradient sweeps: every differentiable op is checked at
//! several random points against central differences.

use rpwno_core::autodiff::{Parameter, Tape};
use rpwno_core::gradcheck::check_gradients;
use rpwno_core::rng::{rng_from_seed, uniform_tensor};
use rpwno_core::tensor::Tensor;
use rpwno_core::wavelet::Subband;
use rpwno_core::wno::{WnoConfig, WnoModel};

const POINTS: u64 = 10;

/// Runs `loss` over parameters, backwards once, then compares each gradient
/// element against finite differences at tolerance `tol`.
fn sweep(
    params: &mut Vec<Parameter>,
    tol: f64,
    loss: impl Fn(&[Parameter], &mut Tape) -> rpwno_core::autodiff::NodeId,
) {
    for p in params.iter_mut() {
        p.zero_grad();
    }
    let mut tape = Tape::new();
    let node = loss(params, &mut tape);
    tape.backward_into(node, params).unwrap();
    let mismatch = check_gradients(params, tol, |ps| {
        let mut tape = Tape::new();
        let node = loss(ps, &mut tape);
        tape.value(node).item()
    });
    assert!(mismatch.is_none(), "{mismatch:?}");
}

#[test]
fn gelu_gradients() {
    for seed in 0..POINTS {
        let mut rng = rng_from_seed(seed);
        let mut params = vec![Parameter::new("x", uniform_tensor(&mut rng, &[6], 3.0))];
        sweep(&mut params, 1e-5, |ps, tape| {
            let x = tape.leaf(&ps[0], 0);
            let g = tape.gelu(x);
            tape.sum(g)
        });
    }
}

#[test]
fn elementwise_gradients() {
    for seed in 0..POINTS {
        let mut rng = rng_from_seed(100 + seed);
        let mut params = vec![
            Parameter::new("a", uniform_tensor(&mut rng, &[5], 2.0)),
            Parameter::new("b", uniform_tensor(&mut rng, &[5], 2.0)),
        ];
        sweep(&mut params, 1e-5, |ps, tape| {
            let a = tape.leaf(&ps[0], 0);
            let b = tape.leaf(&ps[1], 1);
            let s = tape.add(a, b).unwrap();
            let d = tape.sub(s, b).unwrap();
            let m = tape.mul(d, b).unwrap();
            let sc = tape.scale(m, 0.7);
            tape.sum(sc)
        });
    }
}

#[test]
fn dense_and_conv1x1_gradients() {
    for seed in 0..POINTS {
        let mut rng = rng_from_seed(200 + seed);
        let x = uniform_tensor(&mut rng, &[3, 4, 5], 1.0);
        let mut params = vec![
            Parameter::new("x", x),
            Parameter::new("w", uniform_tensor(&mut rng, &[5, 3], 1.0)),
            Parameter::new("b", uniform_tensor(&mut rng, &[3], 1.0)),
        ];
        sweep(&mut params, 1e-5, |ps, tape| {
            let x = tape.leaf(&ps[0], 0);
            let w = tape.leaf(&ps[1], 1);
            let b = tape.leaf(&ps[2], 2);
            let y = tape.conv1x1(x, w, b).unwrap();
            tape.sum(y)
        });
    }
}

#[test]
fn wmc_1d_gradients() {
    for seed in 0..POINTS {
        let mut rng = rng_from_seed(300 + seed);
        let filter = rpwno_core::wavelet::daubechies_filters(2).unwrap();
        let mut params = vec![
            Parameter::new("x", uniform_tensor(&mut rng, &[2, 16, 3], 1.0)),
            Parameter::new("w_approx", uniform_tensor(&mut rng, &[3, 3, 4], 1.0)),
            Parameter::new("w_detail", uniform_tensor(&mut rng, &[3, 3, 4], 1.0)),
        ];
        let learned = [Subband::Approx, Subband::Detail];
        sweep(&mut params, 1e-5, |ps, tape| {
            let x = tape.leaf(&ps[0], 0);
            let wa = tape.leaf(&ps[1], 1);
            let wd = tape.leaf(&ps[2], 2);
            let y = tape.wmc(x, &[wa, wd], &filter, 2, &learned).unwrap();
            tape.sum(y)
        });
    }
}

#[test]
fn wmc_2d_gradients() {
    for seed in 0..5 {
        let mut rng = rng_from_seed(400 + seed);
        let filter = rpwno_core::wavelet::daubechies_filters(1).unwrap();
        let mut params = vec![
            Parameter::new("x", uniform_tensor(&mut rng, &[2, 8, 8, 2], 1.0)),
            Parameter::new("w_ll", uniform_tensor(&mut rng, &[2, 2, 4, 4], 1.0)),
            Parameter::new("w_hh", uniform_tensor(&mut rng, &[2, 2, 4, 4], 1.0)),
        ];
        let learned = [Subband::Ll, Subband::Hh];
        sweep(&mut params, 1e-5, |ps, tape| {
            let x = tape.leaf(&ps[0], 0);
            let wl = tape.leaf(&ps[1], 1);
            let wh = tape.leaf(&ps[2], 2);
            let y = tape.wmc(x, &[wl, wh], &filter, 1, &learned).unwrap();
            tape.sum(y)
        });
    }
}

#[test]
fn relative_l2_gradients() {
    for seed in 0..POINTS {
        let mut rng = rng_from_seed(500 + seed);
        let truth = uniform_tensor(&mut rng, &[3, 7], 1.0).map(|v| v + 1.5);
        let mut params = vec![Parameter::new("pred", uniform_tensor(&mut rng, &[3, 7], 1.0))];
        sweep(&mut params, 1e-5, |ps, tape| {
            let p = tape.leaf(&ps[0], 0);
            tape.relative_l2(p, &truth).unwrap()
        });
    }
}

#[test]
fn full_tiny_model_gradients_against_finite_differences() {
    // Whole network (lift, one block with both learned subbands, head) at
    // the 1e-4 target, several random parameter points.
    let config = WnoConfig {
        spatial_dims: 1,
        grid: vec![16],
        in_channels: 2,
        width: 4,
        num_blocks: 1,
        wavelet_order: 2,
        levels: 2,
        learned_subbands: vec![Subband::Approx, Subband::Detail],
        proj_hidden: 8,
        out_channels: 1,
    };
    for seed in 0..3 {
        let mut model = WnoModel::init(config.clone(), 900 + seed).unwrap();
        let mut rng = rng_from_seed(seed);
        let input = uniform_tensor(&mut rng, &[2, 16, 2], 1.0);
        let truth = uniform_tensor(&mut rng, &[2, 16, 1], 1.0).map(|v| v + 2.0);

        model.zero_grads();
        let mut tape = Tape::new();
        let x = tape.input(input.clone());
        let y = model.forward(&mut tape, x).unwrap();
        let loss = tape.relative_l2(y, &truth).unwrap();
        tape.backward_into(loss, &mut model.params).unwrap();

        let cfg = model.config.clone();
        let mismatch = check_gradients(&mut model.params, 1e-4, |params| {
            let probe = WnoModel::from_parts(cfg.clone(), params.to_vec()).unwrap();
            let mut tape = Tape::new();
            let x = tape.input(input.clone());
            let y = probe.forward(&mut tape, x).unwrap();
            let loss = tape.relative_l2(y, &truth).unwrap();
            tape.value(loss).item()
        });
        assert!(mismatch.is_none(), "seed {seed}: {mismatch:?}");
    }
}

#[test]
fn non_participating_parameters_keep_zero_gradient() {
    let mut rng = rng_from_seed(7);
    let mut params = vec![
        Parameter::new("used", uniform_tensor(&mut rng, &[4], 1.0)),
        Parameter::new("unused", uniform_tensor(&mut rng, &[4], 1.0)),
    ];
    let mut tape = Tape::new();
    let x = tape.leaf(&params[0], 0);
    let loss = tape.sum(x);
    tape.backward_into(loss, &mut params).unwrap();
    assert!(params[0].gradient.data().iter().all(|&g| g == 1.0));
    assert!(params[1].gradient.data().iter().all(|&g| g == 0.0));
}

#[test]
fn from_parts_roundtrip_and_validation() {
    let config = WnoConfig {
        spatial_dims: 1,
        grid: vec![16],
        in_channels: 2,
        width: 4,
        num_blocks: 1,
        wavelet_order: 1,
        levels: 1,
        learned_subbands: vec![Subband::Approx],
        proj_hidden: 4,
        out_channels: 1,
    };
    let model = WnoModel::init(config.clone(), 1).unwrap();
    let rebuilt = WnoModel::from_parts(config.clone(), model.params.clone()).unwrap();
    let input = Tensor::zeros(&[1, 16, 2]);
    assert_eq!(
        model.eval_forward(&input).unwrap().data(),
        rebuilt.eval_forward(&input).unwrap().data()
    );
    // Wrong parameter order is rejected.
    let mut swapped = model.params.clone();
    swapped.swap(0, 1);
    assert!(WnoModel::from_parts(config, swapped).is_err());
}
