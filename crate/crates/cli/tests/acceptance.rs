//! Acceptance suite: one test per acceptance criterion. Each test prints a
//! `[PASS]`/`[FAIL]` line (visible with `--nocapture`) and asserts its
//! criterion, including the runtime budget where one is stated.
//!
//! Full-scale published figures are not reproducible at this scale; the
//! trend tests check direction and a 15% relative-L2 ceiling instead, and
//! the corresponding full-scale reference values are printed as labeled
//! context, not asserted.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rpwno_cli::commands::{cmd_eval, cmd_generate, cmd_sweep_beta, cmd_sweep_tds, cmd_train};
use rpwno_cli::config::{DataSection, ModelSection, RunConfig, SweepSection, TrainSection};
use rpwno_core::adam::{adam_step, AdamState};
use rpwno_core::autodiff::{Parameter, Tape};
use rpwno_core::ensemble::{
    precompute_prior_outputs, stats_from_predictions, train_ensemble, train_member, Ensemble,
    RpWno, TrainConfig,
};
use rpwno_core::gradcheck::check_gradients;
use rpwno_core::metrics::{ci_coverage, mae, mean_std, nmse_percent};
use rpwno_core::pde::{
    grf, solve_burgers, solve_darcy, BurgersConfig, DarcyConfig, Problem,
};
use rpwno_core::rng::{rng_from_seed, uniform_tensor};
use rpwno_core::tensor::Tensor;
use rpwno_core::wavelet::{daubechies_filters, dwt1d, dwt2d, idwt1d, idwt2d, max_dwt_levels, Subband};
use rpwno_core::wno::{WnoConfig, WnoModel};

// ---- Desk-scale experiment configuration -------------------------------

/// CS-I (1D viscous advection): grid, ensemble size, training-set sizes,
/// and epoch count fixed by the criterion; architecture sized for a laptop.
const CS1_WIDTH: usize = 20;
const CS1_BLOCKS: usize = 6;
const CS1_ORDER: usize = 6;
const CS1_LEVELS: usize = 4;
const CS1_PROJ: usize = 64;
const CS1_EPOCHS: usize = 300;
const CS1_BATCH: usize = 10;
const CS1_LR: f64 = 2e-3;
const CS1_WEIGHT_DECAY: f64 = 1e-4;
const CS1_TDS: [usize; 2] = [100, 400];
const CS1_BUDGET: Duration = Duration::from_secs(20 * 60);

/// CS-II (2D flow through thresholded permeability): grid, ensemble size,
/// and training-set sizes fixed by the criterion.
const CS2_WIDTH: usize = 16;
const CS2_ORDER: usize = 4;
const CS2_LEVELS: usize = 3;
const CS2_PROJ: usize = 64;
const CS2_EPOCHS: usize = 80;
const CS2_BATCH: usize = 10;
const CS2_LR: f64 = 2e-3;
const CS2_TDS: [usize; 2] = [100, 300];
const CS2_BUDGET: Duration = Duration::from_secs(30 * 60);

/// Scale study: fixed seeds across the scale values.
const BETA_TDS: usize = 100;
const BETA_EPOCHS: usize = 120;
const BETA_MEMBERS: usize = 3;
const BETA_VALUES: [f64; 4] = [0.5, 1.0, 2.0, 100.0];
const BETA_BUDGET: Duration = Duration::from_secs(40 * 60);

/// Full-scale published reference values (context only, not asserted):
/// 1D study at 1000 training samples: MAE 0.0025, mean std 0.0027;
/// 2D study at 1000 samples: MAE 0.0408e-3, mean std 0.3601e-4;
/// percentage NMSE 0.080 (1D) and 0.095 (2D).
const REFERENCE_NOTE: &str =
    "full-scale references: 1D MAE 0.0025 / std 0.0027, 2D MAE 4.08e-5 / std 3.60e-5, NMSE% 0.080 / 0.095";

// Every test serializes on this lock so per-criterion wall times are
// measured on otherwise idle cores.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn pass(name: &str, detail: &str) {
    println!("[PASS] {name}: {detail}");
}

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rpwno-accept-{}-{tag}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

// ---- 1. Wavelet correctness --------------------------------------------

#[test]
fn acceptance_wavelet_correctness() {
    let _guard = serial();
    let start = Instant::now();
    let mut cases = 0usize;
    for order in 1..=6usize {
        let filter = daubechies_filters(order).unwrap();
        for pow in 5..=10u32 {
            let n = 1usize << pow;
            let x = {
                let mut rng = rng_from_seed(1000 + order as u64 + n as u64);
                uniform_tensor(&mut rng, &[n], 10.0)
            };
            for levels in 1..=max_dwt_levels(n, filter.len()) {
                let coeffs = dwt1d(&x, &filter, levels).unwrap();
                let back = idwt1d(&coeffs, &filter).unwrap();
                let err = x
                    .data()
                    .iter()
                    .zip(back.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(err <= 1e-8, "1D db{order} n={n} levels={levels}: {err:e}");
                let energy_in = x.squared_norm();
                let energy_coeffs = coeffs.approx.squared_norm()
                    + coeffs.details.iter().map(|d| d.squared_norm()).sum::<f64>();
                assert!(
                    (energy_in - energy_coeffs).abs() <= 1e-10 * energy_in.max(1.0),
                    "1D energy db{order} n={n} levels={levels}"
                );
                cases += 1;
            }
        }
        for pow in 4..=6u32 {
            let n = 1usize << pow;
            let x = {
                let mut rng = rng_from_seed(2000 + order as u64 + n as u64);
                uniform_tensor(&mut rng, &[n, n], 10.0)
            };
            for levels in 1..=max_dwt_levels(n, filter.len()) {
                let coeffs = dwt2d(&x, &filter, levels).unwrap();
                let back = idwt2d(&coeffs, &filter).unwrap();
                let err = x
                    .data()
                    .iter()
                    .zip(back.data())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(err <= 1e-8, "2D db{order} n={n} levels={levels}: {err:e}");
                let energy_in = x.squared_norm();
                let energy_coeffs = coeffs.approx.squared_norm()
                    + coeffs
                        .details
                        .iter()
                        .map(|d| d.lh.squared_norm() + d.hl.squared_norm() + d.hh.squared_norm())
                        .sum::<f64>();
                assert!(
                    (energy_in - energy_coeffs).abs() <= 1e-10 * energy_in.max(1.0),
                    "2D energy db{order} n={n} levels={levels}"
                );
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    pass(
        "wavelet-correctness",
        &format!("{cases} size/order/level combinations, {elapsed:?}"),
    );
}

// ---- 2. Autodiff correctness -------------------------------------------

#[test]
fn acceptance_autodiff_correctness() {
    let _guard = serial();
    let start = Instant::now();

    // Per-op sweeps at 1e-4.
    let filter = daubechies_filters(2).unwrap();
    for seed in 0..5u64 {
        let mut rng = rng_from_seed(seed);
        let mut params = vec![
            Parameter::new("x", uniform_tensor(&mut rng, &[2, 16, 3], 1.0)),
            Parameter::new("w", uniform_tensor(&mut rng, &[3, 3, 4], 1.0)),
            Parameter::new("cw", uniform_tensor(&mut rng, &[3, 2], 1.0)),
            Parameter::new("cb", uniform_tensor(&mut rng, &[2], 1.0)),
        ];
        for p in params.iter_mut() {
            p.zero_grad();
        }
        let truth = {
            let mut r2 = rng_from_seed(100 + seed);
            uniform_tensor(&mut r2, &[2, 16, 2], 1.0).map(|v| v + 2.0)
        };
        let forward = |ps: &[Parameter], tape: &mut Tape| {
            let x = tape.leaf(&ps[0], 0);
            let w = tape.leaf(&ps[1], 1);
            let learned = [Subband::Approx];
            let h = tape.wmc(x, &[w], &filter, 2, &learned).unwrap();
            let g = tape.gelu(h);
            let sum = tape.add(g, x).unwrap();
            let cw = tape.leaf(&ps[2], 2);
            let cb = tape.leaf(&ps[3], 3);
            let y = tape.conv1x1(sum, cw, cb).unwrap();
            tape.relative_l2(y, &truth).unwrap()
        };
        let mut tape = Tape::new();
        let loss = forward(&params, &mut tape);
        tape.backward_into(loss, &mut params).unwrap();
        let mismatch = check_gradients(&mut params, 1e-4, |ps| {
            let mut tape = Tape::new();
            let loss = forward(ps, &mut tape);
            tape.value(loss).item()
        });
        assert!(mismatch.is_none(), "op sweep seed {seed}: {mismatch:?}");
    }

    // Full tiny network: p = 4, one block, grid 16.
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
    let mut model = WnoModel::init(config.clone(), 77).unwrap();
    let mut rng = rng_from_seed(7);
    let input = uniform_tensor(&mut rng, &[2, 16, 2], 1.0);
    let truth = uniform_tensor(&mut rng, &[2, 16, 1], 1.0).map(|v| v + 2.0);
    model.zero_grads();
    let mut tape = Tape::new();
    let x = tape.input(input.clone());
    let y = model.forward(&mut tape, x).unwrap();
    let loss = tape.relative_l2(y, &truth).unwrap();
    tape.backward_into(loss, &mut model.params).unwrap();
    let n_params: usize = model.params.iter().map(|p| p.value.numel()).sum();
    let mismatch = check_gradients(&mut model.params, 1e-4, |params| {
        let probe = WnoModel::from_parts(config.clone(), params.to_vec()).unwrap();
        let mut tape = Tape::new();
        let x = tape.input(input.clone());
        let y = probe.forward(&mut tape, x).unwrap();
        let loss = tape.relative_l2(y, &truth).unwrap();
        tape.value(loss).item()
    });
    assert!(mismatch.is_none(), "full model: {mismatch:?}");

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    pass(
        "autodiff-correctness",
        &format!("op sweeps + full {n_params}-parameter network, {elapsed:?}"),
    );
}

// ---- 3. Randomized-prior invariants ------------------------------------

fn tiny_rp_config() -> WnoConfig {
    WnoConfig {
        spatial_dims: 1,
        grid: vec![16],
        in_channels: 2,
        width: 4,
        num_blocks: 1,
        wavelet_order: 1,
        levels: 2,
        learned_subbands: vec![Subband::Approx, Subband::Detail],
        proj_hidden: 8,
        out_channels: 1,
    }
}

fn tiny_rp_data(n: usize) -> (Tensor, Tensor) {
    let mut rng = rng_from_seed(99);
    let x = uniform_tensor(&mut rng, &[n, 16, 2], 1.0);
    let y = uniform_tensor(&mut rng, &[n, 16, 1], 1.0).map(|v| v + 2.0);
    (x, y)
}

fn param_bits(model: &WnoModel) -> Vec<u64> {
    model
        .params
        .iter()
        .flat_map(|p| p.value.data().iter().map(|v| v.to_bits()))
        .collect()
}

#[test]
fn acceptance_rp_invariants() {
    let _guard = serial();
    let config = tiny_rp_config();
    let (inputs, outputs) = tiny_rp_data(8);

    // Frozen-prior checksum invariant under training.
    let mut member = RpWno::new(&config, 1.0, 5).unwrap();
    let prior_before = member.prior_checksum();
    let cfg = TrainConfig::new(4, 3, 1.0, vec![5]);
    train_member(&mut member, &inputs, &outputs, &cfg, 5).unwrap();
    assert_eq!(member.prior_checksum(), prior_before, "prior moved");

    // beta = 0 training equals an independently written vanilla loop.
    let seed = 31u64;
    let mut rp0 = RpWno::new(&config, 0.0, seed).unwrap();
    let cfg0 = TrainConfig::new(3, 3, 0.0, vec![seed]);
    train_member(&mut rp0, &inputs, &outputs, &cfg0, seed).unwrap();
    let mut vanilla = WnoModel::init(
        config.clone(),
        rpwno_core::rng::derive_seed(seed, rpwno_core::rng::STREAM_TRAINABLE_INIT),
    )
    .unwrap();
    let mut adam = AdamState::new(&vanilla.params, cfg0.optimizer);
    let shuffle_root = rpwno_core::rng::derive_seed(seed, rpwno_core::rng::STREAM_SHUFFLE);
    for epoch in 0..cfg0.epochs {
        adam.set_lr(cfg0.optimizer.lr * 0.5f64.powi((epoch / cfg0.lr_halve_every) as i32));
        let order = rpwno_core::rng::shuffled_indices(
            8,
            rpwno_core::rng::derive_seed(shuffle_root, epoch as u64),
        );
        for chunk in order.chunks(cfg0.batch_size) {
            let bx = inputs.gather_rows(chunk);
            let by = outputs.gather_rows(chunk);
            vanilla.zero_grads();
            let mut tape = Tape::new();
            let x = tape.input(bx);
            let y = vanilla.forward(&mut tape, x).unwrap();
            let loss = tape.relative_l2(y, &by).unwrap();
            tape.backward_into(loss, &mut vanilla.params).unwrap();
            adam_step(&mut vanilla.params, &mut adam).unwrap();
        }
    }
    assert_eq!(param_bits(&rp0.trainable), param_bits(&vanilla), "beta=0 != vanilla");

    // Cached vs uncached prior outputs, bitwise.
    let mut cached = RpWno::new(&config, 1.0, 8).unwrap();
    let mut uncached = RpWno::new(&config, 1.0, 8).unwrap();
    let mut cfg_c = TrainConfig::new(4, 3, 1.0, vec![8]);
    cfg_c.use_prior_cache = true;
    let hc = train_member(&mut cached, &inputs, &outputs, &cfg_c, 8).unwrap();
    cfg_c.use_prior_cache = false;
    let hu = train_member(&mut uncached, &inputs, &outputs, &cfg_c, 8).unwrap();
    assert!(hc.iter().zip(&hu).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(param_bits(&cached.trainable), param_bits(&uncached.trainable));
    let cache = precompute_prior_outputs(&cached, &inputs).unwrap();
    assert_eq!(cache.shape()[0], inputs.shape()[0]);

    // Serial vs parallel ensemble training, bitwise.
    let seeds = vec![1u64, 2, 3, 4];
    let tc = TrainConfig::new(3, 3, 1.0, seeds.clone());
    let mut serial = Ensemble::new(&config, 1.0, &seeds).unwrap();
    train_ensemble(&mut serial, &inputs, &outputs, &tc, false).unwrap();
    let mut parallel = Ensemble::new(&config, 1.0, &seeds).unwrap();
    train_ensemble(&mut parallel, &inputs, &outputs, &tc, true).unwrap();
    for (a, b) in serial.members.iter().zip(&parallel.members) {
        assert_eq!(param_bits(&a.trainable), param_bits(&b.trainable));
    }

    pass(
        "rp-invariants",
        "frozen prior, beta=0 vanilla equivalence, cache equivalence, serial==parallel",
    );
}

// ---- 4. Ensemble statistics --------------------------------------------

#[test]
fn acceptance_ensemble_statistics() {
    let _guard = serial();
    // Two-member worked example: predictions 1 and 3.
    let stats = stats_from_predictions(&[
        Tensor::from_vec(vec![1.0]),
        Tensor::from_vec(vec![3.0]),
    ])
    .unwrap();
    assert_eq!(stats.mean.data()[0], 2.0);
    assert_eq!(stats.std.data()[0], 1.0);
    assert!((stats.lower95.data()[0] - 0.04).abs() < 1e-12);
    assert!((stats.upper95.data()[0] - 3.96).abs() < 1e-12);

    // Mean and population-std against a naive recomputation, 1e-12.
    let mut rng = rng_from_seed(4242);
    let predictions: Vec<Tensor> = (0..7)
        .map(|_| uniform_tensor(&mut rng, &[4, 9], 3.0))
        .collect();
    let stats = stats_from_predictions(&predictions).unwrap();
    let n_c = predictions.len() as f64;
    for i in 0..36 {
        let values: Vec<f64> = predictions.iter().map(|p| p.data()[i]).collect();
        let mut mean = 0.0;
        for &v in &values {
            mean += v;
        }
        mean /= n_c;
        let mut var = 0.0;
        for &v in &values {
            var += (v - mean) * (v - mean);
        }
        let std = (var / n_c).sqrt();
        assert!((stats.mean.data()[i] - mean).abs() <= 1e-12);
        assert!((stats.std.data()[i] - std).abs() <= 1e-12);
        assert!((stats.lower95.data()[i] - (mean - 1.96 * std)).abs() <= 1e-12);
        assert!((stats.upper95.data()[i] - (mean + 1.96 * std)).abs() <= 1e-12);
    }
    pass(
        "ensemble-statistics",
        "population std divisor, two-member example exact, naive recomputation to 1e-12",
    );
}

// ---- 5. Solver oracles ---------------------------------------------------

#[test]
fn acceptance_solver_oracles() {
    let _guard = serial();
    let start = Instant::now();

    // Flow-cell center value: coarse 32^2 within 1% of the 512^2 reference.
    let coarse = solve_darcy(
        &Tensor::full(&[32, 32], 3.0),
        &DarcyConfig {
            rows: 32,
            cols: 32,
            ..Default::default()
        },
    )
    .unwrap();
    let fine = solve_darcy(
        &Tensor::full(&[512, 512], 3.0),
        &DarcyConfig {
            rows: 512,
            cols: 512,
            ..Default::default()
        },
    )
    .unwrap();
    let uc = rpwno_core::pde::bilinear_at(&coarse, 0.5, 0.5);
    let uf = rpwno_core::pde::bilinear_at(&fine, 0.5, 0.5);
    let center_rel = (uc - uf).abs() / uf;
    assert!(center_rel <= 0.01, "center value off by {center_rel:.4}");

    // Mean conservation on a random initial condition.
    let spec = grf::GrfSpec::burgers_initial_condition(128, 11);
    let ics = grf::sample_grf(&spec, 1).unwrap();
    let ic = Tensor::new(vec![128], ics.data().to_vec()).unwrap();
    let out = solve_burgers(&ic, &BurgersConfig::default()).unwrap();
    let mean_in = ic.data().iter().sum::<f64>() / 128.0;
    let mean_out = out.data().iter().sum::<f64>() / 128.0;
    assert!((mean_in - mean_out).abs() <= 1e-8, "mean drifted");

    // Self-convergence factor >= 4 under grid doubling.
    let sine = |n: usize| {
        Tensor::new(
            vec![n],
            (0..n)
                .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin())
                .collect(),
        )
        .unwrap()
    };
    let run = |n: usize| {
        solve_burgers(
            &sine(n),
            &BurgersConfig {
                grid: n,
                ..Default::default()
            },
        )
        .unwrap()
    };
    let (u32g, u64g, u128g) = (run(32), run(64), run(128));
    let err = |coarse: &Tensor, fine: &Tensor| {
        let stride = fine.numel() / coarse.numel();
        coarse
            .data()
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - fine.data()[j * stride]).abs())
            .fold(0.0f64, f64::max)
    };
    let factor = err(&u32g, &u64g) / err(&u64g, &u128g);
    assert!(factor >= 4.0, "convergence factor {factor:.2}");

    // Random-field spectrum: per-mode variance within 10% at 10k draws.
    let spec1 = grf::GrfSpec::burgers_initial_condition(64, 123);
    let draws1 = grf::sample_grf(&spec1, 10_000).unwrap();
    for k in [0usize, 1, 4] {
        let coefs = grf::project_mode_1d(&draws1, k);
        let want = spec1.mode_std(grf::lambda_periodic(k)).powi(2);
        let got = coefs.iter().map(|c| c * c).sum::<f64>() / coefs.len() as f64;
        assert!(
            (got - want).abs() <= 0.10 * want,
            "1D mode {k}: {got:e} vs {want:e}"
        );
    }
    let spec2 = grf::GrfSpec::darcy_permeability(16, 16, 321);
    let draws2 = grf::sample_grf(&spec2, 10_000).unwrap();
    for (k, l) in [(0usize, 0usize), (1, 0), (2, 3)] {
        let coefs = grf::project_mode_2d(&draws2, k, l);
        let want = spec2.mode_std(grf::lambda_neumann(k, l)).powi(2);
        let got = coefs.iter().map(|c| c * c).sum::<f64>() / coefs.len() as f64;
        assert!(
            (got - want).abs() <= 0.10 * want,
            "2D mode ({k},{l}): {got:e} vs {want:e}"
        );
    }

    pass(
        "solver-oracles",
        &format!(
            "center value {center_rel:.4} rel, convergence factor {factor:.0}, spectra in band; {:?}",
            start.elapsed()
        ),
    );
}

// ---- 6-8. Desk-scale trend studies --------------------------------------

fn cs1_run_config(out: PathBuf) -> RunConfig {
    RunConfig {
        problem: Problem::Burgers,
        out_dir: out,
        seed: 2024,
        data: DataSection {
            grid: Some(vec![128]),
            train_count: Some(CS1_TDS[1]),
            test_count: Some(100),
            ..Default::default()
        },
        model: ModelSection {
            width: Some(CS1_WIDTH),
            num_blocks: Some(CS1_BLOCKS),
            wavelet_order: Some(CS1_ORDER),
            levels: Some(CS1_LEVELS),
            proj_hidden: Some(CS1_PROJ),
            ..Default::default()
        },
        train: TrainSection {
            epochs: Some(CS1_EPOCHS),
            batch_size: Some(CS1_BATCH),
            lr: Some(CS1_LR),
            weight_decay: Some(CS1_WEIGHT_DECAY),
            n_c: Some(5),
            ..Default::default()
        },
        sweep: SweepSection {
            tds: Some(CS1_TDS.to_vec()),
            betas: None,
        },
        points: None,
        parallel: true,
    }
}

#[derive(Debug)]
struct TdsRow {
    tds: usize,
    mae: f64,
    mean_std: f64,
    rel_l2: f64,
}

fn parse_tds_csv(path: &std::path::Path) -> Vec<TdsRow> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            TdsRow {
                tds: cols[0] as usize,
                mae: cols[1],
                mean_std: cols[2],
                rel_l2: cols[3],
            }
        })
        .collect()
}

#[test]
fn acceptance_cs1_trend() {
    let _guard = serial();
    let start = Instant::now();
    let out = out_dir("cs1");
    let cfg = cs1_run_config(out.clone());
    cmd_generate(&cfg).unwrap();
    let csv = cmd_sweep_tds(&cfg).unwrap();
    let rows = parse_tds_csv(&csv);
    assert_eq!(rows.len(), 2);
    let (small, large) = (&rows[0], &rows[1]);
    assert_eq!((small.tds, large.tds), (CS1_TDS[0], CS1_TDS[1]));
    assert!(
        large.mae < small.mae,
        "MAE did not improve: {small:?} -> {large:?}"
    );
    assert!(
        large.mean_std < small.mean_std,
        "spread did not shrink: {small:?} -> {large:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed < CS1_BUDGET, "took {elapsed:?}");
    println!("[NOTE] {REFERENCE_NOTE}");
    assert!(
        large.rel_l2 < 15.0,
        "rel L2 {:.2}% at {} samples exceeds the 15% ceiling. Known limit: the \
         sampled initial conditions carry an N(0,1) constant mode that, by \
         Galilean invariance, translates each solution by a random \
         domain-scale shift; with that mode ablated the same configuration \
         reaches ~7% (see crates/core/tests/burgers_ablation.rs).",
        large.rel_l2,
        large.tds
    );
    pass(
        "cs1-trend",
        &format!(
            "MAE {:.4} -> {:.4}, mean std {:.4} -> {:.4}, rel L2 {:.2}% at TDS {}, {elapsed:?}",
            small.mae, large.mae, small.mean_std, large.mean_std, large.rel_l2, large.tds
        ),
    );
    fs::remove_dir_all(&out).ok();
}

fn cs2_run_config(out: PathBuf) -> RunConfig {
    RunConfig {
        problem: Problem::Darcy,
        out_dir: out,
        seed: 4096,
        data: DataSection {
            grid: Some(vec![32, 32]),
            train_count: Some(CS2_TDS[1]),
            test_count: Some(100),
            ..Default::default()
        },
        model: ModelSection {
            width: Some(CS2_WIDTH),
            num_blocks: Some(4),
            wavelet_order: Some(CS2_ORDER),
            levels: Some(CS2_LEVELS),
            proj_hidden: Some(CS2_PROJ),
            ..Default::default()
        },
        train: TrainSection {
            epochs: Some(CS2_EPOCHS),
            batch_size: Some(CS2_BATCH),
            lr: Some(CS2_LR),
            lr_halve_every: Some(30),
            n_c: Some(5),
            ..Default::default()
        },
        sweep: SweepSection {
            tds: Some(CS2_TDS.to_vec()),
            betas: None,
        },
        points: None,
        parallel: true,
    }
}

#[test]
fn acceptance_cs2_trend() {
    let _guard = serial();
    let start = Instant::now();
    let out = out_dir("cs2");
    let cfg = cs2_run_config(out.clone());
    cmd_generate(&cfg).unwrap();
    let csv = cmd_sweep_tds(&cfg).unwrap();
    let rows = parse_tds_csv(&csv);
    let (small, large) = (&rows[0], &rows[1]);
    assert!(large.mae < small.mae, "{small:?} -> {large:?}");
    assert!(large.mean_std < small.mean_std, "{small:?} -> {large:?}");
    assert!(
        large.rel_l2 < 15.0,
        "rel L2 {:.2}% at {} samples",
        large.rel_l2,
        large.tds
    );
    let elapsed = start.elapsed();
    assert!(elapsed < CS2_BUDGET, "took {elapsed:?}");
    pass(
        "cs2-trend",
        &format!(
            "MAE {:.5} -> {:.5}, mean std {:.5} -> {:.5}, rel L2 {:.2}% at TDS {}, {elapsed:?}",
            small.mae, large.mae, small.mean_std, large.mean_std, large.rel_l2, large.tds
        ),
    );
    fs::remove_dir_all(&out).ok();
}

#[test]
fn acceptance_beta_trend() {
    let _guard = serial();
    let start = Instant::now();
    let out = out_dir("beta");
    let mut cfg = cs1_run_config(out.clone());
    cfg.seed = 777;
    cfg.data.train_count = Some(BETA_TDS);
    cfg.train.epochs = Some(BETA_EPOCHS);
    cfg.train.n_c = Some(BETA_MEMBERS);
    cfg.sweep.tds = None;
    cfg.sweep.betas = Some(BETA_VALUES.to_vec());
    cmd_generate(&cfg).unwrap();
    let csv = cmd_sweep_beta(&cfg).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    let mut losses = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let (beta, loss) = line.split_once(',').unwrap();
        losses.insert(beta.to_string(), loss.parse::<f64>().unwrap());
    }
    let huge = losses["100"];
    for beta in ["0.5", "1", "2"] {
        assert!(
            losses[beta] <= huge,
            "beta {beta}: {} > beta 100: {huge}",
            losses[beta]
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < BETA_BUDGET, "took {elapsed:?}");
    pass(
        "beta-trend",
        &format!("losses {losses:?}, {elapsed:?}"),
    );
    fs::remove_dir_all(&out).ok();
}

// ---- 9. Metric oracle equivalence ----------------------------------------

#[test]
fn acceptance_metric_oracles() {
    let _guard = serial();
    let mut rng = rng_from_seed(515);
    for case in 0..50 {
        let s = 2 + (case % 4);
        let n = 3 + (case % 5);
        let pred = uniform_tensor(&mut rng, &[s, n], 2.0);
        let truth = uniform_tensor(&mut rng, &[s, n], 2.0).map(|v| v + 2.5);
        let spread = uniform_tensor(&mut rng, &[s, n], 1.0).map(f64::abs);

        // Independent double-loop recomputations.
        let mut abs_sum = 0.0;
        let mut sq_num = 0.0;
        let mut sq_den = 0.0;
        let mut spread_sum = 0.0;
        let mut hits = 0usize;
        for i in 0..s {
            for j in 0..n {
                let p = pred.at(&[i, j]);
                let t = truth.at(&[i, j]);
                let sd = spread.at(&[i, j]);
                abs_sum += (p - t).abs();
                sq_num += (p - t) * (p - t);
                sq_den += t * t;
                spread_sum += sd;
                let lo = p - 1.96 * sd;
                let hi = p + 1.96 * sd;
                if lo <= t && t <= hi {
                    hits += 1;
                }
            }
        }
        let count = (s * n) as f64;

        assert!((mae(&pred, &truth).unwrap() - abs_sum / count).abs() <= 1e-12);
        assert!(
            (nmse_percent(&pred, &truth).unwrap() - 100.0 * sq_num / sq_den).abs() <= 1e-12
        );
        let stats = rpwno_core::ensemble::PredictionStats {
            mean: pred.clone(),
            std: spread.clone(),
            lower95: pred.zip_map(&spread, |m, sd| m - 1.96 * sd).unwrap(),
            upper95: pred.zip_map(&spread, |m, sd| m + 1.96 * sd).unwrap(),
        };
        assert!((mean_std(&stats) - spread_sum / count).abs() <= 1e-12);
        assert!((ci_coverage(&stats, &truth).unwrap() - hits as f64 / count).abs() <= 1e-12);
    }

    // Scaling identity at c = 1.1; exact up to f64 rounding of the literal.
    let mut rng = rng_from_seed(516);
    let truth = uniform_tensor(&mut rng, &[6, 8], 3.0);
    let scaled = truth.map(|v| 1.1 * v);
    let got = nmse_percent(&scaled, &truth).unwrap();
    assert!((got - 1.0).abs() <= 1e-12, "nmse(1.1y, y) = {got}");

    pass(
        "metric-oracles",
        "50 random tensors vs double-loop oracles at 1e-12; nmse scaling identity",
    );
}

// ---- 10. Reproducibility --------------------------------------------------

#[test]
fn acceptance_reproducibility() {
    let _guard = serial();
    let out_a = out_dir("repro-a");
    let out_b = out_dir("repro-b");
    let make = |out: PathBuf| RunConfig {
        problem: Problem::Burgers,
        out_dir: out,
        seed: 99,
        data: DataSection {
            grid: Some(vec![16]),
            train_count: Some(10),
            test_count: Some(6),
            dt: Some(1e-3),
            ..Default::default()
        },
        model: ModelSection {
            width: Some(4),
            num_blocks: Some(1),
            wavelet_order: Some(1),
            levels: Some(2),
            proj_hidden: Some(8),
            ..Default::default()
        },
        train: TrainSection {
            epochs: Some(3),
            batch_size: Some(4),
            n_c: Some(2),
            ..Default::default()
        },
        sweep: SweepSection {
            tds: Some(vec![5, 10]),
            betas: Some(vec![0.0, 1.0]),
        },
        points: None,
        parallel: true,
    };
    let cfg_a = make(out_a.clone());
    let cfg_b = make(out_b.clone());
    for cfg in [&cfg_a, &cfg_b] {
        cmd_generate(cfg).unwrap();
        cmd_train(cfg).unwrap();
        cmd_eval(cfg).unwrap();
        cmd_sweep_tds(cfg).unwrap();
        cmd_sweep_beta(cfg).unwrap();
    }
    for name in [
        "train.rpwd",
        "test.rpwd",
        "checkpoint.rpwc",
        "loss.csv",
        "report.json",
        "fields.csv",
        "sweep_tds.csv",
        "sweep_beta.csv",
    ] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    pass(
        "reproducibility",
        "datasets, checkpoint, report, and sweep tables identical across reruns",
    );
    fs::remove_dir_all(&out_a).ok();
    fs::remove_dir_all(&out_b).ok();
}
