//! The five experiment commands. Every command creates its output directory,
//! writes a `<command>_meta.json` with the resolved configuration, and emits
//! only deterministic artifacts (no timestamps), so a rerun with the same
//! config and seed reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use rpwno_core::ensemble::{stats_from_predictions, train_ensemble, Ensemble, PredictionStats};
use rpwno_core::metrics::{build_report, empirical_pdf, mae, mean_std, rel_l2_percent, EvalReport};
use rpwno_core::pde::{
    build_burgers_dataset, build_darcy_dataset, load_dataset, save_dataset, Dataset, Normalizer,
    Problem,
};
use rpwno_core::tensor::Tensor;

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use crate::config::{parse_points, ProbePoint, RunConfig};

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating output directory {}", cfg.out_dir.display()))
}

fn write_run_meta(cfg: &RunConfig, command: &str) -> Result<()> {
    let path = cfg.out_dir.join(format!("{command}_meta.json"));
    let json = serde_json::to_vec_pretty(cfg)?;
    fs::write(path, json)?;
    Ok(())
}

fn generate(problem: Problem, cfg: &RunConfig, count: usize, seed: u64) -> Result<Dataset> {
    Ok(match problem {
        Problem::Burgers => build_burgers_dataset(count, &cfg.burgers_config()?, seed)?,
        Problem::Darcy => build_darcy_dataset(count, &cfg.darcy_config()?, seed)?,
    })
}

/// Generates the train and test dataset files and prints a summary.
pub fn cmd_generate(cfg: &RunConfig) -> Result<(PathBuf, PathBuf)> {
    prepare_out_dir(cfg)?;
    let train = generate(cfg.problem, cfg, cfg.train_count(), cfg.train_data_seed())?;
    let test = generate(cfg.problem, cfg, cfg.test_count(), cfg.test_data_seed())?;
    let train_path = cfg.train_dataset_path();
    let test_path = cfg.test_dataset_path();
    save_dataset(&train_path, &train)?;
    save_dataset(&test_path, &test)?;
    write_run_meta(cfg, "generate")?;
    println!(
        "generated {}: train {} samples, test {} samples, grid {:?}, seed {} -> {}, {}",
        cfg.problem,
        train.count(),
        test.count(),
        cfg.grid(),
        cfg.seed,
        train_path.display(),
        test_path.display(),
    );
    Ok((train_path, test_path))
}

fn check_dataset_compat(cfg: &RunConfig, dataset: &Dataset) -> Result<()> {
    if dataset.metadata.problem != cfg.problem {
        bail!(
            "dataset holds {} but the config asks for {}",
            dataset.metadata.problem,
            cfg.problem
        );
    }
    if dataset.metadata.grid != cfg.grid() {
        bail!(
            "dataset grid {:?} does not match configured grid {:?}",
            dataset.metadata.grid,
            cfg.grid()
        );
    }
    Ok(())
}

/// Trains the configured ensemble; writes the checkpoint and per-member
/// loss curves.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf> {
    prepare_out_dir(cfg)?;
    let dataset = load_dataset(&cfg.train_dataset_path())?;
    check_dataset_compat(cfg, &dataset)?;
    let wno = cfg.wno_config()?;
    let train_cfg = cfg.train_config();

    let input_norm = Normalizer::fit(&dataset.inputs);
    let output_norm = Normalizer::fit(&dataset.outputs);
    let inputs = dataset.to_model_inputs_normalized(&input_norm);
    let targets = output_norm.encode(&dataset.outputs);

    let mut ensemble = Ensemble::new(&wno, cfg.beta(), &train_cfg.seeds)?;
    let histories = train_ensemble(&mut ensemble, &inputs, &targets, &train_cfg, cfg.parallel)?;

    let ck_path = cfg.out_dir.join("checkpoint.rpwc");
    let meta = CheckpointMeta {
        problem: cfg.problem,
        config: wno,
        beta: cfg.beta(),
        seeds: train_cfg.seeds.clone(),
        loss_histories: histories.clone(),
        input_norm,
        output_norm,
    };
    save_checkpoint(&ck_path, &ensemble, &meta)?;

    let loss_path = cfg.out_dir.join("loss.csv");
    let mut w = BufWriter::new(File::create(&loss_path)?);
    writeln!(w, "epoch,member,loss")?;
    for (m, history) in histories.iter().enumerate() {
        for (e, loss) in history.iter().enumerate() {
            writeln!(w, "{e},{m},{loss}")?;
        }
    }
    w.flush()?;
    write_run_meta(cfg, "train")?;
    let final_losses: Vec<f64> = histories.iter().map(|h| *h.last().unwrap()).collect();
    println!(
        "trained {} members x {} epochs; final training losses {:?} -> {}",
        ensemble.n_c(),
        train_cfg.epochs,
        final_losses,
        ck_path.display(),
    );
    Ok(ck_path)
}

/// Member predictions decoded to physical units.
fn physical_predictions(
    ensemble: &Ensemble,
    meta: &CheckpointMeta,
    dataset: &Dataset,
) -> Result<Vec<Tensor>> {
    let inputs = dataset.to_model_inputs_normalized(&meta.input_norm);
    ensemble
        .members
        .iter()
        .map(|m| Ok(meta.output_norm.decode(&m.predict(&inputs)?)))
        .collect()
}

fn physical_stats(
    ensemble: &Ensemble,
    meta: &CheckpointMeta,
    dataset: &Dataset,
) -> Result<PredictionStats> {
    Ok(stats_from_predictions(&physical_predictions(ensemble, meta, dataset)?)?)
}

/// Nearest grid index of a probe point; `grids` are the per-axis coordinate
/// vectors. Returns (flat location, resolved coordinates).
fn locate_point(dataset: &Dataset, point: ProbePoint) -> Result<(usize, Vec<f64>)> {
    let nearest = |grid: &Tensor, target: f64| -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &g) in grid.data().iter().enumerate() {
            if (g - target).abs() < dist {
                dist = (g - target).abs();
                best = i;
            }
        }
        best
    };
    match dataset.spatial_dims() {
        1 => {
            if point.y.is_some() {
                bail!("1D problem: probe points take only x");
            }
            let j = nearest(&dataset.grids[0], point.x);
            Ok((j, vec![dataset.grids[0].data()[j]]))
        }
        2 => {
            let Some(y) = point.y else {
                bail!("2D problem: probe points need x and y");
            };
            // Axis 0 is the row (y) coordinate, axis 1 the column (x).
            let i = nearest(&dataset.grids[0], y);
            let j = nearest(&dataset.grids[1], point.x);
            let cols = dataset.metadata.grid[1];
            Ok((
                i * cols + j,
                vec![dataset.grids[1].data()[j], dataset.grids[0].data()[i]],
            ))
        }
        other => bail!("unsupported dimensionality {other}"),
    }
}

fn write_pdf_csv(
    out_dir: &Path,
    index: &[f64],
    pred_values: &[f64],
    truth_values: &[f64],
) -> Result<PathBuf> {
    let lo = pred_values
        .iter()
        .chain(truth_values)
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = pred_values
        .iter()
        .chain(truth_values)
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let pad = 0.1 * (hi - lo).max(1e-12);
    let abscissae: Vec<f64> = (0..201)
        .map(|i| lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 200.0)
        .collect();
    let mut pred_pdf = empirical_pdf(pred_values, &abscissae)?;
    let mut truth_pdf = empirical_pdf(truth_values, &abscissae)?;
    pred_pdf.location = index.to_vec();
    truth_pdf.location = index.to_vec();

    let name = if index.len() == 1 {
        format!("pdf_x{:.3}.csv", index[0])
    } else {
        format!("pdf_x{:.3}_y{:.3}.csv", index[0], index[1])
    };
    let path = out_dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "value,pred_density,truth_density")?;
    for ((x, p), t) in abscissae.iter().zip(&pred_pdf.density).zip(&truth_pdf.density) {
        writeln!(w, "{x},{p},{t}")?;
    }
    w.flush()?;
    Ok(path)
}

fn write_fields_csv(
    out_dir: &Path,
    dataset: &Dataset,
    stats: &PredictionStats,
) -> Result<PathBuf> {
    let path = out_dir.join("fields.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    let dims = dataset.spatial_dims();
    let n_spatial: usize = dataset.metadata.grid.iter().product();
    let samples = dataset.count().min(5);
    if dims == 1 {
        writeln!(w, "sample,x,truth,mean,std,lower95,upper95")?;
    } else {
        writeln!(w, "sample,y,x,truth,mean,std,lower95,upper95")?;
    }
    for s in 0..samples {
        for loc in 0..n_spatial {
            let flat = s * n_spatial + loc;
            let coords = if dims == 1 {
                format!("{}", dataset.grids[0].data()[loc])
            } else {
                let cols = dataset.metadata.grid[1];
                format!(
                    "{},{}",
                    dataset.grids[0].data()[loc / cols],
                    dataset.grids[1].data()[loc % cols]
                )
            };
            writeln!(
                w,
                "{s},{coords},{},{},{},{},{}",
                dataset.outputs.data()[flat],
                stats.mean.data()[flat],
                stats.std.data()[flat],
                stats.lower95.data()[flat],
                stats.upper95.data()[flat],
            )?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// Evaluates a trained checkpoint on the test dataset: metric report plus
/// field and density CSV artifacts.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    prepare_out_dir(cfg)?;
    let (ensemble, meta) = load_checkpoint(&cfg.out_dir.join("checkpoint.rpwc"))?;
    let dataset = load_dataset(&cfg.test_dataset_path())?;
    check_dataset_compat(cfg, &dataset)?;
    if meta.config.grid != dataset.metadata.grid {
        bail!(
            "checkpoint was built for grid {:?}, dataset has {:?}",
            meta.config.grid,
            dataset.metadata.grid
        );
    }

    let stats = physical_stats(&ensemble, &meta, &dataset)?;
    let report = build_report(&stats, &dataset.outputs)?;
    let report_path = cfg.out_dir.join("report.json");
    fs::write(&report_path, serde_json::to_vec_pretty(&report)?)?;
    write_fields_csv(&cfg.out_dir, &dataset, &stats)?;

    if let Some(points) = &cfg.points {
        let n_spatial: usize = dataset.metadata.grid.iter().product();
        for point in parse_points(points)? {
            let (loc, coords) = locate_point(&dataset, point)?;
            let pred_values: Vec<f64> = (0..dataset.count())
                .map(|s| stats.mean.data()[s * n_spatial + loc])
                .collect();
            let truth_values: Vec<f64> = (0..dataset.count())
                .map(|s| dataset.outputs.data()[s * n_spatial + loc])
                .collect();
            write_pdf_csv(&cfg.out_dir, &coords, &pred_values, &truth_values)?;
        }
    }
    write_run_meta(cfg, "eval")?;
    println!(
        "eval: mae {:.6}, mean_std {:.6}, rel_l2 {:.3}%, nmse {:.4}%, coverage95 {:.3} -> {}",
        report.mae,
        report.mean_std,
        report.rel_l2_percent,
        report.nmse_percent,
        report.coverage95,
        report_path.display(),
    );
    Ok(report)
}

/// Trains one ensemble per training-set size on nested subsets and tabulates
/// the error and spread trends.
pub fn cmd_sweep_tds(cfg: &RunConfig) -> Result<PathBuf> {
    prepare_out_dir(cfg)?;
    let train = load_dataset(&cfg.train_dataset_path())?;
    let test = load_dataset(&cfg.test_dataset_path())?;
    check_dataset_compat(cfg, &train)?;
    let wno = cfg.wno_config()?;
    let train_cfg = cfg.train_config();
    let tds_list = cfg.sweep_tds();
    for &tds in &tds_list {
        if tds > train.count() {
            bail!("tds {} exceeds dataset size {}", tds, train.count());
        }
    }

    let path = cfg.out_dir.join("sweep_tds.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "tds,mae,mean_std,rel_l2_percent")?;
    for &tds in &tds_list {
        let subset = train.prefix(tds);
        let input_norm = Normalizer::fit(&subset.inputs);
        let output_norm = Normalizer::fit(&subset.outputs);
        let inputs = subset.to_model_inputs_normalized(&input_norm);
        let targets = output_norm.encode(&subset.outputs);
        let mut ensemble = Ensemble::new(&wno, cfg.beta(), &train_cfg.seeds)?;
        train_ensemble(&mut ensemble, &inputs, &targets, &train_cfg, cfg.parallel)?;

        let test_inputs = test.to_model_inputs_normalized(&input_norm);
        let preds: Vec<Tensor> = ensemble
            .members
            .iter()
            .map(|m| Ok::<_, anyhow::Error>(output_norm.decode(&m.predict(&test_inputs)?)))
            .collect::<Result<_>>()?;
        let stats = stats_from_predictions(&preds)?;
        let row_mae = mae(&stats.mean, &test.outputs)?;
        let row_std = mean_std(&stats);
        let row_rel = rel_l2_percent(&stats.mean, &test.outputs)?;
        writeln!(w, "{tds},{row_mae},{row_std},{row_rel}")?;
        println!("tds {tds}: mae {row_mae:.6}, mean_std {row_std:.6}, rel_l2 {row_rel:.3}%");
    }
    w.flush()?;
    write_run_meta(cfg, "sweep_tds")?;
    Ok(path)
}

/// Trains one ensemble per beta with identical seeds and data, and tabulates
/// the test loss.
pub fn cmd_sweep_beta(cfg: &RunConfig) -> Result<PathBuf> {
    prepare_out_dir(cfg)?;
    let train = load_dataset(&cfg.train_dataset_path())?;
    let test = load_dataset(&cfg.test_dataset_path())?;
    check_dataset_compat(cfg, &train)?;
    let wno = cfg.wno_config()?;
    let base_cfg = cfg.train_config();

    let input_norm = Normalizer::fit(&train.inputs);
    let output_norm = Normalizer::fit(&train.outputs);
    let inputs = train.to_model_inputs_normalized(&input_norm);
    let targets = output_norm.encode(&train.outputs);
    let test_inputs = test.to_model_inputs_normalized(&input_norm);

    let path = cfg.out_dir.join("sweep_beta.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "beta,test_rel_l2_percent")?;
    for beta in cfg.sweep_betas() {
        let mut train_cfg = base_cfg.clone();
        train_cfg.beta = beta;
        let mut ensemble = Ensemble::new(&wno, beta, &train_cfg.seeds)?;
        train_ensemble(&mut ensemble, &inputs, &targets, &train_cfg, cfg.parallel)?;
        let preds: Vec<Tensor> = ensemble
            .members
            .iter()
            .map(|m| Ok::<_, anyhow::Error>(output_norm.decode(&m.predict(&test_inputs)?)))
            .collect::<Result<_>>()?;
        let stats = stats_from_predictions(&preds)?;
        let rel = rel_l2_percent(&stats.mean, &test.outputs)?;
        writeln!(w, "{beta},{rel}")?;
        println!("beta {beta}: test rel_l2 {rel:.3}%");
    }
    w.flush()?;
    write_run_meta(cfg, "sweep_beta")?;
    Ok(path)
}

/// Stats of a saved checkpoint on a dataset, in physical units.
pub fn checkpoint_stats_on(
    checkpoint: &Path,
    dataset: &Dataset,
) -> Result<(PredictionStats, CheckpointMeta)> {
    let (ensemble, meta) = load_checkpoint(checkpoint)?;
    let stats = physical_stats(&ensemble, &meta, dataset)?;
    Ok((stats, meta))
}
