//! Run configuration: a JSON file plus command-line overrides.
//!
//! Every numeric knob has a problem-specific default, so a minimal config is
//! just `{"problem": "burgers", "out_dir": "runs/b1"}`. The resolved
//! configuration is written next to each command's artifacts, making every
//! run reproducible from that file alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rpwno_core::adam::AdamConfig;
use rpwno_core::ensemble::TrainConfig;
use rpwno_core::pde::{BurgersConfig, DarcyConfig, Problem};
use rpwno_core::rng::derive_seed;
use rpwno_core::wavelet::Subband;
use rpwno_core::wno::WnoConfig;

/// Seed-stream tags for the CLI layer.
const TAG_TEST_DATA: u64 = 0x7e57_0001;
const TAG_MEMBER_BASE: u64 = 0x3e3d_0000;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Spatial extents; defaults to `[128]` (burgers) or `[32, 32]` (darcy).
    pub grid: Option<Vec<usize>>,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
    pub viscosity: Option<f64>,
    pub dt: Option<f64>,
    pub darcy_tol: Option<f64>,
    /// Existing dataset files; when unset, `<out_dir>/train.rpwd` and
    /// `<out_dir>/test.rpwd` are used.
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub width: Option<usize>,
    pub num_blocks: Option<usize>,
    pub wavelet_order: Option<usize>,
    pub levels: Option<usize>,
    pub learned_subbands: Option<Vec<Subband>>,
    pub proj_hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_halve_every: Option<usize>,
    pub weight_decay: Option<f64>,
    pub beta: Option<f64>,
    pub n_c: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub tds: Option<Vec<usize>>,
    pub betas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Probe locations for the pointwise density curves, e.g.
    /// `"x=0.14;x=0.92"` (1D) or `"x=0.28,y=0.64"` (2D).
    #[serde(default)]
    pub points: Option<String>,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_seed() -> u64 {
    0
}

fn default_parallel() -> bool {
    true
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn grid(&self) -> Vec<usize> {
        self.data.grid.clone().unwrap_or_else(|| match self.problem {
            Problem::Burgers => vec![128],
            Problem::Darcy => vec![32, 32],
        })
    }

    pub fn train_count(&self) -> usize {
        self.data.train_count.unwrap_or(400)
    }

    pub fn test_count(&self) -> usize {
        self.data.test_count.unwrap_or(100)
    }

    pub fn train_data_seed(&self) -> u64 {
        self.seed
    }

    pub fn test_data_seed(&self) -> u64 {
        derive_seed(self.seed, TAG_TEST_DATA)
    }

    pub fn train_dataset_path(&self) -> PathBuf {
        self.data
            .train_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("train.rpwd"))
    }

    pub fn test_dataset_path(&self) -> PathBuf {
        self.data
            .test_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("test.rpwd"))
    }

    pub fn burgers_config(&self) -> Result<BurgersConfig> {
        let grid = self.grid();
        if grid.len() != 1 {
            bail!("burgers needs one grid extent, got {grid:?}");
        }
        Ok(BurgersConfig {
            viscosity: self.data.viscosity.unwrap_or(0.01),
            grid: grid[0],
            t_final: 1.0,
            dt: self.data.dt.unwrap_or(1e-4),
        })
    }

    pub fn darcy_config(&self) -> Result<DarcyConfig> {
        let grid = self.grid();
        if grid.len() != 2 {
            bail!("darcy needs two grid extents, got {grid:?}");
        }
        Ok(DarcyConfig {
            rows: grid[0],
            cols: grid[1],
            tol: self.data.darcy_tol.unwrap_or(1e-10),
            ..Default::default()
        })
    }

    /// Operator architecture with problem defaults and config overrides.
    pub fn wno_config(&self) -> Result<WnoConfig> {
        let grid = self.grid();
        let mut config = match self.problem {
            Problem::Burgers => WnoConfig::default_1d(grid[0]),
            Problem::Darcy => WnoConfig::default_2d(grid[0], grid[1]),
        };
        if let Some(w) = self.model.width {
            config.width = w;
        }
        if let Some(b) = self.model.num_blocks {
            config.num_blocks = b;
        }
        if let Some(o) = self.model.wavelet_order {
            config.wavelet_order = o;
            // Re-clamp default levels for the new filter length.
            let filter_len = 2 * o;
            let feasible = grid
                .iter()
                .map(|&e| rpwno_core::wavelet::max_dwt_levels(e, filter_len))
                .min()
                .unwrap_or(1);
            config.levels = config.levels.min(feasible.max(1));
        }
        if let Some(l) = self.model.levels {
            config.levels = l;
        }
        if let Some(bands) = &self.model.learned_subbands {
            config.learned_subbands = bands.clone();
        }
        if let Some(h) = self.model.proj_hidden {
            config.proj_hidden = h;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn n_c(&self) -> usize {
        self.train.n_c.unwrap_or(5)
    }

    pub fn beta(&self) -> f64 {
        self.train.beta.unwrap_or(1.0)
    }

    /// Member seeds derived from the master seed, pairwise distinct.
    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.n_c())
            .map(|i| derive_seed(self.seed, TAG_MEMBER_BASE + i as u64))
            .collect()
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut optimizer = AdamConfig::default();
        if let Some(lr) = self.train.lr {
            optimizer.lr = lr;
        }
        if let Some(wd) = self.train.weight_decay {
            optimizer.weight_decay = wd;
        }
        TrainConfig {
            epochs: self.train.epochs.unwrap_or(300),
            batch_size: self.train.batch_size.unwrap_or(20),
            optimizer,
            lr_halve_every: self.train.lr_halve_every.unwrap_or(50),
            beta: self.beta(),
            seeds: self.member_seeds(),
            use_prior_cache: true,
        }
    }

    pub fn sweep_tds(&self) -> Vec<usize> {
        self.sweep.tds.clone().unwrap_or_else(|| vec![100, 400])
    }

    pub fn sweep_betas(&self) -> Vec<f64> {
        self.sweep
            .betas
            .clone()
            .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 100.0])
    }
}

/// A probe location parsed from the `--points` syntax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub x: f64,
    pub y: Option<f64>,
}

/// Parses `"x=0.14;x=0.92"` or `"x=0.28,y=0.64;x=0.76,y=0.15"`.
pub fn parse_points(text: &str) -> Result<Vec<ProbePoint>> {
    let mut points = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut x = None;
        let mut y = None;
        for kv in part.split(',') {
            let (key, value) = kv
                .split_once('=')
                .with_context(|| format!("expected key=value in '{kv}'"))?;
            let value: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("parsing coordinate '{value}'"))?;
            match key.trim() {
                "x" => x = Some(value),
                "y" => y = Some(value),
                other => bail!("unknown coordinate '{other}' (use x or y)"),
            }
        }
        let x = x.context("point is missing the x coordinate")?;
        points.push(ProbePoint { x, y });
    }
    Ok(points)
}
