//! Dataset generation for the two benchmark problems and the on-disk
//! dataset container.
//!
//! A dataset pairs input fields with solved output fields on a grid, plus
//! normalized coordinate vectors (one per spatial axis, in axis order) and
//! generation metadata. Sample generation derives one seed per sample, so
//! results are identical whether samples are produced serially or in
//! parallel.

pub mod burgers;
pub mod darcy;
pub mod grf;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

pub use burgers::{solve_burgers, BurgersConfig};
pub use darcy::{bilinear_at, solve_darcy, DarcyConfig};
pub use grf::{sample_grf, GrfSpec};

/// Benchmark problem tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Burgers,
    Darcy,
}

impl std::str::FromStr for Problem {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Problem> {
        match s.to_ascii_lowercase().as_str() {
            "burgers" => Ok(Problem::Burgers),
            "darcy" => Ok(Problem::Darcy),
            other => Err(CoreError::InvalidArgument(format!(
                "unknown problem '{other}' (expected burgers or darcy)"
            ))),
        }
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Problem::Burgers => f.write_str("burgers"),
            Problem::Darcy => f.write_str("darcy"),
        }
    }
}

/// Solver settings recorded alongside a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolverMeta {
    Burgers {
        viscosity: f64,
        dt: f64,
        t_final: f64,
    },
    Darcy {
        tol: f64,
        forcing: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub problem: Problem,
    pub count: usize,
    pub grid: Vec<usize>,
    pub seed: u64,
    pub solver: SolverMeta,
}

/// Paired input/output samples on a grid, with per-axis coordinates.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// `[count, spatial.., 1]`.
    pub inputs: Tensor,
    /// One coordinate vector per spatial axis, monotone in `[0, 1]`.
    pub grids: Vec<Tensor>,
    /// `[count, spatial.., 1]`.
    pub outputs: Tensor,
    pub metadata: DatasetMeta,
}

impl Dataset {
    pub fn count(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn spatial_dims(&self) -> usize {
        self.grids.len()
    }

    /// Model inputs: the function channel plus one normalized coordinate
    /// channel per axis, `[count, spatial.., 1 + dims]`.
    pub fn to_model_inputs(&self) -> Tensor {
        let shape = self.inputs.shape();
        let count = shape[0];
        let spatial = &shape[1..shape.len() - 1];
        let n_spatial: usize = spatial.iter().product();
        let channels = 1 + self.grids.len();
        let mut out = vec![0.0; count * n_spatial * channels];
        for s in 0..count {
            for loc in 0..n_spatial {
                let base = (s * n_spatial + loc) * channels;
                out[base] = self.inputs.data()[s * n_spatial + loc];
                // Decompose the flat location into axis indices.
                let mut rem = loc;
                for (axis, &extent) in spatial.iter().enumerate().rev() {
                    let idx = rem % extent;
                    rem /= extent;
                    out[base + 1 + axis] = self.grids[axis].data()[idx];
                }
            }
        }
        let mut out_shape = vec![count];
        out_shape.extend_from_slice(spatial);
        out_shape.push(channels);
        Tensor::new(out_shape, out).expect("assembled consistently")
    }

    /// Like [`Dataset::to_model_inputs`] with the function channel
    /// standardized; coordinate channels stay in `[0, 1]`.
    pub fn to_model_inputs_normalized(&self, input_norm: &Normalizer) -> Tensor {
        let mut assembled = self.to_model_inputs();
        let channels = 1 + self.grids.len();
        let data = assembled.data_mut();
        for chunk in data.chunks_mut(channels) {
            chunk[0] = (chunk[0] - input_norm.mean) / input_norm.std;
        }
        assembled
    }

    /// First `count` samples, keeping grids and metadata.
    pub fn prefix(&self, count: usize) -> Dataset {
        let idx: Vec<usize> = (0..count).collect();
        Dataset {
            inputs: self.inputs.gather_rows(&idx),
            grids: self.grids.clone(),
            outputs: self.outputs.gather_rows(&idx),
            metadata: DatasetMeta {
                count,
                ..self.metadata.clone()
            },
        }
    }
}

/// Threshold map for permeability fields: nonnegative values become 12,
/// negative values become 3 (zero maps to 12 by convention).
pub fn psi_threshold(raw: &Tensor) -> Tensor {
    raw.map(|v| if v >= 0.0 { 12.0 } else { 3.0 })
}

/// Affine standardization fitted on a training split. Training runs on
/// standardized fields; predictions are mapped back to physical units
/// before any metric is computed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    /// Flat mean and population standard deviation over all elements.
    pub fn fit(values: &Tensor) -> Normalizer {
        let n = values.numel() as f64;
        let mean = values.data().iter().sum::<f64>() / n;
        let var = values
            .data()
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        Normalizer {
            mean,
            std: var.sqrt().max(1e-12),
        }
    }

    pub fn identity() -> Normalizer {
        Normalizer { mean: 0.0, std: 1.0 }
    }

    pub fn encode(&self, t: &Tensor) -> Tensor {
        t.map(|v| (v - self.mean) / self.std)
    }

    pub fn decode(&self, t: &Tensor) -> Tensor {
        t.map(|v| v * self.std + self.mean)
    }
}

/// Generates a dataset with default solver settings.
pub fn build_dataset(problem: Problem, count: usize, grid: &[usize], seed: u64) -> Result<Dataset> {
    match problem {
        Problem::Burgers => {
            if grid.len() != 1 {
                return Err(CoreError::InvalidArgument(format!(
                    "burgers expects one grid extent, got {grid:?}"
                )));
            }
            let config = BurgersConfig {
                grid: grid[0],
                ..Default::default()
            };
            build_burgers_dataset(count, &config, seed)
        }
        Problem::Darcy => {
            if grid.len() != 2 {
                return Err(CoreError::InvalidArgument(format!(
                    "darcy expects two grid extents, got {grid:?}"
                )));
            }
            let config = DarcyConfig {
                rows: grid[0],
                cols: grid[1],
                ..Default::default()
            };
            build_darcy_dataset(count, &config, seed)
        }
    }
}

/// Initial condition to final velocity field, on the periodic interval
/// discretized at `x_j = j/n`.
pub fn build_burgers_dataset(count: usize, config: &BurgersConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let n = config.grid;
    let spec = GrfSpec::burgers_initial_condition(n, seed);
    let ics = sample_grf(&spec, count)?;
    let outputs: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let ic = Tensor::new(vec![n], ics.data()[s * n..(s + 1) * n].to_vec())?;
            let solved = solve_burgers(&ic, config).map_err(|e| CoreError::SampleFailed {
                sample: s,
                source: Box::new(e),
            })?;
            Ok(solved.into_data())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out_flat = Vec::with_capacity(count * n);
    for row in outputs {
        out_flat.extend_from_slice(&row);
    }
    let x: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    Ok(Dataset {
        inputs: Tensor::new(vec![count, n, 1], ics.into_data())?,
        grids: vec![Tensor::from_vec(x)],
        outputs: Tensor::new(vec![count, n, 1], out_flat)?,
        metadata: DatasetMeta {
            problem: Problem::Burgers,
            count,
            grid: vec![n],
            seed,
            solver: SolverMeta::Burgers {
                viscosity: config.viscosity,
                dt: config.dt,
                t_final: config.t_final,
            },
        },
    })
}

/// Thresholded permeability to pressure, on cell centers
/// `((i+1/2)/rows, (j+1/2)/cols)`.
pub fn build_darcy_dataset(count: usize, config: &DarcyConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let (r, c) = (config.rows, config.cols);
    let spec = GrfSpec::darcy_permeability(r, c, seed);
    let raw = sample_grf(&spec, count)?;
    let perms = psi_threshold(&raw);
    let outputs: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let a = Tensor::new(vec![r, c], perms.data()[s * r * c..(s + 1) * r * c].to_vec())?;
            let solved = solve_darcy(&a, config).map_err(|e| CoreError::SampleFailed {
                sample: s,
                source: Box::new(e),
            })?;
            Ok(solved.into_data())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out_flat = Vec::with_capacity(count * r * c);
    for row in outputs {
        out_flat.extend_from_slice(&row);
    }
    let ys: Vec<f64> = (0..r).map(|i| (i as f64 + 0.5) / r as f64).collect();
    let xs: Vec<f64> = (0..c).map(|j| (j as f64 + 0.5) / c as f64).collect();
    Ok(Dataset {
        inputs: Tensor::new(vec![count, r, c, 1], perms.into_data())?,
        grids: vec![Tensor::from_vec(ys), Tensor::from_vec(xs)],
        outputs: Tensor::new(vec![count, r, c, 1], out_flat)?,
        metadata: DatasetMeta {
            problem: Problem::Darcy,
            count,
            grid: vec![r, c],
            seed,
            solver: SolverMeta::Darcy {
                tol: config.tol,
                forcing: config.forcing,
            },
        },
    })
}

// ---------------------------------------------------------------------------
// Container format.
//
// Little-endian layout:
//   magic "RPWD" | version u32 | meta_len u64 | metadata JSON (UTF-8)
//   then named tensor records until EOF:
//     name_len u32 | name UTF-8 | rank u32 | extents u64 x rank | f64 payload
// Tensors are written as "inputs", "outputs", "grid0", "grid1", ...
// ---------------------------------------------------------------------------

const RPWD_MAGIC: &[u8; 4] = b"RPWD";
const RPWD_VERSION: u32 = 1;

pub fn write_named_tensor(w: &mut impl Write, name: &str, tensor: &Tensor) -> Result<()> {
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
    for &e in tensor.shape() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for &v in tensor.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads the next named tensor record; `Ok(None)` at a clean end of stream.
pub fn read_named_tensor(r: &mut impl Read) -> Result<Option<(String, Tensor)>> {
    let mut len4 = [0u8; 4];
    match r.read_exact(&mut len4) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let name_len = u32::from_le_bytes(len4) as usize;
    if name_len > 4096 {
        return Err(CoreError::BadContainer(format!(
            "tensor name length {name_len} out of range"
        )));
    }
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name)
        .map_err(|_| CoreError::BadContainer("tensor name is not UTF-8".into()))?;
    r.read_exact(&mut len4)?;
    let rank = u32::from_le_bytes(len4) as usize;
    if rank > 16 {
        return Err(CoreError::BadContainer(format!("rank {rank} out of range")));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut len8 = [0u8; 8];
    for _ in 0..rank {
        r.read_exact(&mut len8)?;
        shape.push(u64::from_le_bytes(len8) as usize);
    }
    let numel: usize = shape.iter().product();
    let mut data = Vec::with_capacity(numel);
    for _ in 0..numel {
        r.read_exact(&mut len8)?;
        data.push(f64::from_le_bytes(len8));
    }
    Ok(Some((name, Tensor::new(shape, data)?)))
}

pub fn write_container_header(
    w: &mut impl Write,
    magic: &[u8; 4],
    version: u32,
    meta_json: &[u8],
) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(meta_json.len() as u64).to_le_bytes())?;
    w.write_all(meta_json)?;
    Ok(())
}

pub fn read_container_header(
    r: &mut impl Read,
    magic: &[u8; 4],
    version: u32,
) -> Result<Vec<u8>> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(CoreError::BadContainer(format!(
            "bad magic {:?}, expected {:?}",
            got, magic
        )));
    }
    let mut v4 = [0u8; 4];
    r.read_exact(&mut v4)?;
    let got_version = u32::from_le_bytes(v4);
    if got_version != version {
        return Err(CoreError::BadContainer(format!(
            "unsupported version {got_version}"
        )));
    }
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let meta_len = u64::from_le_bytes(len8) as usize;
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta)?;
    Ok(meta)
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let meta = serde_json::to_vec(&dataset.metadata)?;
    write_container_header(&mut w, RPWD_MAGIC, RPWD_VERSION, &meta)?;
    write_named_tensor(&mut w, "inputs", &dataset.inputs)?;
    write_named_tensor(&mut w, "outputs", &dataset.outputs)?;
    for (axis, grid) in dataset.grids.iter().enumerate() {
        write_named_tensor(&mut w, &format!("grid{axis}"), grid)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let meta_bytes = read_container_header(&mut r, RPWD_MAGIC, RPWD_VERSION)?;
    let metadata: DatasetMeta = serde_json::from_slice(&meta_bytes)?;
    let mut inputs = None;
    let mut outputs = None;
    let mut grids: Vec<(usize, Tensor)> = Vec::new();
    while let Some((name, tensor)) = read_named_tensor(&mut r)? {
        match name.as_str() {
            "inputs" => inputs = Some(tensor),
            "outputs" => outputs = Some(tensor),
            other => {
                let Some(axis) = other.strip_prefix("grid").and_then(|s| s.parse().ok()) else {
                    return Err(CoreError::BadContainer(format!("unexpected tensor '{other}'")));
                };
                grids.push((axis, tensor));
            }
        }
    }
    let inputs = inputs.ok_or_else(|| CoreError::BadContainer("missing 'inputs'".into()))?;
    let outputs = outputs.ok_or_else(|| CoreError::BadContainer("missing 'outputs'".into()))?;
    grids.sort_by_key(|(axis, _)| *axis);
    let grids: Vec<Tensor> = grids.into_iter().map(|(_, t)| t).collect();
    if grids.len() != metadata.grid.len() {
        return Err(CoreError::BadContainer(format!(
            "{} grid vectors for {} spatial axes",
            grids.len(),
            metadata.grid.len()
        )));
    }
    if inputs.shape()[0] != metadata.count || outputs.shape()[0] != metadata.count {
        return Err(CoreError::BadContainer(
            "sample count disagrees with metadata".into(),
        ));
    }
    Ok(Dataset {
        inputs,
        grids,
        outputs,
        metadata,
    })
}

/// Writes one sample as CSV for inspection: coordinates, input, output.
pub fn export_sample_csv(dataset: &Dataset, sample: usize, w: &mut impl Write) -> Result<()> {
    if sample >= dataset.count() {
        return Err(CoreError::InvalidArgument(format!(
            "sample {sample} out of range ({} samples)",
            dataset.count()
        )));
    }
    let dims = dataset.spatial_dims();
    let n_spatial: usize = dataset.metadata.grid.iter().product();
    if dims == 1 {
        writeln!(w, "x,input,output")?;
        for j in 0..n_spatial {
            writeln!(
                w,
                "{},{},{}",
                dataset.grids[0].data()[j],
                dataset.inputs.data()[sample * n_spatial + j],
                dataset.outputs.data()[sample * n_spatial + j],
            )?;
        }
    } else {
        writeln!(w, "y,x,input,output")?;
        let cols = dataset.metadata.grid[1];
        for loc in 0..n_spatial {
            writeln!(
                w,
                "{},{},{},{}",
                dataset.grids[0].data()[loc / cols],
                dataset.grids[1].data()[loc % cols],
                dataset.inputs.data()[sample * n_spatial + loc],
                dataset.outputs.data()[sample * n_spatial + loc],
            )?;
        }
    }
    Ok(())
}
