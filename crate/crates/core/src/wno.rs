//! The wavelet neural operator: a lifting layer, a stack of wavelet blocks
//! (wavelet-mapping plus convolution-mapping components), and a two-layer
//! projection head.
//!
//! Dataflow for a 2D problem with batch `s`, grid `r x c`, `n_in` input
//! channels and width `p`:
//!
//! ```text
//! [s, r, c, n_in] --lift--> [s, r, c, p] --blocks--> [s, r, c, p]
//!                 --project--> [s, r, c, out_channels]
//! ```
//!
//! Each block computes `wmc(x) + cmc(x)`; GeLU follows every block except the
//! last. Inside the wavelet-mapping component only the final-level subbands
//! selected in the config are learned; all other coefficients pass through
//! to the inverse transform unchanged.

use serde::{Deserialize, Serialize};

use crate::autodiff::{NodeId, Parameter, Tape};
use crate::error::{CoreError, Result};
use crate::rng::{rng_from_seed, uniform_tensor};
use crate::tensor::{checksum_f64, Tensor};
use crate::wavelet::{daubechies_filters, max_dwt_levels, Subband, WaveletFilter};

/// Architecture description. `grid` is the spatial discretization the
/// operator instance is built for; the per-location coefficient weights
/// depend on it through `levels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WnoConfig {
    pub spatial_dims: usize,
    pub grid: Vec<usize>,
    pub in_channels: usize,
    pub width: usize,
    pub num_blocks: usize,
    pub wavelet_order: usize,
    pub levels: usize,
    pub learned_subbands: Vec<Subband>,
    pub proj_hidden: usize,
    pub out_channels: usize,
}

impl WnoConfig {
    /// 1D default: width 64, four blocks, db6, two-layer head with 128
    /// hidden nodes, both final-level subbands learned. Levels follow
    /// `min(8, log2(grid) - 2)` clamped to what the filter length permits.
    pub fn default_1d(grid: usize) -> WnoConfig {
        let order = 6;
        let levels = default_levels(&[grid], order, 8, 2);
        WnoConfig {
            spatial_dims: 1,
            grid: vec![grid],
            in_channels: 2,
            width: 64,
            num_blocks: 4,
            wavelet_order: order,
            levels,
            learned_subbands: vec![Subband::Approx, Subband::Detail],
            proj_hidden: 128,
            out_channels: 1,
        }
    }

    /// 2D default: width 64, four blocks, db6, 192 hidden nodes, learned
    /// approximation and horizontal-detail subbands. Levels follow
    /// `min(4, log2(min extent) - 2)` clamped by the filter length.
    pub fn default_2d(rows: usize, cols: usize) -> WnoConfig {
        let order = 6;
        let levels = default_levels(&[rows, cols], order, 4, 2);
        WnoConfig {
            spatial_dims: 2,
            grid: vec![rows, cols],
            in_channels: 3,
            width: 64,
            num_blocks: 4,
            wavelet_order: order,
            levels,
            learned_subbands: vec![Subband::Ll, Subband::Hl],
            proj_hidden: 192,
            out_channels: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spatial_dims != 1 && self.spatial_dims != 2 {
            return Err(CoreError::InvalidArgument(format!(
                "spatial_dims must be 1 or 2, got {}",
                self.spatial_dims
            )));
        }
        if self.grid.len() != self.spatial_dims {
            return Err(CoreError::InvalidArgument(format!(
                "grid {:?} does not match spatial_dims {}",
                self.grid, self.spatial_dims
            )));
        }
        if self.width <= self.in_channels {
            return Err(CoreError::InvalidArgument(format!(
                "width ({}) must exceed in_channels ({})",
                self.width, self.in_channels
            )));
        }
        if self.num_blocks == 0 || self.proj_hidden == 0 || self.out_channels == 0 {
            return Err(CoreError::InvalidArgument(
                "num_blocks, proj_hidden, and out_channels must be positive".into(),
            ));
        }
        let filter = daubechies_filters(self.wavelet_order)?;
        if self.levels == 0 {
            return Err(CoreError::InvalidArgument("levels must be >= 1".into()));
        }
        for &extent in &self.grid {
            let feasible = max_dwt_levels(extent, filter.len());
            if self.levels > feasible {
                return Err(CoreError::InvalidArgument(format!(
                    "levels {} infeasible for extent {} with db{} (max {})",
                    self.levels, extent, self.wavelet_order, feasible
                )));
            }
        }
        if self.learned_subbands.is_empty() {
            return Err(CoreError::InvalidArgument(
                "learned_subbands must be nonempty".into(),
            ));
        }
        let approx = Subband::approximation(self.spatial_dims);
        if !self.learned_subbands.contains(&approx) {
            return Err(CoreError::InvalidArgument(format!(
                "learned_subbands must contain the approximation band {approx}"
            )));
        }
        for band in &self.learned_subbands {
            if !band.valid_for_dims(self.spatial_dims) {
                return Err(CoreError::InvalidArgument(format!(
                    "subband {band} is not valid for {}D",
                    self.spatial_dims
                )));
            }
        }
        let mut seen = Vec::new();
        for band in &self.learned_subbands {
            if seen.contains(band) {
                return Err(CoreError::InvalidArgument(format!(
                    "duplicate learned subband {band}"
                )));
            }
            seen.push(*band);
        }
        Ok(())
    }

    /// Coarsest-level spatial extents implied by `(grid, levels)`.
    pub fn coarse_extents(&self) -> Vec<usize> {
        self.grid.iter().map(|&e| e >> self.levels).collect()
    }

    /// Total parameter count:
    /// `lift (in*p + p)`
    /// `+ blocks * (|learned| * p^2 * prod(coarse) + p^2 + p)`
    /// `+ p*hidden + hidden + hidden*out + out`.
    pub fn param_count(&self) -> usize {
        let p = self.width;
        let locs: usize = self.coarse_extents().iter().product();
        let lift = self.in_channels * p + p;
        let per_block = self.learned_subbands.len() * p * p * locs + p * p + p;
        let proj = p * self.proj_hidden
            + self.proj_hidden
            + self.proj_hidden * self.out_channels
            + self.out_channels;
        lift + self.num_blocks * per_block + proj
    }
}

fn default_levels(grid: &[usize], order: usize, cap: usize, margin: u32) -> usize {
    let filter_len = 2 * order;
    let mut levels = cap;
    for &extent in grid {
        let log2 = extent.ilog2() as usize;
        levels = levels
            .min(log2.saturating_sub(margin as usize))
            .min(max_dwt_levels(extent, filter_len));
    }
    levels.max(1)
}

/// Parameter indices of one wavelet block.
#[derive(Debug, Clone)]
pub struct WaveletBlockParams {
    /// Per learned subband, in `learned_subbands` order.
    pub mix: Vec<usize>,
    pub cmc_w: usize,
    pub cmc_b: usize,
}

/// Parameter indices of the whole network into `WnoModel::params`.
#[derive(Debug, Clone)]
pub struct WnoLayout {
    pub lift_w: usize,
    pub lift_b: usize,
    pub blocks: Vec<WaveletBlockParams>,
    pub proj1_w: usize,
    pub proj1_b: usize,
    pub proj2_w: usize,
    pub proj2_b: usize,
}

/// Parameter declarations of a config, in initialization order.
fn param_plan(config: &WnoConfig) -> (Vec<(String, Vec<usize>, usize)>, WnoLayout) {
    let p = config.width;
    let coarse = config.coarse_extents();
    let mut mix_shape = vec![p, p];
    mix_shape.extend_from_slice(&coarse);

    let mut plan: Vec<(String, Vec<usize>, usize)> = Vec::new();
    plan.push(("lift.w".into(), vec![config.in_channels, p], config.in_channels));
    plan.push(("lift.b".into(), vec![p], config.in_channels));
    let lift_w = 0;
    let lift_b = 1;
    let mut blocks = Vec::with_capacity(config.num_blocks);
    for bi in 0..config.num_blocks {
        let mut mix = Vec::with_capacity(config.learned_subbands.len());
        for band in &config.learned_subbands {
            mix.push(plan.len());
            plan.push((format!("block{bi}.mix.{band}"), mix_shape.clone(), p));
        }
        let cmc_w = plan.len();
        plan.push((format!("block{bi}.cmc.w"), vec![p, p], p));
        let cmc_b = plan.len();
        plan.push((format!("block{bi}.cmc.b"), vec![p], p));
        blocks.push(WaveletBlockParams { mix, cmc_w, cmc_b });
    }
    let proj1_w = plan.len();
    plan.push(("proj.fc1.w".into(), vec![p, config.proj_hidden], p));
    let proj1_b = plan.len();
    plan.push(("proj.fc1.b".into(), vec![config.proj_hidden], p));
    let proj2_w = plan.len();
    plan.push((
        "proj.fc2.w".into(),
        vec![config.proj_hidden, config.out_channels],
        config.proj_hidden,
    ));
    let proj2_b = plan.len();
    plan.push((
        "proj.fc2.b".into(),
        vec![config.out_channels],
        config.proj_hidden,
    ));
    (
        plan,
        WnoLayout {
            lift_w,
            lift_b,
            blocks,
            proj1_w,
            proj1_b,
            proj2_w,
            proj2_b,
        },
    )
}

/// A parameterized operator network.
pub struct WnoModel {
    pub config: WnoConfig,
    pub params: Vec<Parameter>,
    pub layout: WnoLayout,
    filter: WaveletFilter,
}

impl WnoModel {
    /// Builds a model with uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// initialization drawn from a single seeded stream in declaration
    /// order: lift, blocks (mix weights then 1x1 conv), projection.
    pub fn init(config: WnoConfig, seed: u64) -> Result<WnoModel> {
        config.validate()?;
        let filter = daubechies_filters(config.wavelet_order)?;
        let (plan, layout) = param_plan(&config);
        let mut rng = rng_from_seed(seed);
        let params = plan
            .into_iter()
            .map(|(name, shape, fan_in)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                Parameter::new(name, uniform_tensor(&mut rng, &shape, bound))
            })
            .collect();
        Ok(WnoModel {
            config,
            params,
            layout,
            filter,
        })
    }

    /// Rebuilds a model around an existing parameter set (checkpoint loading,
    /// gradient-check probes). Names and shapes must match the config's
    /// canonical declaration order.
    pub fn from_parts(config: WnoConfig, params: Vec<Parameter>) -> Result<WnoModel> {
        config.validate()?;
        let filter = daubechies_filters(config.wavelet_order)?;
        let (plan, layout) = param_plan(&config);
        if plan.len() != params.len() {
            return Err(CoreError::InvalidArgument(format!(
                "config declares {} parameters, got {}",
                plan.len(),
                params.len()
            )));
        }
        for ((name, shape, _), param) in plan.iter().zip(&params) {
            if param.name != *name || param.value.shape() != shape.as_slice() {
                return Err(CoreError::InvalidArgument(format!(
                    "parameter mismatch: expected {name} {shape:?}, got {} {:?}",
                    param.name,
                    param.value.shape()
                )));
            }
        }
        Ok(WnoModel {
            config,
            params,
            layout,
            filter,
        })
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    /// FNV checksum over every parameter tensor, in declaration order.
    pub fn params_checksum(&self) -> u64 {
        let mut all = Vec::new();
        for p in &self.params {
            all.extend_from_slice(p.value.data());
        }
        checksum_f64(&all)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.zero_grad();
        }
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let expect_rank = 2 + self.config.spatial_dims;
        let ok = shape.len() == expect_rank
            && shape[1..1 + self.config.spatial_dims] == self.config.grid[..]
            && shape[expect_rank - 1] == self.config.in_channels;
        if !ok {
            let mut expect = vec![0];
            expect.extend_from_slice(&self.config.grid);
            expect.push(self.config.in_channels);
            return Err(CoreError::ShapeMismatch {
                op: "wno input",
                left: shape.to_vec(),
                right: expect,
            });
        }
        Ok(())
    }

    /// Lifting layer: dense along the channel axis, spatial extents kept.
    pub fn lift(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        let shape = tape.value(x).shape();
        if shape.last() != Some(&self.config.in_channels) {
            return Err(CoreError::ShapeMismatch {
                op: "lift",
                left: shape.to_vec(),
                right: vec![self.config.in_channels, self.config.width],
            });
        }
        let w = tape.leaf(&self.params[self.layout.lift_w], self.layout.lift_w);
        let b = tape.leaf(&self.params[self.layout.lift_b], self.layout.lift_b);
        tape.dense(x, w, b)
    }

    /// Wavelet-mapping component of block `block_idx`.
    pub fn wmc_forward(&self, tape: &mut Tape, x: NodeId, block_idx: usize) -> Result<NodeId> {
        let block = &self.layout.blocks[block_idx];
        let weights: Vec<NodeId> = block
            .mix
            .iter()
            .map(|&idx| tape.leaf(&self.params[idx], idx))
            .collect();
        tape.wmc(
            x,
            &weights,
            &self.filter,
            self.config.levels,
            &self.config.learned_subbands,
        )
    }

    /// Convolution-mapping component of block `block_idx`: one kernel-size-1
    /// convolution over channels.
    pub fn cmc_forward(&self, tape: &mut Tape, x: NodeId, block_idx: usize) -> Result<NodeId> {
        let block = &self.layout.blocks[block_idx];
        let w = tape.leaf(&self.params[block.cmc_w], block.cmc_w);
        let b = tape.leaf(&self.params[block.cmc_b], block.cmc_b);
        tape.conv1x1(x, w, b)
    }

    /// One wavelet block: `wmc(x) + cmc(x)`, optionally followed by GeLU.
    pub fn block_forward(
        &self,
        tape: &mut Tape,
        x: NodeId,
        block_idx: usize,
        apply_activation: bool,
    ) -> Result<NodeId> {
        let wmc = self.wmc_forward(tape, x, block_idx)?;
        let cmc = self.cmc_forward(tape, x, block_idx)?;
        let sum = tape.add(wmc, cmc)?;
        Ok(if apply_activation { tape.gelu(sum) } else { sum })
    }

    /// Projection head: dense to `proj_hidden`, GeLU, dense to `out_channels`.
    pub fn project(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        let w1 = tape.leaf(&self.params[self.layout.proj1_w], self.layout.proj1_w);
        let b1 = tape.leaf(&self.params[self.layout.proj1_b], self.layout.proj1_b);
        let h = tape.dense(x, w1, b1)?;
        let h = tape.gelu(h);
        let w2 = tape.leaf(&self.params[self.layout.proj2_w], self.layout.proj2_w);
        let b2 = tape.leaf(&self.params[self.layout.proj2_b], self.layout.proj2_b);
        tape.dense(h, w2, b2)
    }

    /// Full forward pass on the tape. Input is
    /// `[batch, grid.., in_channels]` with grid-coordinate channels already
    /// appended to the function channels.
    pub fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        self.check_input(tape.value(x).shape())?;
        let mut h = self.lift(tape, x)?;
        for bi in 0..self.config.num_blocks {
            let activate = bi + 1 < self.config.num_blocks;
            h = self.block_forward(tape, h, bi, activate)?;
        }
        self.project(tape, h)
    }

    /// Forward pass outside any training tape (a throwaway tape internally,
    /// so training and inference share one numeric path).
    pub fn eval_forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.input(input.clone());
        let out = self.forward(&mut tape, x)?;
        Ok(tape.value(out).clone())
    }
}
