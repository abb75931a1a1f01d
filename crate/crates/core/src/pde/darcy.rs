//! Steady Darcy flow on the unit square: `-div(a grad u) = f` with `u = 0`
//! on the boundary.
//!
//! Cell-centered finite volumes with harmonic-mean face permeabilities give a
//! symmetric positive definite 5-point system, solved matrix-free by
//! conjugate gradients to a relative residual tolerance.

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct DarcyConfig {
    pub rows: usize,
    pub cols: usize,
    pub forcing: f64,
    /// Relative residual target for the linear solve.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DarcyConfig {
    fn default() -> Self {
        DarcyConfig {
            rows: 32,
            cols: 32,
            forcing: 1.0,
            tol: 1e-10,
            max_iter: 50_000,
        }
    }
}

impl DarcyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 4 || self.cols < 4 {
            return Err(CoreError::InvalidArgument(format!(
                "grid {}x{} too small",
                self.rows, self.cols
            )));
        }
        if self.tol <= 0.0 || self.max_iter == 0 {
            return Err(CoreError::InvalidArgument(
                "tol must be positive and max_iter nonzero".into(),
            ));
        }
        Ok(())
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Face transmissibilities. Interior faces use the harmonic mean of the two
/// adjacent cells; boundary faces see the Dirichlet value at half a cell.
struct Faces {
    /// `tx[i][j]`: face between `(i, j-1)` and `(i, j)`, length cols+1 per row.
    tx: Vec<f64>,
    /// `ty[i][j]`: face between `(i-1, j)` and `(i, j)`, length rows+1 per col.
    ty: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Faces {
    fn build(a: &[f64], rows: usize, cols: usize) -> Faces {
        let hx = 1.0 / cols as f64;
        let hy = 1.0 / rows as f64;
        let cx = hy / hx;
        let cy = hx / hy;
        let mut tx = vec![0.0; rows * (cols + 1)];
        let mut ty = vec![0.0; (rows + 1) * cols];
        for i in 0..rows {
            for j in 0..=cols {
                let t = if j == 0 {
                    2.0 * a[i * cols]
                } else if j == cols {
                    2.0 * a[i * cols + cols - 1]
                } else {
                    harmonic(a[i * cols + j - 1], a[i * cols + j])
                };
                tx[i * (cols + 1) + j] = cx * t;
            }
        }
        for j in 0..cols {
            for i in 0..=rows {
                let t = if i == 0 {
                    2.0 * a[j]
                } else if i == rows {
                    2.0 * a[(rows - 1) * cols + j]
                } else {
                    harmonic(a[(i - 1) * cols + j], a[i * cols + j])
                };
                ty[i * cols + j] = cy * t;
            }
        }
        Faces { tx, ty, rows, cols }
    }

    /// `out = A u` for the 5-point operator (Dirichlet zero outside).
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (rows, cols) = (self.rows, self.cols);
        for i in 0..rows {
            for j in 0..cols {
                let idx = i * cols + j;
                let west = self.tx[i * (cols + 1) + j];
                let east = self.tx[i * (cols + 1) + j + 1];
                let north = self.ty[i * cols + j];
                let south = self.ty[(i + 1) * cols + j];
                let mut acc = (west + east + north + south) * u[idx];
                if j > 0 {
                    acc -= west * u[idx - 1];
                }
                if j + 1 < cols {
                    acc -= east * u[idx + 1];
                }
                if i > 0 {
                    acc -= north * u[idx - cols];
                }
                if i + 1 < rows {
                    acc -= south * u[idx + cols];
                }
                out[idx] = acc;
            }
        }
    }
}

/// Solves for the pressure field on the permeability map `a` (`[rows, cols]`,
/// strictly positive).
pub fn solve_darcy(a: &Tensor, config: &DarcyConfig) -> Result<Tensor> {
    config.validate()?;
    let (rows, cols) = (config.rows, config.cols);
    if a.shape() != [rows, cols] {
        return Err(CoreError::ShapeMismatch {
            op: "solve_darcy",
            left: a.shape().to_vec(),
            right: vec![rows, cols],
        });
    }
    if a.data().iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(CoreError::InvalidArgument(
            "permeability must be strictly positive and finite".into(),
        ));
    }
    let n = rows * cols;
    let faces = Faces::build(a.data(), rows, cols);
    let cell_area = 1.0 / (rows as f64 * cols as f64);
    let b = vec![config.forcing * cell_area; n];
    let b_norm = l2(&b);

    let mut u = vec![0.0; n];
    let mut residual = b.clone();
    let mut direction = residual.clone();
    let mut rs = dot(&residual, &residual);
    let mut a_dir = vec![0.0; n];

    for _iter in 0..config.max_iter {
        if rs.sqrt() <= config.tol * b_norm {
            return Tensor::new(vec![rows, cols], u);
        }
        faces.apply(&direction, &mut a_dir);
        let alpha = rs / dot(&direction, &a_dir);
        for i in 0..n {
            u[i] += alpha * direction[i];
            residual[i] -= alpha * a_dir[i];
        }
        let rs_new = dot(&residual, &residual);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            direction[i] = residual[i] + beta * direction[i];
        }
    }
    if rs.sqrt() <= config.tol * b_norm {
        Tensor::new(vec![rows, cols], u)
    } else {
        Err(CoreError::CgNoConvergence {
            iters: config.max_iter,
            residual: rs.sqrt() / b_norm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Bilinear interpolation of a cell-centered field at `(x, y)` in the unit
/// square (`x` along columns, `y` along rows), clamped at the rim.
pub fn bilinear_at(field: &Tensor, x: f64, y: f64) -> f64 {
    let shape = field.shape();
    let (rows, cols) = (shape[0], shape[1]);
    let fx = (x * cols as f64 - 0.5).clamp(0.0, (cols - 1) as f64);
    let fy = (y * rows as f64 - 0.5).clamp(0.0, (rows - 1) as f64);
    let j0 = fx.floor() as usize;
    let i0 = fy.floor() as usize;
    let j1 = (j0 + 1).min(cols - 1);
    let i1 = (i0 + 1).min(rows - 1);
    let wx = fx - j0 as f64;
    let wy = fy - i0 as f64;
    let get = |i: usize, j: usize| field.data()[i * cols + j];
    (1.0 - wy) * ((1.0 - wx) * get(i0, j0) + wx * get(i0, j1))
        + wy * ((1.0 - wx) * get(i1, j0) + wx * get(i1, j1))
}
