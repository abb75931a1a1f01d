//! Viscous Burgers solver on the periodic unit interval:
//! `u_t + u u_x = nu u_xx`, advanced from `t = 0` to `t = t_final`.
//!
//! Fourier pseudo-spectral semi-discretization with 2/3-rule dealiasing of
//! the quadratic term, integrated by classic explicit RK4. The zero mode has
//! an identically zero right-hand side, so the spatial mean is conserved to
//! rounding.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct BurgersConfig {
    pub viscosity: f64,
    pub grid: usize,
    pub t_final: f64,
    pub dt: f64,
}

impl Default for BurgersConfig {
    /// Desk-scale default: `nu = 0.01`, 128 points, `t_final = 1`,
    /// `dt = 1e-4` (well inside the RK4 stability bound
    /// `nu k_max^2 dt < 2.78` for this grid).
    fn default() -> Self {
        BurgersConfig {
            viscosity: 0.01,
            grid: 128,
            t_final: 1.0,
            dt: 1e-4,
        }
    }
}

impl BurgersConfig {
    pub fn validate(&self) -> Result<()> {
        if self.viscosity <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "viscosity must be positive".into(),
            ));
        }
        if self.grid < 8 || self.grid % 2 != 0 {
            return Err(CoreError::InvalidArgument(format!(
                "grid must be even and >= 8, got {}",
                self.grid
            )));
        }
        if self.dt <= 0.0 || self.t_final <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "dt and t_final must be positive".into(),
            ));
        }
        // Diffusion stability on the negative real axis of RK4.
        let k_max = std::f64::consts::PI * self.grid as f64; // 2*pi*(n/2)
        if self.viscosity * k_max * k_max * self.dt > 2.78 {
            return Err(CoreError::InvalidArgument(format!(
                "dt {} unstable for nu {} on grid {}",
                self.dt, self.viscosity, self.grid
            )));
        }
        Ok(())
    }
}

struct Spectral {
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    scratch: Vec<Complex64>,
    /// Signed wavenumbers `2 pi m~` with `m~` in `-n/2+1 ..= n/2`.
    wavenumbers: Vec<f64>,
    /// 2/3-rule mask over the nonlinear product.
    dealias: Vec<f64>,
    phys: Vec<Complex64>,
    prod: Vec<Complex64>,
}

impl Spectral {
    fn new(n: usize) -> Spectral {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        let mut wavenumbers = vec![0.0; n];
        let mut dealias = vec![0.0; n];
        let cutoff = n as f64 / 3.0;
        for (m, w) in wavenumbers.iter_mut().enumerate() {
            let signed = if m <= n / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            *w = 2.0 * std::f64::consts::PI * signed as f64;
            dealias[m] = if (signed.unsigned_abs() as f64) <= cutoff {
                1.0
            } else {
                0.0
            };
        }
        Spectral {
            fft,
            ifft,
            scratch: vec![Complex64::default(); scratch_len],
            wavenumbers,
            dealias,
            phys: vec![Complex64::default(); n],
            prod: vec![Complex64::default(); n],
        }
    }

    /// d/dt of the spectrum: `-(i k/2) fft(u^2) masked - nu k^2 u_hat`.
    fn rhs(&mut self, spectrum: &[Complex64], nu: f64, out: &mut [Complex64]) {
        let n = spectrum.len();
        self.phys.copy_from_slice(spectrum);
        self.ifft
            .process_with_scratch(&mut self.phys, &mut self.scratch);
        let inv_n = 1.0 / n as f64;
        for (p, q) in self.prod.iter_mut().zip(&self.phys) {
            let u = q * inv_n;
            *p = u * u;
        }
        self.fft
            .process_with_scratch(&mut self.prod, &mut self.scratch);
        for m in 0..n {
            let k = self.wavenumbers[m];
            let advect = Complex64::new(0.0, -0.5 * k * self.dealias[m]) * self.prod[m];
            out[m] = advect - nu * k * k * spectrum[m];
        }
    }
}

/// Integrates one initial condition to `t_final` and returns the final field.
pub fn solve_burgers(ic: &Tensor, config: &BurgersConfig) -> Result<Tensor> {
    config.validate()?;
    let n = config.grid;
    if ic.shape() != [n] {
        return Err(CoreError::ShapeMismatch {
            op: "solve_burgers",
            left: ic.shape().to_vec(),
            right: vec![n],
        });
    }
    if !ic.all_finite() {
        return Err(CoreError::InvalidArgument(
            "initial condition must be finite".into(),
        ));
    }
    let steps = (config.t_final / config.dt).round().max(1.0) as usize;
    let dt = config.t_final / steps as f64;

    let mut ops = Spectral::new(n);
    let mut spectrum: Vec<Complex64> =
        ic.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    ops.fft
        .process_with_scratch(&mut spectrum, &mut ops.scratch);

    let mut k1 = vec![Complex64::default(); n];
    let mut k2 = vec![Complex64::default(); n];
    let mut k3 = vec![Complex64::default(); n];
    let mut k4 = vec![Complex64::default(); n];
    let mut stage = vec![Complex64::default(); n];

    for step in 0..steps {
        ops.rhs(&spectrum, config.viscosity, &mut k1);
        for i in 0..n {
            stage[i] = spectrum[i] + 0.5 * dt * k1[i];
        }
        ops.rhs(&stage, config.viscosity, &mut k2);
        for i in 0..n {
            stage[i] = spectrum[i] + 0.5 * dt * k2[i];
        }
        ops.rhs(&stage, config.viscosity, &mut k3);
        for i in 0..n {
            stage[i] = spectrum[i] + dt * k3[i];
        }
        ops.rhs(&stage, config.viscosity, &mut k4);
        for i in 0..n {
            spectrum[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % 200 == 199 && !spectrum[0].re.is_finite() {
            return Err(CoreError::SolverNonFinite { step });
        }
    }

    let mut phys = spectrum;
    ops.ifft.process_with_scratch(&mut phys, &mut ops.scratch);
    let inv_n = 1.0 / n as f64;
    let out: Vec<f64> = phys.iter().map(|c| c.re * inv_n).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::SolverNonFinite { step: steps });
    }
    Tensor::new(vec![n], out)
}
