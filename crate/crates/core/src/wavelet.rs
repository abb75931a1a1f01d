//! Multi-level discrete wavelet transforms (Daubechies family) with
//! periodized boundaries, in 1D and 2D.
//!
//! The transform applies along the trailing axis (1D) or trailing two axes
//! (2D); every leading axis is batched. Periodization keeps the analysis
//! matrix exactly orthonormal, so extents halve exactly per level, energy is
//! preserved, and synthesis is the adjoint of analysis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// Identifies a wavelet subband at the final decomposition level.
///
/// `Approx`/`Detail` are the 1D bands; `Ll`/`Lh`/`Hl`/`Hh` are the 2D bands,
/// named by the filters applied along the row and column axes in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subband {
    Approx,
    Detail,
    Ll,
    Lh,
    Hl,
    Hh,
}

impl Subband {
    pub fn valid_for_dims(self, spatial_dims: usize) -> bool {
        match self {
            Subband::Approx | Subband::Detail => spatial_dims == 1,
            _ => spatial_dims == 2,
        }
    }

    /// The approximation band for a given dimensionality.
    pub fn approximation(spatial_dims: usize) -> Subband {
        if spatial_dims == 1 {
            Subband::Approx
        } else {
            Subband::Ll
        }
    }
}

impl std::fmt::Display for Subband {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Subband::Approx => "approx",
            Subband::Detail => "detail",
            Subband::Ll => "ll",
            Subband::Lh => "lh",
            Subband::Hl => "hl",
            Subband::Hh => "hh",
        };
        f.write_str(name)
    }
}

/// Daubechies-N analysis/synthesis filter bank, filter length `2N`.
///
/// `dec_lo` is stored with the dominant taps first (for db2:
/// `[0.48296, 0.83652, 0.22414, -0.12941]`); `dec_hi` is the alternating
/// flip `dec_hi[k] = (-1)^k dec_lo[2N-1-k]`, and the reconstruction filters
/// are the time-reversed decomposition filters.
#[derive(Debug, Clone)]
pub struct WaveletFilter {
    pub order: usize,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl WaveletFilter {
    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }
}

/// Builds the Daubechies-N filter bank for `1 <= order <= 10`.
///
/// The scaling filter comes from spectral factorization of the maximally
/// flat half-band polynomial: the roots of
/// `P(y) = sum_k C(N-1+k, k) y^k` are mapped to `z`-plane root pairs and the
/// minimum-phase half is kept, after which the coefficient order is flipped
/// to the convention above and the sum is normalized to exactly `sqrt(2)`.
pub fn daubechies_filters(order: usize) -> Result<WaveletFilter> {
    if order == 0 || order > 10 {
        return Err(CoreError::UnsupportedWaveletOrder(order));
    }
    let dec_lo = daubechies_dec_lo(order);
    let len = dec_lo.len();
    let dec_hi: Vec<f64> = (0..len)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * dec_lo[len - 1 - k]
        })
        .collect();
    let rec_lo: Vec<f64> = dec_lo.iter().rev().copied().collect();
    let rec_hi: Vec<f64> = dec_hi.iter().rev().copied().collect();
    Ok(WaveletFilter {
        order,
        dec_lo,
        dec_hi,
        rec_lo,
        rec_hi,
    })
}

fn daubechies_dec_lo(order: usize) -> Vec<f64> {
    let n = order;
    if n == 1 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        return vec![h, h];
    }
    // P(y) coefficients, degree n-1. Binomials up to C(18, 9) are exact in f64.
    let p: Vec<f64> = (0..n).map(|k| binomial(n - 1 + k, k)).collect();
    let y_roots = durand_kerner(&p);

    // Each y-root yields the z-quadratic z^2 - (2 - 4y) z + 1 with root pair
    // (z, 1/z); keep the root inside the unit circle. The inside set is
    // closed under conjugation, so the expanded filter is real.
    let mut z_roots = Vec::with_capacity(n - 1);
    for y in y_roots {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - Complex64::new(4.0, 0.0)).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        z_roots.push(if z1.norm() < 1.0 { z1 } else { z2 });
    }

    // Expand sqrt(2) * ((1+z)/2)^n * prod (z - z_i)/(1 - z_i).
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        poly = poly_mul(&poly, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
    for &z in &z_roots {
        poly = poly_mul(&poly, &[-z, Complex64::new(1.0, 0.0)]);
    }
    let mut denom = Complex64::new(2f64.powi(n as i32), 0.0);
    for &z in &z_roots {
        denom *= Complex64::new(1.0, 0.0) - z;
    }
    let scale = Complex64::new(std::f64::consts::SQRT_2, 0.0) / denom;
    let mut h: Vec<f64> = poly.iter().map(|c| (c * scale).re).collect();
    h.reverse();
    // Pin the lowpass sum to sqrt(2) exactly.
    let sum: f64 = h.iter().sum();
    let correction = std::f64::consts::SQRT_2 / sum;
    for v in &mut h {
        *v *= correction;
    }
    h
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// All roots of a polynomial with real coefficients (ascending order),
/// via Durand-Kerner iteration. Degree stays <= 9 here and the Daubechies
/// half-band roots are simple, so plain iteration converges to ~1e-15.
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs
        .iter()
        .map(|&c| Complex64::new(c / lead, 0.0))
        .collect();
    let eval = |x: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 {
            break;
        }
    }
    roots
}

/// Number of feasible decomposition levels for a 1D extent: each level needs
/// an even extent at least as long as the filter.
pub fn max_dwt_levels(extent: usize, filter_len: usize) -> usize {
    let mut levels = 0;
    let mut n = extent;
    while n % 2 == 0 && n >= filter_len && n >= 2 {
        levels += 1;
        n /= 2;
    }
    levels
}

fn check_levels(extent: usize, filter_len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(CoreError::InvalidArgument(
            "wavelet transform needs levels >= 1".into(),
        ));
    }
    let mut n = extent;
    for level in 1..=levels {
        if n % 2 != 0 || n < filter_len {
            return Err(CoreError::TooManyLevels {
                level,
                extent: n,
                filter_len,
            });
        }
        n /= 2;
    }
    Ok(())
}

/// Multi-level 1D coefficients; `details[0]` is the finest level.
#[derive(Debug, Clone)]
pub struct Dwt1dCoeffs {
    pub approx: Tensor,
    pub details: Vec<Tensor>,
    pub levels: usize,
    pub original_len: usize,
}

/// One level of 2D detail subbands. Naming: the first letter is the filter
/// applied along the row axis (second-to-last), the second along the column
/// axis (last).
#[derive(Debug, Clone)]
pub struct Detail2d {
    pub lh: Tensor,
    pub hl: Tensor,
    pub hh: Tensor,
}

/// Multi-level 2D coefficients; `details[0]` is the finest level and
/// `approx` is the coarsest LL band.
#[derive(Debug, Clone)]
pub struct Dwt2dCoeffs {
    pub approx: Tensor,
    pub details: Vec<Detail2d>,
    pub levels: usize,
    pub original_rows: usize,
    pub original_cols: usize,
}

/// Periodized analysis step: `lo[i] = sum_k dec_lo[k] x[(2i+k) mod n]`.
fn analysis_step(x: &[f64], filter: &WaveletFilter, lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len();
    let half = n / 2;
    let flen = filter.len();
    for i in 0..half {
        let base = 2 * i;
        let mut a = 0.0;
        let mut d = 0.0;
        if base + flen <= n {
            for k in 0..flen {
                let v = x[base + k];
                a += filter.dec_lo[k] * v;
                d += filter.dec_hi[k] * v;
            }
        } else {
            for k in 0..flen {
                let v = x[(base + k) % n];
                a += filter.dec_lo[k] * v;
                d += filter.dec_hi[k] * v;
            }
        }
        lo[i] = a;
        hi[i] = d;
    }
}

/// Adjoint of [`analysis_step`]; exact inverse because the periodized
/// analysis matrix is orthonormal.
fn synthesis_step(lo: &[f64], hi: &[f64], filter: &WaveletFilter, x: &mut [f64]) {
    let half = lo.len();
    let n = 2 * half;
    let flen = filter.len();
    x.fill(0.0);
    for i in 0..half {
        let base = 2 * i;
        let a = lo[i];
        let d = hi[i];
        if base + flen <= n {
            for k in 0..flen {
                x[base + k] += filter.dec_lo[k] * a + filter.dec_hi[k] * d;
            }
        } else {
            for k in 0..flen {
                x[(base + k) % n] += filter.dec_lo[k] * a + filter.dec_hi[k] * d;
            }
        }
    }
}

/// Multi-level periodized DWT along the last axis; leading axes are batched.
pub fn dwt1d(x: &Tensor, filter: &WaveletFilter, levels: usize) -> Result<Dwt1dCoeffs> {
    let shape = x.shape();
    let n = *shape.last().ok_or_else(|| {
        CoreError::InvalidArgument("dwt1d needs at least one axis".into())
    })?;
    check_levels(n, filter.len(), levels)?;
    let rows = x.numel() / n;
    let lead = &shape[..shape.len() - 1];

    let mut work: Vec<f64> = x.data().to_vec();
    let mut len = n;
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let half = len / 2;
        let mut next = vec![0.0; rows * half];
        let mut detail = vec![0.0; rows * half];
        for r in 0..rows {
            analysis_step(
                &work[r * len..r * len + len],
                filter,
                &mut next[r * half..r * half + half],
                &mut detail[r * half..r * half + half],
            );
        }
        let mut dshape = lead.to_vec();
        dshape.push(half);
        details.push(Tensor::new(dshape, detail)?);
        work = next;
        len = half;
    }
    let mut ashape = lead.to_vec();
    ashape.push(len);
    Ok(Dwt1dCoeffs {
        approx: Tensor::new(ashape, work)?,
        details,
        levels,
        original_len: n,
    })
}

/// Exact inverse of [`dwt1d`].
pub fn idwt1d(coeffs: &Dwt1dCoeffs, filter: &WaveletFilter) -> Result<Tensor> {
    let levels = coeffs.levels;
    if levels == 0 || coeffs.details.len() != levels {
        return Err(CoreError::InconsistentCoeffs(format!(
            "levels {} but {} detail tensors",
            levels,
            coeffs.details.len()
        )));
    }
    let n = coeffs.original_len;
    let ashape = coeffs.approx.shape();
    let lead = &ashape[..ashape.len() - 1];
    let rows = coeffs.approx.numel() / ashape[ashape.len() - 1];
    if ashape[ashape.len() - 1] != n >> levels {
        return Err(CoreError::InconsistentCoeffs(format!(
            "approx extent {} does not match original length {} at {} levels",
            ashape[ashape.len() - 1],
            n,
            levels
        )));
    }
    for (i, d) in coeffs.details.iter().enumerate() {
        let expect = n >> (i + 1);
        let dshape = d.shape();
        if dshape[dshape.len() - 1] != expect || &dshape[..dshape.len() - 1] != lead {
            return Err(CoreError::InconsistentCoeffs(format!(
                "detail level {} has shape {:?}, expected leading {:?} with extent {}",
                i + 1,
                dshape,
                lead,
                expect
            )));
        }
    }

    let mut work: Vec<f64> = coeffs.approx.data().to_vec();
    let mut len = n >> levels;
    // Coarsest detail first: details are stored finest-first.
    for level in (0..levels).rev() {
        let detail = coeffs.details[level].data();
        let out_len = len * 2;
        let mut next = vec![0.0; rows * out_len];
        for r in 0..rows {
            synthesis_step(
                &work[r * len..r * len + len],
                &detail[r * len..r * len + len],
                filter,
                &mut next[r * out_len..r * out_len + out_len],
            );
        }
        work = next;
        len = out_len;
    }
    let mut shape = lead.to_vec();
    shape.push(n);
    Tensor::new(shape, work)
}

/// One 2D analysis level on a `[rows_r, cols_c]` field: transform along the
/// column axis, then along the row axis. Outputs are the four subbands.
#[allow(clippy::type_complexity)]
fn analysis_step_2d(
    field: &[f64],
    r: usize,
    c: usize,
    filter: &WaveletFilter,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let hc = c / 2;
    let hr = r / 2;
    // Pass 1: along the last axis, each of the r lines.
    let mut temp = vec![0.0; r * c];
    let mut lo_line = vec![0.0; hc];
    let mut hi_line = vec![0.0; hc];
    for i in 0..r {
        analysis_step(&field[i * c..(i + 1) * c], filter, &mut lo_line, &mut hi_line);
        temp[i * c..i * c + hc].copy_from_slice(&lo_line);
        temp[i * c + hc..(i + 1) * c].copy_from_slice(&hi_line);
    }
    // Pass 2: along the row axis, each of the c columns.
    let mut ll = vec![0.0; hr * hc];
    let mut lh = vec![0.0; hr * hc];
    let mut hl = vec![0.0; hr * hc];
    let mut hh = vec![0.0; hr * hc];
    let mut column = vec![0.0; r];
    let mut lo_col = vec![0.0; hr];
    let mut hi_col = vec![0.0; hr];
    for j in 0..c {
        for i in 0..r {
            column[i] = temp[i * c + j];
        }
        analysis_step(&column, filter, &mut lo_col, &mut hi_col);
        if j < hc {
            for i in 0..hr {
                ll[i * hc + j] = lo_col[i];
                hl[i * hc + j] = hi_col[i];
            }
        } else {
            let jj = j - hc;
            for i in 0..hr {
                lh[i * hc + jj] = lo_col[i];
                hh[i * hc + jj] = hi_col[i];
            }
        }
    }
    (ll, lh, hl, hh)
}

/// Adjoint of [`analysis_step_2d`].
fn synthesis_step_2d(
    ll: &[f64],
    lh: &[f64],
    hl: &[f64],
    hh: &[f64],
    hr: usize,
    hc: usize,
    filter: &WaveletFilter,
) -> Vec<f64> {
    let r = 2 * hr;
    let c = 2 * hc;
    // Undo the column pass.
    let mut temp = vec![0.0; r * c];
    let mut lo_col = vec![0.0; hr];
    let mut hi_col = vec![0.0; hr];
    let mut column = vec![0.0; r];
    for j in 0..c {
        if j < hc {
            for i in 0..hr {
                lo_col[i] = ll[i * hc + j];
                hi_col[i] = hl[i * hc + j];
            }
        } else {
            let jj = j - hc;
            for i in 0..hr {
                lo_col[i] = lh[i * hc + jj];
                hi_col[i] = hh[i * hc + jj];
            }
        }
        synthesis_step(&lo_col, &hi_col, filter, &mut column);
        for i in 0..r {
            temp[i * c + j] = column[i];
        }
    }
    // Undo the row pass.
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        let (lo, hi) = temp[i * c..(i + 1) * c].split_at(hc);
        synthesis_step(lo, hi, filter, &mut out[i * c..(i + 1) * c]);
    }
    out
}

/// Multi-level periodized DWT along the last two axes; leading axes batched.
pub fn dwt2d(x: &Tensor, filter: &WaveletFilter, levels: usize) -> Result<Dwt2dCoeffs> {
    let shape = x.shape();
    if shape.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "dwt2d needs at least two axes".into(),
        ));
    }
    let r = shape[shape.len() - 2];
    let c = shape[shape.len() - 1];
    check_levels(r, filter.len(), levels)?;
    check_levels(c, filter.len(), levels)?;
    let fields = x.numel() / (r * c);
    let lead = &shape[..shape.len() - 2];

    let mut work: Vec<f64> = x.data().to_vec();
    let (mut cur_r, mut cur_c) = (r, c);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (hr, hc) = (cur_r / 2, cur_c / 2);
        let quad = hr * hc;
        let mut next = vec![0.0; fields * quad];
        let mut lh = vec![0.0; fields * quad];
        let mut hl = vec![0.0; fields * quad];
        let mut hh = vec![0.0; fields * quad];
        for f in 0..fields {
            let field = &work[f * cur_r * cur_c..(f + 1) * cur_r * cur_c];
            let (qll, qlh, qhl, qhh) = analysis_step_2d(field, cur_r, cur_c, filter);
            next[f * quad..(f + 1) * quad].copy_from_slice(&qll);
            lh[f * quad..(f + 1) * quad].copy_from_slice(&qlh);
            hl[f * quad..(f + 1) * quad].copy_from_slice(&qhl);
            hh[f * quad..(f + 1) * quad].copy_from_slice(&qhh);
        }
        let mut dshape = lead.to_vec();
        dshape.extend_from_slice(&[hr, hc]);
        details.push(Detail2d {
            lh: Tensor::new(dshape.clone(), lh)?,
            hl: Tensor::new(dshape.clone(), hl)?,
            hh: Tensor::new(dshape, hh)?,
        });
        work = next;
        cur_r = hr;
        cur_c = hc;
    }
    let mut ashape = lead.to_vec();
    ashape.extend_from_slice(&[cur_r, cur_c]);
    Ok(Dwt2dCoeffs {
        approx: Tensor::new(ashape, work)?,
        details,
        levels,
        original_rows: r,
        original_cols: c,
    })
}

/// Exact inverse of [`dwt2d`].
pub fn idwt2d(coeffs: &Dwt2dCoeffs, filter: &WaveletFilter) -> Result<Tensor> {
    let levels = coeffs.levels;
    if levels == 0 || coeffs.details.len() != levels {
        return Err(CoreError::InconsistentCoeffs(format!(
            "levels {} but {} detail levels",
            levels,
            coeffs.details.len()
        )));
    }
    let ashape = coeffs.approx.shape();
    let lead = &ashape[..ashape.len() - 2];
    let (r, c) = (coeffs.original_rows, coeffs.original_cols);
    if ashape[ashape.len() - 2] != r >> levels || ashape[ashape.len() - 1] != c >> levels {
        return Err(CoreError::InconsistentCoeffs(format!(
            "approx shape {:?} does not match {}x{} at {} levels",
            ashape, r, c, levels
        )));
    }
    for (i, d) in coeffs.details.iter().enumerate() {
        let er = r >> (i + 1);
        let ec = c >> (i + 1);
        for (name, band) in [("lh", &d.lh), ("hl", &d.hl), ("hh", &d.hh)] {
            let s = band.shape();
            if s[s.len() - 2] != er || s[s.len() - 1] != ec || &s[..s.len() - 2] != lead {
                return Err(CoreError::InconsistentCoeffs(format!(
                    "{name} at level {} has shape {:?}, expected (.., {er}, {ec})",
                    i + 1,
                    s
                )));
            }
        }
    }
    let fields = coeffs.approx.numel() / ((r >> levels) * (c >> levels));

    let mut work: Vec<f64> = coeffs.approx.data().to_vec();
    let (mut hr, mut hc) = (r >> levels, c >> levels);
    for level in (0..levels).rev() {
        let d = &coeffs.details[level];
        let quad = hr * hc;
        let out = hr * hc * 4;
        let mut next = vec![0.0; fields * out];
        for f in 0..fields {
            let rec = synthesis_step_2d(
                &work[f * quad..(f + 1) * quad],
                &d.lh.data()[f * quad..(f + 1) * quad],
                &d.hl.data()[f * quad..(f + 1) * quad],
                &d.hh.data()[f * quad..(f + 1) * quad],
                hr,
                hc,
                filter,
            );
            next[f * out..(f + 1) * out].copy_from_slice(&rec);
        }
        work = next;
        hr *= 2;
        hc *= 2;
    }
    let mut shape = lead.to_vec();
    shape.extend_from_slice(&[r, c]);
    Tensor::new(shape, work)
}
