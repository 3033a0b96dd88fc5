//! Predicted channel matrix and MMSE equalization.
//!
//! The estimated filter acts on a vectorized cell (index `k + M*l`) as a
//! sparse matrix with one nonzero per support lag per row. The MMSE
//! estimate is
//!
//! ```text
//! x̂ = Hᴴ (H Hᴴ + σ² I)⁻¹ y
//! ```
//!
//! solved two ways behind the same contract: a dense Cholesky
//! factorization of the Hermitian system (the reference, fine at desk
//! scale), and conjugate gradients driven by the sparse filter action for
//! the Monte-Carlo loops. The two are pinned against each other in tests.

use num_complex::Complex;

use crate::ambiguity::{apply_dd_filter, apply_dd_filter_adjoint, DdChannelEstimate};
use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{from_usize, root_table, Scalar};
use crate::signal::DdSignal;

/// Sparse-structured channel matrix `H` with `vec(y) = H vec(x)`
/// reproducing the twisted-convolution action of the estimate.
#[derive(Debug, Clone)]
pub struct ChannelMatrix<T: Scalar> {
    estimate: DdChannelEstimate<T>,
}

impl<T: Scalar> ChannelMatrix<T> {
    pub fn grid(&self) -> &DdGridParams<T> {
        self.estimate.grid()
    }

    pub fn estimate(&self) -> &DdChannelEstimate<T> {
        &self.estimate
    }

    /// `H x` — the filter action on a cell.
    pub fn matvec(&self, x: &DdSignal<T>) -> Result<DdSignal<T>> {
        apply_dd_filter(&self.estimate, x)
    }

    /// `Hᴴ y`.
    pub fn matvec_adjoint(&self, y: &DdSignal<T>) -> Result<DdSignal<T>> {
        apply_dd_filter_adjoint(&self.estimate, y)
    }

    /// Column index and coefficient contributed by one support lag to the
    /// row `(k, l)`.
    fn row_entry(&self, k: i64, l: i64, ks: i64, ls: i64, hv: Complex<T>) -> (usize, Complex<T>) {
        let grid = self.grid();
        let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
        let kk = k - ks;
        let cell_k = kk.rem_euclid(m);
        let periods = (kk - cell_k) / m;
        let cell_l = (l - ls).rem_euclid(n);
        let tau = T::TAU();
        let qphase =
            tau * from_usize::<T>((periods * cell_l).rem_euclid(n) as usize) / from_usize(grid.n());
        let twist =
            tau * from_usize::<T>((ls * kk).rem_euclid(mn) as usize) / from_usize(grid.mn());
        let coeff = hv * Complex::from_polar(T::one(), qphase + twist);
        ((cell_k + m * cell_l) as usize, coeff)
    }

    /// Dense row-major `MN x MN` form. Test- and reference-scale only.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let grid = *self.grid();
        let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
        let mut dense = vec![Complex::new(T::zero(), T::zero()); mn * mn];
        for l in 0..n as i64 {
            for k in 0..m as i64 {
                let row = (k as usize) + m * (l as usize);
                for ((ks, ls), hv) in self.estimate.iter() {
                    if hv.norm_sqr() == T::zero() {
                        continue;
                    }
                    let (col, coeff) = self.row_entry(k, l, ks, ls, hv);
                    dense[row * mn + col] += coeff;
                }
            }
        }
        dense
    }

    /// Nonzero count of each row of the sparse structure.
    pub fn nnz_per_row(&self) -> Vec<usize> {
        let grid = *self.grid();
        let nz = self
            .estimate
            .values()
            .iter()
            .filter(|v| v.norm_sqr() > T::zero())
            .count();
        vec![nz; grid.mn()]
    }
}

/// Wrap an estimate as the predicted channel matrix.
pub fn build_channel_matrix<T: Scalar>(h: &DdChannelEstimate<T>) -> ChannelMatrix<T> {
    ChannelMatrix {
        estimate: h.clone(),
    }
}

/// Dense MMSE equalization (reference path): Cholesky solve of the
/// Hermitian system `(H Hᴴ + noise_var I) z = y`, then `x̂ = Hᴴ z`.
pub fn mmse_equalize<T: Scalar>(
    y: &DdSignal<T>,
    h: &ChannelMatrix<T>,
    noise_var: T,
) -> Result<DdSignal<T>> {
    check_inputs(y, h, noise_var)?;
    let grid = *h.grid();
    let mn = grid.mn();
    let mut a = gram_plus_diag(h, noise_var);
    let mut z: Vec<Complex<T>> = y.cell().to_vec();
    cholesky_solve_in_place(&mut a, &mut z, mn)?;
    let z_sig = DdSignal::from_cell(grid, z)?;
    h.matvec_adjoint(&z_sig)
}

/// Iterative MMSE equalization (fast path): conjugate gradients on the
/// same Hermitian system, driven by the sparse filter action. Matches the
/// dense path to solver tolerance.
pub fn mmse_equalize_cg<T: Scalar>(
    y: &DdSignal<T>,
    h: &ChannelMatrix<T>,
    noise_var: T,
) -> Result<DdSignal<T>> {
    check_inputs(y, h, noise_var)?;
    let grid = *h.grid();
    let apply = |v: &DdSignal<T>| -> Result<DdSignal<T>> {
        let mut out = h.matvec(&h.matvec_adjoint(v)?)?;
        if noise_var > T::zero() {
            for (o, s) in out.cell_mut().iter_mut().zip(v.cell()) {
                *o += s * noise_var;
            }
        }
        Ok(out)
    };

    let tol = T::from_f64(1e-10).unwrap();
    let b_norm = y.energy().sqrt();
    if b_norm == T::zero() {
        return Ok(DdSignal::zero(grid));
    }
    let mut z = DdSignal::zero(grid);
    let mut r = y.clone();
    let mut p = r.clone();
    let mut rho = r.energy();
    let max_iter = 20 * grid.mn();
    let mut converged = false;
    for _ in 0..max_iter {
        if rho.sqrt() <= tol * b_norm {
            converged = true;
            break;
        }
        let ap = apply(&p)?;
        let denom: T = p
            .cell()
            .iter()
            .zip(ap.cell())
            .map(|(pi, api)| (pi.conj() * api).re)
            .sum();
        if !(denom > T::zero()) {
            return Err(Error::Numerical(
                "conjugate gradients broke down: system is singular \
                 (zero noise variance with a rank-deficient channel?)"
                    .into(),
            ));
        }
        let alpha = rho / denom;
        for ((zi, pi), (ri, api)) in z
            .cell_mut()
            .iter_mut()
            .zip(p.cell())
            .zip(r.cell_mut().iter_mut().zip(ap.cell()))
        {
            *zi += pi * alpha;
            *ri -= api * alpha;
        }
        let rho_new = r.energy();
        let beta = rho_new / rho;
        rho = rho_new;
        for (pi, ri) in p.cell_mut().iter_mut().zip(r.cell()) {
            *pi = ri + *pi * beta;
        }
    }
    if !converged && rho.sqrt() > tol * b_norm * from_usize(100) {
        return Err(Error::Numerical(format!(
            "conjugate gradients did not converge (residual {:e})",
            (rho.sqrt() / b_norm).to_f64().unwrap_or(f64::NAN)
        )));
    }
    h.matvec_adjoint(&z)
}

fn check_inputs<T: Scalar>(y: &DdSignal<T>, h: &ChannelMatrix<T>, noise_var: T) -> Result<()> {
    if y.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    if noise_var < T::zero() || !noise_var.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and non-negative (got {noise_var})"
        )));
    }
    Ok(())
}

/// `H Hᴴ + diag` built from the sparse structure: `O(MN S²)` rather than a
/// dense triple product.
fn gram_plus_diag<T: Scalar>(h: &ChannelMatrix<T>, diag: T) -> Vec<Complex<T>> {
    let grid = *h.grid();
    let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
    let roots_n = root_table::<T>(n);
    let roots_mn = root_table::<T>(mn);
    let entries: Vec<((i64, i64), Complex<T>)> = h
        .estimate()
        .iter()
        .filter(|(_, v)| v.norm_sqr() > T::zero())
        .collect();
    let mut a = vec![Complex::new(T::zero(), T::zero()); mn * mn];

    // Coefficient of H at row (k, l) for support lag (ks, ls), and the cell
    // column it hits.
    let coeff = |k: i64, l: i64, ks: i64, ls: i64, hv: Complex<T>| {
        let (mi, ni, mni) = (m as i64, n as i64, mn as i64);
        let kk = k - ks;
        let cell_k = kk.rem_euclid(mi);
        let periods = (kk - cell_k) / mi;
        let cell_l = (l - ls).rem_euclid(ni);
        let qphase = roots_n[(periods * cell_l).rem_euclid(ni) as usize];
        let twist = roots_mn[(ls * kk).rem_euclid(mni) as usize];
        ((cell_k, cell_l), hv * qphase * twist)
    };

    for l in 0..n as i64 {
        for k in 0..m as i64 {
            let row = (k as usize) + m * (l as usize);
            for &((ks1, ls1), h1) in &entries {
                let ((ck, cl), c1) = coeff(k, l, ks1, ls1, h1);
                for &((ks2, ls2), h2) in &entries {
                    // Row j reaches the same column (ck, cl) via lag 2.
                    let jk = (ck + ks2).rem_euclid(m as i64);
                    let jl = (cl + ls2).rem_euclid(n as i64);
                    let j = (jk as usize) + m * (jl as usize);
                    let ((ck2, cl2), c2) = coeff(jk, jl, ks2, ls2, h2);
                    debug_assert_eq!((ck2, cl2), (ck, cl));
                    a[row * mn + j] += c1 * c2.conj();
                }
            }
        }
    }
    for i in 0..mn {
        a[i * mn + i] += diag;
    }
    a
}

/// In-place Cholesky factorization and solve of a Hermitian
/// positive-definite system.
fn cholesky_solve_in_place<T: Scalar>(
    a: &mut [Complex<T>],
    b: &mut [Complex<T>],
    n: usize,
) -> Result<()> {
    let scale = (0..n)
        .map(|i| a[i * n + i].re.abs())
        .fold(T::zero(), T::max)
        .max(T::one());
    let tol = T::epsilon() * scale * from_usize(n);
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > tol) {
            return Err(Error::Numerical(
                "Cholesky pivot not positive: the MMSE system is singular \
                 (zero noise variance with a rank-deficient channel?)"
                    .into(),
            ));
        }
        let dj = d.sqrt();
        a[j * n + j] = Complex::new(dj, T::zero());
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / dj;
        }
    }
    // L y = b
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i].re;
    }
    // Lᴴ x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i].conj() * b[k];
        }
        b[i] = s / a[i * n + i].re;
    }
    Ok(())
}
