//! MN-periodic twisted convolution.
//!
//! Delay-Doppler filters compose with signals through a convolution that
//! carries an extra delay-Doppler coupling phase:
//!
//! ```text
//! (w ⊛σ x)[k, l] = Σ_{k'=0}^{MN-1} Σ_{l'=0}^{MN-1}
//!                  w[k', l'] x[k - k', l - l'] e^{j2π l'(k - k') / (MN)}
//! ```
//!
//! where `x` is read through its quasi-periodic extension. The filter
//! operand is MN-periodic in *both* axes — one fundamental period is an
//! `MN x MN` table, not an `M x N` cell. A chirp filter, for instance,
//! takes different values on each of its `N x M` cell images, so it cannot
//! be represented by a quasi-periodic cell; [`DdPeriodicFilter`] carries
//! the full period.
//!
//! The direct sum below is the reference implementation. It skips zero
//! cell entries of `x`, so sparse inputs (point pilots) cost `O((MN)^2)`
//! while dense inputs cost `O((MN)^3)` — fine at desk scale, and the
//! brute-force oracle the tests compare against is an independent
//! re-derivation of the same sum.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{root_table, Scalar};
use crate::signal::DdSignal;

/// One `MN x MN` fundamental period of an MN-periodic delay-Doppler filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DdPeriodicFilter<T: Scalar> {
    grid: DdGridParams<T>,
    /// Index `k + MN*l`, `k, l` in `[0, MN)`.
    values: Vec<Complex<T>>,
}

impl<T: Scalar> DdPeriodicFilter<T> {
    pub fn zero(grid: DdGridParams<T>) -> Self {
        let mn = grid.mn();
        Self {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); mn * mn],
        }
    }

    /// Single unit tap at `(k0, l0)` of the fundamental period.
    pub fn delta(grid: DdGridParams<T>, k0: usize, l0: usize) -> Result<Self> {
        let mn = grid.mn();
        if k0 >= mn || l0 >= mn {
            return Err(Error::InvalidParameter(format!(
                "filter tap ({k0}, {l0}) outside one MN x MN period (MN = {mn})"
            )));
        }
        let mut f = Self::zero(grid);
        f.values[k0 + mn * l0] = Complex::new(T::one(), T::zero());
        Ok(f)
    }

    /// Fill one period from `f(k, l)`.
    pub fn from_fn(grid: DdGridParams<T>, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mn = grid.mn();
        let mut values = Vec::with_capacity(mn * mn);
        for l in 0..mn {
            for k in 0..mn {
                values.push(f(k, l));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &DdGridParams<T> {
        &self.grid
    }

    /// Value at arbitrary integer `(k, l)`, read MN-periodically.
    #[inline]
    pub fn at(&self, k: i64, l: i64) -> Complex<T> {
        let mn = self.grid.mn() as i64;
        let ki = k.rem_euclid(mn) as usize;
        let li = l.rem_euclid(mn) as usize;
        self.values[ki + self.grid.mn() * li]
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }
}

/// MN-periodic twisted convolution of a periodic filter with a
/// quasi-periodic signal; the result is again quasi-periodic and is
/// returned as a fundamental cell.
pub fn twisted_conv_periodic<T: Scalar>(
    w: &DdPeriodicFilter<T>,
    x: &DdSignal<T>,
) -> Result<DdSignal<T>> {
    if w.grid() != x.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *x.grid();
    let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
    let roots_mn = root_table::<T>(grid.mn());
    let roots_n = root_table::<T>(grid.n());

    // Nonzero cell entries of x; point pilots make this a single entry.
    let nonzero: Vec<(i64, i64, Complex<T>)> = (0..grid.n() as i64)
        .flat_map(|lc| (0..grid.m() as i64).map(move |kc| (kc, lc)))
        .filter_map(|(kc, lc)| {
            let v = x.at(kc as usize, lc as usize);
            (v.norm_sqr() > T::zero()).then_some((kc, lc, v))
        })
        .collect();

    let mut out = DdSignal::zero(grid);
    for l in 0..n {
        for k in 0..m {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &(kc, lc, xv) in &nonzero {
                // Images of this cell entry with k - k' in (k - MN, k] and
                // l - l' in (l - MN, l]: kappa = kc + j*M, lambda = lc + i*N.
                let j_hi = (k - kc).div_euclid(m);
                let i_hi = (l - lc).div_euclid(n);
                for j in (j_hi - n + 1)..=j_hi {
                    let kappa = kc + j * m;
                    let kp = k - kappa;
                    // Quasi-periodic phase of the image: e^{j2π j lc / N}.
                    let qphase = roots_n[(j * lc).rem_euclid(n) as usize];
                    let xq = xv * qphase;
                    for i in (i_hi - m + 1)..=i_hi {
                        let lambda = lc + i * n;
                        let lp = l - lambda;
                        let twist = roots_mn[(lp * kappa).rem_euclid(mn) as usize];
                        acc += w.at(kp, lp) * xq * twist;
                    }
                }
            }
            *out.at_mut(k as usize, l as usize) = acc;
        }
    }
    Ok(out)
}

/// Twisted convolution of two MN-periodic filters (the composition law of
/// the filter algebra). Quartic in MN — test-scale grids only.
pub fn compose_filters<T: Scalar>(
    a: &DdPeriodicFilter<T>,
    b: &DdPeriodicFilter<T>,
) -> Result<DdPeriodicFilter<T>> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *a.grid();
    let mn = grid.mn() as i64;
    let roots = root_table::<T>(grid.mn());
    let out = DdPeriodicFilter::from_fn(grid, |k, l| {
        let (k, l) = (k as i64, l as i64);
        let mut acc = Complex::new(T::zero(), T::zero());
        for lp in 0..mn {
            for kp in 0..mn {
                let av = a.values[(kp + mn * lp) as usize];
                if av.norm_sqr() == T::zero() {
                    continue;
                }
                let twist = roots[(lp * (k - kp)).rem_euclid(mn) as usize];
                acc += av * b.at(k - kp, l - lp) * twist;
            }
        }
        acc
    });
    Ok(out)
}
