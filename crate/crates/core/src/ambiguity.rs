//! Cross-ambiguity channel prediction and the action of an estimated
//! delay-Doppler filter on a signal.
//!
//! The effective channel acts on a quasi-periodic cell by twisted
//! convolution over a small rectangle of lags (the support set); the
//! maximum-likelihood estimate of that filter is the cross-ambiguity of
//! the received cell against the transmitted pilot:
//!
//! ```text
//! ĥ[k, l] = Σ_{k'=0}^{M-1} Σ_{l'=0}^{N-1}
//!           y[k', l'] x*[k' - k, l' - l] e^{-j2π l (k' - k) / (MN)}
//! ```
//!
//! evaluated for `(k, l)` in the support set only.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{root_table, Scalar};
use crate::signal::{DdSignal, SupportSet};

/// Discrete effective channel filter on a support set.
#[derive(Debug, Clone, PartialEq)]
pub struct DdChannelEstimate<T: Scalar> {
    grid: DdGridParams<T>,
    support: SupportSet,
    /// One value per support lag, in [`SupportSet::iter`] order.
    values: Vec<Complex<T>>,
}

impl<T: Scalar> DdChannelEstimate<T> {
    pub fn zero(grid: DdGridParams<T>, support: SupportSet) -> Self {
        Self {
            grid,
            support,
            values: vec![Complex::new(T::zero(), T::zero()); support.len()],
        }
    }

    pub fn from_values(
        grid: DdGridParams<T>,
        support: SupportSet,
        values: Vec<Complex<T>>,
    ) -> Result<Self> {
        if values.len() != support.len() {
            return Err(Error::LengthMismatch {
                context: "channel estimate values",
                expected: support.len(),
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Numerical(
                "channel estimate contains non-finite values".into(),
            ));
        }
        Ok(Self {
            grid,
            support,
            values,
        })
    }

    pub fn grid(&self) -> &DdGridParams<T> {
        &self.grid
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Value at lag `(k, l)`; zero outside the support.
    pub fn get(&self, k: i64, l: i64) -> Complex<T> {
        self.support
            .index_of(k, l)
            .map(|i| self.values[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn set(&mut self, k: i64, l: i64, value: Complex<T>) -> Result<()> {
        let idx = self.support.index_of(k, l).ok_or_else(|| {
            Error::InvalidParameter(format!("lag ({k}, {l}) outside the support set"))
        })?;
        self.values[idx] = value;
        Ok(())
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Lag and value of the strongest tap.
    pub fn peak(&self) -> ((i64, i64), Complex<T>) {
        let mut best = ((0i64, 0i64), Complex::new(T::zero(), T::zero()));
        let mut best_mag = T::neg_infinity();
        for ((k, l), v) in self.support.iter().zip(&self.values) {
            if v.norm_sqr() > best_mag {
                best_mag = v.norm_sqr();
                best = ((k, l), *v);
            }
        }
        best
    }

    /// Iterate `(lag, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), Complex<T>)> + '_ {
        self.support.iter().zip(self.values.iter().copied())
    }
}

/// Cross-ambiguity of a received cell against a reference cell over the
/// given support set.
pub fn cross_ambiguity<T: Scalar>(
    y: &DdSignal<T>,
    x_ref: &DdSignal<T>,
    support: SupportSet,
) -> Result<DdChannelEstimate<T>> {
    if y.grid() != x_ref.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *y.grid();
    let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
    if !support.within_one_period(grid.m(), grid.n()) {
        return Err(Error::InvalidParameter(
            "support set spans more than one delay-Doppler period".into(),
        ));
    }
    let roots = root_table::<T>(grid.mn());
    let mut values = Vec::with_capacity(support.len());
    for (k, l) in support.iter() {
        let mut acc = Complex::new(T::zero(), T::zero());
        for lp in 0..n {
            for kp in 0..m {
                let yv = y.at(kp as usize, lp as usize);
                if yv.norm_sqr() == T::zero() {
                    continue;
                }
                let xr = x_ref.quasi_extend(kp - k, lp - l).conj();
                let twist = roots[(l * (kp - k)).rem_euclid(mn) as usize].conj();
                acc += yv * xr * twist;
            }
        }
        values.push(acc);
    }
    DdChannelEstimate::from_values(grid, support, values)
}

/// Apply a support-set filter to a cell by twisted convolution:
/// `z[k, l] = Σ_{(k',l') in S} h[k', l'] x[k - k', l - l'] e^{j2π l'(k-k')/(MN)}`.
pub fn apply_dd_filter<T: Scalar>(
    h: &DdChannelEstimate<T>,
    x: &DdSignal<T>,
) -> Result<DdSignal<T>> {
    if h.grid() != x.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *x.grid();
    let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
    let roots = root_table::<T>(grid.mn());
    let mut out = DdSignal::zero(grid);
    for l in 0..n {
        for k in 0..m {
            let mut acc = Complex::new(T::zero(), T::zero());
            for ((ks, ls), hv) in h.iter() {
                if hv.norm_sqr() == T::zero() {
                    continue;
                }
                let xv = x.quasi_extend(k - ks, l - ls);
                let twist = roots[(ls * (k - ks)).rem_euclid(mn) as usize];
                acc += hv * xv * twist;
            }
            *out.at_mut(k as usize, l as usize) = acc;
        }
    }
    Ok(out)
}

/// Adjoint of [`apply_dd_filter`]: `⟨Hx, y⟩ = ⟨x, Hᴴy⟩` for all cells.
pub fn apply_dd_filter_adjoint<T: Scalar>(
    h: &DdChannelEstimate<T>,
    y: &DdSignal<T>,
) -> Result<DdSignal<T>> {
    if h.grid() != y.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *y.grid();
    let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
    let roots_mn = root_table::<T>(grid.mn());
    let roots_n = root_table::<T>(grid.n());
    let mut out = DdSignal::zero(grid);
    for lam in 0..n {
        for kap in 0..m {
            let mut acc = Complex::new(T::zero(), T::zero());
            for ((ks, ls), hv) in h.iter() {
                if hv.norm_sqr() == T::zero() {
                    continue;
                }
                // The forward action couples cell entry (kap, lam) into row
                // (k, l) with coefficient h * qphase * twist; accumulate the
                // conjugates.
                let k = (kap + ks).rem_euclid(m);
                let l = (lam + ls).rem_euclid(n);
                let kappa = k - ks;
                let periods = kappa.div_euclid(m);
                let qphase = roots_n[(periods * lam).rem_euclid(n) as usize];
                let twist = roots_mn[(ls * kappa).rem_euclid(mn) as usize];
                acc += hv.conj() * qphase.conj() * twist.conj() * y.at(k as usize, l as usize);
            }
            *out.at_mut(kap as usize, lam as usize) = acc;
        }
    }
    Ok(out)
}
