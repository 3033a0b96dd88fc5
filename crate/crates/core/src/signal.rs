//! Signal containers: quasi-periodic delay-Doppler cells, time-domain
//! sample sequences, and the small rectangular support sets channel
//! estimates live on.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{cis, from_i64, from_usize, Scalar};

/// One fundamental cell of a quasi-periodic delay-Doppler signal.
///
/// Only the `M x N` fundamental-domain samples are stored; values at
/// arbitrary integer `(k, l)` are defined through [`DdSignal::quasi_extend`]:
/// shifting by a delay period multiplies by `e^{j2π l/N}`, shifting by a
/// Doppler period changes nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DdSignal<T: Scalar> {
    grid: DdGridParams<T>,
    /// Row-major over Doppler: index `k + M*l`.
    cell: Vec<Complex<T>>,
}

impl<T: Scalar> DdSignal<T> {
    pub fn zero(grid: DdGridParams<T>) -> Self {
        Self {
            grid,
            cell: vec![Complex::new(T::zero(), T::zero()); grid.mn()],
        }
    }

    /// Wrap an existing cell; the length must be `M * N` in `k + M*l` order.
    pub fn from_cell(grid: DdGridParams<T>, cell: Vec<Complex<T>>) -> Result<Self> {
        if cell.len() != grid.mn() {
            return Err(Error::LengthMismatch {
                context: "delay-Doppler cell",
                expected: grid.mn(),
                got: cell.len(),
            });
        }
        Ok(Self { grid, cell })
    }

    pub fn grid(&self) -> &DdGridParams<T> {
        &self.grid
    }

    pub fn cell(&self) -> &[Complex<T>] {
        &self.cell
    }

    pub fn cell_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.cell
    }

    #[inline]
    pub fn at(&self, k: usize, l: usize) -> Complex<T> {
        self.cell[k + self.grid.m() * l]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize, l: usize) -> &mut Complex<T> {
        &mut self.cell[k + self.grid.m() * l]
    }

    /// Quasi-periodic extension to arbitrary integer `(k, l)`:
    /// `x[k + nM, l + mN] = x[k, l] e^{j2π n l / N}`.
    pub fn quasi_extend(&self, k: i64, l: i64) -> Complex<T> {
        let m = self.grid.m() as i64;
        let n = self.grid.n() as i64;
        let km = k.rem_euclid(m) as usize;
        let lm = l.rem_euclid(n) as usize;
        let periods = k.div_euclid(m);
        let phase_num = (periods * lm as i64).rem_euclid(n);
        let value = self.at(km, lm);
        if phase_num == 0 {
            value
        } else {
            value * cis(T::TAU() * from_i64::<T>(phase_num) / from_usize(self.grid.n()))
        }
    }

    /// Total energy of the fundamental cell.
    pub fn energy(&self) -> T {
        self.cell.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: T) {
        for c in &mut self.cell {
            *c *= factor;
        }
    }

    /// Elementwise difference; grids must match.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let cell = self
            .cell
            .iter()
            .zip(&other.cell)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid,
            cell,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let cell = self
            .cell
            .iter()
            .zip(&other.cell)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid,
            cell,
        })
    }
}

/// Complex baseband sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TdSignal<T: Scalar> {
    pub samples: Vec<Complex<T>>,
    /// Sample rate in Hz.
    pub sample_rate: T,
    /// Sample index corresponding to the frame (or packet) start.
    pub origin_index: i64,
}

impl<T: Scalar> TdSignal<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate: T) -> Self {
        Self {
            samples,
            sample_rate,
            origin_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Mean power per sample; zero for an empty signal.
    pub fn mean_power(&self) -> T {
        if self.samples.is_empty() {
            T::zero()
        } else {
            self.energy() / from_usize(self.samples.len())
        }
    }
}

/// Rectangle of delay-Doppler lags a channel estimate is computed over.
///
/// Bounds are inclusive and may be negative; the rectangle is meant to be
/// small compared to the full `M x N` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportSet {
    pub k_min: i64,
    pub k_max: i64,
    pub l_min: i64,
    pub l_max: i64,
}

impl SupportSet {
    pub fn new(k_min: i64, k_max: i64, l_min: i64, l_max: i64) -> Result<Self> {
        if k_min > k_max || l_min > l_max {
            return Err(Error::InvalidParameter(format!(
                "support bounds out of order: k [{k_min}, {k_max}], l [{l_min}, {l_max}]"
            )));
        }
        Ok(Self {
            k_min,
            k_max,
            l_min,
            l_max,
        })
    }

    /// Symmetric rectangle `|k| <= delay_max`, `|l| <= doppler_max`.
    pub fn centered(delay_max: u32, doppler_max: u32) -> Self {
        Self {
            k_min: -(delay_max as i64),
            k_max: delay_max as i64,
            l_min: -(doppler_max as i64),
            l_max: doppler_max as i64,
        }
    }

    /// Default estimation support: 6 delay bins and 2 Doppler bins around
    /// the origin.
    pub fn default_estimation() -> Self {
        Self::centered(6, 2)
    }

    pub fn len(&self) -> usize {
        ((self.k_max - self.k_min + 1) * (self.l_max - self.l_min + 1)) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64, l: i64) -> bool {
        k >= self.k_min && k <= self.k_max && l >= self.l_min && l <= self.l_max
    }

    /// Iterate lags in fixed `(k fast, l slow)` order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (k_min, k_max) = (self.k_min, self.k_max);
        (self.l_min..=self.l_max).flat_map(move |l| (k_min..=k_max).map(move |k| (k, l)))
    }

    /// Position of `(k, l)` in iteration order.
    pub fn index_of(&self, k: i64, l: i64) -> Option<usize> {
        if !self.contains(k, l) {
            return None;
        }
        let width = (self.k_max - self.k_min + 1) as usize;
        Some((l - self.l_min) as usize * width + (k - self.k_min) as usize)
    }

    /// True when the rectangle fits inside one `(M, N)` period.
    pub fn within_one_period(&self, m: usize, n: usize) -> bool {
        (self.k_max - self.k_min) < m as i64 && (self.l_max - self.l_min) < n as i64
    }
}
