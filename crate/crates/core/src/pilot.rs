//! Point and spread (chirp) pilot construction.
//!
//! A point pilot is a single impulse in the fundamental cell — ideal
//! ambiguity but poor PAPR, since all its energy lands on N of the MN
//! time-domain sample slots. A spread pilot twists the same impulse with
//! an MN-periodic quadratic chirp, which flattens it over the whole cell
//! (constant magnitude when M and N are odd primes and the slope is
//! coprime to both) while keeping the ambiguity usable for sounding.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{from_i64, from_usize, Scalar};
use crate::signal::DdSignal;
use crate::twisted::{twisted_conv_periodic, DdPeriodicFilter};

/// Point pilot: impulse location and total energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPilotSpec<T: Scalar> {
    pub k_p: usize,
    pub l_p: usize,
    pub energy: T,
}

impl<T: Scalar> PointPilotSpec<T> {
    /// Mid-grid placement `(⌊M/2⌋, ⌊N/2⌋)` with the given energy.
    pub fn centered(grid: &DdGridParams<T>, energy: T) -> Self {
        Self {
            k_p: grid.m() / 2,
            l_p: grid.n() / 2,
            energy,
        }
    }
}

/// Spread pilot: impulse location, chirp slope, total energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadPilotSpec<T: Scalar> {
    pub k_p: usize,
    pub l_p: usize,
    pub slope: i64,
    pub energy: T,
}

impl<T: Scalar> SpreadPilotSpec<T> {
    /// Odd-grid placement `((M+1)/2, (N+1)/2)` with the given slope and
    /// energy.
    pub fn centered(grid: &DdGridParams<T>, slope: i64, energy: T) -> Self {
        Self {
            k_p: grid.m().div_ceil(2),
            l_p: grid.n().div_ceil(2),
            slope,
            energy,
        }
    }
}

/// Which spread-pilot constraint failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadViolation {
    DelayBinsNotOddPrime(usize),
    DopplerBinsNotOddPrime(usize),
    SlopeNotCoprimeToM { slope: i64, m: usize, gcd: u64 },
    SlopeNotCoprimeToN { slope: i64, n: usize, gcd: u64 },
}

impl std::fmt::Display for SpreadViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DelayBinsNotOddPrime(m) => {
                write!(f, "M = {m} must be an odd prime")
            }
            Self::DopplerBinsNotOddPrime(n) => {
                write!(f, "N = {n} must be an odd prime")
            }
            Self::SlopeNotCoprimeToM { slope, m, gcd } => {
                write!(f, "slope u = {slope} shares factor {gcd} with M = {m}")
            }
            Self::SlopeNotCoprimeToN { slope, n, gcd } => {
                write!(f, "slope u = {slope} shares factor {gcd} with N = {n}")
            }
        }
    }
}

fn is_odd_prime(x: usize) -> bool {
    if x < 3 || x.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Check the spread-pilot parameter constraints: M, N odd primes and the
/// slope coprime to both.
pub fn validate_spread_params(
    m: usize,
    n: usize,
    slope: i64,
) -> std::result::Result<(), SpreadViolation> {
    if !is_odd_prime(m) {
        return Err(SpreadViolation::DelayBinsNotOddPrime(m));
    }
    if !is_odd_prime(n) {
        return Err(SpreadViolation::DopplerBinsNotOddPrime(n));
    }
    let g = gcd(slope.unsigned_abs(), m as u64);
    if g != 1 {
        return Err(SpreadViolation::SlopeNotCoprimeToM { slope, m, gcd: g });
    }
    let g = gcd(slope.unsigned_abs(), n as u64);
    if g != 1 {
        return Err(SpreadViolation::SlopeNotCoprimeToN { slope, n, gcd: g });
    }
    Ok(())
}

/// Fundamental cell of a point pilot: `√energy` at `(k_p, l_p)`, zero
/// elsewhere. The quasi-periodic images carry the usual extension phases.
pub fn point_pilot<T: Scalar>(
    grid: &DdGridParams<T>,
    spec: &PointPilotSpec<T>,
) -> Result<DdSignal<T>> {
    if spec.k_p >= grid.m() || spec.l_p >= grid.n() {
        return Err(Error::InvalidParameter(format!(
            "pilot location ({}, {}) outside the {}x{} cell",
            spec.k_p,
            spec.l_p,
            grid.m(),
            grid.n()
        )));
    }
    if !(spec.energy > T::zero()) {
        return Err(Error::InvalidParameter(
            "pilot energy must be positive".into(),
        ));
    }
    let mut x = DdSignal::zero(*grid);
    *x.at_mut(spec.k_p, spec.l_p) = Complex::new(spec.energy.sqrt(), T::zero());
    Ok(x)
}

/// MN-periodic chirp filter `w[k, l] = (1/MN) e^{j2π u (k² + l²) / (MN)}`.
pub fn chirp_filter<T: Scalar>(grid: &DdGridParams<T>, slope: i64) -> DdPeriodicFilter<T> {
    let mn = grid.mn() as i64;
    let amp = from_usize::<T>(grid.mn()).recip();
    let tau = T::TAU();
    DdPeriodicFilter::from_fn(*grid, |k, l| {
        let (k, l) = (k as i64, l as i64);
        // Quadratic phase mod MN; squares stay well inside i64 at desk scale.
        let q = (slope * (k * k + l * l)).rem_euclid(mn);
        let theta = tau * from_i64::<T>(q) / from_i64(mn);
        Complex::from_polar(amp, theta)
    })
}

/// Spread pilot: chirp filter twisted-convolved with the point pilot,
/// normalized so the total cell energy equals `spec.energy`.
pub fn spread_pilot<T: Scalar>(
    grid: &DdGridParams<T>,
    spec: &SpreadPilotSpec<T>,
) -> Result<DdSignal<T>> {
    validate_spread_params(grid.m(), grid.n(), spec.slope)
        .map_err(|v| Error::SpreadConstraint(v.to_string()))?;
    if spec.k_p >= grid.m() || spec.l_p >= grid.n() {
        return Err(Error::InvalidParameter(format!(
            "pilot location ({}, {}) outside the {}x{} cell",
            spec.k_p,
            spec.l_p,
            grid.m(),
            grid.n()
        )));
    }
    if !(spec.energy > T::zero()) {
        return Err(Error::InvalidParameter(
            "pilot energy must be positive".into(),
        ));
    }
    let point = point_pilot(
        grid,
        &PointPilotSpec {
            k_p: spec.k_p,
            l_p: spec.l_p,
            energy: T::one(),
        },
    )?;
    let chirp = chirp_filter(grid, spec.slope);
    let mut spread = twisted_conv_periodic(&chirp, &point)?;
    let energy = spread.energy();
    if energy <= T::zero() {
        return Err(Error::Numerical("spread pilot has zero energy".into()));
    }
    spread.scale((spec.energy / energy).sqrt());
    Ok(spread)
}
