//! Delay-Doppler grid geometry.
//!
//! A frame is described by the fundamental periods `tau_p` (delay) and
//! `nu_p` (Doppler) with `tau_p * nu_p = 1`, subdivided into `M` delay bins
//! and `N` Doppler bins. Bandwidth and duration follow as `B = M * nu_p`
//! and `T = N * tau_p`, so one critically sampled frame holds `M * N`
//! samples.

use crate::error::{Error, Result};
use crate::num::{from_usize, Scalar};

/// Geometry of one Zak-OTFS frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdGridParams<T: Scalar> {
    m: usize,
    n: usize,
    nu_p: T,
    tau_p: T,
    bandwidth: T,
    duration: T,
}

impl<T: Scalar> DdGridParams<T> {
    /// Build a grid from `(M, N, nu_p)`; everything else is derived.
    pub fn new(m: usize, n: usize, nu_p: T) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive (got M={m}, N={n})"
            )));
        }
        if !(nu_p > T::zero()) || !nu_p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Doppler period must be positive and finite (got {nu_p})"
            )));
        }
        let tau_p = nu_p.recip();
        Ok(Self {
            m,
            n,
            nu_p,
            tau_p,
            bandwidth: from_usize::<T>(m) * nu_p,
            duration: from_usize::<T>(n) * tau_p,
        })
    }

    /// Delay bins per period.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Doppler bins per period.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per critically sampled frame.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Doppler period in Hz.
    pub fn nu_p(&self) -> T {
        self.nu_p
    }

    /// Delay period in seconds.
    pub fn tau_p(&self) -> T {
        self.tau_p
    }

    /// Signal bandwidth `B = M * nu_p` in Hz; also the critical sample rate.
    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// Frame duration `T = N * tau_p` in seconds.
    pub fn duration(&self) -> T {
        self.duration
    }

    /// Delay resolution in seconds (one delay bin).
    pub fn delay_resolution(&self) -> T {
        self.tau_p / from_usize(self.m)
    }

    /// Doppler resolution in Hz (one Doppler bin).
    pub fn doppler_resolution(&self) -> T {
        self.nu_p / from_usize(self.n)
    }
}

/// Convenience constructor mirroring `DdGridParams::new`.
pub fn make_grid<T: Scalar>(m: usize, n: usize, nu_p: T) -> Result<DdGridParams<T>> {
    DdGridParams::new(m, n, nu_p)
}
