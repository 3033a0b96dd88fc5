//! Discrete Zak transform pair and oversampled waveform synthesis.
//!
//! Conventions: both transforms run the Doppler sum over `n in [0, N)`.
//! The inverse carries the `1/N` factor,
//!
//! ```text
//! idzt:  s[nM + k] = (1/N) Σ_l x[k, l] e^{+j2π n l / N}
//! dzt:   y[k, l]   =       Σ_n y[k + nM] e^{-j2π n l / N}
//! ```
//!
//! so `dzt(idzt(x)) = x` exactly and `‖idzt(x)‖² = ‖x‖² / N`. Physical
//! amplitude scaling is applied once at the modem layer, not here.
//!
//! At the critical rate the synthesized frame is exactly MN-periodic in the
//! sample index, which is what makes integer delay-Doppler shifts act as
//! clean twisted convolutions on the cell.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{from_usize, root_table, Scalar};
use crate::signal::{DdSignal, TdSignal};

/// Discrete Zak transform of one critically sampled frame (`M*N` samples
/// at rate `B`).
pub fn dzt<T: Scalar>(td: &TdSignal<T>, grid: &DdGridParams<T>) -> Result<DdSignal<T>> {
    let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
    if td.samples.len() != mn {
        return Err(Error::FrameSize {
            expected: mn,
            got: td.samples.len(),
        });
    }
    let roots = root_table::<T>(n);
    let mut out = DdSignal::zero(*grid);
    for k in 0..m {
        for l in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for step in 0..n {
                // e^{-j2π n l / N} = conj of the root table entry
                let w = roots[(step * l) % n].conj();
                acc += td.samples[k + step * m] * w;
            }
            *out.at_mut(k, l) = acc;
        }
    }
    Ok(out)
}

/// Inverse discrete Zak transform at the critical rate `F_s = B`.
pub fn idzt<T: Scalar>(x: &DdSignal<T>) -> TdSignal<T> {
    let grid = *x.grid();
    let (m, n) = (grid.m(), grid.n());
    let roots = root_table::<T>(n);
    let inv_n = from_usize::<T>(n).recip();
    let mut samples = vec![Complex::new(T::zero(), T::zero()); grid.mn()];
    for step in 0..n {
        for k in 0..m {
            let mut acc = Complex::new(T::zero(), T::zero());
            for l in 0..n {
                acc += x.at(k, l) * roots[(step * l) % n];
            }
            samples[step * m + k] = acc * inv_n;
        }
    }
    TdSignal::new(samples, grid.bandwidth())
}

/// Sinc-pulse waveform sampled at `oversample * B` over one frame window.
///
/// Direct evaluation of the transmit sum with the sinc kernel truncated to
/// `sinc_half_width` delay bins on each side. At `oversample = 1` the kernel
/// collapses to Kronecker deltas and the output equals [`idzt`] exactly.
/// PAPR measurement wants faithful sidelobes, hence the generous default
/// half-width of 64 bins used by callers.
pub fn oversampled_td<T: Scalar>(
    x: &DdSignal<T>,
    oversample: usize,
    sinc_half_width: usize,
) -> Result<TdSignal<T>> {
    if oversample == 0 {
        return Err(Error::InvalidParameter(
            "oversample factor must be >= 1".into(),
        ));
    }
    if sinc_half_width < 8 {
        return Err(Error::InvalidParameter(format!(
            "sinc half-width must be >= 8 bins (got {sinc_half_width})"
        )));
    }
    let grid = *x.grid();
    let mn = grid.mn();
    let critical = idzt(x);
    if oversample == 1 {
        return Ok(critical);
    }
    let ov = from_usize::<T>(oversample);
    let total = oversample * mn;
    let mut samples = vec![Complex::new(T::zero(), T::zero()); total];
    let half = sinc_half_width as i64;
    for (q, out) in samples.iter_mut().enumerate() {
        // Time of this output sample in delay-bin units.
        let t = from_usize::<T>(q) / ov;
        let center = (q / oversample) as i64;
        let lo = (center - half).max(0);
        let hi = (center + half).min(mn as i64 - 1);
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in lo..=hi {
            let arg = t - from_usize::<T>(p as usize);
            acc += critical.samples[p as usize] * sinc(arg);
        }
        *out = acc;
    }
    let mut td = TdSignal::new(samples, grid.bandwidth() * ov);
    td.origin_index = 0;
    Ok(td)
}

/// Normalized sinc: `sin(πx)/(πx)` with `sinc(0) = 1`.
fn sinc<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        return T::one();
    }
    let px = T::PI() * x;
    px.sin() / px
}
