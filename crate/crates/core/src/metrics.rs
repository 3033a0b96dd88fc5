//! Link-quality measurements: bit error rate, peak-to-average power ratio,
//! error vector magnitude, and the analytic uncoded-QPSK reference curve
//! used to sanity-check simulated sweeps.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::signal::{DdSignal, TdSignal};

/// Bit-error count and ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerReport {
    pub bit_errors: usize,
    pub bits_total: usize,
    pub ber: f64,
}

/// PAPR measurement of one waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaprReport {
    pub papr_db: f64,
    /// Oversampling factor the waveform was synthesized at.
    pub oversample: usize,
    pub peak_power: f64,
    pub mean_power: f64,
}

/// Exact Hamming-distance ratio between two bit sequences.
pub fn ber(tx_bits: &[bool], rx_bits: &[bool]) -> Result<BerReport> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch {
            context: "bit sequences",
            expected: tx_bits.len(),
            got: rx_bits.len(),
        });
    }
    let bit_errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    let bits_total = tx_bits.len();
    Ok(BerReport {
        bit_errors,
        bits_total,
        ber: if bits_total == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_total as f64
        },
    })
}

/// `10 log10(max |s|² / mean |s|²)`. Callers supply an oversampled
/// waveform (factor >= 4) when analog-faithful peaks matter; the factor is
/// recorded in the report.
pub fn papr<T: Scalar>(td: &TdSignal<T>, oversample: usize) -> Result<PaprReport> {
    if td.is_empty() {
        return Err(Error::ZeroSignal);
    }
    let mean = td.mean_power();
    if !(mean > T::zero()) {
        return Err(Error::ZeroSignal);
    }
    let peak = td
        .samples
        .iter()
        .map(|s| s.norm_sqr())
        .fold(T::zero(), T::max);
    let peak_f = peak.to_f64().unwrap_or(f64::NAN);
    let mean_f = mean.to_f64().unwrap_or(f64::NAN);
    Ok(PaprReport {
        papr_db: 10.0 * (peak_f / mean_f).log10(),
        oversample,
        peak_power: peak_f,
        mean_power: mean_f,
    })
}

/// EVM floor when the error is exactly zero.
pub const EVM_FLOOR_DB: f64 = -100.0;

/// Error vector magnitude in dB: `10 log10(mean|x̂ - x|² / mean|x|²)`,
/// floored at [`EVM_FLOOR_DB`].
pub fn evm<T: Scalar>(equalized: &DdSignal<T>, reference: &[Complex<T>]) -> Result<f64> {
    if equalized.cell().len() != reference.len() {
        return Err(Error::LengthMismatch {
            context: "EVM reference symbols",
            expected: equalized.cell().len(),
            got: reference.len(),
        });
    }
    let err: T = equalized
        .cell()
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let sig: T = reference.iter().map(|c| c.norm_sqr()).sum();
    if !(sig > T::zero()) {
        return Err(Error::ZeroSignal);
    }
    let ratio = (err / sig).to_f64().unwrap_or(f64::NAN);
    if ratio <= 1e-10 {
        Ok(EVM_FLOOR_DB)
    } else {
        Ok(10.0 * ratio.log10())
    }
}

/// Complementary error function (Abramowitz & Stegun 7.1.26, |ε| < 1.5e-7).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Analytic uncoded Gray-QPSK bit error rate over AWGN at symbol SNR
/// `Es/N0` in dB: `BER = Q(sqrt(Es/N0))`.
pub fn qpsk_ber_awgn(snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    0.5 * erfc((snr / 2.0).sqrt())
}

/// Inverse of [`qpsk_ber_awgn`]: the SNR in dB at which the analytic curve
/// crosses `ber`. Bisection over [-10, 40] dB.
pub fn qpsk_snr_db_for_ber(ber: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qpsk_ber_awgn(mid) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Time-averaged symbol SNR implied by an EVM measurement, in dB.
pub fn evm_to_snr_db(evm_db: f64) -> f64 {
    -evm_db
}
