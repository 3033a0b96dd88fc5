//! Simulated physical channel: sparse delay-Doppler taps acting on
//! time-domain signals, AWGN, and deliberate timing/CFO impairments, plus
//! an operational ground-truth oracle for the effective DD filter.
//!
//! A tap acts as `r(t) += g · s(t - τ) · e^{j2π ν (t - τ)}` — the Doppler
//! phase is referenced to the delayed time, which is what makes an
//! integer-bin tap appear in the delay-Doppler domain as a clean twisted
//! convolution with a single filter coefficient equal to `g`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ambiguity::{cross_ambiguity, DdChannelEstimate};
use crate::error::{Error, Result};
use crate::grid::DdGridParams;
use crate::num::{cis, from_usize, Scalar};
use crate::pilot::{point_pilot, PointPilotSpec};
use crate::signal::{SupportSet, TdSignal};
use crate::transform::{dzt, idzt};

/// One physical propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap<T: Scalar> {
    pub gain: Complex<T>,
    /// Path delay in seconds (non-negative).
    pub delay: T,
    /// Doppler shift in Hz.
    pub doppler: T,
}

impl<T: Scalar> ChannelTap<T> {
    /// Tap on integer grid bins: delay `k0 / B`, Doppler `l0 / T`.
    pub fn at_bins(grid: &DdGridParams<T>, k0: u32, l0: i32, gain: Complex<T>) -> Self {
        Self {
            gain,
            delay: from_usize::<T>(k0 as usize) / grid.bandwidth(),
            doppler: T::from_i32(l0).expect("doppler bin fits scalar") / grid.duration(),
        }
    }
}

/// Channel output plus any physical-aliasing warnings.
#[derive(Debug, Clone)]
pub struct ChannelApplied<T: Scalar> {
    pub td: TdSignal<T>,
    /// Aliasing is physical, not fatal; taps that fold are reported here.
    pub warnings: Vec<String>,
}

/// Taps whose Doppler leaves the unambiguous DD region `|ν| < ν_p / 2` or
/// whose delay exceeds the delay period. Used by config validation and the
/// oracle; aliasing is physical so these are warnings, not errors.
pub fn validate_taps<T: Scalar>(grid: &DdGridParams<T>, taps: &[ChannelTap<T>]) -> Vec<String> {
    let half_nu = grid.nu_p() / from_usize(2);
    let mut warnings = Vec::new();
    for (i, tap) in taps.iter().enumerate() {
        if tap.doppler.abs() >= half_nu {
            warnings.push(format!(
                "tap {i}: Doppler {} Hz outside the unambiguous region (< {} Hz)",
                tap.doppler, half_nu
            ));
        }
        if tap.delay >= grid.tau_p() {
            warnings.push(format!(
                "tap {i}: delay {} s exceeds the delay period {} s",
                tap.delay,
                grid.tau_p()
            ));
        }
    }
    warnings
}

/// Half-width of the windowed-sinc kernel used for fractional delays.
const FRACTIONAL_HALF_WIDTH: i64 = 64;

/// Apply the tap superposition. Integer-sample delays shift exactly;
/// fractional delays go through Hann-windowed sinc interpolation, which
/// presumes an oversampled input (factor >= 4) to be accurate. The output
/// is extended by the largest delay.
pub fn apply_dd_channel<T: Scalar>(
    td: &TdSignal<T>,
    taps: &[ChannelTap<T>],
) -> Result<ChannelApplied<T>> {
    let fs = td.sample_rate;
    let len = td.samples.len();
    let mut warnings = Vec::new();
    let mut max_delay = 0usize;
    for (i, tap) in taps.iter().enumerate() {
        if tap.delay < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "tap {i}: negative delay {}",
                tap.delay
            )));
        }
        let half_fs = fs / from_usize(2);
        if tap.doppler.abs() >= half_fs {
            warnings.push(format!(
                "tap {i}: Doppler {} Hz aliases at sample rate {} Hz",
                tap.doppler, fs
            ));
        }
        let d = tap.delay * fs;
        max_delay = max_delay.max(d.ceil().to_usize().unwrap_or(0));
    }

    let out_len = len + max_delay;
    let mut out = vec![Complex::new(T::zero(), T::zero()); out_len];
    for tap in taps {
        let d = tap.delay * fs;
        let d_round = d.round();
        let doppler_step = T::TAU() * tap.doppler / fs;
        if (d - d_round).abs() < T::from_f64(1e-9).unwrap() {
            let di = d_round.to_usize().expect("non-negative integer delay");
            for (q, s) in td.samples.iter().enumerate() {
                // phase referenced to delayed time: exponent uses q = (out - d)
                let phase = cis(doppler_step * from_usize::<T>(q));
                out[q + di] += tap.gain * s * phase;
            }
        } else {
            // s(q_out - d) by windowed-sinc interpolation over the input.
            for (qo, o) in out.iter_mut().enumerate() {
                let t = from_usize::<T>(qo) - d;
                let center = t.round().to_i64().unwrap_or(0);
                let lo = (center - FRACTIONAL_HALF_WIDTH).max(0);
                let hi = (center + FRACTIONAL_HALF_WIDTH).min(len as i64 - 1);
                if lo > hi {
                    continue;
                }
                let mut acc = Complex::new(T::zero(), T::zero());
                for i in lo..=hi {
                    let x = t - T::from_i64(i).unwrap();
                    acc += td.samples[i as usize] * windowed_sinc(x);
                }
                *o += tap.gain * acc * cis(doppler_step * t);
            }
        }
    }
    let mut signal = TdSignal::new(out, fs);
    signal.origin_index = td.origin_index;
    Ok(ChannelApplied {
        td: signal,
        warnings,
    })
}

/// Hann-windowed normalized sinc over `|x| <= FRACTIONAL_HALF_WIDTH`.
fn windowed_sinc<T: Scalar>(x: T) -> T {
    let w = T::from_i64(FRACTIONAL_HALF_WIDTH).unwrap();
    if x.abs() > w {
        return T::zero();
    }
    let sinc = if x == T::zero() {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    };
    let half = T::from_f64(0.5).unwrap();
    let hann = half + half * (T::PI() * x / w).cos();
    sinc * hann
}

/// Add complex white Gaussian noise at the requested SNR, measured against
/// the actual waveform power. Returns the per-sample noise variance used
/// (which feeds the MMSE regularizer). `snr_db = +inf` passes the signal
/// through untouched.
pub fn add_awgn<T: Scalar>(td: &TdSignal<T>, snr_db: T, seed: u64) -> Result<(TdSignal<T>, T)> {
    let power = td.mean_power();
    if !(power > T::zero()) {
        return Err(Error::ZeroSignal);
    }
    if snr_db == T::infinity() {
        return Ok((td.clone(), T::zero()));
    }
    let ten = from_usize::<T>(10);
    let noise_var = power / ten.powf(snr_db / ten);
    let sigma = (noise_var / from_usize(2)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = td
        .samples
        .iter()
        .map(|s| {
            let re = T::standard_normal(&mut rng);
            let im = T::standard_normal(&mut rng);
            s + Complex::new(re * sigma, im * sigma)
        })
        .collect();
    let mut out = TdSignal::new(samples, td.sample_rate);
    out.origin_index = td.origin_index;
    Ok((out, noise_var))
}

/// Prepend `timing_offset` zero samples, then apply a CFO ramp and a
/// constant phase over the whole buffer.
pub fn apply_impairments<T: Scalar>(
    td: &TdSignal<T>,
    timing_offset: usize,
    cfo_hz: T,
    phase: T,
) -> TdSignal<T> {
    let mut samples = vec![Complex::new(T::zero(), T::zero()); timing_offset];
    samples.extend_from_slice(&td.samples);
    let step = T::TAU() * cfo_hz / td.sample_rate;
    let base = cis(phase);
    for (q, s) in samples.iter_mut().enumerate() {
        *s = *s * base * cis(step * from_usize::<T>(q));
    }
    let mut out = TdSignal::new(samples, td.sample_rate);
    out.origin_index = td.origin_index;
    out
}

/// Ground-truth effective DD filter, measured operationally: a unit point
/// pilot goes through transmit → channel → receive, and the response is
/// read off with the cross-ambiguity. With integer-bin taps this is exact
/// up to frame-edge effects, which the mid-grid pilot placement avoids.
pub fn effective_channel_oracle<T: Scalar>(
    taps: &[ChannelTap<T>],
    grid: &DdGridParams<T>,
    support: SupportSet,
) -> Result<DdChannelEstimate<T>> {
    let pilot = point_pilot(grid, &PointPilotSpec::centered(grid, T::one()))?;
    let tx = idzt(&pilot);
    let applied = apply_dd_channel(&tx, taps)?;
    let mn = grid.mn();
    let mut window = applied.td.samples;
    window.resize(mn, Complex::new(T::zero(), T::zero()));
    window.truncate(mn);
    let y = dzt(&TdSignal::new(window, grid.bandwidth()), grid)?;
    cross_ambiguity(&y, &pilot, support)
}
