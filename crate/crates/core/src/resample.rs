//! Rational-factor bandlimited resampling for recorded IQ captures.
//!
//! Output sample `m` evaluates the windowed-sinc interpolant of the input
//! at `t = m * down / up` input-sample periods, with the kernel cutoff at
//! the narrower of the two Nyquist bands. Factors are declared by the
//! caller (no automatic rate detection).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{from_usize, Scalar};
use crate::signal::TdSignal;

/// Kernel half-width in samples of the lower-rate side.
const HALF_WIDTH: f64 = 48.0;

/// Resample by the rational factor `up / down`.
pub fn resample<T: Scalar>(td: &TdSignal<T>, up: usize, down: usize) -> Result<TdSignal<T>> {
    if up == 0 || down == 0 {
        return Err(Error::InvalidParameter(
            "resampling factors must be positive".into(),
        ));
    }
    let out_rate = td.sample_rate * from_usize::<T>(up) / from_usize(down);
    if up == down {
        let mut out = td.clone();
        out.sample_rate = out_rate;
        return Ok(out);
    }
    let len = td.samples.len();
    // Cutoff relative to the input rate; width widens when decimating.
    let cutoff = if up >= down {
        1.0
    } else {
        up as f64 / down as f64
    };
    let half_width = HALF_WIDTH / cutoff;
    let out_len = (len * up) / down;
    let mut samples = Vec::with_capacity(out_len);
    let ratio = down as f64 / up as f64;
    for m in 0..out_len {
        let t = m as f64 * ratio;
        let lo = ((t - half_width).ceil() as i64).max(0);
        let hi = ((t + half_width).floor() as i64).min(len as i64 - 1);
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in lo..=hi {
            let x = t - n as f64;
            acc += td.samples[n as usize] * T::from_f64(kernel(x, cutoff, half_width)).unwrap();
        }
        samples.push(acc);
    }
    let mut out = TdSignal::new(samples, out_rate);
    out.origin_index = td.origin_index;
    Ok(out)
}

/// Hann-windowed sinc with cutoff `c` (relative to input Nyquist).
fn kernel(x: f64, cutoff: f64, half_width: f64) -> f64 {
    if x.abs() > half_width {
        return 0.0;
    }
    let sinc = if x == 0.0 {
        cutoff
    } else {
        let px = std::f64::consts::PI * cutoff * x;
        cutoff * px.sin() / px
    };
    let hann = 0.5 + 0.5 * (std::f64::consts::PI * x / half_width).cos();
    sinc * hann
}
