//! Packet framing: Zadoff-Chu header construction, frame detection, and
//! carrier-frequency-offset estimation/correction.
//!
//! The header is a concatenation of ZC segments with pairwise-distinct odd
//! lengths. Detection is a normalized matched filter against the first
//! segment; CFO comes from the phases of the per-segment matched-filter
//! outputs: adjacent segments give a coarse estimate whose unambiguous
//! range is set by the shortest center-to-center spacing, and the outer
//! segment pair refines it after unwrapping — the different lengths are
//! what makes the combination resolvable.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{cis, from_i64, from_usize, Scalar};
use crate::signal::TdSignal;

/// One Zadoff-Chu segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZcSegment {
    pub root: u32,
    pub length: usize,
}

/// Three-segment header specification (any segment count >= 1 is accepted;
/// CFO estimation needs at least two).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderSpec {
    pub segments: Vec<ZcSegment>,
    /// Zero-sample gap between consecutive segments.
    pub gap: usize,
}

impl Default for HeaderSpec {
    fn default() -> Self {
        Self {
            segments: vec![
                ZcSegment {
                    root: 1,
                    length: 139,
                },
                ZcSegment {
                    root: 1,
                    length: 167,
                },
                ZcSegment {
                    root: 1,
                    length: 199,
                },
            ],
            gap: 0,
        }
    }
}

impl HeaderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParameter(
                "header needs at least one segment".into(),
            ));
        }
        for seg in &self.segments {
            check_zc_params(seg.root, seg.length)?;
        }
        for (i, a) in self.segments.iter().enumerate() {
            for b in &self.segments[i + 1..] {
                if a.length == b.length {
                    return Err(Error::InvalidParameter(format!(
                        "segment lengths must be pairwise distinct (duplicate {})",
                        a.length
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total header length in samples, gaps included.
    pub fn total_len(&self) -> usize {
        let seg: usize = self.segments.iter().map(|s| s.length).sum();
        seg + self.gap * self.segments.len().saturating_sub(1)
    }

    /// Start offset of segment `i` relative to the header start.
    fn segment_offset(&self, i: usize) -> usize {
        self.segments[..i].iter().map(|s| s.length + self.gap).sum()
    }

    /// Center of segment `i` relative to the header start, in samples.
    fn segment_center<T: Scalar>(&self, i: usize) -> T {
        from_usize::<T>(self.segment_offset(i))
            + from_usize::<T>(self.segments[i].length - 1) / from_usize(2)
    }
}

/// Timing/CFO recovery result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult<T: Scalar> {
    /// Sample index of the header start within the searched buffer.
    pub frame_start: usize,
    /// Estimated carrier frequency offset in Hz (zero until estimated).
    pub cfo_hz: T,
    /// Normalized correlation peak in [0, 1].
    pub detection_metric: T,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_zc_params(root: u32, length: usize) -> Result<()> {
    if length == 0 || length.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "Zadoff-Chu length must be odd and positive (got {length})"
        )));
    }
    if gcd(root as u64, length as u64) != 1 {
        return Err(Error::InvalidParameter(format!(
            "Zadoff-Chu root {root} not coprime to length {length}"
        )));
    }
    Ok(())
}

/// Zadoff-Chu sequence `z[n] = e^{-jπ root n(n+1)/length}` for odd length.
///
/// Unit modulus with ideal periodic autocorrelation (zero at all nonzero
/// lags).
pub fn zc_sequence<T: Scalar>(root: u32, length: usize) -> Result<Vec<Complex<T>>> {
    check_zc_params(root, length)?;
    let l = length as i64;
    let tau = T::TAU();
    Ok((0..l)
        .map(|n| {
            // n(n+1) is even, so the half-integer phase is an exact
            // multiple of 2π/length; reduce mod length first.
            let q = (root as i64 * n * (n + 1) / 2).rem_euclid(l);
            cis(-tau * from_i64::<T>(q) / from_i64(l))
        })
        .collect())
}

/// Concatenate the header segments (with configured gaps) at unit average
/// power.
pub fn build_header<T: Scalar>(spec: &HeaderSpec, sample_rate: T) -> Result<TdSignal<T>> {
    spec.validate()?;
    let total = spec.total_len();
    let mut samples = Vec::with_capacity(total);
    for (i, seg) in spec.segments.iter().enumerate() {
        if i > 0 {
            samples.extend(std::iter::repeat_n(
                Complex::new(T::zero(), T::zero()),
                spec.gap,
            ));
        }
        samples.extend(zc_sequence::<T>(seg.root, seg.length)?);
    }
    let mut td = TdSignal::new(samples, sample_rate);
    let power = td.mean_power();
    if power > T::zero() {
        let scale = power.sqrt().recip();
        for s in &mut td.samples {
            *s *= scale;
        }
    }
    Ok(td)
}

/// Locate the header by normalized cross-correlation against the first
/// segment. Ties break toward the smallest index.
pub fn detect_frame<T: Scalar>(
    rx: &TdSignal<T>,
    spec: &HeaderSpec,
    threshold: T,
) -> Result<SyncResult<T>> {
    spec.validate()?;
    let header_len = spec.total_len();
    if rx.samples.len() < header_len {
        return Err(Error::FrameSize {
            expected: header_len,
            got: rx.samples.len(),
        });
    }
    let seg = &spec.segments[0];
    let reference = zc_sequence::<T>(seg.root, seg.length)?;
    let ref_energy = from_usize::<T>(seg.length); // unit-modulus samples

    // Prefix sums of |rx|^2 for O(1) window energies.
    let mut prefix = Vec::with_capacity(rx.samples.len() + 1);
    prefix.push(T::zero());
    let mut acc = T::zero();
    for s in &rx.samples {
        acc += s.norm_sqr();
        prefix.push(acc);
    }

    let last_lag = rx.samples.len() - header_len;
    let mut best_lag = 0usize;
    let mut best_metric = T::neg_infinity();
    for lag in 0..=last_lag {
        let mut corr = Complex::new(T::zero(), T::zero());
        for (i, r) in reference.iter().enumerate() {
            corr += rx.samples[lag + i] * r.conj();
        }
        let window = prefix[lag + seg.length] - prefix[lag];
        let denom = (ref_energy * window).sqrt();
        let metric = if denom > T::zero() {
            corr.norm() / denom
        } else {
            T::zero()
        };
        if metric > best_metric {
            best_metric = metric;
            best_lag = lag;
        }
    }

    if best_metric < threshold {
        return Err(Error::SyncNotFound {
            metric: best_metric.to_f64().unwrap_or(0.0),
            threshold: threshold.to_f64().unwrap_or(0.0),
        });
    }
    Ok(SyncResult {
        frame_start: best_lag,
        cfo_hz: T::zero(),
        detection_metric: best_metric,
    })
}

/// Estimate the CFO from the phases of per-segment matched-filter outputs.
///
/// The unambiguous range is `± sample_rate / (2 Δ)` for the adjacent-pair
/// center spacing `Δ`; the outer segment pair then refines the estimate
/// after phase unwrapping against the coarse value.
pub fn estimate_cfo<T: Scalar>(
    rx: &TdSignal<T>,
    sync: &SyncResult<T>,
    spec: &HeaderSpec,
) -> Result<T> {
    spec.validate()?;
    if spec.segments.len() < 2 {
        return Err(Error::InvalidParameter(
            "CFO estimation needs at least two header segments".into(),
        ));
    }
    let header_len = spec.total_len();
    if sync.frame_start + header_len > rx.samples.len() {
        return Err(Error::FrameSize {
            expected: sync.frame_start + header_len,
            got: rx.samples.len(),
        });
    }

    let mut corr = Vec::with_capacity(spec.segments.len());
    for (i, seg) in spec.segments.iter().enumerate() {
        let offset = sync.frame_start + spec.segment_offset(i);
        let reference = zc_sequence::<T>(seg.root, seg.length)?;
        let mut c = Complex::new(T::zero(), T::zero());
        for (n, r) in reference.iter().enumerate() {
            c += rx.samples[offset + n] * r.conj();
        }
        corr.push(c);
    }

    let fs = rx.sample_rate;
    let tau = T::TAU();
    // Coarse: adjacent pair with the smallest spacing (first two segments).
    let delta01 = spec.segment_center::<T>(1) - spec.segment_center::<T>(0);
    let phi01 = (corr[1] * corr[0].conj()).arg();
    let coarse = phi01 * fs / (tau * delta01);
    if spec.segments.len() == 2 {
        return Ok(coarse);
    }

    // Fine: outer pair, unwrapped against the coarse estimate.
    let last = spec.segments.len() - 1;
    let delta = spec.segment_center::<T>(last) - spec.segment_center::<T>(0);
    let phi = (corr[last] * corr[0].conj()).arg();
    let expected = tau * coarse * delta / fs;
    let wraps = ((expected - phi) / tau).round();
    Ok((phi + tau * wraps) * fs / (tau * delta))
}

/// Multiply by `e^{-j2π cfo q / F_s}`; the exact inverse of an applied
/// CFO ramp with the same sample indexing.
pub fn correct_cfo<T: Scalar>(td: &TdSignal<T>, cfo_hz: T) -> TdSignal<T> {
    let step = -T::TAU() * cfo_hz / td.sample_rate;
    let rot = cis(step);
    let mut phase = Complex::new(T::one(), T::zero());
    let samples = td
        .samples
        .iter()
        .map(|s| {
            let out = s * phase;
            phase *= rot;
            out
        })
        .collect();
    TdSignal {
        samples,
        sample_rate: td.sample_rate,
        origin_index: td.origin_index,
    }
}
