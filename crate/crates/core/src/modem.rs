//! End-to-end baseband transmitter and receiver.
//!
//! Two packet modes:
//!
//! * **Point pilot** — the pilot and the data occupy separate DD frames,
//!   concatenated after the header. The channel is estimated from the
//!   pilot frame and applied to the data frame (integer-bin channels look
//!   identical across adjacent frames because the critical-rate waveform
//!   is MN-periodic).
//! * **Spread pilot (ISAC)** — the chirp-spread pilot is superposed on the
//!   data in a single frame; the combined received frame predicts the
//!   channel, the predicted pilot contribution is cancelled, and the
//!   residual is equalized.
//!
//! Every payload frame is scaled to unit average transmit power, matching
//! the unit-power header. With that normalization the DD-domain symbol
//! SNR of a pure data frame equals the measured time-domain SNR, and the
//! MMSE regularizer works out to `noise_var / E_d-fraction`.

use num_complex::Complex;

use crate::ambiguity::{apply_dd_filter, cross_ambiguity, DdChannelEstimate};
use crate::error::{Error, Result};
use crate::estimation::{build_channel_matrix, mmse_equalize, mmse_equalize_cg};
use crate::framing::{build_header, HeaderSpec};
use crate::grid::DdGridParams;
use crate::num::{from_usize, Scalar};
use crate::pilot::{point_pilot, spread_pilot, PointPilotSpec, SpreadPilotSpec};
use crate::signal::{DdSignal, SupportSet, TdSignal};
use crate::transform::{dzt, idzt};

/// Pilot flavor and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotMode<T: Scalar> {
    Point(PointPilotSpec<T>),
    Spread(SpreadPilotSpec<T>),
}

/// Which MMSE solver backs the equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EqualizerKind {
    /// Dense Cholesky reference solve.
    Dense,
    /// Conjugate-gradient solve on the sparse filter action; matches the
    /// dense path to solver tolerance and is the default for sweeps.
    #[default]
    Iterative,
}

/// Full modem configuration. QPSK is the only constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModemConfig<T: Scalar> {
    pub grid: DdGridParams<T>,
    pub pilot: PilotMode<T>,
    pub data_energy_per_symbol: T,
    pub support: SupportSet,
    pub header: HeaderSpec,
    pub equalizer: EqualizerKind,
    /// Support taps below this fraction of the peak magnitude are dropped
    /// from the filter used for cancellation and equalization (the raw
    /// estimate is still reported for sensing). Data superposed on a
    /// spread pilot leaks a small amount into every support lag; keeping
    /// only significant taps is what lets a clean ISAC frame decode
    /// error-free.
    pub estimate_threshold: T,
}

impl<T: Scalar> ModemConfig<T> {
    /// Point-pilot mode with mid-grid placement; the pilot frame carries
    /// the same energy as the data frame.
    pub fn point(grid: DdGridParams<T>) -> Self {
        let e_s = T::one();
        let energy = from_usize::<T>(grid.mn()) * e_s;
        Self {
            grid,
            pilot: PilotMode::Point(PointPilotSpec::centered(&grid, energy)),
            data_energy_per_symbol: e_s,
            support: SupportSet::default_estimation(),
            header: HeaderSpec::default(),
            equalizer: EqualizerKind::default(),
            estimate_threshold: T::from_f64(0.2).unwrap(),
        }
    }

    /// Spread-pilot ISAC mode with slope `u`; default pilot-to-data power
    /// ratio is 0 dB.
    pub fn spread(grid: DdGridParams<T>, slope: i64) -> Self {
        let e_s = T::one();
        let energy = from_usize::<T>(grid.mn()) * e_s;
        Self {
            grid,
            pilot: PilotMode::Spread(SpreadPilotSpec::centered(&grid, slope, energy)),
            data_energy_per_symbol: e_s,
            support: SupportSet::default_estimation(),
            header: HeaderSpec::default(),
            equalizer: EqualizerKind::default(),
            estimate_threshold: T::from_f64(0.2).unwrap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        if self.data_energy_per_symbol < T::zero() {
            return Err(Error::InvalidParameter(
                "data energy per symbol must be non-negative".into(),
            ));
        }
        if !self.support.within_one_period(self.grid.m(), self.grid.n()) {
            return Err(Error::InvalidParameter(
                "support set spans more than one delay-Doppler period".into(),
            ));
        }
        // Parameter checks only; pilot cells are built on demand.
        let (k_p, l_p, energy) = match &self.pilot {
            PilotMode::Point(spec) => (spec.k_p, spec.l_p, spec.energy),
            PilotMode::Spread(spec) => {
                crate::pilot::validate_spread_params(self.grid.m(), self.grid.n(), spec.slope)
                    .map_err(|v| Error::SpreadConstraint(v.to_string()))?;
                (spec.k_p, spec.l_p, spec.energy)
            }
        };
        if k_p >= self.grid.m() || l_p >= self.grid.n() {
            return Err(Error::InvalidParameter(format!(
                "pilot location ({}, {}) outside the {}x{} cell",
                k_p,
                l_p,
                self.grid.m(),
                self.grid.n()
            )));
        }
        if !(energy > T::zero()) {
            return Err(Error::InvalidParameter(
                "pilot energy must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bits_per_packet(&self) -> usize {
        2 * self.grid.mn()
    }

    /// Designed cell energy of the frame holding the pilot (pilot-only
    /// frame for point mode; pilot + data for ISAC).
    fn pilot_frame_design_energy(&self) -> T {
        match &self.pilot {
            PilotMode::Point(spec) => spec.energy,
            PilotMode::Spread(spec) => {
                spec.energy + from_usize::<T>(self.grid.mn()) * self.data_energy_per_symbol
            }
        }
    }

    /// Amplitude scale bringing a frame of designed cell energy `e` to
    /// unit average transmit power.
    fn frame_amp(&self, design_energy: T) -> T {
        (from_usize::<T>(self.grid.n()) * from_usize::<T>(self.grid.mn()) / design_energy).sqrt()
    }

    /// The pilot component of the transmitted DD frame, at transmit scale.
    pub fn tx_pilot_component(&self) -> Result<DdSignal<T>> {
        match &self.pilot {
            PilotMode::Point(spec) => {
                let mut cell = point_pilot(&self.grid, spec)?;
                cell.scale(self.frame_amp(spec.energy));
                Ok(cell)
            }
            PilotMode::Spread(spec) => {
                let mut cell = spread_pilot(&self.grid, spec)?;
                cell.scale(self.frame_amp(self.pilot_frame_design_energy()));
                Ok(cell)
            }
        }
    }

    /// Packet layout this configuration transmits (and expects back).
    pub fn layout(&self) -> PacketLayout {
        PacketLayout {
            header_len: self.header.total_len(),
            frame_len: self.grid.mn(),
            frames: match self.pilot {
                PilotMode::Point(_) => vec![FrameRole::PointPilot, FrameRole::Data],
                PilotMode::Spread(_) => vec![FrameRole::Isac],
            },
        }
    }

    /// Per-symbol amplitude of the transmitted data component.
    pub fn data_symbol_amp(&self) -> T {
        let e_s = self.data_energy_per_symbol;
        let design = match &self.pilot {
            PilotMode::Point(_) => from_usize::<T>(self.grid.mn()) * e_s,
            PilotMode::Spread(_) => self.pilot_frame_design_energy(),
        };
        self.frame_amp(design) * e_s.sqrt()
    }
}

/// Role of one payload frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRole {
    PointPilot,
    Data,
    Isac,
}

/// Sample layout of one packet: header followed by equal-length frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketLayout {
    pub header_len: usize,
    pub frame_len: usize,
    pub frames: Vec<FrameRole>,
}

impl PacketLayout {
    pub fn payload_len(&self) -> usize {
        self.frame_len * self.frames.len()
    }

    pub fn total_len(&self) -> usize {
        self.header_len + self.payload_len()
    }

    /// Sample range of frame `i` within the packet.
    pub fn frame_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.header_len + i * self.frame_len;
        start..start + self.frame_len
    }
}

/// Gray-mapped unit-energy QPSK: `00 -> (1+j)/√2`, `01 -> (-1+j)/√2`,
/// `11 -> (-1-j)/√2`, `10 -> (1-j)/√2`.
pub fn map_qpsk<T: Scalar>(bits: &[bool]) -> Result<Vec<Complex<T>>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "QPSK needs an even bit count (got {})",
            bits.len()
        )));
    }
    let amp = from_usize::<T>(2).sqrt().recip();
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            let re = if pair[1] { -amp } else { amp };
            let im = if pair[0] { -amp } else { amp };
            Complex::new(re, im)
        })
        .collect())
}

/// Hard-decision inverse of [`map_qpsk`]; a symbol exactly at the origin
/// decides to `[0, 0]`.
pub fn demap_qpsk<T: Scalar>(symbols: &[Complex<T>]) -> Vec<bool> {
    let mut bits = Vec::with_capacity(2 * symbols.len());
    for s in symbols {
        bits.push(s.im < T::zero());
        bits.push(s.re < T::zero());
    }
    bits
}

/// Point-pilot packet: `header ++ idzt(pilot frame) ++ idzt(data frame)`,
/// all other pilot-frame DD resources zero.
pub fn tx_point_pilot_packet<T: Scalar>(
    cfg: &ModemConfig<T>,
    bits: &[bool],
) -> Result<(TdSignal<T>, PacketLayout)> {
    let PilotMode::Point(_) = cfg.pilot else {
        return Err(Error::InvalidParameter(
            "config is not in point-pilot mode".into(),
        ));
    };
    cfg.validate()?;
    let pilot_cell = cfg.tx_pilot_component()?;
    let data_cell = data_frame_cell(cfg, bits)?;

    let sample_rate = cfg.grid.bandwidth();
    let header = build_header::<T>(&cfg.header, sample_rate)?;
    let layout = PacketLayout {
        header_len: header.len(),
        frame_len: cfg.grid.mn(),
        frames: vec![FrameRole::PointPilot, FrameRole::Data],
    };
    let mut samples = header.samples;
    samples.extend(idzt(&pilot_cell).samples);
    samples.extend(idzt(&data_cell).samples);
    Ok((TdSignal::new(samples, sample_rate), layout))
}

/// Spread-pilot ISAC packet: one frame carrying `data + spread pilot`.
pub fn tx_spread_pilot_packet<T: Scalar>(
    cfg: &ModemConfig<T>,
    bits: &[bool],
) -> Result<(TdSignal<T>, PacketLayout)> {
    let PilotMode::Spread(_) = cfg.pilot else {
        return Err(Error::InvalidParameter(
            "config is not in spread-pilot mode".into(),
        ));
    };
    cfg.validate()?;
    let pilot_cell = cfg.tx_pilot_component()?;
    let data_cell = data_frame_cell(cfg, bits)?;
    let combined = pilot_cell.add(&data_cell)?;

    let sample_rate = cfg.grid.bandwidth();
    let header = build_header::<T>(&cfg.header, sample_rate)?;
    let layout = PacketLayout {
        header_len: header.len(),
        frame_len: cfg.grid.mn(),
        frames: vec![FrameRole::Isac],
    };
    let mut samples = header.samples;
    samples.extend(idzt(&combined).samples);
    Ok((TdSignal::new(samples, sample_rate), layout))
}

/// Mode dispatch for the experiment drivers.
pub fn tx_packet<T: Scalar>(
    cfg: &ModemConfig<T>,
    bits: &[bool],
) -> Result<(TdSignal<T>, PacketLayout)> {
    match cfg.pilot {
        PilotMode::Point(_) => tx_point_pilot_packet(cfg, bits),
        PilotMode::Spread(_) => tx_spread_pilot_packet(cfg, bits),
    }
}

fn data_frame_cell<T: Scalar>(cfg: &ModemConfig<T>, bits: &[bool]) -> Result<DdSignal<T>> {
    if bits.len() != cfg.bits_per_packet() {
        return Err(Error::LengthMismatch {
            context: "packet bits",
            expected: cfg.bits_per_packet(),
            got: bits.len(),
        });
    }
    let amp = cfg.data_symbol_amp();
    let symbols = map_qpsk::<T>(bits)?.into_iter().map(|s| s * amp).collect();
    DdSignal::from_cell(cfg.grid, symbols)
}

/// Demodulation output: decided bits, the channel estimate, and the
/// equalized cell (at transmit symbol scale, for EVM/constellation dumps).
#[derive(Debug, Clone)]
pub struct RxOutput<T: Scalar> {
    pub bits: Vec<bool>,
    pub estimate: DdChannelEstimate<T>,
    pub equalized: DdSignal<T>,
    /// Amplitude of the transmitted data symbols; divide the equalized
    /// cell by this to land on the unit QPSK constellation.
    pub symbol_scale: T,
}

/// Demodulate one synchronized, CFO-corrected packet. `td` must start at
/// the header; `noise_var` is the measured per-sample time-domain noise
/// variance (from the channel simulator, or a configured estimate for
/// recorded captures).
pub fn rx_demodulate<T: Scalar>(
    td: &TdSignal<T>,
    layout: &PacketLayout,
    cfg: &ModemConfig<T>,
    noise_var: T,
) -> Result<RxOutput<T>> {
    cfg.validate()?;
    if td.samples.len() < layout.total_len() {
        return Err(Error::FrameSize {
            expected: layout.total_len(),
            got: td.samples.len(),
        });
    }
    if !(cfg.data_energy_per_symbol > T::zero()) {
        return Err(Error::InvalidParameter(
            "demodulation needs positive data symbol energy".into(),
        ));
    }
    let grid = cfg.grid;
    let n = from_usize::<T>(grid.n());
    let pilot_cell = cfg.tx_pilot_component()?;
    let pilot_energy = pilot_cell.energy();
    // DZT sums N noisy samples per bin: DD noise variance is N times the
    // time-domain variance. Normalizing by the data symbol energy gives
    // the MMSE regularizer.
    let data_cell_energy = cfg.data_symbol_amp() * cfg.data_symbol_amp();
    let reg = n * noise_var / data_cell_energy;

    let frame = |i: usize| -> Result<DdSignal<T>> {
        let range = layout.frame_range(i);
        let samples = td.samples[range].to_vec();
        dzt(&TdSignal::new(samples, grid.bandwidth()), &grid)
    };

    let (raw_est, data_dd) = match (&cfg.pilot, layout.frames.as_slice()) {
        (PilotMode::Point(_), [FrameRole::PointPilot, FrameRole::Data]) => {
            let y_pilot = frame(0)?;
            let y_data = frame(1)?;
            let mut est = cross_ambiguity(&y_pilot, &pilot_cell, cfg.support)?;
            est.scale(pilot_energy.recip());
            (est, y_data)
        }
        (PilotMode::Spread(_), [FrameRole::Isac]) => {
            let y = frame(0)?;
            let mut est = cross_ambiguity(&y, &pilot_cell, cfg.support)?;
            est.scale(pilot_energy.recip());
            let filter = threshold_estimate(&est, cfg.estimate_threshold)?;
            let residual = cancel_pilot(&y, &filter, &pilot_cell)?;
            (est, residual)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "packet layout does not match the configured pilot mode".into(),
            ))
        }
    };

    // The raw estimate is referenced to the packet clock: a Doppler-lag-l
    // tap picked up a phase 2π l header_len / (MN) over the header. That
    // phase is common to every payload frame, so equalization uses the raw
    // values, while the reported estimate is re-referenced to the frame
    // start and equals the physical tap gains.
    let filter = threshold_estimate(&raw_est, cfg.estimate_threshold)?;
    let h = build_channel_matrix(&filter);
    let equalized = match cfg.equalizer {
        EqualizerKind::Dense => mmse_equalize(&data_dd, &h, reg)?,
        EqualizerKind::Iterative => mmse_equalize_cg(&data_dd, &h, reg)?,
    };
    let bits = demap_qpsk(equalized.cell());
    Ok(RxOutput {
        bits,
        estimate: rereference_to_frame(&raw_est, layout.header_len)?,
        equalized,
        symbol_scale: cfg.data_symbol_amp(),
    })
}

/// Zero out support taps below `threshold` times the peak magnitude.
fn threshold_estimate<T: Scalar>(
    est: &DdChannelEstimate<T>,
    threshold: T,
) -> Result<DdChannelEstimate<T>> {
    let (_, peak) = est.peak();
    let floor = peak.norm() * threshold;
    let values = est
        .values()
        .iter()
        .map(|v| {
            if v.norm() >= floor {
                *v
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    DdChannelEstimate::from_values(*est.grid(), *est.support(), values)
}

/// Undo the Doppler phase accumulated between the packet start and the
/// payload: lag-`l` values rotate by `e^{-j2π l offset / (MN)}`.
fn rereference_to_frame<T: Scalar>(
    est: &DdChannelEstimate<T>,
    offset_samples: usize,
) -> Result<DdChannelEstimate<T>> {
    let mn = est.grid().mn() as i64;
    let tau = T::TAU();
    let values = est
        .iter()
        .map(|((_, l), v)| {
            let q = (l * offset_samples as i64).rem_euclid(mn);
            v * Complex::from_polar(
                T::one(),
                -tau * from_usize::<T>(q as usize) / from_usize(mn as usize),
            )
        })
        .collect();
    DdChannelEstimate::from_values(*est.grid(), *est.support(), values)
}

/// Remove the predicted pilot contribution: `y - (h_est ⊛σ pilot)`.
pub fn cancel_pilot<T: Scalar>(
    y: &DdSignal<T>,
    h_est: &DdChannelEstimate<T>,
    pilot: &DdSignal<T>,
) -> Result<DdSignal<T>> {
    let predicted = apply_dd_filter(h_est, pilot)?;
    y.sub(&predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::metrics::ber;
    use crate::num::cis;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(count: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        (0..count).map(|_| rng.random::<bool>()).collect()
    }

    #[test]
    fn qpsk_mapping_table() {
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let syms = map_qpsk::<f64>(&[false, false]).unwrap();
        assert!((syms[0] - Complex::new(amp, amp)).norm() < 1e-15);
        let syms = map_qpsk::<f64>(&[false, true]).unwrap();
        assert!((syms[0] - Complex::new(-amp, amp)).norm() < 1e-15);
        let syms = map_qpsk::<f64>(&[true, true, false, false]).unwrap();
        assert!((syms[0] - Complex::new(-amp, -amp)).norm() < 1e-15);
        assert!((syms[1] - Complex::new(amp, amp)).norm() < 1e-15);
        let syms = map_qpsk::<f64>(&[true, false]).unwrap();
        assert!((syms[0] - Complex::new(amp, -amp)).norm() < 1e-15);
    }

    #[test]
    fn qpsk_round_trip_and_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bits = random_bits(256, &mut rng);
        let syms = map_qpsk::<f64>(&bits).unwrap();
        assert_eq!(demap_qpsk(&syms), bits);
        // Noisy decision inside the same quadrant.
        let noisy = Complex::new(0.9, 1.1) * std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(demap_qpsk(&[noisy]), vec![false, false]);
        // Origin tie-breaks to [0, 0].
        assert_eq!(demap_qpsk(&[Complex::new(0.0f64, 0.0)]), vec![false, false]);
        // Odd bit count is an error.
        assert!(map_qpsk::<f64>(&[true]).is_err());
    }

    #[test]
    fn point_packet_layout_and_length() {
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        assert_eq!(layout.header_len, 505);
        assert_eq!(layout.payload_len(), 2 * 1536);
        assert_eq!(td.len(), 505 + 2 * 1536);
        // Payload frames sit at unit average power like the header.
        for i in 0..2 {
            let r = layout.frame_range(i);
            let p: f64 = td.samples[r].iter().map(|s| s.norm_sqr()).sum::<f64>() / 1536.0;
            assert!((p - 1.0).abs() < 0.2, "frame {i} power {p}");
        }
    }

    #[test]
    fn zero_bits_fill_data_frame_with_one_constellation_point() {
        let grid = make_grid(8, 6, 1.0f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let bits = vec![false; cfg.bits_per_packet()];
        let cell = data_frame_cell(&cfg, &bits).unwrap();
        let expect = Complex::new(1.0, 1.0) / 2.0f64.sqrt() * cfg.data_symbol_amp();
        for v in cell.cell() {
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn spread_packet_single_frame() {
        let grid = make_grid(31, 37, 30e3f64).unwrap();
        let cfg = ModemConfig::spread(grid, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_spread_pilot_packet(&cfg, &bits).unwrap();
        assert_eq!(layout.frames, vec![FrameRole::Isac]);
        assert_eq!(td.len(), 505 + 1147);
    }

    #[test]
    fn zero_data_energy_transmits_scaled_spread_pilot() {
        let grid = make_grid(31, 37, 30e3f64).unwrap();
        let mut cfg = ModemConfig::spread(grid, 5);
        cfg.data_energy_per_symbol = 0.0;
        let bits = vec![false; cfg.bits_per_packet()];
        let (td, layout) = tx_spread_pilot_packet(&cfg, &bits).unwrap();
        let pilot = cfg.tx_pilot_component().unwrap();
        let expect = idzt(&pilot);
        let r = layout.frame_range(0);
        for (a, b) in td.samples[r].iter().zip(&expect.samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn loopback_point_mode_zero_noise() {
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        let out = rx_demodulate(&td, &layout, &cfg, 0.0).unwrap();
        assert_eq!(ber(&bits, &out.bits).unwrap().ber, 0.0);
        // Identity channel: estimate peaks at (0,0) with value 1.
        assert!((out.estimate.get(0, 0) - Complex::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn loopback_spread_mode_zero_noise() {
        let grid = make_grid(31, 37, 30e3f64).unwrap();
        let cfg = ModemConfig::spread(grid, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_spread_pilot_packet(&cfg, &bits).unwrap();
        let out = rx_demodulate(&td, &layout, &cfg, 0.0).unwrap();
        assert_eq!(ber(&bits, &out.bits).unwrap().ber, 0.0);
        let ((k, l), v) = out.estimate.peak();
        assert_eq!((k, l), (0, 0));
        // Data superposed on the pilot perturbs the estimate slightly.
        assert!((v - Complex::new(1.0, 0.0)).norm() < 0.1);
    }

    #[test]
    fn single_tap_channel_estimated_and_equalized() {
        use crate::channel::{apply_dd_channel, ChannelTap};
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        let gain = Complex::from_polar(0.8, std::f64::consts::FRAC_PI_4);
        let taps = [ChannelTap::at_bins(&grid, 2, 1, gain)];
        let rx = apply_dd_channel(&td, &taps).unwrap().td;
        let out = rx_demodulate(&rx, &layout, &cfg, 0.0).unwrap();
        assert_eq!(ber(&bits, &out.bits).unwrap().ber, 0.0);
        let est = out.estimate.get(2, 1);
        assert!(
            (est - gain).norm() / gain.norm() < 0.01,
            "estimate {est} vs tap {gain}"
        );
    }

    #[test]
    fn awgn_high_snr_point_mode() {
        use crate::channel::add_awgn;
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        let (noisy, noise_var) = add_awgn(&td, 22.0, 99).unwrap();
        let out = rx_demodulate(&noisy, &layout, &cfg, noise_var).unwrap();
        assert!(ber(&bits, &out.bits).unwrap().ber <= 1e-3);
    }

    #[test]
    fn cancel_pilot_trivial_cases() {
        let grid = make_grid(16, 12, 1.0f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pilot_cell: Vec<Complex<f64>> = (0..grid.mn())
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let pilot = DdSignal::from_cell(grid, pilot_cell).unwrap();
        let support = SupportSet::centered(3, 1);
        let mut h = DdChannelEstimate::zero(grid, support);
        h.set(1, -1, Complex::new(0.4, 0.3)).unwrap();
        h.set(0, 0, Complex::new(0.9, 0.0)).unwrap();
        let y = apply_dd_filter(&h, &pilot).unwrap();
        // Exact knowledge cancels exactly.
        let resid = cancel_pilot(&y, &h, &pilot).unwrap();
        assert!(resid.energy().sqrt() < 1e-10);
        // Zero estimate changes nothing.
        let zero = DdChannelEstimate::zero(grid, support);
        let same = cancel_pilot(&y, &zero, &pilot).unwrap();
        for (a, b) in same.cell().iter().zip(y.cell()) {
            assert!((a - b).norm() == 0.0);
        }
    }

    #[test]
    fn isac_residual_is_filtered_data_with_ground_truth_cancellation() {
        // Cyclic single-tap channel applied in the time domain; with the
        // ground-truth filter the cancelled residual must equal the
        // channel-filtered data component.
        let grid = make_grid(31, 37, 30e3f64).unwrap();
        let cfg = ModemConfig::spread(grid, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let pilot_cell = cfg.tx_pilot_component().unwrap();
        let data_cell = data_frame_cell(&cfg, &bits).unwrap();
        let combined = pilot_cell.add(&data_cell).unwrap();
        let tx = idzt(&combined);
        let mn = grid.mn();
        let (k0, l0) = (2i64, 1i64);
        let gain = Complex::new(0.7, -0.2);
        let cyclic: Vec<Complex<f64>> = (0..mn)
            .map(|q| {
                let src = (q as i64 - k0).rem_euclid(mn as i64) as usize;
                let t = q as f64 - k0 as f64;
                gain * tx.samples[src] * cis(2.0 * std::f64::consts::PI * l0 as f64 * t / mn as f64)
            })
            .collect();
        let y = dzt(&TdSignal::new(cyclic, grid.bandwidth()), &grid).unwrap();
        let mut h_true = DdChannelEstimate::zero(grid, cfg.support);
        h_true.set(k0, l0, gain).unwrap();
        let resid = cancel_pilot(&y, &h_true, &pilot_cell).unwrap();
        let direct = apply_dd_filter(&h_true, &data_cell).unwrap();
        let err = resid
            .cell()
            .iter()
            .zip(direct.cell())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "max residual deviation {err}");
        // Pilot energy drops by >= 60 dB relative to the received pilot.
        let pilot_rx = apply_dd_filter(&h_true, &pilot_cell).unwrap();
        let leftover = resid.sub(&direct).unwrap();
        let ratio = leftover.energy() / pilot_rx.energy();
        assert!(ratio < 1e-6, "pilot residual ratio {ratio:e}");
    }

    #[test]
    fn layout_mode_mismatch_rejected() {
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, mut layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        layout.frames = vec![FrameRole::Isac];
        assert!(rx_demodulate(&td, &layout, &cfg, 0.0).is_err());
    }

    #[test]
    fn short_buffer_rejected() {
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        let bits = vec![false; cfg.bits_per_packet()];
        let (td, layout) = tx_point_pilot_packet(&cfg, &bits).unwrap();
        let short = TdSignal::new(td.samples[..1000].to_vec(), td.sample_rate);
        assert!(matches!(
            rx_demodulate(&short, &layout, &cfg, 0.0),
            Err(Error::FrameSize { .. })
        ));
    }

    #[test]
    fn wrong_bit_count_rejected() {
        let grid = make_grid(32, 48, 30e3f64).unwrap();
        let cfg = ModemConfig::point(grid);
        assert!(tx_point_pilot_packet(&cfg, &[false; 10]).is_err());
    }
}
