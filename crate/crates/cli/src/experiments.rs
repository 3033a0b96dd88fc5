//! Experiment drivers: each consumes a validated [`ExperimentConfig`],
//! writes CSV artifacts under the output directory, and returns a short
//! summary. Every run is reproducible bit-for-bit from (config, seed):
//! trial seeds split as `seed ^ trial`, noise seeds additionally fold in
//! the sweep-point index, and all random state lives in explicitly seeded
//! ChaCha generators.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use zakotfs::{
    add_awgn, apply_dd_channel, apply_impairments, ber, build_header, correct_cfo, detect_frame,
    estimate_cfo, evm, map_qpsk, oversampled_td, papr, resample, rx_demodulate, tx_packet,
    BerReport, ChannelTap, DdChannelEstimate64, DdSignal64, Error, ModemConfig, PacketLayout,
    PilotMode, RxOutput, TdSignal64,
};

use crate::config::{ExperimentConfig, Mode, PaprSection};
use crate::CliError;

/// Sinc truncation half-width for oversampled waveform synthesis.
const SINC_HALF_WIDTH: usize = 64;

fn map_core(e: Error) -> CliError {
    match e {
        Error::SyncNotFound { .. } => CliError::Sync(e.to_string()),
        Error::Numerical(_) => CliError::Numerical(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn packet_bits(count: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<bool>()).collect()
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    base ^ trial as u64
}

fn noise_seed(base: u64, point: usize, trial: usize) -> u64 {
    trial_seed(base, trial) ^ ((point as u64 + 1) << 40)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// One packet through the configured channel, impairments, and noise.
fn run_link(
    cfg: &ExperimentConfig,
    modem: &ModemConfig<f64>,
    layout: &PacketLayout,
    taps: &[ChannelTap<f64>],
    bits: &[bool],
    snr_db: f64,
    noise_seed: u64,
) -> Result<(BerReport, f64, RxOutput<f64>), CliError> {
    let (tx, _) = tx_packet(modem, bits).map_err(map_core)?;
    let mut signal = tx;
    if !taps.is_empty() {
        signal = apply_dd_channel(&signal, taps).map_err(map_core)?.td;
    }
    if cfg.needs_sync() {
        signal = apply_impairments(
            &signal,
            cfg.channel.timing_offset,
            cfg.channel.cfo_hz,
            cfg.channel.phase_rad,
        );
    }
    let (noisy, noise_var) = if snr_db.is_infinite() {
        (signal, 0.0)
    } else {
        add_awgn(&signal, snr_db, noise_seed).map_err(map_core)?
    };

    let aligned = if cfg.needs_sync() {
        let sync = detect_frame(&noisy, &modem.header, cfg.threshold).map_err(map_core)?;
        let cfo = estimate_cfo(&noisy, &sync, &modem.header).map_err(map_core)?;
        let corrected = correct_cfo(&noisy, cfo);
        TdSignal64::new(
            corrected.samples[sync.frame_start..].to_vec(),
            corrected.sample_rate,
        )
    } else {
        noisy
    };

    let out = rx_demodulate(&aligned, layout, modem, noise_var).map_err(map_core)?;
    let report = ber(bits, &out.bits).map_err(map_core)?;
    let reference: Vec<Complex<f64>> = map_qpsk::<f64>(bits)
        .map_err(map_core)?
        .into_iter()
        .map(|s| s * out.symbol_scale)
        .collect();
    let evm_db = evm(&out.equalized, &reference).map_err(map_core)?;
    Ok((report, evm_db, out))
}

/// Monte-Carlo BER sweep over the configured SNR list.
///
/// CSV schema (fixed order): `snr_db,trials,ber,evm_db`.
pub fn run_ber_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    expect_mode(cfg, Mode::BerSweep)?;
    let modem = cfg.modem_config()?;
    let layout = modem.layout();
    let taps = cfg.taps()?;
    let mut csv = String::from("snr_db,trials,ber,evm_db\n");
    for (pi, point) in cfg.channel.snr_db.iter().enumerate() {
        let snr_db = point.value(pi)?;
        let mut errors = 0usize;
        let mut bits_total = 0usize;
        let mut evm_acc = 0.0f64;
        for trial in 0..cfg.trials {
            let bits = packet_bits(modem.bits_per_packet(), trial_seed(cfg.seed, trial));
            let (report, evm_db, _) = run_link(
                cfg,
                &modem,
                &layout,
                &taps,
                &bits,
                snr_db,
                noise_seed(cfg.seed, pi, trial),
            )?;
            errors += report.bit_errors;
            bits_total += report.bits_total;
            evm_acc += evm_db;
        }
        let ber_total = errors as f64 / bits_total as f64;
        let evm_mean = evm_acc / cfg.trials as f64;
        println!(
            "snr {snr_db} dB: ber {ber_total:.3e} ({errors}/{bits_total} bits), evm {evm_mean:.2} dB"
        );
        writeln!(csv, "{snr_db},{},{ber_total:e},{evm_mean:.4}", cfg.trials).unwrap();
    }
    let path = out_dir.join("ber_sweep.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

/// Oversampled payload waveform of one packet, header excluded.
fn payload_waveform(
    modem: &ModemConfig<f64>,
    bits: &[bool],
    oversample: usize,
) -> Result<TdSignal64, CliError> {
    let (_, layout) = tx_packet(modem, bits).map_err(map_core)?;
    let pilot = modem.tx_pilot_component().map_err(map_core)?;
    let data_syms: Vec<Complex<f64>> = map_qpsk::<f64>(bits)
        .map_err(map_core)?
        .into_iter()
        .map(|s| s * modem.data_symbol_amp())
        .collect();
    let data = DdSignal64::from_cell(modem.grid, data_syms).map_err(map_core)?;
    let frames: Vec<DdSignal64> = match modem.pilot {
        PilotMode::Point(_) => vec![pilot, data],
        PilotMode::Spread(_) => vec![pilot.add(&data).map_err(map_core)?],
    };
    debug_assert_eq!(frames.len(), layout.frames.len());
    let mut samples = Vec::new();
    let mut rate = modem.grid.bandwidth();
    for cell in &frames {
        let td = oversampled_td(cell, oversample, SINC_HALF_WIDTH).map_err(map_core)?;
        rate = td.sample_rate;
        samples.extend(td.samples);
    }
    Ok(TdSignal64::new(samples, rate))
}

/// Pilot-only waveform (data resources zero), oversampled.
fn pilot_waveform(modem: &ModemConfig<f64>, oversample: usize) -> Result<TdSignal64, CliError> {
    let pilot = modem.tx_pilot_component().map_err(map_core)?;
    oversampled_td(&pilot, oversample, SINC_HALF_WIDTH).map_err(map_core)
}

/// PAPR comparison between the point-pilot and spread-pilot designs.
///
/// CSV schema (fixed order): `mode,region,papr_db` with rows
/// `point/spread × pilot/frame` followed by two `improvement` rows
/// (point minus spread).
pub fn run_papr_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    expect_mode(cfg, Mode::Papr)?;
    let section: &PaprSection = cfg
        .papr
        .as_ref()
        .ok_or_else(|| CliError::Config("papr: section required".into()))?;
    let point_grid = section.point_grid.build("papr.point_grid")?;
    let spread_grid = section.spread_grid.build("papr.spread_grid")?;
    let point_cfg = ModemConfig::point(point_grid);
    let spread_cfg = ModemConfig::spread(spread_grid, section.slope_u);
    let ov = cfg.oversample;

    let mut results: Vec<(&str, &str, f64)> = Vec::new();
    for (name, modem) in [("point", &point_cfg), ("spread", &spread_cfg)] {
        let bits = packet_bits(modem.bits_per_packet(), cfg.seed);
        let pilot_only = pilot_waveform(modem, ov)?;
        let mut frame = payload_waveform(modem, &bits, ov)?;
        if section.include_header {
            let header =
                build_header::<f64>(&modem.header, modem.grid.bandwidth()).map_err(map_core)?;
            let header_ov = resample(&header, ov, 1).map_err(map_core)?;
            let mut samples = header_ov.samples;
            samples.extend(frame.samples);
            frame = TdSignal64::new(samples, frame.sample_rate);
        }
        let p_pilot = papr(&pilot_only, ov).map_err(map_core)?;
        let p_frame = papr(&frame, ov).map_err(map_core)?;
        results.push((name, "pilot", p_pilot.papr_db));
        results.push((name, "frame", p_frame.papr_db));
    }
    let pilot_improvement = results[0].2 - results[2].2;
    let frame_improvement = results[1].2 - results[3].2;

    let mut csv = String::from("mode,region,papr_db\n");
    for (mode, region, value) in &results {
        println!("{mode} {region}: {value:.2} dB PAPR");
        writeln!(csv, "{mode},{region},{value:.4}").unwrap();
    }
    println!("improvement: pilot {pilot_improvement:.2} dB, frame {frame_improvement:.2} dB");
    writeln!(csv, "improvement,pilot,{pilot_improvement:.4}").unwrap();
    writeln!(csv, "improvement,frame,{frame_improvement:.4}").unwrap();
    let path = out_dir.join("papr.csv");
    write_file(&path, &csv)?;
    Ok(path)
}

fn sensing_map_csv(estimate: &DdChannelEstimate64) -> String {
    let s = estimate.support();
    let mut csv = String::from("k\\l");
    for l in s.l_min..=s.l_max {
        write!(csv, ",{l}").unwrap();
    }
    csv.push('\n');
    for k in s.k_min..=s.k_max {
        write!(csv, "{k}").unwrap();
        for l in s.l_min..=s.l_max {
            write!(csv, ",{:e}", estimate.get(k, l).norm()).unwrap();
        }
        csv.push('\n');
    }
    csv
}

/// Peak-to-spurious ratio in dB: weakest expected tap over strongest
/// estimate entry away from the expected bins.
fn peak_to_spurious_db(estimate: &DdChannelEstimate64, expected: &[(i64, i64)]) -> f64 {
    let mut weakest_peak = f64::INFINITY;
    for &(k, l) in expected {
        weakest_peak = weakest_peak.min(estimate.get(k, l).norm());
    }
    let mut spurious: f64 = 0.0;
    for ((k, l), v) in estimate.iter() {
        if !expected.contains(&(k, l)) {
            spurious = spurious.max(v.norm());
        }
    }
    if spurious == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (weakest_peak / spurious).log10()
    }
}

/// Expected integer tap bins of the configured channel (the identity tap
/// when no taps are configured).
fn expected_bins(cfg: &ExperimentConfig) -> Vec<(i64, i64)> {
    if cfg.channel.taps.is_empty() {
        return vec![(0, 0)];
    }
    cfg.channel
        .taps
        .iter()
        .map(|t| {
            (
                t.delay_bins.map(i64::from).unwrap_or(0),
                t.doppler_bins.map(i64::from).unwrap_or(0),
            )
        })
        .collect()
}

/// ISAC run: sensing map from the spread-pilot estimate plus
/// post-cancellation data recovery.
///
/// Outputs `isac_map.csv` (grid of |ĥ| over the support, first trial) and
/// `isac_metrics.csv` with schema
/// `snr_db,trials,bits,bit_errors,ber,peak_to_spurious_db`.
pub fn run_isac_sense(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    expect_mode(cfg, Mode::IsacSense)?;
    let modem = cfg.modem_config()?;
    let layout = modem.layout();
    let taps = cfg.taps()?;
    let snr_db = cfg.channel.snr_db[0].value(0)?;
    let expected = expected_bins(cfg);

    let mut errors = 0usize;
    let mut bits_total = 0usize;
    let mut map_csv = None;
    let mut ratio_db = f64::INFINITY;
    for trial in 0..cfg.trials {
        let bits = packet_bits(modem.bits_per_packet(), trial_seed(cfg.seed, trial));
        let (report, _, out) = run_link(
            cfg,
            &modem,
            &layout,
            &taps,
            &bits,
            snr_db,
            noise_seed(cfg.seed, 0, trial),
        )?;
        errors += report.bit_errors;
        bits_total += report.bits_total;
        if trial == 0 {
            map_csv = Some(sensing_map_csv(&out.estimate));
            ratio_db = peak_to_spurious_db(&out.estimate, &expected);
        }
    }
    let ber_total = errors as f64 / bits_total as f64;
    println!("isac @ {snr_db} dB: ber {ber_total:.3e}, peak-to-spurious {ratio_db:.1} dB");

    let map_path = out_dir.join("isac_map.csv");
    write_file(&map_path, &map_csv.expect("at least one trial"))?;
    let metrics_path = out_dir.join("isac_metrics.csv");
    let mut csv = String::from("snr_db,trials,bits,bit_errors,ber,peak_to_spurious_db\n");
    writeln!(
        csv,
        "{snr_db},{},{bits_total},{errors},{ber_total:e},{ratio_db:.4}",
        cfg.trials
    )
    .unwrap();
    write_file(&metrics_path, &csv)?;
    Ok((map_path, metrics_path))
}

/// Zero-noise identity-channel self-test for the configured mode.
///
/// CSV schema: `trials,bits,bit_errors,ber,evm_db`.
pub fn run_loopback(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    expect_mode(cfg, Mode::Loopback)?;
    let modem = cfg.modem_config()?;
    let layout = modem.layout();
    let mut errors = 0usize;
    let mut bits_total = 0usize;
    let mut evm_acc = 0.0;
    for trial in 0..cfg.trials {
        let bits = packet_bits(modem.bits_per_packet(), trial_seed(cfg.seed, trial));
        let (tx, _) = tx_packet(&modem, &bits).map_err(map_core)?;
        let out = rx_demodulate(&tx, &layout, &modem, 0.0).map_err(map_core)?;
        let report = ber(&bits, &out.bits).map_err(map_core)?;
        errors += report.bit_errors;
        bits_total += report.bits_total;
        let reference: Vec<Complex<f64>> = map_qpsk::<f64>(&bits)
            .map_err(map_core)?
            .into_iter()
            .map(|s| s * out.symbol_scale)
            .collect();
        evm_acc += evm(&out.equalized, &reference).map_err(map_core)?;
    }
    let ber_total = errors as f64 / bits_total as f64;
    let evm_mean = evm_acc / cfg.trials as f64;
    println!("loopback: ber {ber_total:.3e} over {bits_total} bits, evm {evm_mean:.1} dB");
    let path = out_dir.join("loopback.csv");
    let mut csv = String::from("trials,bits,bit_errors,ber,evm_db\n");
    writeln!(
        csv,
        "{},{bits_total},{errors},{ber_total:e},{evm_mean:.4}",
        cfg.trials
    )
    .unwrap();
    write_file(&path, &csv)?;
    Ok(path)
}

/// Demodulation summary for a recorded capture.
#[derive(Debug, Clone)]
pub struct CaptureSummary {
    pub frame_start: usize,
    pub detection_metric: f64,
    pub cfo_hz: f64,
    pub ber: Option<BerReport>,
}

/// Full receive chain over a recorded IQ file: resample to the grid
/// bandwidth, detect, CFO-correct, demodulate.
///
/// Outputs `capture_map.csv`, `capture_constellation.csv`
/// (`k,l,re,im` at unit constellation scale) and `capture_metrics.csv`
/// (`frame_start,detection_metric,cfo_hz,bits,bit_errors,ber` — the BER
/// columns stay empty without reference bits).
pub fn run_demod_capture(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(CaptureSummary, PathBuf), CliError> {
    expect_mode(cfg, Mode::DemodCapture)?;
    let capture_cfg = cfg
        .capture
        .as_ref()
        .ok_or_else(|| CliError::Config("capture: section required".into()))?;
    let modem = cfg.modem_config()?;
    let layout = modem.layout();

    let capture = crate::iq::read_iq(Path::new(&capture_cfg.path))?;
    let td = crate::iq::capture_to_td(&capture);
    let resampled =
        resample(&td, capture_cfg.resample_up, capture_cfg.resample_down).map_err(map_core)?;
    let expected_rate = modem.grid.bandwidth();
    if (resampled.sample_rate - expected_rate).abs() > 1e-6 * expected_rate {
        return Err(CliError::Config(format!(
            "capture: resampled rate {} Hz does not match the grid bandwidth {} Hz \
             (set capture.resample_up/down)",
            resampled.sample_rate, expected_rate
        )));
    }

    let sync = detect_frame(&resampled, &modem.header, cfg.threshold).map_err(map_core)?;
    let cfo = estimate_cfo(&resampled, &sync, &modem.header).map_err(map_core)?;
    let corrected = correct_cfo(&resampled, cfo);
    let aligned = TdSignal64::new(
        corrected.samples[sync.frame_start..].to_vec(),
        corrected.sample_rate,
    );
    let out = rx_demodulate(&aligned, &layout, &modem, capture_cfg.noise_var).map_err(map_core)?;

    let report = match capture_cfg.data_seed {
        Some(seed) => {
            let reference = packet_bits(modem.bits_per_packet(), seed);
            Some(ber(&reference, &out.bits).map_err(map_core)?)
        }
        None => None,
    };

    write_file(
        &out_dir.join("capture_map.csv"),
        &sensing_map_csv(&out.estimate),
    )?;
    let mut constellation = String::from("k,l,re,im\n");
    let m = modem.grid.m();
    for (i, v) in out.equalized.cell().iter().enumerate() {
        let (k, l) = (i % m, i / m);
        let unit = v / out.symbol_scale;
        writeln!(constellation, "{k},{l},{:e},{:e}", unit.re, unit.im).unwrap();
    }
    write_file(&out_dir.join("capture_constellation.csv"), &constellation)?;

    let metrics_path = out_dir.join("capture_metrics.csv");
    let mut csv = String::from("frame_start,detection_metric,cfo_hz,bits,bit_errors,ber\n");
    match &report {
        Some(r) => writeln!(
            csv,
            "{},{:.6},{:.4},{},{},{:e}",
            sync.frame_start, sync.detection_metric, cfo, r.bits_total, r.bit_errors, r.ber
        )
        .unwrap(),
        None => writeln!(
            csv,
            "{},{:.6},{:.4},,,",
            sync.frame_start, sync.detection_metric, cfo
        )
        .unwrap(),
    }
    write_file(&metrics_path, &csv)?;

    let summary = CaptureSummary {
        frame_start: sync.frame_start,
        detection_metric: sync.detection_metric,
        cfo_hz: cfo,
        ber: report,
    };
    match &summary.ber {
        Some(r) => println!(
            "capture: frame at {}, cfo {:.1} Hz, ber {:.3e}",
            summary.frame_start, summary.cfo_hz, r.ber
        ),
        None => println!(
            "capture: frame at {}, cfo {:.1} Hz (no reference bits)",
            summary.frame_start, summary.cfo_hz
        ),
    }
    Ok((summary, metrics_path))
}

fn expect_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<(), CliError> {
    if cfg.mode != mode {
        return Err(CliError::Config(format!(
            "mode: config says {:?} but the {} subcommand was invoked",
            cfg.mode.as_str(),
            mode.as_str()
        )));
    }
    Ok(())
}
