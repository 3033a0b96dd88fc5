//! Acceptance suite: one test per shipping criterion, each printing a
//! pass line with the measured values (`cargo test --test acceptance --
//! --nocapture` to see them). Tolerances are pinned in code.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::Instant;

use zakotfs::{
    add_awgn, apply_dd_channel, apply_impairments, ber, build_channel_matrix, detect_frame, dzt,
    estimate_cfo, idzt, make_grid, qpsk_snr_db_for_ber, rx_demodulate, spread_pilot,
    twisted_conv_periodic, tx_packet, validate_spread_params, ChannelTap, DdPeriodicFilter,
    DdSignal, Grid64, ModemConfig, SpreadPilotSpec, SupportSet,
};
use zakotfs_cli::config::{ExperimentConfig, Mode, SnrPoint, TapConfig};
use zakotfs_cli::experiments::{run_ber_sweep, run_isac_sense, run_papr_compare};

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("zakotfs_acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn random_cell(grid: Grid64, rng: &mut ChaCha8Rng) -> DdSignal<f64> {
    let cell = (0..grid.mn())
        .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    DdSignal::from_cell(grid, cell).unwrap()
}

fn random_bits(count: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    (0..count).map(|_| rng.random::<bool>()).collect()
}

/// 1. Transform correctness: dzt(idzt(x)) = x to 1e-12 over 100 random
///    frames each for (32,48), (31,37), (5,7). Runtime < 5 s.
#[test]
fn acceptance_01_transform_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut worst = 0.0f64;
    for &(m, n) in &[(32usize, 48usize), (31, 37), (5, 7)] {
        let grid = make_grid(m, n, 30e3).unwrap();
        for _ in 0..100 {
            let x = random_cell(grid, &mut rng);
            let back = dzt(&idzt(&x), &grid).unwrap();
            let err = x
                .cell()
                .iter()
                .zip(back.cell())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-12, "worst round-trip error {worst:e}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("[PASS] criterion 1: round-trip max error {worst:.2e} (limit 1e-12), {elapsed:?}");
}

/// 2. Twisted-convolution oracle equivalence on (5,7): both the periodic
///    convolution and the channel-matrix action agree with independent
///    brute-force double sums, <= 1e-10 over 50 random cases. Runtime < 10 s.
#[test]
fn acceptance_02_twisted_convolution_oracle() {
    let start = Instant::now();
    let grid = make_grid(5, 7, 1.0).unwrap();
    let (m, n, mn) = (5i64, 7i64, 35i64);
    let tau = 2.0 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);

    // Independent quasi-periodic extension, written out from the defining
    // phase rule.
    let qext = |x: &DdSignal<f64>, k: i64, l: i64| -> Complex<f64> {
        let ck = k.rem_euclid(m);
        let cl = l.rem_euclid(n);
        let periods = (k - ck) / m;
        x.at(ck as usize, cl as usize)
            * Complex::from_polar(1.0, tau * periods as f64 * cl as f64 / n as f64)
    };

    let mut worst_conv = 0.0f64;
    let mut worst_matrix = 0.0f64;
    for _ in 0..50 {
        // (a) MN-periodic filter convolution against the full double sum.
        let w = DdPeriodicFilter::from_fn(grid, |_, _| {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let x = random_cell(grid, &mut rng);
        let z = twisted_conv_periodic(&w, &x).unwrap();
        for l in 0..n {
            for k in 0..m {
                let mut acc = Complex::new(0.0, 0.0);
                for lp in 0..mn {
                    for kp in 0..mn {
                        let wv = w.values()[(kp + mn * lp) as usize];
                        acc += wv
                            * qext(&x, k - kp, l - lp)
                            * Complex::from_polar(1.0, tau * (lp * (k - kp)) as f64 / mn as f64);
                    }
                }
                worst_conv = worst_conv.max((z.at(k as usize, l as usize) - acc).norm());
            }
        }

        // (b) Channel matrix against the brute-force support sum.
        let support = SupportSet::centered(2, 1);
        let values: Vec<Complex<f64>> = (0..support.len())
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let est = zakotfs::DdChannelEstimate::from_values(grid, support, values).unwrap();
        let hm = build_channel_matrix(&est);
        let x = random_cell(grid, &mut rng);
        let hx = hm.matvec(&x).unwrap();
        for l in 0..n {
            for k in 0..m {
                let mut acc = Complex::new(0.0, 0.0);
                for ((ks, ls), hv) in est.iter() {
                    acc += hv
                        * qext(&x, k - ks, l - ls)
                        * Complex::from_polar(1.0, tau * (ls * (k - ks)) as f64 / mn as f64);
                }
                worst_matrix = worst_matrix.max((hx.at(k as usize, l as usize) - acc).norm());
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_conv <= 1e-10, "twisted conv error {worst_conv:e}");
    assert!(
        worst_matrix <= 1e-10,
        "channel matrix error {worst_matrix:e}"
    );
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 2: oracle deviations conv {worst_conv:.2e}, matrix {worst_matrix:.2e} \
         (limit 1e-10), {elapsed:?}"
    );
}

/// 3. Loopback: zero-noise identity-channel BER = 0 for both pilot modes
///    at the default system parameters. Runtime < 10 s.
#[test]
fn acceptance_03_loopback_both_modes() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);

    let point = ModemConfig::point(make_grid(32, 48, 30e3).unwrap());
    let bits = random_bits(point.bits_per_packet(), &mut rng);
    let (td, layout) = tx_packet(&point, &bits).unwrap();
    let out = rx_demodulate(&td, &layout, &point, 0.0).unwrap();
    let point_ber = ber(&bits, &out.bits).unwrap().ber;

    let spread = ModemConfig::spread(make_grid(31, 37, 30e3).unwrap(), 5);
    let bits2 = random_bits(spread.bits_per_packet(), &mut rng);
    let (td2, layout2) = tx_packet(&spread, &bits2).unwrap();
    let out2 = rx_demodulate(&td2, &layout2, &spread, 0.0).unwrap();
    let spread_ber = ber(&bits2, &out2.bits).unwrap().ber;

    let elapsed = start.elapsed();
    assert_eq!(point_ber, 0.0, "point-pilot loopback BER");
    assert_eq!(spread_ber, 0.0, "spread-pilot loopback BER");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 3: loopback BER point {point_ber}, spread {spread_ber} \
         (both exactly 0), {elapsed:?}"
    );
}

/// 4. Channel estimation: 20 random single integer-bin taps at zero
///    noise — the estimate lands within 2% of the complex gain and other
///    support lags sit >= 20 dB below the peak. Runtime < 30 s.
#[test]
fn acceptance_04_channel_estimation_accuracy() {
    let start = Instant::now();
    let grid = make_grid(32, 48, 30e3).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC4);
    let mut worst_rel = 0.0f64;
    let mut worst_leak_db = f64::INFINITY;
    for trial in 0..20 {
        let k0 = (rng.random::<u32>() % 7) as i64; // delays 0..=6 (physical)
        let l0 = (rng.random::<u32>() % 5) as i64 - 2; // dopplers -2..=2
        let mag = 0.3 + 0.9 * rng.random::<f64>();
        let phase = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let gain = Complex::from_polar(mag, phase);
        let taps = [ChannelTap::at_bins(&grid, k0 as u32, l0 as i32, gain)];

        let bits = random_bits(cfg.bits_per_packet(), &mut rng);
        let (td, layout) = tx_packet(&cfg, &bits).unwrap();
        let rx = apply_dd_channel(&td, &taps).unwrap().td;
        let out = rx_demodulate(&rx, &layout, &cfg, 0.0).unwrap();

        let est = out.estimate.get(k0, l0);
        let rel = (est - gain).norm() / gain.norm();
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 0.02,
            "trial {trial}: tap ({k0},{l0}) gain {gain} estimated {est} ({rel:.3} rel)"
        );
        let peak = est.norm();
        for ((k, l), v) in out.estimate.iter() {
            if (k, l) != (k0, l0) && v.norm() > 0.0 {
                let leak_db = 20.0 * (peak / v.norm()).log10();
                worst_leak_db = worst_leak_db.min(leak_db);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        worst_leak_db >= 20.0,
        "off-peak leakage only {worst_leak_db:.1} dB below peak"
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 4: worst gain error {:.3}% (limit 2%), \
         off-peak leakage >= {worst_leak_db:.0} dB below peak, {elapsed:?}",
        100.0 * worst_rel
    );
}

/// 5. AWGN BER envelope: the simulated point-pilot link over the identity
///    channel matches the analytic uncoded-QPSK curve within 0.5 dB at
///    BER 1e-2 and 1e-3 with >= 1e6 bits per point. Runtime < 5 min.
#[test]
fn acceptance_05_awgn_ber_envelope() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default_for(Mode::BerSweep);
    // 326 packets x 3072 bits/packet > 1e6 bits per SNR point.
    cfg.trials = 326;
    let targets = [1e-2f64, 1e-3];
    cfg.channel.snr_db = targets
        .iter()
        .map(|&b| SnrPoint::Db((qpsk_snr_db_for_ber(b) * 100.0).round() / 100.0))
        .collect();
    let dir = work_dir("awgn_envelope");
    let path = run_ber_sweep(&cfg, &dir).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut offsets = Vec::new();
    for (line, &target) in csv.lines().skip(1).zip(&targets) {
        let fields: Vec<&str> = line.split(',').collect();
        let snr_db: f64 = fields[0].parse().unwrap();
        let measured: f64 = fields[2].parse().unwrap();
        let bits = 326 * 3072;
        assert!(bits >= 1_000_000);
        let equivalent_snr = qpsk_snr_db_for_ber(measured);
        let offset = (snr_db - equivalent_snr).abs();
        assert!(
            offset <= 0.5,
            "at analytic BER {target:e}: measured {measured:e} at {snr_db} dB \
             is {offset:.2} dB off the analytic curve"
        );
        offsets.push(offset);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 5: curve offsets {:.3} / {:.3} dB at BER 1e-2 / 1e-3 \
         (limit 0.5 dB), {elapsed:?}",
        offsets[0], offsets[1]
    );
}

/// 6. PAPR reproduction at oversample 4: pilot-only point minus spread
///    >= 8 dB; full-frame improvement >= 3 dB. Runtime < 30 s.
#[test]
fn acceptance_06_papr_reproduction() {
    let start = Instant::now();
    let cfg = ExperimentConfig::default_for(Mode::Papr);
    let dir = work_dir("papr");
    let path = run_papr_compare(&cfg, &dir).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut pilot_improvement = f64::NAN;
    let mut frame_improvement = f64::NAN;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "improvement" {
            let v: f64 = fields[2].parse().unwrap();
            match fields[1] {
                "pilot" => pilot_improvement = v,
                "frame" => frame_improvement = v,
                _ => {}
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        pilot_improvement >= 8.0,
        "pilot-only improvement {pilot_improvement:.2} dB < 8 dB"
    );
    assert!(
        frame_improvement >= 3.0,
        "full-frame improvement {frame_improvement:.2} dB < 3 dB"
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: PAPR improvement pilot {pilot_improvement:.2} dB (>= 8), \
         frame {frame_improvement:.2} dB (>= 3), {elapsed:?}"
    );
}

/// 7. ISAC: at 20 dB the sensing map shows the injected taps as dominant
///    peaks (>= 10 dB over spurious) with post-cancellation BER <= 0.05;
///    at zero noise the BER is exactly 0. Runtime < 1 min.
#[test]
fn acceptance_07_isac_sensing_and_recovery() {
    let start = Instant::now();
    // Two-tap channel at 20 dB.
    let mut cfg = ExperimentConfig::default_for(Mode::IsacSense);
    cfg.trials = 10;
    cfg.channel.taps = vec![
        TapConfig::bins(0, 0, 1.0, 0.0),
        TapConfig::bins(3, 1, 0.45, 0.45),
    ];
    cfg.channel.snr_db = vec![SnrPoint::Db(20.0)];
    let dir = work_dir("isac");
    let (_, metrics) = run_isac_sense(&cfg, &dir).unwrap();
    let csv = std::fs::read_to_string(&metrics).unwrap();
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let ber_20db: f64 = fields[4].parse().unwrap();
    let peak_to_spurious: f64 = fields[5].parse().unwrap();
    assert!(ber_20db <= 0.05, "ISAC BER {ber_20db} at 20 dB");
    assert!(
        peak_to_spurious >= 10.0,
        "peak-to-spurious {peak_to_spurious:.1} dB"
    );

    // Zero-noise identity channel decodes perfectly.
    let mut clean = ExperimentConfig::default_for(Mode::IsacSense);
    clean.trials = 3;
    clean.channel.snr_db = vec![SnrPoint::Tag("inf".into())];
    let dir2 = work_dir("isac_clean");
    let (_, metrics2) = run_isac_sense(&clean, &dir2).unwrap();
    let csv2 = std::fs::read_to_string(&metrics2).unwrap();
    let ber_clean: f64 = csv2
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(ber_clean, 0.0, "zero-noise ISAC BER");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 7: ISAC BER {ber_20db:.2e} at 20 dB (<= 0.05), \
         peak-to-spurious {peak_to_spurious:.1} dB (>= 10), zero-noise BER {ber_clean}, {elapsed:?}"
    );
}

/// 8. Sync/CFO: injected integer timing offsets recovered exactly and
///    injected CFO recovered within 1% of the Doppler period (median over
///    100 trials) at 20 dB SNR. Runtime < 1 min.
#[test]
fn acceptance_08_sync_and_cfo_recovery() {
    let start = Instant::now();
    let grid = make_grid(32, 48, 30e3).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC8);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, _) = tx_packet(&cfg, &bits).unwrap();
    let mut cfo_errors = Vec::new();
    let mut timing_exact = 0usize;
    let trials = 100;
    for trial in 0..trials {
        let offset = 16 + (rng.random::<u32>() % 900) as usize;
        let cfo_true = -600.0 + 1200.0 * rng.random::<f64>();
        let impaired = apply_impairments(&td, offset, cfo_true, rng.random::<f64>());
        let (noisy, _) = add_awgn(&impaired, 20.0, 0xACC8_0000 + trial as u64).unwrap();
        let sync = detect_frame(&noisy, &cfg.header, 0.6).unwrap();
        if sync.frame_start == offset {
            timing_exact += 1;
        }
        let cfo = estimate_cfo(&noisy, &sync, &cfg.header).unwrap();
        cfo_errors.push((cfo - cfo_true).abs());
    }
    cfo_errors.sort_by(f64::total_cmp);
    let median = cfo_errors[trials / 2];
    let elapsed = start.elapsed();
    assert_eq!(timing_exact, trials, "timing offsets recovered exactly");
    assert!(
        median <= 0.01 * 30e3,
        "median CFO error {median:.1} Hz exceeds 1% of nu_p"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 8: {timing_exact}/{trials} exact timings, median CFO error \
         {median:.2} Hz (limit 300 Hz), {elapsed:?}"
    );
}

/// 9. Reproducibility: the same config and seed produce bit-identical CSV
///    output on rerun.
#[test]
fn acceptance_09_reproducibility() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default_for(Mode::BerSweep);
    cfg.trials = 10;
    cfg.channel.snr_db = vec![SnrPoint::Db(6.0), SnrPoint::Db(12.0)];
    cfg.seed = 77;
    let d1 = work_dir("repro_1");
    let d2 = work_dir("repro_2");
    let b1 = std::fs::read(run_ber_sweep(&cfg, &d1).unwrap()).unwrap();
    let b2 = std::fs::read(run_ber_sweep(&cfg, &d2).unwrap()).unwrap();
    assert_eq!(b1, b2);

    let mut isac = ExperimentConfig::default_for(Mode::IsacSense);
    isac.trials = 2;
    let d3 = work_dir("repro_3");
    let d4 = work_dir("repro_4");
    let (m1, s1) = run_isac_sense(&isac, &d3).unwrap();
    let (m2, s2) = run_isac_sense(&isac, &d4).unwrap();
    assert_eq!(std::fs::read(m1).unwrap(), std::fs::read(m2).unwrap());
    assert_eq!(std::fs::read(s1).unwrap(), std::fs::read(s2).unwrap());
    let elapsed = start.elapsed();
    println!("[PASS] criterion 9: reruns bit-identical for ber-sweep and isac-sense, {elapsed:?}");
}

/// 10. Spread-pilot constraints: (31,37,5) accepted; non-prime or
///     non-coprime triples rejected; the spread pilot is unit-energy to
///     1e-12.
#[test]
fn acceptance_10_spread_pilot_constraints() {
    let start = Instant::now();
    assert!(validate_spread_params(31, 37, 5).is_ok());
    assert!(validate_spread_params(32, 48, 5).is_err());
    assert!(validate_spread_params(31, 37, 31).is_err());
    assert!(validate_spread_params(31, 37, 37).is_err());
    assert!(validate_spread_params(9, 37, 2).is_err());

    let grid = make_grid(31, 37, 30e3f64).unwrap();
    let pilot = spread_pilot(&grid, &SpreadPilotSpec::centered(&grid, 5, 1.0)).unwrap();
    let energy_err = (pilot.energy() - 1.0).abs();
    assert!(energy_err <= 1e-12, "unit-energy deviation {energy_err:e}");
    let elapsed = start.elapsed();
    println!(
        "[PASS] criterion 10: constraints enforced, spread-pilot energy error \
         {energy_err:.2e} (limit 1e-12), {elapsed:?}"
    );
}

/// Companion check to criterion 5: the analytic reference values the
/// envelope is measured against.
#[test]
fn acceptance_reference_curve_sanity() {
    let snr1 = qpsk_snr_db_for_ber(1e-2);
    let snr2 = qpsk_snr_db_for_ber(1e-3);
    assert!((snr1 - 7.33).abs() < 0.05, "snr@1e-2 {snr1}");
    assert!((snr2 - 9.80).abs() < 0.05, "snr@1e-3 {snr2}");
}
