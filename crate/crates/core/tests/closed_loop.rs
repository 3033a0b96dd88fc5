//! End-to-end chains: packet through impairments and channel, timing/CFO
//! recovery, demodulation, and consistency between the cross-ambiguity
//! estimate and the operational channel oracle.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zakotfs::{
    add_awgn, apply_dd_channel, apply_impairments, ber, correct_cfo, detect_frame,
    effective_channel_oracle, estimate_cfo, evm, make_grid, map_qpsk, rx_demodulate, tx_packet,
    ChannelTap, ModemConfig, TdSignal,
};

fn random_bits(count: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    (0..count).map(|_| rng.random::<bool>()).collect()
}

#[test]
fn timing_offset_recovered_exactly_noiseless() {
    let grid = make_grid(32, 48, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, _) = tx_packet(&cfg, &bits).unwrap();
    let rx = apply_impairments(&td, 100, 0.0, 0.0);
    let sync = detect_frame(&rx, &cfg.header, 0.6).unwrap();
    assert_eq!(sync.frame_start, 100);
}

#[test]
fn cfo_recovered_closed_loop_noiseless() {
    let grid = make_grid(32, 48, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, _) = tx_packet(&cfg, &bits).unwrap();
    let rx = apply_impairments(&td, 64, 200.0, 0.3);
    let sync = detect_frame(&rx, &cfg.header, 0.6).unwrap();
    assert_eq!(sync.frame_start, 64);
    let cfo = estimate_cfo(&rx, &sync, &cfg.header).unwrap();
    assert!((cfo - 200.0).abs() < 2.0, "CFO estimate {cfo} Hz");
    // Residual after correction stays below 1% of the Doppler period.
    let corrected = correct_cfo(&rx, cfo);
    let sync2 = detect_frame(&corrected, &cfg.header, 0.6).unwrap();
    let residual = estimate_cfo(&corrected, &sync2, &cfg.header).unwrap();
    assert!(residual.abs() < 0.01 * 30e3);
}

#[test]
fn full_chain_with_impairments_and_noise_decodes() {
    let grid = make_grid(32, 48, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, layout) = tx_packet(&cfg, &bits).unwrap();
    let impaired = apply_impairments(&td, 150, 150.0, 1.0);
    let (noisy, noise_var) = add_awgn(&impaired, 25.0, 7).unwrap();
    let sync = detect_frame(&noisy, &cfg.header, 0.6).unwrap();
    assert_eq!(sync.frame_start, 150);
    let cfo = estimate_cfo(&noisy, &sync, &cfg.header).unwrap();
    let corrected = correct_cfo(&noisy, cfo);
    let packet = TdSignal::new(
        corrected.samples[sync.frame_start..].to_vec(),
        corrected.sample_rate,
    );
    let out = rx_demodulate(&packet, &layout, &cfg, noise_var).unwrap();
    let report = ber(&bits, &out.bits).unwrap();
    assert!(report.ber <= 1e-3, "BER {} at 25 dB", report.ber);
}

#[test]
fn cfo_median_error_under_one_percent_at_20db() {
    let grid = make_grid(32, 48, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, _) = tx_packet(&cfg, &bits).unwrap();
    let mut errors = Vec::new();
    for trial in 0..100u64 {
        let cfo_true = -400.0 + 8.0 * trial as f64;
        let impaired = apply_impairments(&td, 37, cfo_true, 0.1 * trial as f64);
        let (noisy, _) = add_awgn(&impaired, 20.0, 1000 + trial).unwrap();
        let sync = detect_frame(&noisy, &cfg.header, 0.6).unwrap();
        assert_eq!(sync.frame_start, 37, "trial {trial}");
        let cfo = estimate_cfo(&noisy, &sync, &cfg.header).unwrap();
        errors.push((cfo - cfo_true).abs());
    }
    errors.sort_by(f64::total_cmp);
    let median = errors[errors.len() / 2];
    assert!(median <= 0.01 * 30e3, "median CFO error {median} Hz");
}

#[test]
fn estimate_matches_channel_oracle_with_multiple_taps() {
    let grid = make_grid(32, 48, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, layout) = tx_packet(&cfg, &bits).unwrap();
    let taps = [
        ChannelTap::at_bins(&grid, 0, 0, Complex::new(1.0, 0.0)),
        ChannelTap::at_bins(&grid, 3, 1, Complex::new(-0.3, 0.4)),
        ChannelTap::at_bins(&grid, 5, -2, Complex::new(0.2, 0.2)),
    ];
    let rx = apply_dd_channel(&td, &taps).unwrap().td;
    let out = rx_demodulate(&rx, &layout, &cfg, 0.0).unwrap();
    let oracle = effective_channel_oracle(&taps, &grid, cfg.support).unwrap();
    let peak = oracle.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    for ((k, l), v) in oracle.iter() {
        let est = out.estimate.get(k, l);
        assert!(
            (est - v).norm() <= 0.02 * peak,
            "lag ({k},{l}): estimate {est} vs oracle {v}"
        );
    }
    assert_eq!(ber(&bits, &out.bits).unwrap().ber, 0.0);
}

#[test]
fn equalized_evm_decreases_with_snr() {
    let grid = make_grid(16, 12, 30e3f64).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let snrs = [0.0, 10.0, 20.0, 30.0];
    let mut evms = Vec::new();
    for (i, &snr) in snrs.iter().enumerate() {
        let mut acc = 0.0;
        let frames = 50;
        for t in 0..frames {
            let bits = random_bits(cfg.bits_per_packet(), &mut rng);
            let (td, layout) = tx_packet(&cfg, &bits).unwrap();
            let (noisy, noise_var) = add_awgn(&td, snr, (i * frames + t) as u64 + 5000).unwrap();
            let out = rx_demodulate(&noisy, &layout, &cfg, noise_var).unwrap();
            let reference: Vec<Complex<f64>> = map_qpsk::<f64>(&bits)
                .unwrap()
                .into_iter()
                .map(|s| s * out.symbol_scale)
                .collect();
            acc += evm(&out.equalized, &reference).unwrap();
        }
        evms.push(acc / frames as f64);
    }
    for w in evms.windows(2) {
        assert!(w[1] < w[0], "EVM did not decrease with SNR: {evms:?} dB");
    }
}

#[test]
fn spread_mode_full_chain_at_20db() {
    let grid = make_grid(31, 37, 30e3f64).unwrap();
    let cfg = ModemConfig::spread(grid, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, layout) = tx_packet(&cfg, &bits).unwrap();
    let (noisy, noise_var) = add_awgn(&td, 20.0, 17).unwrap();
    let out = rx_demodulate(&noisy, &layout, &cfg, noise_var).unwrap();
    let report = ber(&bits, &out.bits).unwrap();
    assert!(report.ber <= 0.05, "ISAC BER {} at 20 dB", report.ber);
    let ((k, l), _) = out.estimate.peak();
    assert_eq!((k, l), (0, 0));
}

#[test]
fn modem_works_in_f32() {
    let grid = make_grid(16, 12, 30e3f32).unwrap();
    let cfg = ModemConfig::<f32>::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let bits = random_bits(cfg.bits_per_packet(), &mut rng);
    let (td, layout) = tx_packet(&cfg, &bits).unwrap();
    let out = rx_demodulate(&td, &layout, &cfg, 0.0).unwrap();
    assert_eq!(ber(&bits, &out.bits).unwrap().ber, 0.0);
}
