//! Dev helper: synthesize an impaired IQ capture for exercising
//! demod-capture (run via `cargo run -p zakotfs-cli --example make_capture -- <path>`).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use zakotfs::{add_awgn, apply_impairments, make_grid, tx_packet, ModemConfig};
use zakotfs_cli::iq::{td_to_capture, write_iq};

fn main() {
    let path = std::env::args().nth(1).expect("output path");
    let grid = make_grid(32, 48, 30e3).unwrap();
    let cfg = ModemConfig::point(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bits: Vec<bool> = (0..cfg.bits_per_packet()).map(|_| rng.random()).collect();
    let (td, _) = tx_packet(&cfg, &bits).unwrap();
    let impaired = apply_impairments(&td, 100, 150.0, 0.4);
    let (noisy, _) = add_awgn(&impaired, 25.0, 99).unwrap();
    write_iq(
        Path::new(&path),
        &td_to_capture(&noisy, "synthetic: offset 100, CFO 150 Hz, 25 dB"),
    )
    .unwrap();
    println!("wrote {path}");
}
