//! Zak-OTFS delay-Doppler modem library.
//!
//! Implements the full baseband chain for delay-Doppler modulation with
//! point and spread (chirp) pilots: the discrete Zak transform pair,
//! MN-periodic twisted convolution, cross-ambiguity channel prediction,
//! MMSE equalization, Zadoff-Chu packet framing with CFO recovery, a
//! simulated sparse delay-Doppler channel, and BER/PAPR/EVM metrics.
//!
//! All signal math is generic over the real scalar type (`f32`/`f64`)
//! through the [`Scalar`] trait; concrete `f64` aliases are exported at
//! the crate root for everyday use.

// The negated float comparisons below are deliberate: `!(x > 0)` also
// rejects NaN, which `x <= 0` lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod framing;
pub mod grid;
pub mod metrics;
pub mod modem;
mod num;
pub mod pilot;
pub mod resample;
pub mod signal;
pub mod transform;
pub mod twisted;

pub use ambiguity::{apply_dd_filter, apply_dd_filter_adjoint, cross_ambiguity, DdChannelEstimate};
pub use channel::{
    add_awgn, apply_dd_channel, apply_impairments, effective_channel_oracle, validate_taps,
    ChannelApplied, ChannelTap,
};
pub use error::{Error, Result};
pub use estimation::{build_channel_matrix, mmse_equalize, mmse_equalize_cg, ChannelMatrix};
pub use framing::{
    build_header, correct_cfo, detect_frame, estimate_cfo, zc_sequence, HeaderSpec, SyncResult,
    ZcSegment,
};
pub use grid::{make_grid, DdGridParams};
pub use metrics::{
    ber, erfc, evm, papr, qpsk_ber_awgn, qpsk_snr_db_for_ber, BerReport, PaprReport,
};
pub use modem::{
    cancel_pilot, demap_qpsk, map_qpsk, rx_demodulate, tx_packet, tx_point_pilot_packet,
    tx_spread_pilot_packet, EqualizerKind, FrameRole, ModemConfig, PacketLayout, PilotMode,
    RxOutput,
};
pub use num::Scalar;
pub use pilot::{
    chirp_filter, point_pilot, spread_pilot, validate_spread_params, PointPilotSpec,
    SpreadPilotSpec, SpreadViolation,
};
pub use resample::resample;
pub use signal::{DdSignal, SupportSet, TdSignal};
pub use transform::{dzt, idzt, oversampled_td};
pub use twisted::{compose_filters, twisted_conv_periodic, DdPeriodicFilter};

/// Complex sample type used throughout.
pub type Cplx<T> = num_complex::Complex<T>;

// Concrete f64 aliases; the CLI and most tests work in f64.
pub type Grid64 = DdGridParams<f64>;
pub type DdSignal64 = DdSignal<f64>;
pub type TdSignal64 = TdSignal<f64>;
pub type DdChannelEstimate64 = DdChannelEstimate<f64>;
pub type DdPeriodicFilter64 = DdPeriodicFilter<f64>;
pub type Cplx64 = num_complex::Complex<f64>;
