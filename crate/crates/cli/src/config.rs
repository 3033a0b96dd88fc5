//! Experiment configuration: one human-readable JSON document per run,
//! with dotted-path command-line overrides. Validation rejects bad
//! parameters with field-level messages before anything executes.

use serde::{Deserialize, Serialize};
use std::path::Path;

use zakotfs::{
    make_grid, validate_spread_params, ChannelTap, Cplx64, EqualizerKind, Grid64, HeaderSpec,
    ModemConfig, PilotMode, PointPilotSpec, SpreadPilotSpec, SupportSet, ZcSegment,
};

use crate::CliError;

/// Experiment flavor; selects which runner consumes the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BerSweep,
    Papr,
    IsacSense,
    Loopback,
    DemodCapture,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::BerSweep => "ber-sweep",
            Mode::Papr => "papr",
            Mode::IsacSense => "isac-sense",
            Mode::Loopback => "loopback",
            Mode::DemodCapture => "demod-capture",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub m: usize,
    pub n: usize,
    pub nu_p_hz: f64,
}

impl GridConfig {
    pub fn build(&self, field: &str) -> Result<Grid64, CliError> {
        make_grid(self.m, self.n, self.nu_p_hz)
            .map_err(|e| CliError::Config(format!("{field}: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PilotConfig {
    Point {
        /// Defaults to mid-grid placement when omitted.
        #[serde(default)]
        k_p: Option<usize>,
        #[serde(default)]
        l_p: Option<usize>,
    },
    Spread {
        slope_u: i64,
        #[serde(default)]
        k_p: Option<usize>,
        #[serde(default)]
        l_p: Option<usize>,
        /// Pilot-to-data power ratio for the ISAC frame, in dB.
        #[serde(default)]
        pilot_to_data_db: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportConfig {
    pub delay_max: u32,
    pub doppler_max: u32,
}

impl Default for SupportConfig {
    fn default() -> Self {
        Self {
            delay_max: 6,
            doppler_max: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub root: u32,
    pub length: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeaderConfig {
    pub segments: Vec<SegmentConfig>,
    #[serde(default)]
    pub gap: usize,
}

impl Default for HeaderConfig {
    fn default() -> Self {
        Self {
            segments: vec![
                SegmentConfig {
                    root: 1,
                    length: 139,
                },
                SegmentConfig {
                    root: 1,
                    length: 167,
                },
                SegmentConfig {
                    root: 1,
                    length: 199,
                },
            ],
            gap: 0,
        }
    }
}

fn default_equalizer() -> String {
    "iterative".into()
}

fn default_estimate_threshold() -> f64 {
    0.2
}

fn default_data_energy() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModemSection {
    pub pilot: PilotConfig,
    #[serde(default = "default_data_energy")]
    pub data_energy_per_symbol: f64,
    #[serde(default)]
    pub support: SupportConfig,
    #[serde(default)]
    pub header: HeaderConfig,
    /// "dense" or "iterative".
    #[serde(default = "default_equalizer")]
    pub equalizer: String,
    #[serde(default = "default_estimate_threshold")]
    pub estimate_threshold: f64,
}

/// One channel tap; give delay/Doppler either in grid bins or in physical
/// units (exactly one of each pair).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapConfig {
    pub gain_re: f64,
    pub gain_im: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_bins: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler_bins: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler_hz: Option<f64>,
}

impl TapConfig {
    pub fn bins(delay_bins: u32, doppler_bins: i32, gain_re: f64, gain_im: f64) -> Self {
        Self {
            gain_re,
            gain_im,
            delay_bins: Some(delay_bins),
            delay_s: None,
            doppler_bins: Some(doppler_bins),
            doppler_hz: None,
        }
    }

    fn build(&self, grid: &Grid64, idx: usize) -> Result<ChannelTap<f64>, CliError> {
        let delay = match (self.delay_bins, self.delay_s) {
            (Some(bins), None) => bins as f64 / grid.bandwidth(),
            (None, Some(s)) => s,
            _ => {
                return Err(CliError::Config(format!(
                    "channel.taps[{idx}]: give exactly one of delay_bins / delay_s"
                )))
            }
        };
        let doppler = match (self.doppler_bins, self.doppler_hz) {
            (Some(bins), None) => bins as f64 / grid.duration(),
            (None, Some(hz)) => hz,
            _ => {
                return Err(CliError::Config(format!(
                    "channel.taps[{idx}]: give exactly one of doppler_bins / doppler_hz"
                )))
            }
        };
        if delay < 0.0 {
            return Err(CliError::Config(format!(
                "channel.taps[{idx}]: delay must be non-negative"
            )));
        }
        Ok(ChannelTap {
            gain: Cplx64::new(self.gain_re, self.gain_im),
            delay,
            doppler,
        })
    }
}

/// SNR point: a number in dB or the string "inf" for a noiseless run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrPoint {
    Db(f64),
    Tag(String),
}

impl SnrPoint {
    pub fn value(&self, idx: usize) -> Result<f64, CliError> {
        match self {
            SnrPoint::Db(v) => Ok(*v),
            SnrPoint::Tag(s) if s == "inf" => Ok(f64::INFINITY),
            SnrPoint::Tag(s) => Err(CliError::Config(format!(
                "channel.snr_db[{idx}]: unknown tag {s:?} (use a number or \"inf\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSection {
    #[serde(default)]
    pub taps: Vec<TapConfig>,
    #[serde(default)]
    pub snr_db: Vec<SnrPoint>,
    #[serde(default)]
    pub timing_offset: usize,
    #[serde(default)]
    pub cfo_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaprSection {
    pub point_grid: GridConfig,
    pub spread_grid: GridConfig,
    pub slope_u: i64,
    #[serde(default)]
    pub include_header: bool,
}

impl Default for PaprSection {
    fn default() -> Self {
        Self {
            point_grid: GridConfig {
                m: 32,
                n: 48,
                nu_p_hz: 30e3,
            },
            spread_grid: GridConfig {
                m: 31,
                n: 37,
                nu_p_hz: 30e3,
            },
            slope_u: 5,
            include_header: false,
        }
    }
}

fn default_capture_noise_var() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptureSection {
    pub path: String,
    #[serde(default = "one")]
    pub resample_up: usize,
    #[serde(default = "one")]
    pub resample_down: usize,
    /// MMSE regularizer for recorded IQ, where no simulator reports the
    /// true noise variance.
    #[serde(default = "default_capture_noise_var")]
    pub noise_var: f64,
    /// When present, reference bits are regenerated from this seed and a
    /// BER is reported; otherwise demodulation is blind.
    #[serde(default)]
    pub data_seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn default_trials() -> usize {
    100
}

fn default_oversample() -> usize {
    4
}

fn default_threshold() -> f64 {
    0.6
}

/// Top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub grid: GridConfig,
    pub modem: ModemSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub papr: Option<PaprSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<CaptureSection>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            taps: Vec::new(),
            snr_db: Vec::new(),
            timing_offset: 0,
            cfo_hz: 0.0,
            phase_rad: 0.0,
        }
    }
}

impl ExperimentConfig {
    /// Default document for one experiment mode (what `gen-config` emits).
    pub fn default_for(mode: Mode) -> Self {
        let (grid, pilot) = match mode {
            Mode::IsacSense => (
                GridConfig {
                    m: 31,
                    n: 37,
                    nu_p_hz: 30e3,
                },
                PilotConfig::Spread {
                    slope_u: 5,
                    k_p: None,
                    l_p: None,
                    pilot_to_data_db: 0.0,
                },
            ),
            _ => (
                GridConfig {
                    m: 32,
                    n: 48,
                    nu_p_hz: 30e3,
                },
                PilotConfig::Point {
                    k_p: None,
                    l_p: None,
                },
            ),
        };
        let snr_db = match mode {
            Mode::BerSweep => vec![
                SnrPoint::Db(4.0),
                SnrPoint::Db(6.0),
                SnrPoint::Db(8.0),
                SnrPoint::Db(10.0),
                SnrPoint::Db(12.0),
            ],
            Mode::IsacSense => vec![SnrPoint::Db(20.0)],
            _ => Vec::new(),
        };
        Self {
            mode,
            grid,
            modem: ModemSection {
                pilot,
                data_energy_per_symbol: 1.0,
                support: SupportConfig::default(),
                header: HeaderConfig::default(),
                equalizer: default_equalizer(),
                estimate_threshold: default_estimate_threshold(),
            },
            channel: ChannelSection {
                snr_db,
                ..ChannelSection::default()
            },
            trials: match mode {
                Mode::BerSweep => 100,
                _ => 10,
            },
            seed: 1,
            oversample: 4,
            threshold: 0.6,
            papr: matches!(mode, Mode::Papr).then(PaprSection::default),
            capture: matches!(mode, Mode::DemodCapture).then(|| CaptureSection {
                path: "capture.iq".into(),
                resample_up: 1,
                resample_down: 1,
                noise_var: default_capture_noise_var(),
                data_seed: Some(1),
            }),
        }
    }

    /// Load from a JSON file, then apply `--set dotted.key=value`
    /// overrides.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.build("grid")?;
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be >= 1".into()));
        }
        if self.oversample == 0 {
            return Err(CliError::Config("oversample: must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CliError::Config("threshold: must lie in [0, 1]".into()));
        }
        match self.mode {
            Mode::BerSweep | Mode::IsacSense => {
                if self.channel.snr_db.is_empty() {
                    return Err(CliError::Config(
                        "channel.snr_db: at least one SNR point required".into(),
                    ));
                }
            }
            Mode::Papr => {
                let papr = self
                    .papr
                    .as_ref()
                    .ok_or_else(|| CliError::Config("papr: section required".into()))?;
                papr.point_grid.build("papr.point_grid")?;
                let sg = papr.spread_grid.build("papr.spread_grid")?;
                validate_spread_params(sg.m(), sg.n(), papr.slope_u)
                    .map_err(|v| CliError::Config(format!("papr: {v}")))?;
            }
            Mode::DemodCapture => {
                if self.capture.is_none() {
                    return Err(CliError::Config("capture: section required".into()));
                }
            }
            Mode::Loopback => {}
        }
        if matches!(self.mode, Mode::IsacSense)
            && !matches!(self.modem.pilot, PilotConfig::Spread { .. })
        {
            return Err(CliError::Config(
                "modem.pilot: isac-sense requires the spread pilot".into(),
            ));
        }
        for (i, p) in self.channel.snr_db.iter().enumerate() {
            p.value(i)?;
        }
        // Building the modem config runs the grid/pilot/header checks.
        self.modem_config()?;
        let grid = self.grid.build("grid")?;
        for (i, t) in self.channel.taps.iter().enumerate() {
            t.build(&grid, i)?;
        }
        Ok(())
    }

    /// Materialize the library-level modem configuration.
    pub fn modem_config(&self) -> Result<ModemConfig<f64>, CliError> {
        let grid = self.grid.build("grid")?;
        let e_s = self.modem.data_energy_per_symbol;
        if e_s < 0.0 {
            return Err(CliError::Config(
                "modem.data_energy_per_symbol: must be non-negative".into(),
            ));
        }
        let pilot = match &self.modem.pilot {
            PilotConfig::Point { k_p, l_p } => {
                let mut spec = PointPilotSpec::centered(&grid, grid.mn() as f64 * e_s.max(1e-12));
                if let Some(k) = k_p {
                    spec.k_p = *k;
                }
                if let Some(l) = l_p {
                    spec.l_p = *l;
                }
                PilotMode::Point(spec)
            }
            PilotConfig::Spread {
                slope_u,
                k_p,
                l_p,
                pilot_to_data_db,
            } => {
                validate_spread_params(grid.m(), grid.n(), *slope_u)
                    .map_err(|v| CliError::Config(format!("modem.pilot: {v}")))?;
                let ratio = 10f64.powf(pilot_to_data_db / 10.0);
                let energy = grid.mn() as f64 * e_s.max(1e-12) * ratio;
                let mut spec = SpreadPilotSpec::centered(&grid, *slope_u, energy);
                if let Some(k) = k_p {
                    spec.k_p = *k;
                }
                if let Some(l) = l_p {
                    spec.l_p = *l;
                }
                PilotMode::Spread(spec)
            }
        };
        let equalizer = match self.modem.equalizer.as_str() {
            "dense" => EqualizerKind::Dense,
            "iterative" => EqualizerKind::Iterative,
            other => {
                return Err(CliError::Config(format!(
                    "modem.equalizer: unknown solver {other:?} (use \"dense\" or \"iterative\")"
                )))
            }
        };
        let cfg = ModemConfig {
            grid,
            pilot,
            data_energy_per_symbol: e_s,
            support: SupportSet::centered(
                self.modem.support.delay_max,
                self.modem.support.doppler_max,
            ),
            header: HeaderSpec {
                segments: self
                    .modem
                    .header
                    .segments
                    .iter()
                    .map(|s| ZcSegment {
                        root: s.root,
                        length: s.length,
                    })
                    .collect(),
                gap: self.modem.header.gap,
            },
            equalizer,
            estimate_threshold: self.modem.estimate_threshold,
        };
        cfg.validate()
            .map_err(|e| CliError::Config(format!("modem: {e}")))?;
        Ok(cfg)
    }

    /// Physical channel taps for the configured grid.
    pub fn taps(&self) -> Result<Vec<ChannelTap<f64>>, CliError> {
        let grid = self.grid.build("grid")?;
        self.channel
            .taps
            .iter()
            .enumerate()
            .map(|(i, t)| t.build(&grid, i))
            .collect()
    }

    /// True when the scenario needs timing/CFO recovery before
    /// demodulation.
    pub fn needs_sync(&self) -> bool {
        self.channel.timing_offset != 0
            || self.channel.cfo_hz != 0.0
            || self.channel.phase_rad != 0.0
    }
}

/// Set `dotted.path = value` inside a JSON document. The value is parsed
/// as JSON when possible and falls back to a bare string.
fn apply_override(root: &mut serde_json::Value, path: &str, raw: &str) -> Result<(), CliError> {
    let parsed: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        match cursor {
            serde_json::Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| {
                    CliError::Config(format!("--set {path}: {seg:?} is not an array index"))
                })?;
                if idx >= items.len() {
                    return Err(CliError::Config(format!(
                        "--set {path}: index {idx} out of bounds (len {})",
                        items.len()
                    )));
                }
                if last {
                    items[idx] = parsed;
                    return Ok(());
                }
                cursor = &mut items[idx];
            }
            serde_json::Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), parsed);
                    return Ok(());
                }
                cursor = map
                    .get_mut(*seg)
                    .ok_or_else(|| CliError::Config(format!("--set {path}: no field {seg:?}")))?;
            }
            _ => {
                return Err(CliError::Config(format!(
                    "--set {path}: {seg:?} does not address an object or array"
                )))
            }
        }
    }
    Err(CliError::Config(format!("--set {path}: empty path")))
}
