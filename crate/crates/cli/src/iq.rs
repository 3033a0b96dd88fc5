//! IQ capture files: little-endian 32-bit float I,Q interleaved, with a
//! JSON sidecar (`<path>.json`) carrying the sample rate and a free-form
//! description. Round trips are bit-exact.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use zakotfs::TdSignal;

use crate::CliError;

/// In-memory capture; samples are stored at file precision (f32).
#[derive(Debug, Clone, PartialEq)]
pub struct IqCapture {
    pub samples: Vec<Complex<f32>>,
    pub sample_rate: f64,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    sample_rate: f64,
    description: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

/// Write the capture and its sidecar.
pub fn write_iq(path: &Path, capture: &IqCapture) -> Result<(), CliError> {
    let mut bytes = Vec::with_capacity(capture.samples.len() * 8);
    for s in &capture.samples {
        bytes.extend_from_slice(&s.re.to_le_bytes());
        bytes.extend_from_slice(&s.im.to_le_bytes());
    }
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    let sidecar = Sidecar {
        sample_rate: capture.sample_rate,
        description: capture.description.clone(),
    };
    let text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::Io(format!("encoding sidecar: {e}")))?;
    std::fs::write(sidecar_path(path), text)
        .map_err(|e| CliError::Io(format!("writing sidecar: {e}")))?;
    Ok(())
}

/// Read a capture and its sidecar back.
pub fn read_iq(path: &Path) -> Result<IqCapture, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    if bytes.len() % 4 != 0 {
        return Err(CliError::Config(format!(
            "{}: truncated file ({} bytes is not a whole number of f32 values)",
            path.display(),
            bytes.len()
        )));
    }
    let floats = bytes.len() / 4;
    if floats % 2 != 0 {
        return Err(CliError::Config(format!(
            "{}: odd number of floats ({floats}) — I/Q pairs are incomplete",
            path.display()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            Complex::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect();
    let sc_path = sidecar_path(path);
    let text = std::fs::read_to_string(&sc_path)
        .map_err(|e| CliError::Config(format!("missing sidecar {}: {e}", sc_path.display())))?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid sidecar {}: {e}", sc_path.display())))?;
    if sidecar.sample_rate.is_nan() || sidecar.sample_rate <= 0.0 {
        return Err(CliError::Config(format!(
            "{}: sample_rate must be positive",
            sc_path.display()
        )));
    }
    Ok(IqCapture {
        samples,
        sample_rate: sidecar.sample_rate,
        description: sidecar.description,
    })
}

/// Widen a capture to the f64 processing domain.
pub fn capture_to_td(capture: &IqCapture) -> TdSignal<f64> {
    TdSignal::new(
        capture
            .samples
            .iter()
            .map(|s| Complex::new(s.re as f64, s.im as f64))
            .collect(),
        capture.sample_rate,
    )
}

/// Narrow a processing-domain signal to capture precision.
pub fn td_to_capture(td: &TdSignal<f64>, description: &str) -> IqCapture {
    IqCapture {
        samples: td
            .samples
            .iter()
            .map(|s| Complex::new(s.re as f32, s.im as f32))
            .collect(),
        sample_rate: td.sample_rate,
        description: description.to_string(),
    }
}
