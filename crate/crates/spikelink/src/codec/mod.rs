//! Conversion between bounded continuous signals and spike trains: rate
//! encoders (regular and Poisson), the exponential activity filter, linear
//! readouts and channel-map adapters.

mod channel_map;
mod encoders;
mod filter;
pub mod matrix_csv;
mod readout;

pub use channel_map::ChannelMap;
pub use encoders::{PoissonEncoder, RegularEncoder};
pub use filter::ExponentialFilter;
pub use matrix_csv::MatrixCsv;
pub use readout::LinearReadout;

use crate::core::SignalError;
use thiserror::Error;

/// Default decay constant of the activity filter (seconds).
pub const DEFAULT_TAU_DEC: f64 = 0.030;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("rate range invalid: v_min={v_min}, v_max={v_max} (need 0 <= v_min < v_max)")]
    BadRateRange { v_min: f64, v_max: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("channel map references input {index} outside width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{path}:{line}: {message}")]
    Csv { path: String, line: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Linear rate code shared by both spike encoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCode {
    pub n_neurons: usize,
    /// Rate at input -1 (Hz).
    pub v_min: f64,
    /// Rate at input +1 (Hz).
    pub v_max: f64,
}

impl RateCode {
    pub fn new(n_neurons: usize, v_min: f64, v_max: f64) -> Result<Self, CodecError> {
        if !(v_min.is_finite() && v_max.is_finite() && 0.0 <= v_min && v_min < v_max) {
            return Err(CodecError::BadRateRange { v_min, v_max });
        }
        Ok(RateCode { n_neurons, v_min, v_max })
    }

    /// Firing rate (Hz) for a bounded input value:
    /// `v_min + (v_max - v_min) * (1 + value) / 2`.
    #[inline]
    pub fn instantaneous_rate(&self, value: f64) -> f64 {
        self.v_min + (self.v_max - self.v_min) * (1.0 + value) / 2.0
    }
}

/// Interval to the next spike of a Poisson process with the given rate,
/// driven by one uniform draw `r` from `[0, 1)`: `-ln(r) / rate`.
#[inline]
pub fn isi_from_uniform(rate_hz: f64, r: f64) -> f64 {
    // Guard the measure-zero draw r == 0, which would yield an infinite gap.
    -r.max(f64::MIN_POSITIVE).ln() / rate_hz
}
