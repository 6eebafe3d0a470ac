//! Channel-map adapters: sparse weighted fan-in/fan-out between continuous
//! frames of different widths, with the output clamped back into `[-1, 1]`.

use super::CodecError;
use crate::core::{clamp_frame, validate_frame, ContinuousFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    n_in: usize,
    n_out: usize,
    /// For each output channel, the contributing `(input index, weight)` pairs.
    taps: Vec<Vec<(usize, f64)>>,
}

impl ChannelMap {
    pub fn new(
        n_in: usize,
        n_out: usize,
        taps: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self, CodecError> {
        if taps.len() != n_out {
            return Err(CodecError::DimensionMismatch { expected: n_out, got: taps.len() });
        }
        for row in &taps {
            for &(index, _) in row {
                if index >= n_in {
                    return Err(CodecError::IndexOutOfRange { index, width: n_in });
                }
            }
        }
        Ok(ChannelMap { n_in, n_out, taps })
    }

    /// Pass-through of width `n`.
    pub fn identity(n: usize) -> Self {
        let taps = (0..n).map(|i| vec![(i, 1.0)]).collect();
        ChannelMap { n_in: n, n_out: n, taps }
    }

    /// Two outputs: the mean of the lower half of the inputs and the mean of
    /// the upper half.
    pub fn hemispheres(n_in: usize) -> Result<Self, CodecError> {
        if n_in < 2 {
            return Err(CodecError::DimensionMismatch { expected: 2, got: n_in });
        }
        let half = n_in / 2;
        let left: Vec<(usize, f64)> = (0..half).map(|i| (i, 1.0 / half as f64)).collect();
        let right: Vec<(usize, f64)> =
            (half..n_in).map(|i| (i, 1.0 / (n_in - half) as f64)).collect();
        ChannelMap::new(n_in, 2, vec![left, right])
    }

    /// Every output receives the mean of all inputs.
    pub fn fan_in(n_in: usize, n_out: usize) -> Self {
        let row: Vec<(usize, f64)> = (0..n_in).map(|i| (i, 1.0 / n_in as f64)).collect();
        ChannelMap { n_in, n_out, taps: vec![row; n_out] }
    }

    /// Build from a dense weight matrix, `rows = inputs`, `columns = outputs`.
    /// Zero entries are dropped.
    pub fn from_dense(n_in: usize, n_out: usize, dense: &[f64]) -> Result<Self, CodecError> {
        if dense.len() != n_in * n_out {
            return Err(CodecError::DimensionMismatch {
                expected: n_in * n_out,
                got: dense.len(),
            });
        }
        let mut taps = vec![Vec::new(); n_out];
        for i in 0..n_in {
            for (k, tap) in taps.iter_mut().enumerate() {
                let w = dense[i * n_out + k];
                if w != 0.0 {
                    tap.push((i, w));
                }
            }
        }
        ChannelMap::new(n_in, n_out, taps)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Apply the map to a validated frame, clamping the result.
    pub fn apply(&self, frame: &ContinuousFrame) -> Result<ContinuousFrame, CodecError> {
        validate_frame(frame, self.n_in)?;
        let mut out = ContinuousFrame::zeros(frame.tick_index, self.n_out);
        for (k, row) in self.taps.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, w) in row {
                acc += frame.values[i] * w;
            }
            out.values[k] = acc;
        }
        clamp_frame(&mut out)?;
        Ok(out)
    }
}
