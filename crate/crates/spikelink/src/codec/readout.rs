//! Linear readout: map filtered activities to a bounded output vector via a
//! weight matrix, clamping the result into `[-1, 1]`.

use super::CodecError;

/// Readout weights, row-major with one row per neuron and one column per
/// output component.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReadout {
    n_neurons: usize,
    n_outputs: usize,
    /// `weights[n * n_outputs + k]` maps neuron `n` to output `k`.
    weights: Vec<f64>,
}

impl LinearReadout {
    pub fn new(n_neurons: usize, n_outputs: usize, weights: Vec<f64>) -> Result<Self, CodecError> {
        if weights.len() != n_neurons * n_outputs {
            return Err(CodecError::DimensionMismatch {
                expected: n_neurons * n_outputs,
                got: weights.len(),
            });
        }
        Ok(LinearReadout { n_neurons, n_outputs, weights })
    }

    /// Readout with every weight equal to `value`.
    pub fn uniform(n_neurons: usize, n_outputs: usize, value: f64) -> Self {
        LinearReadout { n_neurons, n_outputs, weights: vec![value; n_neurons * n_outputs] }
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `z_k = clamp(sum_n activities[n] * weights[n][k])`.
    pub fn readout(&self, activities: &[f64]) -> Result<Vec<f64>, CodecError> {
        if activities.len() != self.n_neurons {
            return Err(CodecError::DimensionMismatch {
                expected: self.n_neurons,
                got: activities.len(),
            });
        }
        let mut out = vec![0.0; self.n_outputs];
        for (n, &a) in activities.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.weights[n * self.n_outputs..(n + 1) * self.n_outputs];
            for (k, &w) in row.iter().enumerate() {
                out[k] += a * w;
            }
        }
        for z in &mut out {
            *z = z.clamp(-1.0, 1.0);
        }
        Ok(out)
    }

    /// Same product without the clamp, for callers that need the raw value.
    pub fn readout_unclamped(&self, activities: &[f64]) -> Result<Vec<f64>, CodecError> {
        if activities.len() != self.n_neurons {
            return Err(CodecError::DimensionMismatch {
                expected: self.n_neurons,
                got: activities.len(),
            });
        }
        let mut out = vec![0.0; self.n_outputs];
        for (n, &a) in activities.iter().enumerate() {
            let row = &self.weights[n * self.n_outputs..(n + 1) * self.n_outputs];
            for (k, &w) in row.iter().enumerate() {
                out[k] += a * w;
            }
        }
        Ok(out)
    }
}
