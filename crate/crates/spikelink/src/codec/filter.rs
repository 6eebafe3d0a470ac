//! Exponential activity filter: each neuron's activity is the sum of
//! `exp(-(t - t_i) / tau)` over its past spikes. Decay is carried by one
//! shared scale factor (`activity_n = scale * scaled_n`), so advancing time
//! and ingesting a spike are both O(1) and a whole tick costs O(events)
//! plus one O(neurons) pass to materialise the values.

use super::CodecError;
use crate::core::{SimClock, SpikeBatch};

/// Fold the shared scale into the per-neuron sums before it underflows; its
/// reciprocal, used when ingesting, then never exceeds ~1e120.
const SCALE_FLOOR: f64 = 1e-120;

#[derive(Debug, Clone)]
pub struct ExponentialFilter {
    tau: f64,
    /// Per-neuron sums in scaled units: activity is `scale * scaled[n]`.
    scaled: Vec<f64>,
    scale: f64,
    /// Materialised activities, rebuilt on read.
    snapshot: Vec<f64>,
    last_time: f64,
}

impl ExponentialFilter {
    pub fn new(n_neurons: usize, tau: f64) -> Self {
        assert!(tau > 0.0, "decay constant must be positive");
        ExponentialFilter {
            tau,
            scaled: vec![0.0; n_neurons],
            scale: 1.0,
            snapshot: vec![0.0; n_neurons],
            last_time: 0.0,
        }
    }

    pub fn n_neurons(&self) -> usize {
        self.scaled.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Current activities, valid at [`Self::last_time`].
    pub fn activities(&mut self) -> &[f64] {
        let scale = self.scale;
        for (out, s) in self.snapshot.iter_mut().zip(&self.scaled) {
            *out = scale * s;
        }
        &self.snapshot
    }

    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    /// Advance all activities to time `t` by exponential decay.
    pub fn decay_to(&mut self, t: f64) {
        if t > self.last_time {
            self.scale *= (-(t - self.last_time) / self.tau).exp();
            self.last_time = t;
            if self.scale < SCALE_FLOOR {
                for s in &mut self.scaled {
                    *s *= self.scale;
                }
                self.scale = 1.0;
            }
        }
    }

    /// Fold one spike into the state. Spikes earlier than the current filter
    /// time are incorporated with their already-decayed contribution, so the
    /// result stays exact regardless of arrival order.
    pub fn ingest(&mut self, neuron_id: u32, time: f64) -> Result<(), CodecError> {
        let n = neuron_id as usize;
        if n >= self.scaled.len() {
            return Err(CodecError::DimensionMismatch {
                expected: self.scaled.len(),
                got: n + 1,
            });
        }
        if time >= self.last_time {
            self.decay_to(time);
            self.scaled[n] += 1.0 / self.scale;
        } else {
            self.scaled[n] += (-(self.last_time - time) / self.tau).exp() / self.scale;
        }
        Ok(())
    }

    /// Fold a whole tick's batch in and evaluate at the end of that tick's
    /// window. Returns the activities at the window end.
    pub fn step(&mut self, batch: &SpikeBatch, clock: &SimClock) -> Result<&[f64], CodecError> {
        for ev in batch.events() {
            self.ingest(ev.neuron_id, ev.time)?;
        }
        self.decay_to(clock.tick_end(batch.tick_index()));
        Ok(self.activities())
    }
}
