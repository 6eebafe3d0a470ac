//! Signal types shared by every pipeline stage: spike events, per-tick spike
//! batches, bounded continuous frames and the derived simulation clock.

use thiserror::Error;

/// One spike emitted by one neuron at an absolute simulated time (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub neuron_id: u32,
    pub time: f64,
}

/// All spikes produced for one tick, sorted by `(time, neuron_id)`.
///
/// Every event time lies inside the half-open tick window
/// `[tick_index * delta_t, (tick_index + 1) * delta_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeBatch {
    tick_index: i64,
    events: Vec<SpikeEvent>,
}

/// Vector sample of a continuous signal, valid for one tick.
///
/// Values are finite and lie in `[-1, 1]`; producers clamp at the boundary,
/// while consumers inside the pipeline reject out-of-range data loudly.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousFrame {
    pub tick_index: i64,
    pub values: Vec<f64>,
}

/// Tick counter plus the global tick length; time is always derived as
/// `tick_index * delta_t`, so the clock cannot drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub delta_t: f64,
    pub tick_index: i64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("frame width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("value {value} at index {index} outside [-1, 1]")]
    RangeViolation { index: usize, value: f64 },
    #[error("spike batch for tick {tick_index}: event {position} out of order")]
    UnorderedEvents { tick_index: i64, position: usize },
    #[error("spike batch for tick {tick_index}: duplicate event (neuron {neuron_id}, t={time})")]
    DuplicateEvent { tick_index: i64, neuron_id: u32, time: f64 },
    #[error(
        "spike batch for tick {tick_index}: time {time} outside [{window_start}, {window_end})"
    )]
    TimeOutOfWindow { tick_index: i64, time: f64, window_start: f64, window_end: f64 },
    #[error("invalid tick length {delta_t}")]
    BadDeltaT { delta_t: f64 },
}

impl SimClock {
    pub fn new(delta_t: f64) -> Result<Self, SignalError> {
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(SignalError::BadDeltaT { delta_t });
        }
        Ok(SimClock { delta_t, tick_index: 0 })
    }

    /// Absolute simulated time at the start of the current tick.
    #[inline]
    pub fn time(&self) -> f64 {
        self.tick_index as f64 * self.delta_t
    }

    /// Start of the window for tick `tick_index`.
    #[inline]
    pub fn tick_start(&self, tick_index: i64) -> f64 {
        tick_index as f64 * self.delta_t
    }

    /// Exclusive end of the window for tick `tick_index`.
    #[inline]
    pub fn tick_end(&self, tick_index: i64) -> f64 {
        (tick_index + 1) as f64 * self.delta_t
    }

    #[inline]
    pub fn advanced(&self, ticks: i64) -> SimClock {
        SimClock { delta_t: self.delta_t, tick_index: self.tick_index + ticks }
    }
}

impl SpikeBatch {
    /// Empty batch for a tick.
    pub fn empty(tick_index: i64) -> Self {
        SpikeBatch { tick_index, events: Vec::new() }
    }

    /// Build a batch from events, sorting them and enforcing the invariants
    /// (window containment, no exact duplicates).
    pub fn new(
        tick_index: i64,
        mut events: Vec<SpikeEvent>,
        delta_t: f64,
    ) -> Result<Self, SignalError> {
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(SignalError::BadDeltaT { delta_t });
        }
        let window_start = tick_index as f64 * delta_t;
        let window_end = (tick_index + 1) as f64 * delta_t;
        for ev in &events {
            if !(ev.time >= window_start && ev.time < window_end) {
                return Err(SignalError::TimeOutOfWindow {
                    tick_index,
                    time: ev.time,
                    window_start,
                    window_end,
                });
            }
        }
        events.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .expect("spike times are finite")
                .then(a.neuron_id.cmp(&b.neuron_id))
        });
        for (i, pair) in events.windows(2).enumerate() {
            if pair[0].time == pair[1].time && pair[0].neuron_id == pair[1].neuron_id {
                return Err(SignalError::DuplicateEvent {
                    tick_index,
                    neuron_id: pair[0].neuron_id,
                    time: pair[0].time,
                });
            }
            let _ = i;
        }
        Ok(SpikeBatch { tick_index, events })
    }

    #[inline]
    pub fn tick_index(&self) -> i64 {
        self.tick_index
    }

    #[inline]
    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Verify ordering, window containment and uniqueness of an existing batch.
    pub fn validate(&self, delta_t: f64) -> Result<(), SignalError> {
        let window_start = self.tick_index as f64 * delta_t;
        let window_end = (self.tick_index + 1) as f64 * delta_t;
        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.time >= window_start && ev.time < window_end) {
                return Err(SignalError::TimeOutOfWindow {
                    tick_index: self.tick_index,
                    time: ev.time,
                    window_start,
                    window_end,
                });
            }
            if i > 0 {
                let prev = &self.events[i - 1];
                let ordered = prev.time < ev.time
                    || (prev.time == ev.time && prev.neuron_id < ev.neuron_id);
                if !ordered {
                    if prev.time == ev.time && prev.neuron_id == ev.neuron_id {
                        return Err(SignalError::DuplicateEvent {
                            tick_index: self.tick_index,
                            neuron_id: ev.neuron_id,
                            time: ev.time,
                        });
                    }
                    return Err(SignalError::UnorderedEvents {
                        tick_index: self.tick_index,
                        position: i,
                    });
                }
            }
        }
        Ok(())
    }

    /// Merge two batches for the same tick into one sorted batch.
    pub fn merge(&self, other: &SpikeBatch, delta_t: f64) -> Result<SpikeBatch, SignalError> {
        debug_assert_eq!(self.tick_index, other.tick_index);
        let mut events = Vec::with_capacity(self.len() + other.len());
        events.extend_from_slice(&self.events);
        events.extend_from_slice(&other.events);
        SpikeBatch::new(self.tick_index, events, delta_t)
    }
}

impl ContinuousFrame {
    pub fn zeros(tick_index: i64, width: usize) -> Self {
        ContinuousFrame { tick_index, values: vec![0.0; width] }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.values.len()
    }
}

/// Reject frames with the wrong width, non-finite entries or values outside
/// `[-1, 1]`. Used at stage inputs, where bad data means a wiring bug.
pub fn validate_frame(frame: &ContinuousFrame, expected_width: usize) -> Result<(), SignalError> {
    if frame.width() != expected_width {
        return Err(SignalError::WidthMismatch { expected: expected_width, got: frame.width() });
    }
    for (index, &value) in frame.values.iter().enumerate() {
        if !value.is_finite() {
            return Err(SignalError::NonFinite { index });
        }
        if !(-1.0..=1.0).contains(&value) {
            return Err(SignalError::RangeViolation { index, value });
        }
    }
    Ok(())
}

/// Clamp every value into `[-1, 1]`. Non-finite input is still an error:
/// clamping hides saturation, but never a NaN.
pub fn clamp_frame(frame: &mut ContinuousFrame) -> Result<(), SignalError> {
    for (index, value) in frame.values.iter_mut().enumerate() {
        if !value.is_finite() {
            return Err(SignalError::NonFinite { index });
        }
        *value = value.clamp(-1.0, 1.0);
    }
    Ok(())
}
