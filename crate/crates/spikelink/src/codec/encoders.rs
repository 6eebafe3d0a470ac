//! Spike encoders: deterministic phase-accumulator rate coding and Poisson
//! coding by thinning a homogeneous proposal process.

use super::{isi_from_uniform, CodecError, RateCode};
use crate::core::{validate_frame, ContinuousFrame, SimClock, SpikeBatch, SpikeEvent};
use crate::rng::StreamRng;

/// Clamp an intra-tick event time into the half-open tick window.
#[inline]
fn window_time(clock: &SimClock, tick: i64, fraction: f64) -> f64 {
    let t = (tick as f64 + fraction) * clock.delta_t;
    let end = clock.tick_end(tick);
    if t >= end {
        end.next_down()
    } else {
        t.max(clock.tick_start(tick))
    }
}

/// Regular (clock-like) rate encoder.
///
/// Each neuron carries a phase in `[0, 1)` that advances by `rate * delta_t`
/// per tick; every unit crossing emits one spike, placed inside the tick by
/// linear interpolation. At constant input the inter-spike interval is exactly
/// the reciprocal of the instantaneous rate.
#[derive(Debug, Clone)]
pub struct RegularEncoder {
    code: RateCode,
    phases: Vec<f64>,
}

impl RegularEncoder {
    pub fn new(code: RateCode) -> Self {
        let phases = vec![0.0; code.n_neurons];
        RegularEncoder { code, phases }
    }

    pub fn code(&self) -> &RateCode {
        &self.code
    }

    pub fn n_neurons(&self) -> usize {
        self.code.n_neurons
    }

    /// Encode one frame into the spike batch for the clock's current tick.
    pub fn step(
        &mut self,
        frame: &ContinuousFrame,
        clock: &SimClock,
    ) -> Result<SpikeBatch, CodecError> {
        validate_frame(frame, self.code.n_neurons)?;
        let tick = clock.tick_index;
        let mut events = Vec::new();
        for (n, &value) in frame.values.iter().enumerate() {
            let rate = self.code.instantaneous_rate(value);
            if rate <= 0.0 {
                continue;
            }
            let advance = rate * clock.delta_t;
            let phase = self.phases[n];
            let total = phase + advance;
            // `<=` so a crossing landing exactly on the tick boundary still
            // emits (at the last representable time inside the window) instead
            // of being swallowed when the leftover phase is clamped below 1.
            let mut j = 1.0f64;
            while j <= total {
                let fraction = (j - phase) / advance;
                events.push(SpikeEvent {
                    neuron_id: n as u32,
                    time: window_time(clock, tick, fraction),
                });
                j += 1.0;
            }
            // Loop exit guarantees total < j, so the remainder is already
            // strictly below 1; the clamps only guard rounding at the edges.
            self.phases[n] = (total - (j - 1.0)).min(1.0f64.next_down()).max(0.0);
        }
        SpikeBatch::new(tick, events, clock.delta_t).map_err(CodecError::from)
    }

    #[cfg(test)]
    pub(crate) fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Poisson encoder by thinning.
///
/// Proposal spikes are drawn from a homogeneous process at `v_max`; each
/// proposal is accepted with probability `rate / v_max`, which realises an
/// inhomogeneous Poisson process for any piecewise-constant rate without
/// per-tick discretisation error. Each neuron owns an independent
/// counter-based random stream, so results do not depend on evaluation order.
#[derive(Debug, Clone)]
pub struct PoissonEncoder {
    code: RateCode,
    rng: StreamRng,
    /// Next proposal time per neuron (absolute simulated seconds).
    next_proposal: Vec<f64>,
    /// Draws consumed per neuron stream.
    counters: Vec<u64>,
    started: bool,
}

impl PoissonEncoder {
    pub fn new(code: RateCode, rng: StreamRng) -> Self {
        let n = code.n_neurons;
        PoissonEncoder {
            code,
            rng,
            next_proposal: vec![0.0; n],
            counters: vec![0; n],
            started: false,
        }
    }

    pub fn code(&self) -> &RateCode {
        &self.code
    }

    pub fn n_neurons(&self) -> usize {
        self.code.n_neurons
    }

    #[inline]
    fn draw(&mut self, neuron: usize) -> f64 {
        let c = self.counters[neuron];
        self.counters[neuron] = c + 1;
        self.rng.u01(neuron as u64, c)
    }

    /// Encode one frame into the spike batch for the clock's current tick.
    pub fn step(
        &mut self,
        frame: &ContinuousFrame,
        clock: &SimClock,
    ) -> Result<SpikeBatch, CodecError> {
        validate_frame(frame, self.code.n_neurons)?;
        let tick = clock.tick_index;
        let start = clock.tick_start(tick);
        let end = clock.tick_end(tick);
        if !self.started {
            // Seed the proposal processes from the first observed tick start.
            for n in 0..self.code.n_neurons {
                let r = self.draw(n);
                self.next_proposal[n] = start + isi_from_uniform(self.code.v_max, r);
            }
            self.started = true;
        }
        let mut events = Vec::new();
        for n in 0..self.code.n_neurons {
            let rate = self.code.instantaneous_rate(frame.values[n]);
            let accept = rate / self.code.v_max;
            let mut t = self.next_proposal[n];
            while t < end {
                if self.draw(n) < accept {
                    events.push(SpikeEvent {
                        neuron_id: n as u32,
                        time: if t >= end { end.next_down() } else { t.max(start) },
                    });
                }
                let r = self.draw(n);
                let mut t_next = t + isi_from_uniform(self.code.v_max, r);
                if t_next <= t {
                    // Interval rounded to nothing at this magnitude; force
                    // strict progress so times stay unique.
                    t_next = t.next_up();
                }
                t = t_next;
            }
            self.next_proposal[n] = t;
        }
        SpikeBatch::new(tick, events, clock.delta_t).map_err(CodecError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(values: Vec<f64>) -> ContinuousFrame {
        ContinuousFrame { tick_index: 0, values }
    }

    fn run_regular(
        code: RateCode,
        value: f64,
        delta_t: f64,
        ticks: i64,
    ) -> Vec<f64> {
        let mut enc = RegularEncoder::new(code);
        let mut times = Vec::new();
        for k in 0..ticks {
            let clock = SimClock { delta_t, tick_index: k };
            let batch = enc.step(&frame(vec![value; enc.n_neurons()]), &clock).unwrap();
            times.extend(batch.events().iter().map(|e| e.time));
        }
        times
    }

    #[test]
    fn regular_isis_are_exact_at_constant_rate() {
        // v_min 1, v_max 2, input 0 -> 1.5 Hz, so the ISI is 2/3 s.
        let times = run_regular(RateCode::new(1, 1.0, 2.0).unwrap(), 0.0, 0.05, 2000);
        assert!(times.len() > 100, "expected spikes, got {}", times.len());
        let expected = 1.0 / 1.5;
        for pair in times.windows(2) {
            let isi = pair[1] - pair[0];
            assert!(
                ((isi - expected) / expected).abs() < 1e-9,
                "isi {isi} vs {expected}"
            );
        }
    }

    #[test]
    fn regular_isi_cv_is_negligible() {
        let times = run_regular(RateCode::new(1, 1.0, 2.0).unwrap(), 0.25, 0.05, 4000);
        let isis: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
        let mean = isis.iter().sum::<f64>() / isis.len() as f64;
        let var = isis.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (isis.len() - 1) as f64;
        let cv = var.sqrt() / mean;
        assert!(cv < 1e-9, "cv {cv}");
    }

    #[test]
    fn regular_zero_rate_emits_nothing() {
        let times = run_regular(RateCode::new(1, 0.0, 100.0).unwrap(), -1.0, 0.05, 100);
        assert!(times.is_empty());
    }

    #[test]
    fn regular_emits_multiple_spikes_per_tick_at_high_rate() {
        // 2500 Hz at 1 ms ticks: 2.5 crossings per tick on average.
        let times = run_regular(RateCode::new(1, 0.0, 2500.0).unwrap(), 1.0, 0.001, 1000);
        assert_eq!(times.len(), 2500);
        for pair in times.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn regular_phase_stays_in_unit_interval() {
        let mut enc = RegularEncoder::new(RateCode::new(3, 0.0, 997.0).unwrap());
        for k in 0..5000 {
            let clock = SimClock { delta_t: 0.003, tick_index: k };
            enc.step(&frame(vec![0.733, -0.2, 1.0]), &clock).unwrap();
            for &p in enc.phases() {
                assert!((0.0..1.0).contains(&p), "phase {p}");
            }
        }
    }

    #[test]
    fn regular_spike_count_matches_rate() {
        let times = run_regular(RateCode::new(1, 0.0, 40.0).unwrap(), 0.5, 0.05, 2000);
        // 30 Hz for 100 s: phase accumulates 3000 crossings (+-1 boundary).
        let n = times.len() as i64;
        assert!((n - 3000).abs() <= 1, "count {n}");
    }

    fn run_poisson(code: RateCode, value: f64, delta_t: f64, ticks: i64, seed: u64) -> Vec<f64> {
        let mut enc = PoissonEncoder::new(code, StreamRng::new(seed));
        let mut times = Vec::new();
        for k in 0..ticks {
            let clock = SimClock { delta_t, tick_index: k };
            let batch = enc.step(&frame(vec![value; enc.n_neurons()]), &clock).unwrap();
            times.extend(batch.events().iter().map(|e| e.time));
        }
        times
    }

    #[test]
    fn poisson_mean_isi_matches_rate() {
        // At input +1 the rate equals v_max, so every proposal is accepted and
        // the ISIs are draws from Exp(2 Hz) with mean 0.5 s.
        let times = run_poisson(RateCode::new(1, 0.0, 2.0).unwrap(), 1.0, 0.05, 200_000, 77);
        let isis: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(isis.len() > 10_000, "len {}", isis.len());
        let mean = isis.iter().sum::<f64>() / isis.len() as f64;
        assert!((mean - 0.5).abs() / 0.5 < 0.02, "mean {mean}");
    }

    #[test]
    fn poisson_thinned_rate_matches_target() {
        // Input 0 with v_min 0: rate is half of v_max; thinning is exercised.
        let times = run_poisson(RateCode::new(1, 0.0, 40.0).unwrap(), 0.0, 0.05, 40_000, 13);
        let t_total = 40_000.0 * 0.05;
        let rate = times.len() as f64 / t_total;
        assert!((rate - 20.0).abs() / 20.0 < 0.03, "rate {rate}");
    }

    #[test]
    fn poisson_is_reproducible_per_seed_and_neuron() {
        let a = run_poisson(RateCode::new(4, 0.0, 30.0).unwrap(), 0.3, 0.02, 500, 5);
        let b = run_poisson(RateCode::new(4, 0.0, 30.0).unwrap(), 0.3, 0.02, 500, 5);
        assert_eq!(a, b);
        let c = run_poisson(RateCode::new(4, 0.0, 30.0).unwrap(), 0.3, 0.02, 500, 6);
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_zero_rate_emits_nothing() {
        let times = run_poisson(RateCode::new(2, 0.0, 50.0).unwrap(), -1.0, 0.05, 2000, 9);
        assert!(times.is_empty());
    }

    #[test]
    fn batches_stay_inside_their_windows() {
        let mut enc = PoissonEncoder::new(
            RateCode::new(8, 0.0, 300.0).unwrap(),
            StreamRng::new(321),
        );
        for k in 0..500 {
            let clock = SimClock { delta_t: 0.01, tick_index: k };
            let batch = enc
                .step(&frame(vec![0.9; 8]), &clock)
                .unwrap();
            batch.validate(0.01).unwrap();
        }
    }
}
