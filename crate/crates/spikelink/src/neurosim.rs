//! Minimal spiking network back-ends for the pipeline: a parrot network that
//! repeats every input spike one tick later, and a small LIF network driven
//! by input spikes through a fixed weight.

use crate::core::{SimClock, SpikeBatch, SpikeEvent};
use crate::nef::{LifParams, NefError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuroError {
    #[error("spike for neuron {neuron_id} outside population of {n_neurons}")]
    UnknownNeuron { neuron_id: u32, n_neurons: usize },
    #[error(transparent)]
    Signal(#[from] crate::core::SignalError),
    #[error(transparent)]
    Nef(#[from] NefError),
}

/// One-to-one repeater: every spike of the input batch for tick `k` is
/// re-emitted in the batch for tick `k + 1` with its time shifted by exactly
/// one tick. Spike counts are conserved per neuron.
#[derive(Debug, Clone)]
pub struct ParrotNetwork {
    n_neurons: usize,
    spikes_in: u64,
    spikes_out: u64,
}

impl ParrotNetwork {
    pub fn new(n_neurons: usize) -> Self {
        ParrotNetwork { n_neurons, spikes_in: 0, spikes_out: 0 }
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    /// Total spikes received and re-emitted so far.
    pub fn conservation(&self) -> (u64, u64) {
        (self.spikes_in, self.spikes_out)
    }

    pub fn step(
        &mut self,
        batch_in: &SpikeBatch,
        clock: &SimClock,
    ) -> Result<SpikeBatch, NeuroError> {
        let out_tick = batch_in.tick_index() + 1;
        // Shift each spike by carrying its offset within the input window over
        // to the output window. Adding delta_t to the raw time instead would
        // drift against window bounds of the form k * delta_t, which are not
        // exactly one delta_t apart in floating point.
        let in_start = clock.tick_start(batch_in.tick_index());
        let out_start = clock.tick_start(out_tick);
        let out_end = clock.tick_end(out_tick);
        let mut events = Vec::with_capacity(batch_in.len());
        for ev in batch_in.events() {
            if ev.neuron_id as usize >= self.n_neurons {
                return Err(NeuroError::UnknownNeuron {
                    neuron_id: ev.neuron_id,
                    n_neurons: self.n_neurons,
                });
            }
            let shifted = out_start + (ev.time - in_start);
            let time = if shifted >= out_end { out_end.next_down() } else { shifted.max(out_start) };
            events.push(SpikeEvent { neuron_id: ev.neuron_id, time });
        }
        self.spikes_in += batch_in.len() as u64;
        self.spikes_out += events.len() as u64;
        SpikeBatch::new(out_tick, events, clock.delta_t).map_err(NeuroError::from)
    }
}

/// Small network of LIF neurons, one per input channel: each input spike
/// injects `weight` units of drive for one integration step of the matching
/// neuron. Like the parrot, output for input tick `k` lands in tick `k + 1`.
#[derive(Debug, Clone)]
pub struct DemoNetwork {
    n_neurons: usize,
    lif: LifParams,
    weight: f64,
    v: Vec<f64>,
    refrac: Vec<u32>,
    propagator: f64,
}

impl DemoNetwork {
    pub fn new(n_neurons: usize, lif: LifParams, weight: f64) -> Result<Self, NeuroError> {
        lif.validate()?;
        Ok(DemoNetwork {
            n_neurons,
            lif,
            weight,
            v: vec![lif.v_reset; n_neurons],
            refrac: vec![0; n_neurons],
            propagator: (-lif.dt / lif.tau_m).exp(),
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn step(
        &mut self,
        batch_in: &SpikeBatch,
        clock: &SimClock,
    ) -> Result<SpikeBatch, NeuroError> {
        let out_tick = batch_in.tick_index() + 1;
        let steps_f = clock.delta_t / self.lif.dt;
        let steps = steps_f.round();
        if steps < 1.0 || (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
            return Err(NeuroError::Nef(NefError::BadTickSubdivision {
                delta_t: clock.delta_t,
                dt: self.lif.dt,
            }));
        }
        let steps = steps as usize;
        let in_start = clock.tick_start(batch_in.tick_index());
        let out_start = clock.tick_start(out_tick);
        let out_end = clock.tick_end(out_tick);
        // Per-substep input drive: a spike lands in the substep of the output
        // window that sits at the same offset the spike had in its own window.
        let mut drive_grid = vec![0.0f64; steps * self.n_neurons];
        for ev in batch_in.events() {
            let n = ev.neuron_id as usize;
            if n >= self.n_neurons {
                return Err(NeuroError::UnknownNeuron {
                    neuron_id: ev.neuron_id,
                    n_neurons: self.n_neurons,
                });
            }
            let mut s = ((ev.time - in_start) / self.lif.dt).floor() as i64;
            if s < 0 {
                s = 0;
            }
            if s as usize >= steps {
                s = steps as i64 - 1;
            }
            drive_grid[s as usize * self.n_neurons + n] += self.weight;
        }
        let p = self.propagator;
        let ref_steps = (self.lif.t_ref / self.lif.dt).round() as u32;
        let mut events = Vec::new();
        for s in 0..steps {
            let t = {
                let t = out_start + s as f64 * self.lif.dt;
                if t >= out_end {
                    out_end.next_down()
                } else {
                    t
                }
            };
            for i in 0..self.n_neurons {
                if self.refrac[i] > 0 {
                    self.refrac[i] -= 1;
                    continue;
                }
                // Exact decay plus the impulse drive for this substep: an
                // input spike contributes its weight directly to the membrane.
                let v = self.v[i] * p + drive_grid[s * self.n_neurons + i];
                if v >= self.lif.v_thresh {
                    events.push(SpikeEvent { neuron_id: i as u32, time: t });
                    self.v[i] = self.lif.v_reset;
                    self.refrac[i] = ref_steps;
                } else {
                    self.v[i] = v;
                }
            }
        }
        SpikeBatch::new(out_tick, events, clock.delta_t).map_err(NeuroError::from)
    }
}
