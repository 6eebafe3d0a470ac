//! Population coding of vector signals: leaky integrate-and-fire neurons with
//! sampled encoders, gains and biases, analytic tuning curves, least-squares
//! decoder training, and a spiking encode step on a fixed integration grid.

pub mod linalg;

use crate::core::{validate_frame, ContinuousFrame, SimClock, SpikeBatch, SpikeEvent};
use crate::rng::{StreamCursor, StreamRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NefError {
    #[error("bad parameter range: {what}")]
    BadRange { what: String },
    #[error("normal equations not positive definite at pivot {pivot} (value {value})")]
    SingularSystem { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tick length {delta_t} is not an integer multiple of the integration step {dt}")]
    BadTickSubdivision { delta_t: f64, dt: f64 },
    #[error(transparent)]
    Signal(#[from] crate::core::SignalError),
}

/// Leaky integrate-and-fire parameters. Integration uses the exact
/// exponential propagator on a fixed `dt` grid, so membrane decay carries no
/// discretisation error; only spike times are quantised to the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    /// Membrane time constant (s).
    pub tau_m: f64,
    /// Threshold (normalised drive units).
    pub v_thresh: f64,
    /// Reset value after a spike.
    pub v_reset: f64,
    /// Absolute refractory time (s).
    pub t_ref: f64,
    /// Integration step (s).
    pub dt: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams { tau_m: 0.020, v_thresh: 1.0, v_reset: 0.0, t_ref: 0.002, dt: 0.001 }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<(), NefError> {
        if !(self.tau_m > 0.0 && self.dt > 0.0 && self.t_ref >= 0.0) {
            return Err(NefError::BadRange {
                what: format!("tau_m {}, dt {}, t_ref {}", self.tau_m, self.dt, self.t_ref),
            });
        }
        if self.v_reset >= self.v_thresh {
            return Err(NefError::BadRange {
                what: format!("v_reset {} >= v_thresh {}", self.v_reset, self.v_thresh),
            });
        }
        Ok(())
    }

    /// Steady-state firing rate for a constant drive `j`:
    /// `1 / (t_ref + tau_m * ln((j - v_reset) / (j - v_thresh)))`, zero at or
    /// below threshold.
    pub fn analytic_rate(&self, j: f64) -> f64 {
        if j <= self.v_thresh {
            return 0.0;
        }
        1.0 / (self.t_ref + self.tau_m * ((j - self.v_reset) / (j - self.v_thresh)).ln())
    }

    /// Constant drive that produces the requested steady-state rate.
    pub fn drive_for_rate(&self, rate_hz: f64) -> Result<f64, NefError> {
        if !(rate_hz > 0.0) {
            return Err(NefError::BadRange { what: format!("rate {rate_hz} Hz") });
        }
        let interval = 1.0 / rate_hz;
        if interval <= self.t_ref {
            return Err(NefError::BadRange {
                what: format!("rate {rate_hz} Hz exceeds the refractory bound"),
            });
        }
        let beta = (interval - self.t_ref) / self.tau_m;
        let e = beta.exp();
        Ok((e * self.v_thresh - self.v_reset) / (e - 1.0))
    }

    fn refractory_steps(&self) -> u32 {
        (self.t_ref / self.dt).round() as u32
    }
}

/// A population of LIF neurons encoding a `dim`-dimensional signal.
#[derive(Debug, Clone)]
pub struct NefPopulation {
    pub dim: usize,
    pub n_neurons: usize,
    pub lif: LifParams,
    /// Unit-norm encoding vectors, row-major `n_neurons x dim`.
    encoders: Vec<f64>,
    gains: Vec<f64>,
    biases: Vec<f64>,
    /// Trained decoders, row-major `n_neurons x dim`; empty until trained.
    decoders: Vec<f64>,
    // Spiking state.
    v: Vec<f64>,
    refrac: Vec<u32>,
    propagator: f64,
}

/// Sampling ranges for population construction.
#[derive(Debug, Clone, Copy)]
pub struct NefConfig {
    pub dim: usize,
    pub n_neurons: usize,
    /// Intercepts sampled uniformly from this open subinterval of (-1, 1).
    pub intercept_range: (f64, f64),
    /// Maximum rates (at unit input along the encoder) sampled from here (Hz).
    pub max_rate_range: (f64, f64),
    pub lif: LifParams,
}

impl Default for NefConfig {
    fn default() -> Self {
        NefConfig {
            dim: 1,
            n_neurons: 100,
            intercept_range: (-0.95, 0.95),
            max_rate_range: (100.0, 200.0),
            lif: LifParams::default(),
        }
    }
}

impl NefPopulation {
    /// Sample a population: encoders uniform on the unit sphere, and for each
    /// neuron a gain and bias chosen so that firing starts exactly at its
    /// intercept and reaches its maximum rate at unit input along the encoder.
    pub fn build(config: &NefConfig, seed: u64) -> Result<Self, NefError> {
        config.lif.validate()?;
        let (c_lo, c_hi) = config.intercept_range;
        if !(-1.0 < c_lo && c_lo < c_hi && c_hi < 1.0) {
            return Err(NefError::BadRange {
                what: format!("intercepts ({c_lo}, {c_hi}) not inside (-1, 1)"),
            });
        }
        let (r_lo, r_hi) = config.max_rate_range;
        if !(0.0 < r_lo && r_lo <= r_hi) {
            return Err(NefError::BadRange {
                what: format!("max rates ({r_lo}, {r_hi}) not positive"),
            });
        }
        if config.dim == 0 || config.n_neurons == 0 {
            return Err(NefError::BadRange {
                what: format!("dim {} x n_neurons {}", config.dim, config.n_neurons),
            });
        }
        let rng = StreamRng::new(seed).child("nef-build");
        let n = config.n_neurons;
        let d = config.dim;
        let mut encoders = vec![0.0; n * d];
        let mut gains = vec![0.0; n];
        let mut biases = vec![0.0; n];
        for i in 0..n {
            let mut cur = StreamCursor::new(rng, i as u64);
            // Unit-norm encoder; in one dimension this is a random sign.
            if d == 1 {
                encoders[i] = if cur.next_u01() < 0.5 { -1.0 } else { 1.0 };
            } else {
                loop {
                    let mut norm2 = 0.0;
                    for k in 0..d {
                        let g = cur.next_gaussian();
                        encoders[i * d + k] = g;
                        norm2 += g * g;
                    }
                    if norm2 > 1e-12 {
                        let inv = norm2.sqrt().recip();
                        for k in 0..d {
                            encoders[i * d + k] *= inv;
                        }
                        break;
                    }
                }
            }
            let intercept = cur.next_range(c_lo, c_hi);
            let max_rate = cur.next_range(r_lo, r_hi);
            let j_max = config.lif.drive_for_rate(max_rate)?;
            // Drive is linear in the projection p = encoder . x:
            //   J(p) = gain * p + bias,  J(intercept) = v_thresh,  J(1) = j_max.
            let gain = (j_max - config.lif.v_thresh) / (1.0 - intercept);
            gains[i] = gain;
            biases[i] = config.lif.v_thresh - gain * intercept;
        }
        let propagator = (-config.lif.dt / config.lif.tau_m).exp();
        Ok(NefPopulation {
            dim: d,
            n_neurons: n,
            lif: config.lif,
            encoders,
            gains,
            biases,
            decoders: Vec::new(),
            v: vec![config.lif.v_reset; n],
            refrac: vec![0; n],
            propagator,
        })
    }

    pub fn encoders(&self) -> &[f64] {
        &self.encoders
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Trained decoders (`n_neurons x dim`, row-major); empty before training.
    pub fn decoders(&self) -> &[f64] {
        &self.decoders
    }

    /// Drive for each neuron at input `x`.
    fn drives(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..self.n_neurons {
            let mut p = 0.0;
            for k in 0..d {
                p += self.encoders[i * d + k] * x[k];
            }
            out[i] = self.gains[i] * p + self.biases[i];
        }
    }

    /// Analytic steady-state rate of every neuron at input `x`.
    pub fn analytic_rates(&self, x: &[f64]) -> Result<Vec<f64>, NefError> {
        if x.len() != self.dim {
            return Err(NefError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut drives = vec![0.0; self.n_neurons];
        self.drives(x, &mut drives);
        Ok(drives.iter().map(|&j| self.lif.analytic_rate(j)).collect())
    }

    /// Train decoders by ridge regression of the identity function over the
    /// evaluation grid: solve `(A^T A + reg * rows * I) phi = A^T X` where `A`
    /// holds analytic rates and `X` the grid points. Returns the decoders and
    /// stores them on the population.
    pub fn train_decoders(
        &mut self,
        grid: &[Vec<f64>],
        regularization: f64,
    ) -> Result<Vec<f64>, NefError> {
        if grid.is_empty() {
            return Err(NefError::BadRange { what: "empty evaluation grid".to_string() });
        }
        let rows = grid.len();
        let n = self.n_neurons;
        let d = self.dim;
        let mut a = vec![0.0; rows * n];
        let mut targets = vec![0.0; rows * d];
        let mut drives = vec![0.0; n];
        for (r, x) in grid.iter().enumerate() {
            if x.len() != d {
                return Err(NefError::DimensionMismatch { expected: d, got: x.len() });
            }
            self.drives(x, &mut drives);
            for i in 0..n {
                a[r * n + i] = self.lif.analytic_rate(drives[i]);
            }
            targets[r * d..(r + 1) * d].copy_from_slice(x);
        }
        let mut normal = vec![0.0; n * n];
        linalg::gram(rows, n, &a, &mut normal);
        let ridge = regularization * rows as f64;
        for i in 0..n {
            normal[i * n + i] += ridge;
        }
        let mut phi = vec![0.0; n * d];
        linalg::cross(rows, n, &a, d, &targets, &mut phi);
        linalg::cholesky_solve_in_place(n, &mut normal, d, &mut phi)?;
        self.decoders = phi.clone();
        Ok(phi)
    }

    /// Default ridge strength: `(0.1 * max rate upper bound)^2`.
    pub fn default_regularization(max_rate_hi: f64) -> f64 {
        (0.1 * max_rate_hi).powi(2)
    }

    /// Reset membrane state.
    pub fn reset(&mut self) {
        self.v.fill(self.lif.v_reset);
        self.refrac.fill(0);
    }

    /// Advance the population through one tick of spiking integration under a
    /// constant input frame; emits spikes quantised to the integration grid.
    pub fn encode_step(
        &mut self,
        frame: &ContinuousFrame,
        clock: &SimClock,
    ) -> Result<SpikeBatch, NefError> {
        validate_frame(frame, self.dim)?;
        let steps_f = clock.delta_t / self.lif.dt;
        let steps = steps_f.round();
        if steps < 1.0 || (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
            return Err(NefError::BadTickSubdivision { delta_t: clock.delta_t, dt: self.lif.dt });
        }
        let steps = steps as usize;
        let mut drives = vec![0.0; self.n_neurons];
        self.drives(&frame.values, &mut drives);
        let tick_start = clock.tick_start(clock.tick_index);
        let tick_end = clock.tick_end(clock.tick_index);
        let ref_steps = self.lif.refractory_steps();
        let p = self.propagator;
        let mut events = Vec::new();
        for s in 0..steps {
            let t = {
                let t = tick_start + s as f64 * self.lif.dt;
                if t >= tick_end {
                    tick_end.next_down()
                } else {
                    t
                }
            };
            for i in 0..self.n_neurons {
                if self.refrac[i] > 0 {
                    self.refrac[i] -= 1;
                    continue;
                }
                let v = self.v[i] * p + drives[i] * (1.0 - p);
                if v >= self.lif.v_thresh {
                    events.push(SpikeEvent { neuron_id: i as u32, time: t });
                    self.v[i] = self.lif.v_reset;
                    self.refrac[i] = ref_steps;
                } else {
                    self.v[i] = v;
                }
            }
        }
        SpikeBatch::new(clock.tick_index, events, clock.delta_t).map_err(NefError::from)
    }
}

/// Linear decode of a population activity vector: `x_hat = sum_n a_n phi_n`.
/// No clamping; callers that feed bounded pipelines clamp downstream.
pub fn nef_decode(activities: &[f64], phi: &[f64], dim: usize) -> Result<Vec<f64>, NefError> {
    if dim == 0 || phi.len() % dim != 0 {
        return Err(NefError::DimensionMismatch { expected: dim, got: phi.len() });
    }
    let n = phi.len() / dim;
    if activities.len() != n {
        return Err(NefError::DimensionMismatch { expected: n, got: activities.len() });
    }
    let mut out = vec![0.0; dim];
    for (i, &a) in activities.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for k in 0..dim {
            out[k] += a * phi[i * dim + k];
        }
    }
    Ok(out)
}

/// Evaluation grid for decoder training: an even line for one dimension, a
/// Halton low-discrepancy set inside the unit ball's bounding cube otherwise.
pub fn evaluation_grid(dim: usize, points: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return (0..points)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (points.max(2) - 1) as f64])
            .collect();
    }
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (0..points)
        .map(|i| {
            (0..dim)
                .map(|k| 2.0 * halton(i as u64 + 1, PRIMES[k % PRIMES.len()]) - 1.0)
                .collect()
        })
        .collect()
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Root-mean-square reconstruction error of the trained decoders over a grid,
/// using analytic rates.
pub fn reconstruction_rmse(pop: &NefPopulation, grid: &[Vec<f64>]) -> Result<f64, NefError> {
    if pop.decoders().is_empty() {
        return Err(NefError::BadRange { what: "population has no trained decoders".into() });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for x in grid {
        let rates = pop.analytic_rates(x)?;
        let xhat = nef_decode(&rates, pop.decoders(), pop.dim)?;
        for k in 0..pop.dim {
            sum += (xhat[k] - x[k]).powi(2);
            count += 1;
        }
    }
    Ok((sum / count as f64).sqrt())
}
