//! The stage registry: every processing node a configuration file can name,
//! plus `build_graph` which turns a parsed document into a runnable graph.
//!
//! Stage kinds and their keys (beyond the shared `kind`):
//!
//! | kind             | keys                                                            |
//! |------------------|-----------------------------------------------------------------|
//! | `robot`          | `arena`, `beams`, `fov`, `max_range`, `update_rate`, `x`, `y`, `heading`, `radius`, `v_max`, `omega_max`, `substep`, `stop_on_collision` |
//! | `constant`       | `width`, `value`                                                |
//! | `step`           | `width`, `before`, `after`, `step_time`                         |
//! | `channel_map`    | `map` (identity / hemispheres / fanin / CSV path), `n_in`, `n_out` |
//! | `rate_encoder`   | `width`, `v_min`, `v_max`                                       |
//! | `poisson_encoder`| `width`, `v_min`, `v_max`                                       |
//! | `nef_encoder`    | `dim`, `neurons`, `rate_lo`, `rate_hi`, `intercept_lo`, `intercept_hi`, `tau_m`, `v_thresh`, `v_reset`, `t_ref`, `dt` |
//! | `parrot`         | `width`                                                         |
//! | `lif_net`        | `width`, `weight`, `tau_m`, `v_thresh`, `v_reset`, `t_ref`, `dt`|
//! | `linear_decoder` | `width`, `outputs`, `tau`, `phi` (zeros / uniform:X / CSV path), `offset` |
//! | `motor`          | `width`                                                         |
//! | `probe`          | `width`, `threshold`, `arm_tick`                                |
//! | `null`           | `width`, `signal` (continuous / event)                          |
//!
//! All stages read port `in` and write port `out`. Unrecognised keys are
//! build errors.

use crate::codec::{
    ChannelMap, ExponentialFilter, LinearReadout, MatrixCsv, PoissonEncoder, RateCode,
    RegularEncoder, DEFAULT_TAU_DEC,
};
use crate::config::{ConfigDocument, ConfigError, SectionReader, StageSection};
use crate::core::{clamp_frame, ContinuousFrame};
use crate::nef::{LifParams, NefConfig, NefPopulation};
use crate::neurosim::{DemoNetwork, ParrotNetwork};
use crate::robosim::{Arena, LaserScan, RobotConfig, RobotState, RobotWorld, Segment};
use crate::rng::StreamRng;
use crate::runtime::{
    GraphError, PortDecl, PortKind, Stage, StageArtifacts, StageError, StageGraph, TickContext,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("stage {stage:?}: unknown kind {kind:?}")]
    UnknownStageKind { stage: String, kind: String },
    #[error("stage {stage:?}: {source}")]
    StageSetup {
        stage: String,
        #[source]
        source: StageError,
    },
}

/// Run-wide context a stage builder may need.
pub struct BuildEnv {
    pub seed: u64,
    /// Directory relative paths in the configuration resolve against.
    pub base_dir: PathBuf,
}

impl BuildEnv {
    /// Deterministic per-stage random stream, decorrelated by stage name.
    pub fn stage_rng(&self, name: &str) -> StreamRng {
        StreamRng::new(self.seed).child(&format!("stage:{name}"))
    }

    fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Build one stage from its section. The reader enforces that every key was
/// meaningful for the chosen kind.
pub fn build_stage(section: &StageSection, env: &BuildEnv) -> Result<Box<dyn Stage>, BuildError> {
    let mut r = SectionReader::new(section);
    let stage: Box<dyn Stage> = match section.kind.as_str() {
        "robot" => Box::new(RobotStage::from_config(&mut r, env)?),
        "constant" => Box::new(ConstantStage {
            width: r.require_usize("width")?,
            value: r.f64_or("value", 0.0)?,
        }),
        "step" => {
            let width = r.require_usize("width")?;
            let before = r.f64_or("before", 0.0)?;
            let after = r.f64_or("after", 1.0)?;
            let step_time = r.f64_or("step_time", 0.1)?;
            Box::new(StepStage { width, before, after, step_time })
        }
        "channel_map" => Box::new(ChannelMapStage::from_config(&mut r, env)?),
        "rate_encoder" => {
            let code = rate_code(&mut r)?;
            Box::new(RateEncoderStage { enc: RegularEncoder::new(code) })
        }
        "poisson_encoder" => {
            let code = rate_code(&mut r)?;
            let rng = env.stage_rng(&section.name);
            Box::new(PoissonEncoderStage { enc: PoissonEncoder::new(code, rng) })
        }
        "nef_encoder" => Box::new(NefEncoderStage::from_config(&mut r, env)?),
        "parrot" => Box::new(ParrotStage {
            net: ParrotNetwork::new(r.require_usize("width")?),
        }),
        "lif_net" => {
            let width = r.require_usize("width")?;
            let weight = r.f64_or("weight", 0.6)?;
            let lif = lif_params(&mut r)?;
            let net = DemoNetwork::new(width, lif, weight)
                .map_err(|e| setup_error(&section.name, e.into()))?;
            Box::new(LifNetStage { net })
        }
        "linear_decoder" => Box::new(LinearDecoderStage::from_config(&mut r, env)?),
        "motor" => Box::new(MotorStage { width: r.usize_or("width", 2)?, rows: Vec::new() }),
        "probe" => Box::new(ProbeStage {
            width: r.usize_or("width", 1)?,
            threshold: r.f64_or("threshold", 0.5)?,
            arm_tick: r.usize_or("arm_tick", 0)? as i64,
            first_crossing: None,
        }),
        "null" => {
            let width = r.usize_or("width", 1)?;
            let kind = match r.str_or("signal", "continuous").as_str() {
                "continuous" => PortKind::Continuous,
                "event" => PortKind::Event,
                other => {
                    return Err(ConfigError::BadValue {
                        section: section.name.clone(),
                        key: "signal".into(),
                        value: other.into(),
                        expected: "continuous or event",
                    }
                    .into())
                }
            };
            Box::new(NullStage { kind, width, events_seen: 0 })
        }
        other => {
            return Err(BuildError::UnknownStageKind {
                stage: section.name.clone(),
                kind: other.to_string(),
            })
        }
    };
    r.finish()?;
    Ok(stage)
}

/// Build the full graph for a configuration document. Relative file paths
/// (arenas, matrices) resolve against `base_dir`.
pub fn build_graph(doc: &ConfigDocument, base_dir: &Path) -> Result<StageGraph, BuildError> {
    let env = BuildEnv { seed: doc.global.seed, base_dir: base_dir.to_path_buf() };
    let mut stages: Vec<(String, Box<dyn Stage>)> = Vec::with_capacity(doc.stages.len());
    for section in &doc.stages {
        stages.push((section.name.clone(), build_stage(section, &env)?));
    }
    Ok(StageGraph::build(doc.global.delta_t, stages, &doc.connections)?)
}

fn setup_error(stage: &str, source: StageError) -> BuildError {
    BuildError::StageSetup { stage: stage.to_string(), source }
}

fn rate_code(r: &mut SectionReader) -> Result<RateCode, BuildError> {
    let width = r.require_usize("width")?;
    let v_min = r.f64_or("v_min", 1.0)?;
    let v_max = r.f64_or("v_max", 2.0)?;
    RateCode::new(width, v_min, v_max)
        .map_err(|e| setup_error(r.section_name(), e.into()))
}

fn lif_params(r: &mut SectionReader) -> Result<LifParams, ConfigError> {
    let d = LifParams::default();
    Ok(LifParams {
        tau_m: r.f64_or("tau_m", d.tau_m)?,
        v_thresh: r.f64_or("v_thresh", d.v_thresh)?,
        v_reset: r.f64_or("v_reset", d.v_reset)?,
        t_ref: r.f64_or("t_ref", d.t_ref)?,
        dt: r.f64_or("dt", d.dt)?,
    })
}

fn load_arena(spec: &str, env: &BuildEnv) -> Result<Arena, StageError> {
    match spec {
        "builtin:empty" => Ok(Arena::open_floor()),
        "builtin:box10" => {
            let c = 5.0;
            Ok(Arena::new(
                vec![
                    Segment { x1: -c, y1: -c, x2: c, y2: -c },
                    Segment { x1: c, y1: -c, x2: c, y2: c },
                    Segment { x1: c, y1: c, x2: -c, y2: c },
                    Segment { x1: -c, y1: c, x2: -c, y2: -c },
                ],
                None,
            ))
        }
        path => Arena::from_file(&env.resolve(path)).map_err(Into::into),
    }
}

// --- sources -------------------------------------------------------------

/// The robot world as a stage: motor commands in, proximity scan out. The
/// only stage feedback loops may close through.
pub struct RobotStage {
    world: RobotWorld,
    n_beams: usize,
}

impl RobotStage {
    fn from_config(r: &mut SectionReader, env: &BuildEnv) -> Result<Self, BuildError> {
        let arena_spec = r.str_or("arena", "builtin:empty");
        let beams = r.usize_or("beams", 100)?;
        let fov = r.f64_or("fov", std::f64::consts::PI)?;
        let max_range = r.f64_or("max_range", 5.0)?;
        let update_rate = r.f64_or("update_rate", 20.0)?;
        let x = r.f64_or("x", 0.0)?;
        let y = r.f64_or("y", 0.0)?;
        let heading = r.f64_or("heading", 0.0)?;
        let config = RobotConfig {
            radius: r.f64_or("radius", 0.15)?,
            v_max: r.f64_or("v_max", 0.5)?,
            omega_max: r.f64_or("omega_max", 2.0)?,
            scan: LaserScan { n_beams: beams, fov, max_range, update_rate },
            substep: r.f64_or("substep", 0.001)?,
            stop_on_collision: r.bool_or("stop_on_collision", false)?,
            start: RobotState::at(x, y, heading),
        };
        let name = r.section_name();
        let arena = load_arena(&arena_spec, env).map_err(|e| setup_error(name, e))?;
        let mut world = RobotWorld::new(arena, config)
            .map_err(|e| setup_error(name, e.into()))?;
        world.set_record_trace(true);
        Ok(RobotStage { world, n_beams: beams })
    }
}

impl Stage for RobotStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", 2)]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.n_beams)]
    }

    fn closes_feedback_loop(&self) -> bool {
        true
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let motor = ctx.input_frame(0).clone();
        let scan = self.world.step_tick(&motor, &ctx.clock)?;
        ctx.put_frame(0, scan)
    }

    fn finish(&mut self) -> StageArtifacts {
        let s = &self.world.state;
        StageArtifacts {
            metrics: vec![
                ("path_length".into(), self.world.path_length),
                ("collision_ticks".into(), self.world.collision_ticks as f64),
                ("x".into(), s.x),
                ("y".into(), s.y),
                ("heading".into(), s.heading),
            ],
            tables: vec![("pose".into(), crate::robosim::pose_trace_csv(self.world.trace()))],
        }
    }
}

/// Emits the same frame every tick.
pub struct ConstantStage {
    width: usize,
    value: f64,
}

impl Stage for ConstantStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        Vec::new()
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.width)]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        ctx.put_frame(
            0,
            ContinuousFrame {
                tick_index: ctx.clock.tick_index,
                values: vec![self.value; self.width],
            },
        )
    }
}

/// Steps from one value to another at a configured time.
pub struct StepStage {
    width: usize,
    before: f64,
    after: f64,
    step_time: f64,
}

impl StepStage {
    fn step_tick(&self, delta_t: f64) -> i64 {
        (self.step_time / delta_t).round() as i64
    }
}

impl Stage for StepStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        Vec::new()
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.width)]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let v = if ctx.clock.tick_index >= self.step_tick(ctx.clock.delta_t) {
            self.after
        } else {
            self.before
        };
        ctx.put_frame(
            0,
            ContinuousFrame { tick_index: ctx.clock.tick_index, values: vec![v; self.width] },
        )
    }
}

// --- adapters ------------------------------------------------------------

/// Linear channel remapping (identity, hemisphere averaging, fan-in, or an
/// arbitrary dense matrix from CSV).
pub struct ChannelMapStage {
    map: ChannelMap,
}

impl ChannelMapStage {
    fn from_config(r: &mut SectionReader, env: &BuildEnv) -> Result<Self, BuildError> {
        let spec = r.str_or("map", "identity");
        let n_in = r.usize_or("n_in", 0)?;
        let n_out = r.usize_or("n_out", 0)?;
        let section = r.section_name().to_string();
        let missing = |key: &str| {
            BuildError::Config(ConfigError::MissingKey { section: section.clone(), key: key.into() })
        };
        let map = match spec.as_str() {
            "identity" => {
                if n_in == 0 {
                    return Err(missing("n_in"));
                }
                ChannelMap::identity(n_in)
            }
            "hemispheres" => {
                if n_in == 0 {
                    return Err(missing("n_in"));
                }
                ChannelMap::hemispheres(n_in).map_err(|e| setup_error(&section, e.into()))?
            }
            "fanin" => {
                if n_in == 0 {
                    return Err(missing("n_in"));
                }
                if n_out == 0 {
                    return Err(missing("n_out"));
                }
                ChannelMap::fan_in(n_in, n_out)
            }
            path => {
                let m = MatrixCsv::load(&env.resolve(path))
                    .map_err(|e| setup_error(&section, e.into()))?;
                ChannelMap::from_dense(m.n_rows, m.n_cols(), &m.values)
                    .map_err(|e| setup_error(&section, e.into()))?
            }
        };
        Ok(ChannelMapStage { map })
    }
}

impl Stage for ChannelMapStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.map.n_in())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.map.n_out())]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let mut out = self.map.apply(ctx.input_frame(0))?;
        out.tick_index = ctx.clock.tick_index;
        ctx.put_frame(0, out)
    }
}

// --- encoders ------------------------------------------------------------

/// Deterministic rate coding: evenly spaced spikes at the value's rate.
pub struct RateEncoderStage {
    enc: RegularEncoder,
}

impl Stage for RateEncoderStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.enc.n_neurons())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("out", self.enc.n_neurons())]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let batch = self.enc.step(ctx.input_frame(0), &ctx.clock)?;
        ctx.put_batch(0, batch)
    }
}

/// Stochastic rate coding: Poisson processes at the value's rate.
pub struct PoissonEncoderStage {
    enc: PoissonEncoder,
}

impl Stage for PoissonEncoderStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.enc.n_neurons())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("out", self.enc.n_neurons())]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let batch = self.enc.step(ctx.input_frame(0), &ctx.clock)?;
        ctx.put_batch(0, batch)
    }
}

/// Population coding: a sampled LIF population spiking under the encoded
/// drive of the input vector.
pub struct NefEncoderStage {
    pop: NefPopulation,
}

impl NefEncoderStage {
    fn from_config(r: &mut SectionReader, env: &BuildEnv) -> Result<Self, BuildError> {
        let config = NefConfig {
            dim: r.require_usize("dim")?,
            n_neurons: r.usize_or("neurons", 100)?,
            intercept_range: (r.f64_or("intercept_lo", -0.95)?, r.f64_or("intercept_hi", 0.95)?),
            max_rate_range: (r.f64_or("rate_lo", 100.0)?, r.f64_or("rate_hi", 200.0)?),
            lif: lif_params(r)?,
        };
        let name = r.section_name();
        let seed = env.stage_rng(name).seed();
        NefPopulation::build(&config, seed)
            .map(|pop| NefEncoderStage { pop })
            .map_err(|e| setup_error(name, e.into()))
    }
}

impl Stage for NefEncoderStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.pop.dim)]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("out", self.pop.n_neurons)]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let batch = self.pop.encode_step(ctx.input_frame(0), &ctx.clock)?;
        ctx.put_batch(0, batch)
    }
}

// --- networks ------------------------------------------------------------

/// One-to-one relay: re-emits last tick's spikes one window later, exactly.
pub struct ParrotStage {
    net: ParrotNetwork,
}

impl Stage for ParrotStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("in", self.net.n_neurons())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("out", self.net.n_neurons())]
    }

    /// The relay advertises the one-tick shift its re-emission applies to
    /// spike timestamps; transport itself already accounts for the hop.
    fn declared_delay_ticks(&self) -> i64 {
        1
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let out = self.net.step(ctx.input_batch(0), &ctx.clock)?;
        ctx.put_batch(0, out)
    }

    fn finish(&mut self) -> StageArtifacts {
        let (seen, emitted) = self.net.conservation();
        StageArtifacts {
            metrics: vec![
                ("spikes_in".into(), seen as f64),
                ("spikes_out".into(), emitted as f64),
            ],
            tables: Vec::new(),
        }
    }
}

/// Minimal spiking network: one LIF neuron per channel driven by last tick's
/// input spikes.
pub struct LifNetStage {
    net: DemoNetwork,
}

impl Stage for LifNetStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("in", self.net.n_neurons())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("out", self.net.n_neurons())]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let out = self.net.step(ctx.input_batch(0), &ctx.clock)?;
        ctx.put_batch(0, out)
    }
}

// --- decoder -------------------------------------------------------------

/// Spikes to continuous values: exponential filtering per neuron, linear
/// readout, optional constant offset, clamped to the signal range.
pub struct LinearDecoderStage {
    filter: ExponentialFilter,
    readout: LinearReadout,
    offset: Vec<f64>,
}

impl LinearDecoderStage {
    pub fn assemble(
        filter: ExponentialFilter,
        readout: LinearReadout,
        offset: Vec<f64>,
    ) -> Result<Self, StageError> {
        if filter.n_neurons() != readout.n_neurons() || offset.len() != readout.n_outputs() {
            return Err(StageError::Other(format!(
                "decoder shape mismatch: filter {} neurons, readout {}x{}, offset {}",
                filter.n_neurons(),
                readout.n_neurons(),
                readout.n_outputs(),
                offset.len()
            )));
        }
        Ok(LinearDecoderStage { filter, readout, offset })
    }

    fn from_config(r: &mut SectionReader, env: &BuildEnv) -> Result<Self, BuildError> {
        let width = r.require_usize("width")?;
        let outputs = r.usize_or("outputs", 2)?;
        let tau = r.f64_or("tau", DEFAULT_TAU_DEC)?;
        let phi_spec = r.str_or("phi", "zeros");
        let offset = r.opt_vec_f64("offset")?.unwrap_or_else(|| vec![0.0; outputs]);
        let section = r.section_name().to_string();
        if offset.len() != outputs {
            return Err(ConfigError::BadValue {
                section,
                key: "offset".into(),
                value: format!("{} values", offset.len()),
                expected: "one value per output",
            }
            .into());
        }
        let wrap = |e: StageError| setup_error(&section, e);
        let readout = if phi_spec == "zeros" {
            LinearReadout::uniform(width, outputs, 0.0)
        } else if let Some(v) = phi_spec.strip_prefix("uniform:") {
            let value: f64 = v
                .parse()
                .map_err(|_| wrap(StageError::Other(format!("bad uniform decoder weight {v:?}"))))?;
            LinearReadout::uniform(width, outputs, value)
        } else {
            let m = MatrixCsv::load(&env.resolve(&phi_spec)).map_err(|e| wrap(e.into()))?;
            if m.n_rows != width || m.n_cols() != outputs {
                return Err(wrap(StageError::Other(format!(
                    "decoder matrix is {}x{}, expected {}x{}",
                    m.n_rows,
                    m.n_cols(),
                    width,
                    outputs
                ))));
            }
            LinearReadout::new(width, outputs, m.values.clone()).map_err(|e| wrap(e.into()))?
        };
        LinearDecoderStage::assemble(ExponentialFilter::new(width, tau), readout, offset)
            .map_err(wrap)
    }
}

impl Stage for LinearDecoderStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::event("in", self.filter.n_neurons())]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.readout.n_outputs())]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let batch = ctx.input_batch(0);
        let activities = self.filter.step(batch, &ctx.clock)?.to_vec();
        let mut values = self.readout.readout_unclamped(&activities)?;
        for (v, o) in values.iter_mut().zip(&self.offset) {
            *v += o;
        }
        let mut frame = ContinuousFrame { tick_index: ctx.clock.tick_index, values };
        clamp_frame(&mut frame)?;
        ctx.put_frame(0, frame)
    }
}

// --- sinks ---------------------------------------------------------------

/// Forwards motor commands to the robot while recording them.
pub struct MotorStage {
    width: usize,
    rows: Vec<(i64, Vec<f64>)>,
}

impl Stage for MotorStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.width)]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("out", self.width)]
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        let frame = ctx.input_frame(0);
        self.rows.push((ctx.clock.tick_index, frame.values.clone()));
        let out = ContinuousFrame { tick_index: ctx.clock.tick_index, values: frame.values.clone() };
        ctx.put_frame(0, out)
    }

    fn finish(&mut self) -> StageArtifacts {
        let mut csv = String::from("tick");
        if self.width == 2 {
            csv.push_str(",linear,angular");
        } else {
            for i in 0..self.width {
                let _ = write!(csv, ",c{i}");
            }
        }
        csv.push('\n');
        for (tick, values) in &self.rows {
            let _ = write!(csv, "{tick}");
            for v in values {
                let _ = write!(csv, ",{v}");
            }
            csv.push('\n');
        }
        StageArtifacts { metrics: Vec::new(), tables: vec![("trace".into(), csv)] }
    }
}

/// Latency probe: remembers the first tick its input crossed a threshold.
/// Blind until `arm_tick`, so startup transients (the first tick's zeroed
/// input fronts rippling through encoders) cannot register as a detection.
pub struct ProbeStage {
    width: usize,
    threshold: f64,
    arm_tick: i64,
    first_crossing: Option<i64>,
}

impl Stage for ProbeStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl::continuous("in", self.width)]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        Vec::new()
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        if self.first_crossing.is_none() && ctx.clock.tick_index >= self.arm_tick {
            let frame = ctx.input_frame(0);
            if frame.values.iter().any(|&v| v >= self.threshold) {
                self.first_crossing = Some(ctx.clock.tick_index);
            }
        }
        Ok(())
    }

    fn finish(&mut self) -> StageArtifacts {
        let mut metrics = vec![("detected".into(), f64::from(self.first_crossing.is_some()))];
        if let Some(t) = self.first_crossing {
            metrics.push(("first_crossing_tick".into(), t as f64));
        }
        StageArtifacts { metrics, tables: Vec::new() }
    }
}

/// Terminates an unused connection; counts events when carrying spikes.
pub struct NullStage {
    kind: PortKind,
    width: usize,
    events_seen: u64,
}

impl Stage for NullStage {
    fn input_ports(&self) -> Vec<PortDecl> {
        vec![PortDecl { name: "in", kind: self.kind, width: self.width }]
    }

    fn output_ports(&self) -> Vec<PortDecl> {
        Vec::new()
    }

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError> {
        if self.kind == PortKind::Event {
            self.events_seen += ctx.input_batch(0).len() as u64;
        }
        Ok(())
    }

    fn finish(&mut self) -> StageArtifacts {
        let metrics = if self.kind == PortKind::Event {
            vec![("events_seen".into(), self.events_seen as f64)]
        } else {
            Vec::new()
        };
        StageArtifacts { metrics, tables: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{ExecMode, RunOptions};

    fn graph_from(text: &str) -> Result<(ConfigDocument, StageGraph), BuildError> {
        let doc = ConfigDocument::parse(text).expect("config parses");
        let graph = build_graph(&doc, Path::new("."))?;
        Ok((doc, graph))
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = graph_from("[x]\nkind = teleporter\n").unwrap_err();
        match err {
            BuildError::UnknownStageKind { stage, kind } => {
                assert_eq!((stage.as_str(), kind.as_str()), ("x", "teleporter"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_stage_key_is_rejected() {
        let err = graph_from("[c]\nkind = constant\nwidth = 1\ncolour = red\n").unwrap_err();
        match err {
            BuildError::Config(ConfigError::UnknownKey { section, key }) => {
                assert_eq!((section.as_str(), key.as_str()), ("c", "colour"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_required_key_is_rejected() {
        let err = graph_from("[e]\nkind = rate_encoder\n").unwrap_err();
        assert!(
            matches!(err, BuildError::Config(ConfigError::MissingKey { ref key, .. }) if key == "width"),
            "{err:?}"
        );
    }

    #[test]
    fn encoder_pipeline_transports_expected_spike_counts() {
        // Full drive at v_max = 100 Hz over 1 s in 0.1 s ticks. On tick 0 the
        // encoder still reads the zero-valued initial front (mid-scale, 50 Hz,
        // 5 spikes per channel); from tick 1 on it sees the constant and emits
        // 10 per channel per tick.
        let text = "\
[global]
delta_t = 0.1
t_sim = 1

[src]
kind = constant
width = 2
value = 1

[enc]
kind = rate_encoder
width = 2
v_min = 0
v_max = 100

[sink]
kind = null
width = 2
signal = event

[connections]
src.out -> enc.in
enc.out -> sink.in
";
        let (doc, mut graph) = graph_from(text).unwrap();
        let report = graph.run(doc.global.t_sim, RunOptions::default()).unwrap();
        assert_eq!(report.ticks, 10);
        assert_eq!(report.spikes_transported, 2 * (5 + 9 * 10));
        // The sink consumes what was delivered up to the final swap; it saw
        // all but the last tick's batch.
        assert_eq!(report.metric("sink", "events_seen"), Some(2.0 * (5.0 + 8.0 * 10.0)));
    }

    #[test]
    fn parrot_relays_one_tick_later_with_shifted_times() {
        let text = "\
[global]
delta_t = 0.05
t_sim = 0.5

[src]
kind = constant
width = 1
value = 1

[enc]
kind = rate_encoder
width = 1
v_min = 0
v_max = 40

[relay]
kind = parrot
width = 1

[sink]
kind = null
width = 1
signal = event

[connections]
src.out -> enc.in
enc.out -> relay.in
relay.out -> sink.in
";
        let (doc, mut graph) = graph_from(text).unwrap();
        let report = graph
            .run(doc.global.t_sim, RunOptions { record_transcript: true, ..Default::default() })
            .unwrap();
        let transcript = report.transcript.as_ref().unwrap();
        let upstream = transcript.for_connection("enc.out -> relay.in");
        let downstream = transcript.for_connection("relay.out -> sink.in");
        assert!(!upstream.is_empty());
        // Everything the relay had received by the last swap came back out
        // exactly one tick later, shifted by one tick in time.
        let delivered_before_last = upstream
            .iter()
            .filter(|e| e.tick < report.ticks - 1)
            .count();
        assert_eq!(downstream.len(), delivered_before_last);
        for (u, d) in upstream.iter().zip(&downstream) {
            assert_eq!(d.tick, u.tick + 1);
            assert_eq!(d.neuron_id, u.neuron_id);
            assert!((d.time - (u.time + doc.global.delta_t)).abs() < 1e-12);
        }
        // Conservation counters agree with the transcript.
        assert_eq!(report.metric("relay", "spikes_in"), Some(delivered_before_last as f64));
        assert_eq!(report.metric("relay", "spikes_out"), Some(downstream.len() as f64));
    }

    #[test]
    fn decoder_offset_reaches_probe_after_one_hop() {
        // With zero decoders the output is pure offset; the probe sees it as
        // soon as the first decoder frame arrives.
        let text = "\
[global]
delta_t = 0.01
t_sim = 0.1

[src]
kind = constant
width = 1
value = 0

[enc]
kind = rate_encoder
width = 1
v_min = 0
v_max = 1

[dec]
kind = linear_decoder
width = 1
outputs = 1
phi = zeros
offset = 0.25

[watch]
kind = probe
width = 1
threshold = 0.2

[connections]
src.out -> enc.in
enc.out -> dec.in
dec.out -> watch.in
";
        let (doc, mut graph) = graph_from(text).unwrap();
        let report = graph.run(doc.global.t_sim, RunOptions::default()).unwrap();
        assert_eq!(report.metric("watch", "first_crossing_tick"), Some(1.0));
        assert_eq!(report.metric("watch", "detected"), Some(1.0));
    }

    #[test]
    fn feedback_must_pass_through_the_robot() {
        // motor -> decoder loop without a robot: illegal.
        let text = "\
[m]
kind = motor

[map]
kind = channel_map
map = identity
n_in = 2

[connections]
m.out -> map.in
map.out -> m.in
";
        let err = graph_from(text).unwrap_err();
        assert!(matches!(err, BuildError::Graph(GraphError::IllegalCycle { .. })), "{err:?}");
    }

    #[test]
    fn robot_loop_builds_and_runs() {
        let text = "\
[global]
delta_t = 0.05
t_sim = 1
seed = 3

[bot]
kind = robot
arena = builtin:box10
beams = 10
x = -3
y = -3

[eyes]
kind = channel_map
map = hemispheres
n_in = 10

[enc]
kind = rate_encoder
width = 2
v_min = 0
v_max = 60

[net]
kind = lif_net
width = 2
weight = 1.2

[dec]
kind = linear_decoder
width = 2
outputs = 2
phi = uniform:-0.002
offset = 0.6, 0

[drive]
kind = motor

[connections]
bot.out -> eyes.in
eyes.out -> enc.in
enc.out -> net.in
net.out -> dec.in
dec.out -> drive.in
drive.out -> bot.in
";
        let (doc, mut graph) = graph_from(text).unwrap();
        assert_eq!(graph.step_latency_hops("bot", "drive"), Some(5));
        let report = graph.run(doc.global.t_sim, RunOptions::default()).unwrap();
        assert_eq!(report.ticks, 20);
        // The robot moved under the decoder's forward bias.
        assert!(report.metric("bot", "path_length").unwrap() > 0.1);
        // Pose and motor tables came out with one row per tick.
        let pose = report.table("bot.pose").unwrap();
        assert_eq!(pose.lines().count(), 21);
        assert!(pose.starts_with("tick,x,y,heading,v,omega,collided\n"));
        let motor = report.table("drive.trace").unwrap();
        assert!(motor.starts_with("tick,linear,angular\n"));
        assert_eq!(motor.lines().count(), 21);
    }

    #[test]
    fn identical_seeds_reproduce_poisson_runs_exactly() {
        let text = "\
[global]
delta_t = 0.01
t_sim = 0.5
seed = 11

[src]
kind = constant
width = 3
value = 0.5

[enc]
kind = poisson_encoder
width = 3
v_min = 20
v_max = 80

[sink]
kind = null
width = 3
signal = event

[connections]
src.out -> enc.in
enc.out -> sink.in
";
        let run = |mode| {
            let (doc, mut graph) = graph_from(text).unwrap();
            graph
                .run(doc.global.t_sim, RunOptions { mode, record_transcript: true })
                .unwrap()
                .transcript
                .unwrap()
        };
        let a = run(ExecMode::SingleThread);
        let b = run(ExecMode::SingleThread);
        let c = run(ExecMode::Threaded { pace: false });
        assert!(!a.entries.is_empty());
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_csv(), c.to_csv());
        // And a different seed diverges.
        let other = {
            let mut doc = ConfigDocument::parse(text).unwrap();
            doc.global.seed = 12;
            let mut graph = build_graph(&doc, Path::new(".")).unwrap();
            graph
                .run(doc.global.t_sim, RunOptions { record_transcript: true, ..Default::default() })
                .unwrap()
                .transcript
                .unwrap()
        };
        assert_ne!(a.to_csv(), other.to_csv());
    }

    #[test]
    fn nef_encoder_stage_spikes_under_constant_drive() {
        let text = "\
[global]
delta_t = 0.01
t_sim = 0.5
seed = 5

[src]
kind = constant
width = 1
value = 0.8

[pop]
kind = nef_encoder
dim = 1
neurons = 30

[sink]
kind = null
width = 30
signal = event

[connections]
src.out -> pop.in
pop.out -> sink.in
";
        let (doc, mut graph) = graph_from(text).unwrap();
        let report = graph.run(doc.global.t_sim, RunOptions::default()).unwrap();
        // 30 neurons at 100-200 Hz max rate, driven at 0.8: plenty of spikes
        // in half a second.
        assert!(report.spikes_transported > 200, "{}", report.spikes_transported);
    }

    #[test]
    fn channel_map_stage_validates_required_keys() {
        let err = graph_from("[m]\nkind = channel_map\nmap = fanin\nn_in = 4\n").unwrap_err();
        assert!(
            matches!(err, BuildError::Config(ConfigError::MissingKey { ref key, .. }) if key == "n_out"),
            "{err:?}"
        );
    }

    #[test]
    fn decoder_offset_length_must_match_outputs() {
        let err = graph_from(
            "[d]\nkind = linear_decoder\nwidth = 2\noutputs = 2\noffset = 0.5\n",
        )
        .unwrap_err();
        assert!(matches!(err, BuildError::Config(ConfigError::BadValue { .. })), "{err:?}");
    }

    #[test]
    fn stage_rng_streams_differ_by_name() {
        let env = BuildEnv { seed: 9, base_dir: PathBuf::from(".") };
        assert_ne!(env.stage_rng("a").seed(), env.stage_rng("b").seed());
        assert_eq!(env.stage_rng("a").seed(), env.stage_rng("a").seed());
    }
}
