//! Closed-loop middleware between continuous-signal components (a robot
//! simulator, controllers) and event-based spiking components (encoders,
//! neural networks, decoders).
//!
//! The pieces:
//!
//! - [`core`]: the signal types — bounded continuous frames, spike batches
//!   with half-open tick windows, and the simulation clock.
//! - [`codec`]: continuous-to-spike encoders (regular and Poisson rate
//!   coding), the exponential activity filter, linear readouts, and channel
//!   remapping.
//! - [`nef`]: population coding — sampled LIF populations with analytic
//!   tuning curves and ridge-regression decoder training.
//! - [`neurosim`]: minimal event-driven networks (a one-to-one relay and a
//!   small LIF network).
//! - [`robosim`]: a planar unicycle robot with a ray-cast laser scanner in a
//!   segment arena.
//! - [`runtime`]: the tick-synchronised stage graph — double-buffered
//!   connections, deterministic and threaded executors, soft real-time
//!   pacing, and spike transcripts.
//! - [`config`] / [`stages`]: the text configuration format and the stage
//!   registry that turns documents into runnable graphs.
//! - [`bench`]: measurement harness — real-time factor, throughput, frame
//!   latency, and real-time capacity limits.
//!
//! Everything is deterministic per seed: runs with the same configuration
//! and seed produce byte-identical transcripts and traces.

pub mod bench;
pub mod codec;
pub mod config;
pub mod core;
pub mod nef;
pub mod neurosim;
pub mod rng;
pub mod robosim;
pub mod runtime;
pub mod stages;

pub use config::{ConfigDocument, ConfigError, GlobalConfig, RunMode};
pub use core::{ContinuousFrame, SimClock, SpikeBatch, SpikeEvent};
pub use runtime::{
    ExecMode, Link, RunError, RunOptions, RunReport, Stage, StageGraph, Transcript,
};
pub use stages::{build_graph, BuildError};
