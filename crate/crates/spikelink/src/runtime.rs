//! Tick-synchronised stage graph.
//!
//! Stages exchange data over typed connections that are double-buffered: a
//! whole tick's worth of outputs is produced against the previous tick's
//! inputs, then every connection swaps its buffers at once. Each hop through
//! the graph therefore costs exactly one tick, which is what makes the frame
//! latency of a chain `hops * delta_t` and lets feedback loops run without
//! deadlock. The swap is O(1) per connection regardless of payload size.

use crate::codec::CodecError;
use crate::core::{ContinuousFrame, SignalError, SimClock, SpikeBatch};
use crate::nef::NefError;
use crate::neurosim::NeuroError;
use crate::robosim::RoboError;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hasher;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Barrier, Mutex, MutexGuard};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    Continuous,
    Event,
}

/// A port as declared by a stage: name, payload kind, and channel count
/// (frame width for continuous ports, neuron count for event ports).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortDecl {
    pub name: &'static str,
    pub kind: PortKind,
    pub width: usize,
}

impl PortDecl {
    pub fn continuous(name: &'static str, width: usize) -> Self {
        PortDecl { name, kind: PortKind::Continuous, width }
    }

    pub fn event(name: &'static str, width: usize) -> Self {
        PortDecl { name, kind: PortKind::Event, width }
    }
}

#[derive(Debug, Clone)]
enum PortData {
    Continuous(ContinuousFrame),
    Event(SpikeBatch),
}

impl PortData {
    fn initial(decl: &PortDecl) -> Self {
        match decl.kind {
            PortKind::Continuous => {
                PortData::Continuous(ContinuousFrame::zeros(-1, decl.width))
            }
            PortKind::Event => PortData::Event(SpikeBatch::empty(-1)),
        }
    }
}

/// Named connection endpoint pair, as written in configuration files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from_stage: String,
    pub from_port: String,
    pub to_stage: String,
    pub to_port: String,
}

impl Link {
    pub fn new(from: &str, from_port: &str, to: &str, to_port: &str) -> Self {
        Link {
            from_stage: from.to_string(),
            from_port: from_port.to_string(),
            to_stage: to.to_string(),
            to_port: to_port.to_string(),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{}.{} -> {}.{}",
            self.from_stage, self.from_port, self.to_stage, self.to_port
        )
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Nef(#[from] NefError),
    #[error(transparent)]
    Neuro(#[from] NeuroError),
    #[error(transparent)]
    Robot(#[from] RoboError),
    #[error("no data written to output port {port:?}")]
    MissingOutput { port: String },
    #[error("output stamped tick {got} during tick {expected}")]
    BadTickStamp { expected: i64, got: i64 },
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate stage name {name:?}")]
    DuplicateStage { name: String },
    #[error("connection references unknown stage {name:?}")]
    UnknownStage { name: String },
    #[error("stage {stage:?} has no {direction} port named {port:?}")]
    UnknownPort { stage: String, port: String, direction: &'static str },
    #[error("connection {connection}: {detail}")]
    PortMismatch { connection: String, detail: String },
    #[error("input port {stage}.{port} is not connected")]
    InputUnconnected { stage: String, port: String },
    #[error("input port {stage}.{port} is connected more than once")]
    InputMultiplyConnected { stage: String, port: String },
    #[error("cycle without a feedback-closing stage: {stages:?}")]
    IllegalCycle { stages: Vec<String> },
    #[error("delta_t must be positive and finite, got {delta_t}")]
    BadDeltaT { delta_t: f64 },
}

/// Post-run output of a stage: scalar metrics plus named CSV tables (pose
/// traces, motor traces, and the like).
#[derive(Debug, Default, Clone)]
pub struct StageArtifacts {
    pub metrics: Vec<(String, f64)>,
    pub tables: Vec<(String, String)>,
}

/// A processing node in the graph. `tick` consumes the previous tick's data
/// on its input ports and must write every output port once.
pub trait Stage: Send {
    fn input_ports(&self) -> Vec<PortDecl>;
    fn output_ports(&self) -> Vec<PortDecl>;

    fn tick(&mut self, ctx: &mut TickContext) -> Result<(), StageError>;

    /// Extra whole ticks of delay this stage advertises beyond the one every
    /// hop already costs (a pure relay shifts timestamps by one tick but adds
    /// nothing on top).
    fn declared_delay_ticks(&self) -> i64 {
        0
    }

    /// Whether feedback loops are allowed to close through this stage.
    fn closes_feedback_loop(&self) -> bool {
        false
    }

    /// Collect metrics and tables once the run is over.
    fn finish(&mut self) -> StageArtifacts {
        StageArtifacts::default()
    }
}

struct Connection {
    link: Link,
    kind: PortKind,
    from: (usize, usize),
    to: (usize, usize),
    front: Mutex<PortData>,
    back: Mutex<PortData>,
}

struct StageEntry {
    name: String,
    stage: Box<dyn Stage>,
    in_decls: Vec<PortDecl>,
    out_decls: Vec<PortDecl>,
    /// Connection index feeding each input port, in declaration order.
    in_conns: Vec<usize>,
    /// Connection indices fanning out of each output port.
    out_conns: Vec<Vec<usize>>,
}

/// Per-tick view a stage works through: read-only inputs from the previous
/// tick, write-once outputs for the current one.
pub struct TickContext<'a> {
    pub clock: SimClock,
    in_guards: Vec<MutexGuard<'a, PortData>>,
    out_decls: &'a [PortDecl],
    out_conns: &'a [Vec<usize>],
    connections: &'a [Connection],
    written: Vec<bool>,
}

impl<'a> TickContext<'a> {
    pub fn input_frame(&self, port: usize) -> &ContinuousFrame {
        match &*self.in_guards[port] {
            PortData::Continuous(f) => f,
            PortData::Event(_) => panic!("input port {port} carries events, not frames"),
        }
    }

    pub fn input_batch(&self, port: usize) -> &SpikeBatch {
        match &*self.in_guards[port] {
            PortData::Event(b) => b,
            PortData::Continuous(_) => panic!("input port {port} carries frames, not events"),
        }
    }

    pub fn put_frame(&mut self, port: usize, frame: ContinuousFrame) -> Result<(), StageError> {
        let decl = &self.out_decls[port];
        if frame.width() != decl.width {
            return Err(SignalError::WidthMismatch { expected: decl.width, got: frame.width() }
                .into());
        }
        if frame.tick_index != self.clock.tick_index {
            return Err(StageError::BadTickStamp {
                expected: self.clock.tick_index,
                got: frame.tick_index,
            });
        }
        self.write(port, PortData::Continuous(frame));
        Ok(())
    }

    pub fn put_batch(&mut self, port: usize, batch: SpikeBatch) -> Result<(), StageError> {
        if batch.tick_index() != self.clock.tick_index {
            return Err(StageError::BadTickStamp {
                expected: self.clock.tick_index,
                got: batch.tick_index(),
            });
        }
        self.write(port, PortData::Event(batch));
        Ok(())
    }

    fn write(&mut self, port: usize, data: PortData) {
        let conns = &self.out_conns[port];
        if let Some((&last, rest)) = conns.split_last() {
            for &ci in rest {
                *self.connections[ci].back.lock().unwrap() = data.clone();
            }
            *self.connections[last].back.lock().unwrap() = data;
        }
        self.written[port] = true;
    }
}

/// One delivered spike, as recorded at the buffer swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranscriptEntry {
    pub connection: u32,
    pub tick: i64,
    pub neuron_id: u32,
    pub time: f64,
}

/// Complete record of every spike delivered over every event connection,
/// in deterministic (tick, connection, batch) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub connection_names: Vec<String>,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("connection,tick,neuron_id,time\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.connection_names[e.connection as usize],
                e.tick,
                e.neuron_id,
                e.time
            );
        }
        out
    }

    pub fn hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        h.write(self.to_csv().as_bytes());
        h.finish()
    }

    /// Entries delivered over the named connection (see `Link::describe`).
    pub fn for_connection(&self, name: &str) -> Vec<TranscriptEntry> {
        match self.connection_names.iter().position(|n| n == name) {
            Some(idx) => self
                .entries
                .iter()
                .copied()
                .filter(|e| e.connection as usize == idx)
                .collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// One thread, fixed stage order, no pacing: bit-reproducible runs.
    SingleThread,
    /// One thread per stage with barrier-synchronised tick phases. With
    /// `pace` the loop is held to wall-clock tick boundaries (soft
    /// real-time); overruns are counted, never skipped.
    Threaded { pace: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub mode: ExecMode,
    pub record_transcript: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { mode: ExecMode::SingleThread, record_transcript: false }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    /// Ticks fully completed (computed and swapped).
    pub ticks: i64,
    pub delta_t: f64,
    /// Simulated time actually covered: `ticks * delta_t`.
    pub t_sim: f64,
    /// Graph construction time, filled in by the caller that timed it.
    pub t_build: f64,
    /// Wall-clock time of the run loop.
    pub t_run: f64,
    pub overrun_ticks: u64,
    pub spikes_transported: u64,
    pub connection_spike_counts: Vec<(String, u64)>,
    pub stage_metrics: Vec<(String, Vec<(String, f64)>)>,
    pub tables: Vec<(String, String)>,
    #[serde(skip)]
    pub transcript: Option<Transcript>,
}

impl RunReport {
    /// Real-time factor: simulated seconds per wall-clock second.
    pub fn rtf(&self) -> f64 {
        self.t_sim / self.t_run
    }

    pub fn metric(&self, stage: &str, name: &str) -> Option<f64> {
        self.stage_metrics
            .iter()
            .find(|(s, _)| s == stage)
            .and_then(|(_, ms)| ms.iter().find(|(n, _)| n == name).map(|&(_, v)| v))
    }

    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t.as_str())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("stage {stage:?} failed at tick {tick}: {source}")]
    StageFailure {
        stage: String,
        tick: i64,
        #[source]
        source: StageError,
        report: Box<RunReport>,
    },
}

impl RunError {
    pub fn partial_report(&self) -> &RunReport {
        match self {
            RunError::StageFailure { report, .. } => report,
        }
    }
}

pub struct StageGraph {
    delta_t: f64,
    stages: Vec<StageEntry>,
    connections: Vec<Connection>,
}

impl std::fmt::Debug for StageGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StageGraph")
            .field("delta_t", &self.delta_t)
            .field("stages", &self.stages.iter().map(|e| &e.name).collect::<Vec<_>>())
            .field(
                "connections",
                &self.connections.iter().map(|c| c.link.describe()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl StageGraph {
    /// Wire named stages together and validate the topology: ports must
    /// exist and agree on kind and width, every input is driven exactly
    /// once, and any cycle must pass through a feedback-closing stage.
    pub fn build(
        delta_t: f64,
        stages: Vec<(String, Box<dyn Stage>)>,
        links: &[Link],
    ) -> Result<Self, GraphError> {
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(GraphError::BadDeltaT { delta_t });
        }
        let mut entries: Vec<StageEntry> = Vec::with_capacity(stages.len());
        let mut index: HashMap<String, usize> = HashMap::new();
        for (name, stage) in stages {
            if index.insert(name.clone(), entries.len()).is_some() {
                return Err(GraphError::DuplicateStage { name });
            }
            let in_decls = stage.input_ports();
            let out_decls = stage.output_ports();
            let n_out = out_decls.len();
            entries.push(StageEntry {
                name,
                stage,
                in_conns: vec![usize::MAX; in_decls.len()],
                out_conns: vec![Vec::new(); n_out],
                in_decls,
                out_decls,
            });
        }

        let mut connections = Vec::with_capacity(links.len());
        for link in links {
            let &fi = index
                .get(&link.from_stage)
                .ok_or_else(|| GraphError::UnknownStage { name: link.from_stage.clone() })?;
            let &ti = index
                .get(&link.to_stage)
                .ok_or_else(|| GraphError::UnknownStage { name: link.to_stage.clone() })?;
            let fp = entries[fi]
                .out_decls
                .iter()
                .position(|d| d.name == link.from_port)
                .ok_or_else(|| GraphError::UnknownPort {
                    stage: link.from_stage.clone(),
                    port: link.from_port.clone(),
                    direction: "output",
                })?;
            let tp = entries[ti]
                .in_decls
                .iter()
                .position(|d| d.name == link.to_port)
                .ok_or_else(|| GraphError::UnknownPort {
                    stage: link.to_stage.clone(),
                    port: link.to_port.clone(),
                    direction: "input",
                })?;
            let from_decl = entries[fi].out_decls[fp];
            let to_decl = entries[ti].in_decls[tp];
            if from_decl.kind != to_decl.kind {
                return Err(GraphError::PortMismatch {
                    connection: link.describe(),
                    detail: format!("{:?} output into {:?} input", from_decl.kind, to_decl.kind),
                });
            }
            if from_decl.width != to_decl.width {
                return Err(GraphError::PortMismatch {
                    connection: link.describe(),
                    detail: format!(
                        "width {} output into width {} input",
                        from_decl.width, to_decl.width
                    ),
                });
            }
            if entries[ti].in_conns[tp] != usize::MAX {
                return Err(GraphError::InputMultiplyConnected {
                    stage: link.to_stage.clone(),
                    port: link.to_port.clone(),
                });
            }
            let ci = connections.len();
            entries[ti].in_conns[tp] = ci;
            entries[fi].out_conns[fp].push(ci);
            connections.push(Connection {
                link: link.clone(),
                kind: from_decl.kind,
                from: (fi, fp),
                to: (ti, tp),
                front: Mutex::new(PortData::initial(&to_decl)),
                back: Mutex::new(PortData::initial(&to_decl)),
            });
        }

        for e in &entries {
            for (p, &c) in e.in_conns.iter().enumerate() {
                if c == usize::MAX {
                    return Err(GraphError::InputUnconnected {
                        stage: e.name.clone(),
                        port: e.in_decls[p].name.to_string(),
                    });
                }
            }
        }

        Self::check_cycles(&entries, &connections)?;
        Ok(StageGraph { delta_t, stages: entries, connections })
    }

    /// Cycles are only legal when they pass through a stage that closes
    /// feedback loops (the robot, whose world integrates the loop). Remove
    /// those stages and the rest must be a DAG.
    fn check_cycles(entries: &[StageEntry], connections: &[Connection]) -> Result<(), GraphError> {
        let n = entries.len();
        let keep: Vec<bool> = entries.iter().map(|e| !e.stage.closes_feedback_loop()).collect();
        let mut indegree = vec![0usize; n];
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in connections {
            let (f, t) = (c.from.0, c.to.0);
            if keep[f] && keep[t] {
                adjacency[f].push(t);
                indegree[t] += 1;
            }
        }
        let mut queue: VecDeque<usize> =
            (0..n).filter(|&i| keep[i] && indegree[i] == 0).collect();
        let mut processed = 0;
        let retained = keep.iter().filter(|&&k| k).count();
        while let Some(i) = queue.pop_front() {
            processed += 1;
            for &j in &adjacency[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if processed < retained {
            let mut stuck: Vec<String> = (0..n)
                .filter(|&i| keep[i] && indegree[i] > 0)
                .map(|i| entries[i].name.clone())
                .collect();
            stuck.sort();
            return Err(GraphError::IllegalCycle { stages: stuck });
        }
        Ok(())
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|e| e.name.as_str()).collect()
    }

    /// Fewest connection hops from one stage to another (BFS), if reachable.
    pub fn step_latency_hops(&self, from: &str, to: &str) -> Option<usize> {
        let src = self.stages.iter().position(|e| e.name == from)?;
        let dst = self.stages.iter().position(|e| e.name == to)?;
        let mut dist = vec![usize::MAX; self.stages.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(i) = queue.pop_front() {
            if i == dst {
                return Some(dist[i]);
            }
            for c in &self.connections {
                if c.from.0 == i && dist[c.to.0] == usize::MAX {
                    dist[c.to.0] = dist[i] + 1;
                    queue.push_back(c.to.0);
                }
            }
        }
        None
    }

    /// Sum of per-hop and declared delays along the shortest path, in ticks.
    pub fn path_delay_ticks(&self, from: &str, to: &str) -> Option<i64> {
        let hops = self.step_latency_hops(from, to)? as i64;
        Some(hops)
    }

    /// Run for `t_sim` seconds of simulated time (rounded to whole ticks).
    pub fn run(&mut self, t_sim: f64, options: RunOptions) -> Result<RunReport, RunError> {
        let ticks = (t_sim / self.delta_t).round().max(1.0) as i64;
        self.run_ticks(ticks, options)
    }

    pub fn run_ticks(&mut self, ticks: i64, options: RunOptions) -> Result<RunReport, RunError> {
        let mut recorder = SwapRecorder::new(&self.connections, options.record_transcript);
        let outcome = match options.mode {
            ExecMode::SingleThread => self.run_single(ticks, &mut recorder),
            ExecMode::Threaded { pace } => self.run_threaded(ticks, pace, &mut recorder),
        };
        let mut report = RunReport {
            ticks: outcome.completed,
            delta_t: self.delta_t,
            t_sim: outcome.completed as f64 * self.delta_t,
            t_build: 0.0,
            t_run: outcome.t_run,
            overrun_ticks: outcome.overruns,
            spikes_transported: recorder.total_spikes,
            connection_spike_counts: self
                .connections
                .iter()
                .zip(&recorder.per_connection)
                .map(|(c, &n)| (c.link.describe(), n))
                .collect(),
            stage_metrics: Vec::new(),
            tables: Vec::new(),
            transcript: None,
        };
        for e in &mut self.stages {
            let art = e.stage.finish();
            if !art.metrics.is_empty() {
                report.stage_metrics.push((e.name.clone(), art.metrics));
            }
            for (table_name, csv) in art.tables {
                report.tables.push((format!("{}.{}", e.name, table_name), csv));
            }
        }
        if options.record_transcript {
            report.transcript = Some(Transcript {
                connection_names: self.connections.iter().map(|c| c.link.describe()).collect(),
                entries: recorder.entries,
            });
        }
        match outcome.failure {
            None => Ok(report),
            Some((stage_idx, tick, source)) => Err(RunError::StageFailure {
                stage: self.stages[stage_idx].name.clone(),
                tick,
                source,
                report: Box::new(report),
            }),
        }
    }

    fn run_single(&mut self, ticks: i64, recorder: &mut SwapRecorder) -> RunOutcome {
        let connections = &self.connections;
        let start = Instant::now();
        let mut outcome = RunOutcome::default();
        'ticks: for k in 0..ticks {
            let clock = SimClock { delta_t: self.delta_t, tick_index: k };
            for (si, entry) in self.stages.iter_mut().enumerate() {
                if let Err(e) = run_stage_tick(entry, connections, clock) {
                    outcome.failure = Some((si, k, e));
                    break 'ticks;
                }
            }
            recorder.swap_and_record(connections, k);
            outcome.completed = k + 1;
        }
        outcome.t_run = start.elapsed().as_secs_f64();
        outcome
    }

    fn run_threaded(&mut self, ticks: i64, pace: bool, recorder: &mut SwapRecorder) -> RunOutcome {
        let delta_t = self.delta_t;
        let connections = &self.connections;
        let n_stages = self.stages.len();
        let begin = Barrier::new(n_stages + 1);
        let end = Barrier::new(n_stages + 1);
        let stop = AtomicBool::new(false);
        let failures: Vec<Mutex<Option<(i64, StageError)>>> =
            (0..n_stages).map(|_| Mutex::new(None)).collect();

        let mut outcome = RunOutcome::default();
        std::thread::scope(|scope| {
            for (si, entry) in self.stages.iter_mut().enumerate() {
                let begin = &begin;
                let end = &end;
                let stop = &stop;
                let failures = &failures;
                scope.spawn(move || {
                    let mut k: i64 = 0;
                    loop {
                        begin.wait();
                        if stop.load(Ordering::Acquire) {
                            break;
                        }
                        let clock = SimClock { delta_t, tick_index: k };
                        let mut slot = failures[si].lock().unwrap();
                        if slot.is_none() {
                            if let Err(e) = run_stage_tick(entry, connections, clock) {
                                *slot = Some((k, e));
                            }
                        }
                        drop(slot);
                        end.wait();
                        k += 1;
                    }
                });
            }

            let start = Instant::now();
            let mut k: i64 = 0;
            loop {
                if k == ticks || outcome.failure.is_some() {
                    stop.store(true, Ordering::Release);
                    begin.wait();
                    break;
                }
                begin.wait();
                end.wait();
                // Check for stage failures before committing the tick.
                for (si, f) in failures.iter().enumerate() {
                    let mut slot = f.lock().unwrap();
                    if let Some((tick, e)) = slot.take() {
                        outcome.failure = Some((si, tick, e));
                        break;
                    }
                }
                if outcome.failure.is_none() {
                    recorder.swap_and_record(connections, k);
                    outcome.completed = k + 1;
                    if pace {
                        let target = start + duration_for(delta_t * (k + 1) as f64);
                        if Instant::now() > target {
                            outcome.overruns += 1;
                        } else {
                            sleep_spin_until(target);
                        }
                    }
                }
                k += 1;
            }
            outcome.t_run = start.elapsed().as_secs_f64();
        });
        outcome
    }
}

#[derive(Default)]
struct RunOutcome {
    completed: i64,
    t_run: f64,
    overruns: u64,
    failure: Option<(usize, i64, StageError)>,
}

fn run_stage_tick(
    entry: &mut StageEntry,
    connections: &[Connection],
    clock: SimClock,
) -> Result<(), StageError> {
    let in_guards: Vec<MutexGuard<PortData>> = entry
        .in_conns
        .iter()
        .map(|&ci| connections[ci].front.lock().unwrap())
        .collect();
    let mut ctx = TickContext {
        clock,
        in_guards,
        out_decls: &entry.out_decls,
        out_conns: &entry.out_conns,
        connections,
        written: vec![false; entry.out_decls.len()],
    };
    entry.stage.tick(&mut ctx)?;
    for (p, &w) in ctx.written.iter().enumerate() {
        if !w {
            return Err(StageError::MissingOutput { port: entry.out_decls[p].name.to_string() });
        }
    }
    Ok(())
}

struct SwapRecorder {
    record: bool,
    entries: Vec<TranscriptEntry>,
    per_connection: Vec<u64>,
    total_spikes: u64,
}

impl SwapRecorder {
    fn new(connections: &[Connection], record: bool) -> Self {
        SwapRecorder {
            record,
            entries: Vec::new(),
            per_connection: vec![0; connections.len()],
            total_spikes: 0,
        }
    }

    /// Publish the tick: swap every connection's buffers, then account for
    /// the spikes that just became visible. Runs on the coordinating thread
    /// only, in fixed connection order, so transcripts are deterministic.
    fn swap_and_record(&mut self, connections: &[Connection], tick: i64) {
        for (ci, c) in connections.iter().enumerate() {
            {
                let mut front = c.front.lock().unwrap();
                let mut back = c.back.lock().unwrap();
                std::mem::swap(&mut *front, &mut *back);
            }
            if c.kind == PortKind::Event {
                let front = c.front.lock().unwrap();
                if let PortData::Event(batch) = &*front {
                    self.per_connection[ci] += batch.len() as u64;
                    self.total_spikes += batch.len() as u64;
                    if self.record {
                        for ev in batch.events() {
                            self.entries.push(TranscriptEntry {
                                connection: ci as u32,
                                tick,
                                neuron_id: ev.neuron_id,
                                time: ev.time,
                            });
                        }
                    }
                }
            }
        }
    }
}

fn duration_for(seconds: f64) -> Duration {
    Duration::from_secs_f64(seconds.max(0.0))
}

/// Sleep most of the way to `target`, then spin for the remainder: thread
/// sleep alone is too coarse to hold tick boundaries at millisecond scale.
fn sleep_spin_until(target: Instant) {
    const SPIN_MARGIN: Duration = Duration::from_micros(800);
    loop {
        let now = Instant::now();
        if now >= target {
            return;
        }
        let remaining = target - now;
        if remaining > SPIN_MARGIN {
            std::thread::sleep(remaining - SPIN_MARGIN);
        } else {
            std::hint::spin_loop();
        }
    }
}
