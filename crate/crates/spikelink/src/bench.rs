//! Measurement harness: real-time factor scaling against encoder size,
//! bandwidth against firing rate, sensor-to-motor latency against tick
//! length, the tick-by-population overhead grid, and a binary search for the
//! largest population that still runs in real time.
//!
//! All wall-clock numbers come from a monotonic clock. Every public
//! measurement returns the raw per-trial [`BenchRecord`] rows next to any
//! aggregate, so summaries can always be recomputed from the artifact CSV.

use crate::config::{ConfigDocument, ConfigError};
use crate::runtime::{ExecMode, RunError, RunOptions, RunReport};
use crate::stages::{build_graph, BuildError};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("bracket low end {lo} is already past the limit (rtf {rtf:.3} < 1)")]
    BracketInvalid { lo: usize, rtf: f64 },
    #[error("no population up to {hi} pushed rtf below 1; giving up")]
    BracketUnbounded { hi: usize },
    #[error("bracket [{lo}, {hi}] is not a valid search range")]
    BadBracket { lo: usize, hi: usize },
    #[error("{hops}-hop chain at delta_t {delta_t}: no motor response within {window} ticks")]
    NoResponse { hops: usize, delta_t: f64, window: i64 },
}

// --- summary statistics ----------------------------------------------------

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 points.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Coefficient of variation: sample std over mean.
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    sample_std(xs) / mean(xs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares for y = slope * x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len(), "mismatched fit inputs");
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 =
        xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::from(ss_res == 0.0) };
    LineFit { slope, intercept, r2 }
}

/// Mid-ranks (ties share the average of the positions they straddle).
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("rank of NaN"));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = shared;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with mid-rank tie handling.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "mismatched correlation inputs");
    if xs.len() < 2 {
        return 0.0;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against the
/// continuous distribution function `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("KS sample contains NaN"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic KS critical value at the 1% significance level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

// --- records ---------------------------------------------------------------

/// One timed trial of one scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: String,
    pub encoder: String,
    pub n_neurons: usize,
    pub rate_hz: f64,
    pub delta_t_s: f64,
    pub trial: usize,
    pub t_build_s: f64,
    pub t_run_s: f64,
    pub t_sim_s: f64,
    pub rtf: f64,
    /// Sensor-to-motor latency, for latency scenarios only.
    pub latency_s: Option<f64>,
    pub spikes: u64,
}

pub const RECORD_CSV_HEADER: &str =
    "scenario,encoder,n_neurons,rate_hz,delta_t_s,trial,t_build_s,t_run_s,t_sim_s,rtf,latency_s,spikes";

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(RECORD_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},",
            r.scenario,
            r.encoder,
            r.n_neurons,
            r.rate_hz,
            r.delta_t_s,
            r.trial,
            r.t_build_s,
            r.t_run_s,
            r.t_sim_s,
            r.rtf
        );
        if let Some(l) = r.latency_s {
            let _ = write!(out, "{l}");
        }
        let _ = writeln!(out, ",{}", r.spikes);
    }
    out
}

// --- scenarios -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Rate,
    Poisson,
    Nef,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Rate => "rate",
            EncoderKind::Poisson => "poisson",
            EncoderKind::Nef => "nef",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rate" => Some(EncoderKind::Rate),
            "poisson" => Some(EncoderKind::Poisson),
            "nef" => Some(EncoderKind::Nef),
            _ => None,
        }
    }
}

/// A runnable measurement setup: a config document plus the metadata that
/// goes into its records. Scenarios are self-contained (no file references),
/// so they build against any base directory.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub encoder: String,
    pub n_neurons: usize,
    pub rate_hz: f64,
    pub config_text: String,
}

impl Scenario {
    pub fn document(&self) -> Result<ConfigDocument, ConfigError> {
        ConfigDocument::parse(&self.config_text)
    }

    pub fn build(&self) -> Result<crate::runtime::StageGraph, BenchError> {
        let doc = self.document()?;
        Ok(build_graph(&doc, Path::new("."))?)
    }

    /// Smallest possible pipeline: a constant source feeding a sink. Used to
    /// measure pure scheduling and pacing behaviour.
    pub fn trivial(delta_t: f64) -> Scenario {
        let config_text = format!(
            "[global]\n\
             delta_t = {delta_t}\n\
             t_sim = 10\n\
             \n\
             [src]\n\
             kind = constant\n\
             width = 1\n\
             value = 0\n\
             \n\
             [sink]\n\
             kind = null\n\
             width = 1\n\
             \n\
             [connections]\n\
             src.out -> sink.in\n"
        );
        Scenario {
            id: "trivial".into(),
            encoder: "none".into(),
            n_neurons: 0,
            rate_hz: 0.0,
            config_text,
        }
    }

    /// The full closed sensorimotor loop used for scaling measurements: a
    /// simulated robot's laser scan is averaged down to one channel, spread
    /// to `n` encoding neurons (every neuron sees the whole signal), passed
    /// as spikes through a one-to-one relay network, decoded back to a twist
    /// command, and fed to the robot again. The rate-coded variants run the
    /// encoding neurons at 1-2 Hz.
    pub fn toolchain(kind: EncoderKind, n: usize, delta_t: f64, seed: u64) -> Scenario {
        let mut text = format!(
            "[global]\n\
             delta_t = {delta_t}\n\
             t_sim = 10\n\
             seed = {seed}\n\
             \n\
             [robot]\n\
             kind = robot\n\
             arena = builtin:empty\n\
             beams = 100\n\
             \n\
             [squash]\n\
             kind = channel_map\n\
             map = fanin\n\
             n_in = 100\n\
             n_out = 1\n\
             \n"
        );
        let rate_hz = match kind {
            EncoderKind::Rate | EncoderKind::Poisson => {
                let _ = write!(
                    text,
                    "[spread]\n\
                     kind = channel_map\n\
                     map = fanin\n\
                     n_in = 1\n\
                     n_out = {n}\n\
                     \n\
                     [enc]\n\
                     kind = {}_encoder\n\
                     width = {n}\n\
                     v_min = 1\n\
                     v_max = 2\n\
                     \n",
                    if kind == EncoderKind::Rate { "rate" } else { "poisson" }
                );
                // An empty arena reads as minimum proximity everywhere, so the
                // encoders idle at v_min.
                1.0
            }
            EncoderKind::Nef => {
                let _ = write!(
                    text,
                    "[enc]\n\
                     kind = nef_encoder\n\
                     dim = 1\n\
                     neurons = {n}\n\
                     \n"
                );
                200.0
            }
        };
        let _ = write!(
            text,
            "[net]\n\
             kind = parrot\n\
             width = {n}\n\
             \n\
             [dec]\n\
             kind = linear_decoder\n\
             width = {n}\n\
             outputs = 2\n\
             phi = zeros\n\
             offset = 0.2,0.1\n\
             \n\
             [motor]\n\
             kind = motor\n\
             width = 2\n\
             \n\
             [connections]\n\
             robot.out -> squash.in\n"
        );
        if kind == EncoderKind::Nef {
            text.push_str("squash.out -> enc.in\n");
        } else {
            text.push_str("squash.out -> spread.in\nspread.out -> enc.in\n");
        }
        text.push_str(
            "enc.out -> net.in\n\
             net.out -> dec.in\n\
             dec.out -> motor.in\n\
             motor.out -> robot.in\n",
        );
        Scenario {
            id: format!("toolchain-{}", kind.name()),
            encoder: kind.name().into(),
            n_neurons: n,
            rate_hz,
            config_text: text,
        }
    }

    /// Open chain for traffic measurements: `n` regular encoding neurons held
    /// at exactly `rate_hz` feed a relay and a decoder. Spike volume scales
    /// with the rate while everything else stays fixed.
    pub fn bandwidth(n: usize, rate_hz: f64, delta_t: f64, seed: u64) -> Scenario {
        let v_max = 2.0 * rate_hz;
        let config_text = format!(
            "[global]\n\
             delta_t = {delta_t}\n\
             t_sim = 10\n\
             seed = {seed}\n\
             \n\
             [src]\n\
             kind = constant\n\
             width = 1\n\
             value = 0\n\
             \n\
             [spread]\n\
             kind = channel_map\n\
             map = fanin\n\
             n_in = 1\n\
             n_out = {n}\n\
             \n\
             [enc]\n\
             kind = rate_encoder\n\
             width = {n}\n\
             v_min = 0\n\
             v_max = {v_max}\n\
             \n\
             [net]\n\
             kind = parrot\n\
             width = {n}\n\
             \n\
             [dec]\n\
             kind = linear_decoder\n\
             width = {n}\n\
             outputs = 1\n\
             phi = zeros\n\
             \n\
             [sink]\n\
             kind = null\n\
             width = 1\n\
             \n\
             [connections]\n\
             src.out -> spread.in\n\
             spread.out -> enc.in\n\
             enc.out -> net.in\n\
             net.out -> dec.in\n\
             dec.out -> sink.in\n"
        );
        Scenario {
            id: "bandwidth".into(),
            encoder: "rate".into(),
            n_neurons: n,
            rate_hz,
            config_text,
        }
    }
}

// --- real-time factor ------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RtfSummary {
    pub records: Vec<BenchRecord>,
    pub mean_rtf: f64,
    pub std_rtf: f64,
    /// Mean wall time per trial not covered by build or run (teardown,
    /// deallocation). Reported, never asserted.
    pub epsilon_s: f64,
}

fn record_from(
    scenario: &Scenario,
    trial: usize,
    t_build: f64,
    report: &RunReport,
    latency_s: Option<f64>,
) -> BenchRecord {
    BenchRecord {
        scenario: scenario.id.clone(),
        encoder: scenario.encoder.clone(),
        n_neurons: scenario.n_neurons,
        rate_hz: scenario.rate_hz,
        delta_t_s: report.delta_t,
        trial,
        t_build_s: t_build,
        t_run_s: report.t_run,
        t_sim_s: report.t_sim,
        rtf: report.rtf(),
        latency_s,
        spikes: report.spikes_transported,
    }
}

/// Time `trials` complete build-and-run cycles of a scenario. A warm-up
/// trial runs first and is discarded (allocator and cache effects), then
/// each trial rebuilds the graph from the document so no state leaks
/// between them. Build time is measured separately and never counts
/// against the real-time factor.
pub fn measure_rtf(
    scenario: &Scenario,
    t_sim: f64,
    trials: usize,
    options: RunOptions,
) -> Result<RtfSummary, BenchError> {
    assert!(trials >= 1, "at least one trial");
    let doc = scenario.document()?;
    let mut records = Vec::with_capacity(trials);
    let mut epsilons = Vec::with_capacity(trials);
    for trial in 0..=trials {
        let t0 = Instant::now();
        let mut graph = build_graph(&doc, Path::new("."))?;
        let t_build = t0.elapsed().as_secs_f64();
        let report = graph.run(t_sim, options)?;
        drop(graph);
        let t_total = t0.elapsed().as_secs_f64();
        if trial == 0 {
            continue; // warm-up
        }
        epsilons.push(t_total - t_build - report.t_run);
        records.push(record_from(scenario, trial - 1, t_build, &report, None));
    }
    let rtfs: Vec<f64> = records.iter().map(|r| r.rtf).collect();
    Ok(RtfSummary {
        mean_rtf: mean(&rtfs),
        std_rtf: sample_std(&rtfs),
        epsilon_s: mean(&epsilons),
        records,
    })
}

// --- real-time limit search ------------------------------------------------

/// Result of a bisection for the largest real-time-capable population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitSearch {
    /// Largest probed population with rtf >= 1.
    pub n_limit: usize,
    /// Total probe evaluations spent (bracketing plus bisection).
    pub probes: usize,
    /// Final bracket: rtf(lo) >= 1 > rtf(hi).
    pub lo: usize,
    pub hi: usize,
}

/// Population cap for automatic bracket growth; beyond this the search
/// reports failure instead of eating all memory.
pub const LIMIT_SEARCH_CAP: usize = 1 << 22;

/// Bisect for the largest population with `rtf_of(n) >= 1`, assuming rtf is
/// non-increasing in n. The upper end of the bracket doubles until it falls
/// below real time; the bisection then narrows the bracket to a relative
/// window of at most 10%. Probe evaluations are counted so the logarithmic
/// cost contract is testable against synthetic oracles.
pub fn find_realtime_limit_with<F>(
    mut rtf_of: F,
    lo: usize,
    hi: usize,
) -> Result<LimitSearch, BenchError>
where
    F: FnMut(usize) -> Result<f64, BenchError>,
{
    if lo == 0 || hi <= lo {
        return Err(BenchError::BadBracket { lo, hi });
    }
    let mut probes = 0usize;
    let mut probe = |n: usize, probes: &mut usize| -> Result<f64, BenchError> {
        *probes += 1;
        rtf_of(n)
    };
    let rtf_lo = probe(lo, &mut probes)?;
    if rtf_lo < 1.0 {
        return Err(BenchError::BracketInvalid { lo, rtf: rtf_lo });
    }
    let (mut lo, mut hi) = (lo, hi);
    loop {
        if probe(hi, &mut probes)? < 1.0 {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi > LIMIT_SEARCH_CAP {
            return Err(BenchError::BracketUnbounded { hi: lo });
        }
    }
    while hi - lo > (lo / 10).max(1) {
        let mid = lo + (hi - lo) / 2;
        if probe(mid, &mut probes)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LimitSearch { n_limit: lo, probes, lo, hi })
}

/// Find the real-time limit of the closed-loop toolchain for one encoder
/// kind by timed runs. Each probe averages `trials` trials at `t_sim`
/// simulated seconds. Returns the search outcome together with every trial
/// record the probes produced.
pub fn find_realtime_limit(
    kind: EncoderKind,
    bracket: (usize, usize),
    delta_t: f64,
    t_sim: f64,
    trials: usize,
    seed: u64,
) -> Result<(LimitSearch, Vec<BenchRecord>), BenchError> {
    let mut records = Vec::new();
    let search = find_realtime_limit_with(
        |n| {
            let scenario = Scenario::toolchain(kind, n, delta_t, seed);
            let summary = measure_rtf(&scenario, t_sim, trials, RunOptions::default())?;
            records.extend(summary.records);
            Ok(summary.mean_rtf)
        },
        bracket.0,
        bracket.1,
    )?;
    Ok((search, records))
}

// --- bandwidth ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthPoint {
    pub rate_hz: f64,
    pub mean_rtf: f64,
    /// Spikes per simulated second delivered over the encoder's output
    /// connection, measured from transport counts.
    pub spikes_per_s: f64,
    /// Nominal traffic: n_neurons * rate.
    pub expected_spikes_per_s: f64,
}

#[derive(Debug, Clone)]
pub struct BandwidthMeasurement {
    pub records: Vec<BenchRecord>,
    pub points: Vec<BandwidthPoint>,
    /// Rank correlation between rate and mean rtf over the sweep.
    pub spearman_rho: f64,
}

/// Sweep encoder firing rates at a fixed population size and measure how the
/// real-time factor responds to pure event traffic.
pub fn measure_bandwidth(
    n: usize,
    rates_hz: &[f64],
    delta_t: f64,
    t_sim: f64,
    trials: usize,
    seed: u64,
) -> Result<BandwidthMeasurement, BenchError> {
    let mut records = Vec::new();
    let mut points = Vec::with_capacity(rates_hz.len());
    for &rate in rates_hz {
        let scenario = Scenario::bandwidth(n, rate, delta_t, seed);
        // One representative untimed run collects the per-connection counts;
        // conservation makes every trial transport identical spike totals.
        let mut graph = scenario.build()?;
        let report = graph.run(t_sim, RunOptions::default())?;
        let encoder_spikes = report
            .connection_spike_counts
            .iter()
            .find(|(name, _)| name == "enc.out -> net.in")
            .map(|&(_, c)| c)
            .unwrap_or(0);
        drop(graph);
        let summary = measure_rtf(&scenario, t_sim, trials, RunOptions::default())?;
        points.push(BandwidthPoint {
            rate_hz: rate,
            mean_rtf: summary.mean_rtf,
            spikes_per_s: encoder_spikes as f64 / report.t_sim,
            expected_spikes_per_s: n as f64 * rate,
        });
        records.extend(summary.records);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.rate_hz).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_rtf).collect();
    Ok(BandwidthMeasurement { records, points, spearman_rho: spearman_rho(&xs, &ys) })
}

// --- latency ---------------------------------------------------------------

/// When the sensory step fires, in simulated seconds. Chosen long enough for
/// startup transients to decay out of the decoder's filter before the probe
/// arms, and divisible by every millisecond-scale tick length.
pub const LATENCY_STEP_TIME: f64 = 0.5;

/// Ticks after the step within which the motor signal must respond.
pub const LATENCY_WINDOW_TICKS: i64 = 100;

#[derive(Debug, Clone)]
pub struct LatencyMeasurement {
    pub records: Vec<BenchRecord>,
    pub hops: usize,
    /// Least-squares fit of latency against tick length over the sweep.
    pub fit: LineFit,
}

/// Chain with exactly `hops` buffered connections between the stimulus and
/// the probe. Three hops and up route through a regular encoder and a linear
/// decoder (spiking path, silent until the step); shorter chains pad with
/// pass-through stages.
fn latency_scenario(hops: usize, delta_t: f64, threshold: f64) -> Scenario {
    assert!(hops >= 1, "a chain needs at least one hop");
    let step_tick = (LATENCY_STEP_TIME / delta_t).round() as i64;
    // Encoder hot enough to spike within its first responding tick.
    let v_max = 2.0 / delta_t;
    let mut text = format!(
        "[global]\n\
         delta_t = {delta_t}\n\
         t_sim = 1\n\
         \n\
         [stim]\n\
         kind = step\n\
         width = 1\n\
         before = -1\n\
         after = 1\n\
         step_time = {LATENCY_STEP_TIME}\n\
         \n"
    );
    let spiking = hops >= 3;
    let pads = if spiking { hops - 3 } else { hops - 1 };
    for i in 0..pads {
        let _ = write!(text, "[pad{i}]\nkind = motor\nwidth = 1\n\n");
    }
    if spiking {
        let _ = write!(
            text,
            "[enc]\n\
             kind = rate_encoder\n\
             width = 1\n\
             v_min = 0\n\
             v_max = {v_max}\n\
             \n\
             [dec]\n\
             kind = linear_decoder\n\
             width = 1\n\
             outputs = 1\n\
             tau = 0.03\n\
             phi = uniform:1\n\
             \n"
        );
    }
    let _ = write!(
        text,
        "[probe]\n\
         kind = probe\n\
         width = 1\n\
         threshold = {threshold}\n\
         arm_tick = {step_tick}\n\
         \n\
         [connections]\n"
    );
    let mut from = "stim".to_string();
    for i in 0..pads {
        let _ = writeln!(text, "{from}.out -> pad{i}.in");
        from = format!("pad{i}");
    }
    if spiking {
        let _ = writeln!(text, "{from}.out -> enc.in");
        text.push_str("enc.out -> dec.in\n");
        from = "dec".into();
    }
    let _ = writeln!(text, "{from}.out -> probe.in");
    Scenario {
        id: format!("latency-{hops}hop"),
        encoder: if spiking { "rate".into() } else { "none".into() },
        n_neurons: usize::from(spiking),
        rate_hz: if spiking { v_max } else { 0.0 },
        config_text: text,
    }
}

/// Measure the sensor-to-motor latency of an `hops`-hop chain across tick
/// lengths. In unpaced modes the latency is the exact tick arithmetic; under
/// wall-clock pacing it is estimated from the measured mean tick duration.
pub fn measure_latency(
    delta_ts: &[f64],
    hops: usize,
    options: RunOptions,
) -> Result<LatencyMeasurement, BenchError> {
    let mut records = Vec::with_capacity(delta_ts.len());
    let mut latencies = Vec::with_capacity(delta_ts.len());
    for &delta_t in delta_ts {
        let scenario = latency_scenario(hops, delta_t, 0.5);
        let step_tick = (LATENCY_STEP_TIME / delta_t).round() as i64;
        let t0 = Instant::now();
        let mut graph = scenario.build()?;
        let t_build = t0.elapsed().as_secs_f64();
        let report = graph.run_ticks(step_tick + LATENCY_WINDOW_TICKS, options)?;
        let first = report.metric("probe", "first_crossing_tick");
        let lag_ticks = match first {
            Some(t) => t as i64 - step_tick,
            None => {
                return Err(BenchError::NoResponse {
                    hops,
                    delta_t,
                    window: LATENCY_WINDOW_TICKS,
                })
            }
        };
        let latency = match options.mode {
            ExecMode::Threaded { pace: true } => {
                lag_ticks as f64 * (report.t_run / report.ticks as f64)
            }
            _ => lag_ticks as f64 * delta_t,
        };
        latencies.push(latency);
        records.push(record_from(&scenario, 0, t_build, &report, Some(latency)));
    }
    let fit = linear_fit(delta_ts, &latencies);
    Ok(LatencyMeasurement { records, hops, fit })
}

// --- overhead grid ---------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OverheadSweep {
    pub records: Vec<BenchRecord>,
    /// Per tick length: the largest probed population that kept mean rtf >= 1,
    /// or 0 when none did. Sorted by tick length ascending.
    pub borders: Vec<(f64, usize)>,
    /// Whether the border sequence is non-decreasing in the tick length.
    pub border_monotone: bool,
}

/// Full factorial sweep of tick length by population size over the closed
/// toolchain loop, reporting the per-tick real-time border.
pub fn sweep_overhead(
    delta_ts: &[f64],
    counts: &[usize],
    kind: EncoderKind,
    t_sim: f64,
    trials: usize,
    seed: u64,
) -> Result<OverheadSweep, BenchError> {
    let mut records = Vec::new();
    let mut borders = Vec::with_capacity(delta_ts.len());
    let mut sorted_dts = delta_ts.to_vec();
    sorted_dts.sort_by(|a, b| a.partial_cmp(b).expect("NaN tick length"));
    for &delta_t in &sorted_dts {
        let mut border = 0usize;
        for &n in counts {
            let scenario = Scenario::toolchain(kind, n, delta_t, seed);
            let summary = measure_rtf(&scenario, t_sim, trials, RunOptions::default())?;
            if summary.mean_rtf >= 1.0 {
                border = border.max(n);
            }
            records.extend(summary.records);
        }
        borders.push((delta_t, border));
    }
    let border_monotone = borders.windows(2).all(|w| w[0].1 <= w[1].1);
    Ok(OverheadSweep { records, borders, border_monotone })
}
