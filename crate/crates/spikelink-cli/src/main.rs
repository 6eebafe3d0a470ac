//! Command line front end: run pipelines from configuration files, drive the
//! measurement harness, and launch the packaged obstacle-avoidance demo.
//!
//! Exit codes: 0 on success, 2 for configuration problems (parse errors,
//! unknown stages, bad flags), 3 for failures at run time.

use clap::{Args, Parser, Subcommand, ValueEnum};
use spikelink::bench::{self, BenchError, BenchRecord, EncoderKind, Scenario};
use spikelink::runtime::{ExecMode, RunOptions, RunReport};
use spikelink::{build_graph, ConfigDocument, RunMode};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spikelink",
    version,
    about = "Closed-loop co-simulation between continuous signals and spike trains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a pipeline from a configuration file and run it.
    Run(RunArgs),
    /// Performance measurements; aggregates on stdout, raw trials as CSV.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Packaged demonstrations.
    #[command(subcommand)]
    Demo(DemoCommand),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override simulated duration in seconds.
    #[arg(long = "t-sim")]
    t_sim: Option<f64>,
    /// Override the tick length (e.g. "50ms" or "0.05").
    #[arg(long)]
    dt: Option<String>,
    /// Override the execution mode.
    #[arg(long, value_enum)]
    mode: Option<CliMode>,
    /// Override the random seed (flag beats config beats SPIKELINK_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the robot pose trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the full spike transcript CSV here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Write the run report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the report as JSON on stdout instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CliMode {
    /// Single-threaded, fixed stage order, no pacing.
    Deterministic,
    /// One thread per stage, barrier-synchronised, unpaced.
    Threaded,
    /// Threaded with wall-clock pacing to one simulated second per second.
    Realtime,
}

impl CliMode {
    fn exec(self) -> ExecMode {
        match self {
            CliMode::Deterministic => ExecMode::SingleThread,
            CliMode::Threaded => ExecMode::Threaded { pace: false },
            CliMode::Realtime => ExecMode::Threaded { pace: true },
        }
    }
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Real-time factor of the closed sensorimotor loop at one size.
    Rtf(RtfArgs),
    /// Largest population that still runs in real time (bisection).
    Limit(LimitArgs),
    /// Real-time factor and spike throughput across firing rates.
    Bandwidth(BandwidthArgs),
    /// Sensor-to-motor latency across tick lengths.
    Latency(LatencyArgs),
    /// Real-time border over the tick-length / population grid.
    Overhead(OverheadArgs),
}

#[derive(Args)]
struct RtfArgs {
    /// Encoder family: rate, poisson, or nef.
    #[arg(long, default_value = "rate")]
    encoder: String,
    /// Encoding population size.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Tick length (e.g. "10ms").
    #[arg(long, default_value = "10ms")]
    dt: String,
    /// Simulated seconds per trial.
    #[arg(long = "t-sim", default_value_t = 10.0)]
    t_sim: f64,
    /// Timed trials (one warm-up run is discarded first).
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Raw trial CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, default_value = "rate")]
    encoder: String,
    /// Bracket low end (must still be real-time capable).
    #[arg(long, default_value_t = 256)]
    lo: usize,
    /// Bracket high end (doubled automatically until past the limit).
    #[arg(long, default_value_t = 4096)]
    hi: usize,
    #[arg(long, default_value = "10ms")]
    dt: String,
    #[arg(long = "t-sim", default_value_t = 1.0)]
    t_sim: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandwidthArgs {
    /// Population size; pick near the border reported by `bench limit`.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Firing rates in Hz, comma-separated.
    #[arg(long, default_value = "2,5,10,20,40,80")]
    rates: String,
    #[arg(long, default_value = "1ms")]
    dt: String,
    #[arg(long = "t-sim", default_value_t = 2.0)]
    t_sim: f64,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LatencyArgs {
    /// Buffered connections between stimulus and probe.
    #[arg(long, default_value_t = 3)]
    hops: usize,
    /// Tick lengths to sweep, comma-separated (e.g. "10,20,50ms").
    #[arg(long, default_value = "1,5,10,50ms")]
    dt: String,
    #[arg(long, value_enum, default_value_t = CliMode::Deterministic)]
    mode: CliMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OverheadArgs {
    /// Tick lengths to sweep, comma-separated (e.g. "1,5,10ms").
    #[arg(long, default_value = "1,5,10,50ms")]
    dts: String,
    /// Population sizes, comma-separated.
    #[arg(long, default_value = "1000,4000,16000,64000")]
    counts: String,
    #[arg(long, default_value = "rate")]
    encoder: String,
    #[arg(long = "t-sim", default_value_t = 2.0)]
    t_sim: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Braitenberg-style explorer: spike-controlled obstacle avoidance.
    Braitenberg(DemoArgs),
}

#[derive(Args)]
struct DemoArgs {
    /// Simulated seconds (the shipped config runs 60).
    #[arg(long = "t-sim")]
    t_sim: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the robot pose trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the report as JSON on stdout instead of the summary.
    #[arg(long)]
    json: bool,
}

// --- error plumbing ---------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Bad input: config files, flag values, invalid brackets. Exit 2.
    Config(String),
    /// The pipeline itself failed while running. Exit 3.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_)
            | BenchError::Build(_)
            | BenchError::BadBracket { .. }
            | BenchError::BracketInvalid { .. } => CliError::Config(e.to_string()),
            BenchError::Run(_) | BenchError::BracketUnbounded { .. } | BenchError::NoResponse { .. } => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(cmd) => cmd_bench(cmd),
        Command::Demo(DemoCommand::Braitenberg(args)) => cmd_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

// --- shared helpers ---------------------------------------------------------

/// Parse a comma-separated duration list. A trailing `ms` or `s` suffix sets
/// the unit for every suffix-less entry; bare numbers default to seconds.
/// "10,20,50ms" -> [0.010, 0.020, 0.050].
fn parse_durations(spec: &str) -> Result<Vec<f64>, CliError> {
    let tokens: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = |t: &str| CliError::Config(format!("bad duration {t:?} in {spec:?}"));
    fn unit_of(t: &str) -> Option<(f64, &str)> {
        if let Some(rest) = t.strip_suffix("ms") {
            Some((1e-3, rest))
        } else {
            t.strip_suffix('s').map(|rest| (1.0, rest))
        }
    }
    let default_unit = tokens.last().and_then(|t| unit_of(t)).map_or(1.0, |(u, _)| u);
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        let (unit, digits) = unit_of(t).unwrap_or((default_unit, t));
        if digits.is_empty() {
            return Err(bad(t));
        }
        let v: f64 = digits.parse().map_err(|_| bad(t))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(t));
        }
        out.push(v * unit);
    }
    Ok(out)
}

fn parse_duration(spec: &str) -> Result<f64, CliError> {
    let list = parse_durations(spec)?;
    if list.len() != 1 {
        return Err(CliError::Config(format!("expected one duration, got {spec:?}")));
    }
    Ok(list[0])
}

fn parse_f64_list(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number {t:?} in {spec:?}")))
        })
        .collect()
}

fn parse_usize_list(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad count {t:?} in {spec:?}")))
        })
        .collect()
}

fn parse_encoder(name: &str) -> Result<EncoderKind, CliError> {
    EncoderKind::parse(name)
        .ok_or_else(|| CliError::Config(format!("unknown encoder {name:?} (rate, poisson, nef)")))
}

fn env_seed() -> Option<u64> {
    std::env::var("SPIKELINK_SEED").ok().and_then(|v| v.parse().ok())
}

/// Seed for bench scenarios: flag beats SPIKELINK_SEED beats the default.
fn bench_seed(flag: Option<u64>) -> u64 {
    flag.or_else(env_seed).unwrap_or(spikelink::config::DEFAULT_SEED)
}

/// True when the [global] section of the raw text sets `seed` explicitly
/// (the parsed document cannot tell an explicit default apart).
fn config_sets_seed(text: &str) -> bool {
    let mut in_global = false;
    for raw in text.lines() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.starts_with('[') {
            in_global = line == "[global]";
        } else if in_global {
            if let Some((key, _)) = line.split_once('=') {
                if key.trim() == "seed" {
                    return true;
                }
            }
        }
    }
    false
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn write_records(path: &Path, records: &[BenchRecord]) -> Result<(), CliError> {
    write_file(path, &bench::records_to_csv(records))
}

fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

// --- run --------------------------------------------------------------------

fn print_run_summary(report: &RunReport, mode: CliMode, seed: u64) {
    let mode = match mode {
        CliMode::Deterministic => "deterministic",
        CliMode::Threaded => "threaded",
        CliMode::Realtime => "realtime",
    };
    println!("mode        {mode}");
    println!("seed        {seed}");
    println!(
        "ticks       {} (delta_t {} s, t_sim {} s)",
        report.ticks, report.delta_t, report.t_sim
    );
    println!("t_build     {:.6} s", report.t_build);
    println!("t_run       {:.6} s", report.t_run);
    println!("rtf         {:.4}", report.rtf());
    println!(
        "spikes      {} across {} connections",
        report.spikes_transported,
        report.connection_spike_counts.len()
    );
    if report.overrun_ticks > 0 {
        println!("overruns    {} ticks missed their deadline", report.overrun_ticks);
    }
    if let Some(t) = &report.transcript {
        println!("transcript  {} events, hash {:016x}", t.entries.len(), t.hash());
    }
    let mut metrics = String::new();
    for (stage, ms) in &report.stage_metrics {
        for (name, value) in ms {
            let _ = writeln!(metrics, "  {stage}.{name} = {value}");
        }
    }
    if !metrics.is_empty() {
        println!("stage metrics:");
        print!("{metrics}");
    }
}

/// Write the pose trace of the (single) robot stage, or report which tables
/// exist when there is none.
fn write_pose_trace(report: &RunReport, path: &Path) -> Result<(), CliError> {
    let pose = report
        .tables
        .iter()
        .find(|(name, _)| name.ends_with(".pose"))
        .map(|(_, table)| table.as_str());
    match pose {
        Some(table) => write_file(path, table),
        None => Err(CliError::Config(format!(
            "no pose table in this pipeline (tables: {})",
            report
                .tables
                .iter()
                .map(|(n, _)| n.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn run_document(
    mut doc: ConfigDocument,
    base_dir: &Path,
    seed_flag: Option<u64>,
    config_has_seed: bool,
    args_t_sim: Option<f64>,
    args_dt: Option<&str>,
    args_mode: Option<CliMode>,
) -> Result<(RunReport, CliMode, u64), CliError> {
    if let Some(t) = args_t_sim {
        doc.global.t_sim = t;
    }
    if let Some(spec) = args_dt {
        doc.global.delta_t = parse_duration(spec)?;
    }
    // Seed precedence: --seed, then an explicit config value, then the
    // SPIKELINK_SEED environment variable, then the built-in default.
    if let Some(seed) = seed_flag {
        doc.global.seed = seed;
    } else if !config_has_seed {
        if let Some(seed) = env_seed() {
            doc.global.seed = seed;
        }
    }
    let mode = args_mode.unwrap_or(match doc.global.mode {
        RunMode::Deterministic => CliMode::Deterministic,
        RunMode::Realtime => CliMode::Realtime,
    });
    let mut graph = build_graph(&doc, base_dir).map_err(config_err)?;
    let options = RunOptions { mode: mode.exec(), record_transcript: true };
    let report = graph
        .run(doc.global.t_sim, options)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok((report, mode, doc.global.seed))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", args.config.display())))?;
    let doc = ConfigDocument::parse(&text).map_err(config_err)?;
    let base_dir = args.config.parent().unwrap_or(Path::new("."));
    let (report, mode, seed) = run_document(
        doc,
        base_dir,
        args.seed,
        config_sets_seed(&text),
        args.t_sim,
        args.dt.as_deref(),
        args.mode,
    )?;
    if let Some(path) = &args.transcript {
        let t = report.transcript.as_ref().expect("transcript was recorded");
        write_file(path, &t.to_csv())?;
    }
    if let Some(path) = &args.trace {
        write_pose_trace(&report, path)?;
    }
    if let Some(path) = &args.out {
        write_file(path, &report_json(&report))?;
    }
    if args.json {
        println!("{}", report_json(&report));
    } else {
        println!("config      {}", args.config.display());
        print_run_summary(&report, mode, seed);
    }
    Ok(())
}

// --- bench ------------------------------------------------------------------

fn cmd_bench(cmd: BenchCommand) -> Result<(), CliError> {
    match cmd {
        BenchCommand::Rtf(a) => bench_rtf(a),
        BenchCommand::Limit(a) => bench_limit(a),
        BenchCommand::Bandwidth(a) => bench_bandwidth(a),
        BenchCommand::Latency(a) => bench_latency(a),
        BenchCommand::Overhead(a) => bench_overhead(a),
    }
}

fn bench_rtf(a: RtfArgs) -> Result<(), CliError> {
    let kind = parse_encoder(&a.encoder)?;
    let delta_t = parse_duration(&a.dt)?;
    let scenario = Scenario::toolchain(kind, a.n, delta_t, bench_seed(a.seed));
    let summary = bench::measure_rtf(&scenario, a.t_sim, a.trials, RunOptions::default())?;
    println!(
        "rtf {}: n={} dt={}s t_sim={}s trials={}",
        kind.name(),
        a.n,
        delta_t,
        a.t_sim,
        a.trials
    );
    println!(
        "  mean rtf {:.4} (std {:.4}), mean t_build {:.4} s, epsilon {:.4} s",
        summary.mean_rtf,
        summary.std_rtf,
        bench::mean(&summary.records.iter().map(|r| r.t_build_s).collect::<Vec<_>>()),
        summary.epsilon_s
    );
    if let Some(path) = &a.out {
        write_records(path, &summary.records)?;
    }
    Ok(())
}

fn bench_limit(a: LimitArgs) -> Result<(), CliError> {
    let kind = parse_encoder(&a.encoder)?;
    let delta_t = parse_duration(&a.dt)?;
    let (search, records) = bench::find_realtime_limit(
        kind,
        (a.lo, a.hi),
        delta_t,
        a.t_sim,
        a.trials,
        bench_seed(a.seed),
    )?;
    println!(
        "limit {}: n_limit={} probes={} bracket=[{},{}] dt={}s",
        kind.name(),
        search.n_limit,
        search.probes,
        search.lo,
        search.hi,
        delta_t
    );
    if let Some(path) = &a.out {
        write_records(path, &records)?;
    }
    Ok(())
}

fn bench_bandwidth(a: BandwidthArgs) -> Result<(), CliError> {
    let rates = parse_f64_list(&a.rates)?;
    let delta_t = parse_duration(&a.dt)?;
    let m = bench::measure_bandwidth(a.n, &rates, delta_t, a.t_sim, a.trials, bench_seed(a.seed))?;
    println!("bandwidth: n={} dt={}s t_sim={}s trials={}", a.n, delta_t, a.t_sim, a.trials);
    println!("  rate_hz  mean_rtf  spikes_per_s  expected");
    for p in &m.points {
        println!(
            "  {:>7}  {:>8.4}  {:>12.1}  {:>8.1}",
            p.rate_hz, p.mean_rtf, p.spikes_per_s, p.expected_spikes_per_s
        );
    }
    println!("  spearman rho (rate vs rtf) = {:.4}", m.spearman_rho);
    if let Some(path) = &a.out {
        write_records(path, &m.records)?;
    }
    Ok(())
}

fn bench_latency(a: LatencyArgs) -> Result<(), CliError> {
    if a.hops == 0 {
        return Err(CliError::Config("a chain needs at least one hop".into()));
    }
    let dts = parse_durations(&a.dt)?;
    let options = RunOptions { mode: a.mode.exec(), ..Default::default() };
    let m = bench::measure_latency(&dts, a.hops, options)?;
    println!("latency: {} hops over {} tick lengths", m.hops, dts.len());
    println!("  delta_t_s  latency_s");
    for rec in &m.records {
        println!("  {:>9}  {:>9}", rec.delta_t_s, rec.latency_s.unwrap_or(f64::NAN));
    }
    println!(
        "  fit: slope {:.6} (hops), intercept {:.3e} s, r2 {:.6}",
        m.fit.slope, m.fit.intercept, m.fit.r2
    );
    if let Some(path) = &a.out {
        write_records(path, &m.records)?;
    }
    Ok(())
}

fn bench_overhead(a: OverheadArgs) -> Result<(), CliError> {
    let kind = parse_encoder(&a.encoder)?;
    let dts = parse_durations(&a.dts)?;
    let counts = parse_usize_list(&a.counts)?;
    let sweep =
        bench::sweep_overhead(&dts, &counts, kind, a.t_sim, a.trials, bench_seed(a.seed))?;
    println!(
        "overhead {}: {} tick lengths x {} sizes, t_sim={}s trials={}",
        kind.name(),
        dts.len(),
        counts.len(),
        a.t_sim,
        a.trials
    );
    println!("  delta_t_s  border_n");
    for (dt, border) in &sweep.borders {
        println!("  {dt:>9}  {border:>8}");
    }
    println!(
        "  border monotone non-decreasing with delta_t: {}",
        if sweep.border_monotone { "yes" } else { "no" }
    );
    if let Some(path) = &a.out {
        write_records(path, &sweep.records)?;
    }
    Ok(())
}

// --- demo -------------------------------------------------------------------

const DEMO_CONFIG: &str = include_str!("../../../configs/braitenberg.cfg");
const DEMO_ARENA: &str = include_str!("../../../configs/braitenberg_arena.txt");
const DEMO_PHI: &str = include_str!("../../../configs/braitenberg_phi.csv");

fn cmd_demo(args: DemoArgs) -> Result<(), CliError> {
    // The shipped config references its arena and decoder matrix by relative
    // path, so materialise all three into a scratch directory and build there.
    let dir = std::env::temp_dir().join(format!("spikelink-demo-{}", std::process::id()));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
    fs::write(dir.join("braitenberg.cfg"), DEMO_CONFIG)
        .and_then(|()| fs::write(dir.join("braitenberg_arena.txt"), DEMO_ARENA))
        .and_then(|()| fs::write(dir.join("braitenberg_phi.csv"), DEMO_PHI))
        .map_err(|e| CliError::Runtime(format!("preparing demo assets: {e}")))?;
    let doc = ConfigDocument::parse(DEMO_CONFIG).map_err(config_err)?;
    let (report, _, seed) = run_document(
        doc,
        &dir,
        args.seed,
        config_sets_seed(DEMO_CONFIG),
        args.t_sim,
        None,
        None,
    )?;
    if let Some(path) = &args.trace {
        write_pose_trace(&report, path)?;
    }
    if args.json {
        println!("{}", report_json(&report));
        return Ok(());
    }
    println!("braitenberg explorer: {} s simulated, seed {seed}", report.t_sim);
    let metric = |name: &str| report.metric("bot", name).unwrap_or(f64::NAN);
    println!("  path length     {:.2} m", metric("path_length"));
    println!("  collision ticks {}", metric("collision_ticks"));
    println!(
        "  final pose      ({:.2}, {:.2}) heading {:.2} rad",
        metric("x"),
        metric("y"),
        metric("heading")
    );
    println!("  rtf             {:.1}", report.rtf());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_lists_share_a_trailing_unit() {
        assert_eq!(parse_durations("10,20,50ms").unwrap(), vec![0.010, 0.020, 0.050]);
        assert_eq!(parse_durations("50ms").unwrap(), vec![0.050]);
        assert_eq!(parse_durations("0.01,0.05").unwrap(), vec![0.01, 0.05]);
        assert_eq!(parse_durations("1s,5ms").unwrap(), vec![1.0, 0.005]);
        assert!(parse_durations("fast").is_err());
        assert!(parse_durations("10,,20ms").is_err());
        assert!(parse_durations("-5ms").is_err());
    }

    #[test]
    fn single_duration_rejects_lists() {
        assert_eq!(parse_duration("5ms").unwrap(), 0.005);
        assert!(parse_duration("5,10ms").is_err());
    }

    #[test]
    fn explicit_seed_lines_are_detected() {
        assert!(config_sets_seed("[global]\nseed = 7\n"));
        assert!(config_sets_seed("[global]\nt_sim = 1\nseed=9 # pinned\n"));
        assert!(!config_sets_seed("[global]\nt_sim = 1\n[stage]\nseed = 3\n"));
        assert!(!config_sets_seed("[global]\n# seed = 3\n"));
    }

    #[test]
    fn demo_assets_are_complete() {
        let doc = ConfigDocument::parse(DEMO_CONFIG).unwrap();
        assert_eq!(doc.stages.len(), 6);
        assert!(DEMO_ARENA.lines().any(|l| !l.trim().is_empty()));
        assert!(DEMO_PHI.starts_with("linear,angular"));
    }

    #[test]
    fn cli_declares_consistent_flags() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
