//! End-to-end acceptance checks: one test per shipped guarantee, each
//! printing a single `criterion N: PASS/FAIL` line with the measured numbers
//! (run with `--nocapture` to see the lines for passing tests).
//!
//! The tests serialise on a global lock because several of them assert on
//! wall-clock behaviour (real-time factors, pacing) and must not compete for
//! cores with each other.

use spikelink::bench::{self, EncoderKind, Scenario};
use spikelink::codec::{PoissonEncoder, RateCode, RegularEncoder};
use spikelink::nef::{evaluation_grid, reconstruction_rmse, NefConfig, NefPopulation};
use spikelink::rng::StreamRng;
use spikelink::runtime::{ExecMode, RunOptions, TranscriptEntry};
use spikelink::{build_graph, ConfigDocument, ContinuousFrame, SimClock};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

static GATE: Mutex<()> = Mutex::new(());

fn criterion(n: u32, body: impl FnOnce() -> Result<String, String>) {
    let _serial = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    match body() {
        Ok(detail) => {
            println!("criterion {n}: PASS — {detail} [{:.1} s]", started.elapsed().as_secs_f64());
        }
        Err(detail) => {
            println!("criterion {n}: FAIL — {detail}");
            panic!("criterion {n} failed: {detail}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn err_str(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// --- 1: population-coded reconstruction -------------------------------------

#[test]
fn c01_population_reconstruction() {
    criterion(1, || {
        let started = Instant::now();
        let train = evaluation_grid(1, 200);
        let eval = evaluation_grid(1, 500);
        ensure!(eval.len() == 500, "evaluation grid has {} points", eval.len());
        let reg = NefPopulation::default_regularization(200.0);
        let mut errors = Vec::new();
        for seed in 0..10u64 {
            let mut pop =
                NefPopulation::build(&NefConfig::default(), seed).map_err(err_str)?;
            pop.train_decoders(&train, reg).map_err(err_str)?;
            let rmse = reconstruction_rmse(&pop, &eval).map_err(err_str)?;
            ensure!(rmse <= 0.02, "seed {seed}: rmse {rmse:.5} > 0.02");
            errors.push(rmse);
        }
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (errors[4] + errors[5]) / 2.0;
        ensure!(median <= 0.015, "median rmse {median:.5} > 0.015");
        let elapsed = started.elapsed().as_secs_f64();
        ensure!(elapsed < 10.0, "took {elapsed:.1} s, budget 10 s");
        Ok(format!(
            "100-neuron 1-d reconstruction rmse ≤ {:.5} across 10 seeds, median {:.5}",
            errors[9], median
        ))
    });
}

// --- 2: encoder interval statistics ------------------------------------------

/// Drive an encoder step function with a constant input and return the spike
/// times of neuron 0, in order.
fn collect_times(
    mut step: impl FnMut(&ContinuousFrame, &SimClock) -> Vec<f64>,
    value: f64,
    delta_t: f64,
    ticks: i64,
    want: usize,
) -> Vec<f64> {
    let mut times = Vec::with_capacity(want + 16);
    for tick in 0..ticks {
        let clock = SimClock { delta_t, tick_index: tick };
        let frame = ContinuousFrame { tick_index: tick, values: vec![value] };
        times.extend(step(&frame, &clock));
        if times.len() >= want {
            break;
        }
    }
    times
}

#[test]
fn c02_encoder_interval_statistics() {
    criterion(2, || {
        let started = Instant::now();
        // Regular encoder: intervals must match the configured linear rate
        // map 1 / (v_min + (v_max - v_min)(1 + I)/2) almost exactly.
        let code = RateCode::new(1, 100.0, 200.0).map_err(err_str)?;
        let mut enc = RegularEncoder::new(code);
        let input = 0.25;
        let expected_isi = 1.0 / code.instantaneous_rate(input);
        let times = collect_times(
            |f, c| enc.step(f, c).expect("encode").events().iter().map(|e| e.time).collect(),
            input,
            0.01,
            4_000,
            3_000,
        );
        ensure!(times.len() >= 3_000, "only {} regular spikes", times.len());
        let isis: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let mut worst = 0.0f64;
        for isi in &isis {
            worst = worst.max((isi - expected_isi).abs() / expected_isi);
        }
        ensure!(worst < 1e-6, "regular isi relative error {worst:.3e} ≥ 1e-6");
        let cv_regular = bench::coefficient_of_variation(&isis);
        ensure!(cv_regular < 1e-9, "regular isi cv {cv_regular:.3e} ≥ 1e-9");

        // Poisson encoder: intervals drawn from an exponential law at the
        // configured rate; distribution checked by Kolmogorov-Smirnov.
        let rate = code.instantaneous_rate(0.0);
        let mut poisson = PoissonEncoder::new(code, StreamRng::new(42).child("acceptance"));
        let n_isis = 100_000;
        let times = collect_times(
            |f, c| poisson.step(f, c).expect("encode").events().iter().map(|e| e.time).collect(),
            0.0,
            0.01,
            i64::MAX,
            n_isis + 1,
        );
        ensure!(times.len() > n_isis, "only {} poisson spikes", times.len());
        let isis: Vec<f64> = times[..=n_isis].windows(2).map(|w| w[1] - w[0]).collect();
        let d = bench::ks_statistic(&isis, |t| 1.0 - (-rate * t.max(0.0)).exp());
        let crit = bench::ks_critical_1pct(isis.len());
        ensure!(d < crit, "poisson KS statistic {d:.5} ≥ critical {crit:.5}");
        let cv = bench::coefficient_of_variation(&isis);
        ensure!((0.95..=1.05).contains(&cv), "poisson isi cv {cv:.4} outside [0.95, 1.05]");
        let elapsed = started.elapsed().as_secs_f64();
        ensure!(elapsed < 30.0, "took {elapsed:.1} s, budget 30 s");
        Ok(format!(
            "regular isi err {worst:.1e}, cv {cv_regular:.1e}; poisson KS {d:.4} < {crit:.4}, cv {cv:.3} over {n_isis} intervals"
        ))
    });
}

// --- 3: relay fidelity --------------------------------------------------------

fn relay_config(with_relay: bool) -> String {
    let mut text = String::from(
        "[global]\n\
         delta_t = 0.01\n\
         t_sim = 10.1\n\
         seed = 42\n\
         \n\
         [src]\n\
         kind = constant\n\
         width = 100\n\
         value = 0\n\
         \n\
         [enc]\n\
         kind = rate_encoder\n\
         width = 100\n\
         v_min = 0\n\
         v_max = 2000\n\
         \n",
    );
    if with_relay {
        text.push_str("[net]\nkind = parrot\nwidth = 100\n\n");
    }
    text.push_str(
        "[dec]\n\
         kind = linear_decoder\n\
         width = 100\n\
         outputs = 1\n\
         phi = zeros\n\
         \n\
         [connections]\n\
         src.out -> enc.in\n",
    );
    if with_relay {
        text.push_str("enc.out -> net.in\nnet.out -> dec.in\n");
    } else {
        text.push_str("enc.out -> dec.in\n");
    }
    text
}

fn transcript_entries(config: &str, connection: &str) -> Result<Vec<TranscriptEntry>, String> {
    let doc = ConfigDocument::parse(config).map_err(err_str)?;
    let mut graph = build_graph(&doc, Path::new(".")).map_err(err_str)?;
    let report = graph
        .run(doc.global.t_sim, RunOptions { record_transcript: true, ..Default::default() })
        .map_err(err_str)?;
    let transcript = report.transcript.as_ref().expect("transcript recorded");
    Ok(transcript.for_connection(connection))
}

#[test]
fn c03_relay_fidelity() {
    criterion(3, || {
        let started = Instant::now();
        let direct = transcript_entries(&relay_config(false), "enc.out -> dec.in")?;
        let upstream = transcript_entries(&relay_config(true), "enc.out -> net.in")?;
        let relayed = transcript_entries(&relay_config(true), "net.out -> dec.in")?;
        // The encoder must be oblivious to what sits downstream.
        ensure!(
            direct == upstream,
            "encoder output changed when the relay was inserted ({} vs {} entries)",
            direct.len(),
            upstream.len()
        );
        ensure!(direct.len() >= 1_000_000, "only {} spikes generated", direct.len());
        let last_tick = direct.iter().map(|e| e.tick).max().unwrap();
        let in_flight = direct.iter().filter(|e| e.tick == last_tick).count();
        ensure!(
            relayed.len() + in_flight == direct.len(),
            "conservation: {} relayed + {} in flight != {} sent",
            relayed.len(),
            in_flight,
            direct.len()
        );
        // Entry-by-entry: the relayed transcript is the direct one shifted by
        // exactly one tick, spike times moved window-relatively.
        let clock = SimClock { delta_t: 0.01, tick_index: 0 };
        for (a, b) in direct.iter().zip(&relayed) {
            ensure!(
                b.tick == a.tick + 1 && b.neuron_id == a.neuron_id,
                "entry mismatch: sent (tick {}, neuron {}), relayed (tick {}, neuron {})",
                a.tick,
                a.neuron_id,
                b.tick,
                b.neuron_id
            );
            let out_start = clock.tick_start(b.tick);
            let out_end = clock.tick_end(b.tick);
            let mut expected = out_start + (a.time - clock.tick_start(a.tick));
            if expected >= out_end {
                expected = out_end.next_down();
            }
            ensure!(
                b.time == expected.max(out_start),
                "time mismatch at tick {}: {} vs expected {}",
                a.tick,
                b.time,
                expected
            );
        }
        let elapsed = started.elapsed().as_secs_f64();
        ensure!(elapsed < 60.0, "took {elapsed:.1} s, budget 60 s");
        Ok(format!(
            "{} spikes relayed one tick late, {} in flight at cutoff, counts conserved",
            relayed.len(),
            in_flight
        ))
    });
}

// --- 4: latency law -----------------------------------------------------------

#[test]
fn c04_latency_law() {
    criterion(4, || {
        let dts = [0.001, 0.005, 0.01, 0.05];
        let mut summary = String::new();
        for hops in 1..=3usize {
            let m = bench::measure_latency(&dts, hops, RunOptions::default())
                .map_err(err_str)?;
            for (rec, &dt) in m.records.iter().zip(&dts) {
                let expected = hops as f64 * dt;
                ensure!(
                    rec.latency_s == Some(expected),
                    "{hops} hops at dt {dt}: latency {:?} != {expected}",
                    rec.latency_s
                );
            }
            ensure!(
                (m.fit.slope - hops as f64).abs() < 1e-9,
                "{hops} hops: slope {} != {hops}",
                m.fit.slope
            );
            ensure!(m.fit.r2 > 0.999, "{hops} hops: r2 {} ≤ 0.999", m.fit.r2);
            summary.push_str(&format!("H={hops} slope {:.6}; ", m.fit.slope));
        }
        Ok(format!(
            "latency = hops x tick length exactly over dt {{1,5,10,50}} ms; {}all fits r2 > 0.999",
            summary
        ))
    });
}

// --- 5: real-time factor accounting -------------------------------------------

#[test]
fn c05_rtf_accounting_and_pacing() {
    criterion(5, || {
        // Identity: rtf * t_run recovers t_sim on every record produced.
        let scenario = Scenario::toolchain(EncoderKind::Rate, 64, 0.01, 42);
        let summary =
            bench::measure_rtf(&scenario, 1.0, 3, RunOptions::default()).map_err(err_str)?;
        let mut worst = 0.0f64;
        for rec in &summary.records {
            let rel = (rec.rtf * rec.t_run_s - rec.t_sim_s).abs() / rec.t_sim_s;
            worst = worst.max(rel);
            ensure!(rel < 1e-9, "rtf * t_run off by {rel:.2e} relative");
        }
        // Pacing: a trivial two-stage graph throttled to the wall clock runs
        // ten simulated seconds in ten real ones.
        let trivial = Scenario::trivial(0.01);
        let mut graph = trivial.build().map_err(err_str)?;
        let report = graph
            .run(10.0, RunOptions { mode: ExecMode::Threaded { pace: true }, ..Default::default() })
            .map_err(err_str)?;
        let rtf = report.rtf();
        ensure!(
            (0.98..=1.02).contains(&rtf),
            "paced rtf {rtf:.4} outside [0.98, 1.02] (t_run {:.3} s)",
            report.t_run
        );
        Ok(format!(
            "rtf x t_run = t_sim within {worst:.1e} relative; paced run held rtf {rtf:.4}"
        ))
    });
}

// --- 6: throughput under event load --------------------------------------------

#[test]
fn c06_bandwidth_trend() {
    criterion(6, || {
        // Calibrate a population size near the real-time border so the rate
        // sweep actually stresses event traffic (cost scales inversely, so
        // one probe pins the scale).
        let probe = Scenario::bandwidth(2048, 10.0, 0.001, 42);
        let cal = bench::measure_rtf(&probe, 0.5, 1, RunOptions::default()).map_err(err_str)?;
        let n = ((2048.0 * cal.mean_rtf) as usize).clamp(4096, 1 << 18);
        // The band must reach rates where event traffic is a first-order
        // cost, or the trend drowns in trial noise.
        let rates = [5.0, 20.0, 80.0, 200.0, 400.0, 800.0];
        let t_sim = 2.0;
        let m = bench::measure_bandwidth(n, &rates, 0.001, t_sim, 2, 42).map_err(err_str)?;
        ensure!(m.points.len() >= 6, "only {} rate points", m.points.len());
        ensure!(
            m.spearman_rho <= 0.0,
            "rtf not non-increasing in rate: spearman rho {:.3} > 0 (rtfs {:?})",
            m.spearman_rho,
            m.points.iter().map(|p| p.mean_rtf).collect::<Vec<_>>()
        );
        // Throughput against the nominal n * rate. Regular encoding quantises
        // to whole spikes per neuron, bounding the error by 1/(rate * t_sim),
        // so the 5% check applies where that bound sits well inside it.
        let mut checked = 0;
        for p in &m.points {
            if p.rate_hz * t_sim < 40.0 {
                continue;
            }
            let rel = (p.spikes_per_s - p.expected_spikes_per_s).abs() / p.expected_spikes_per_s;
            ensure!(
                rel <= 0.05,
                "throughput at {} Hz off by {rel:.3} relative ({} vs {} spikes/s)",
                p.rate_hz,
                p.spikes_per_s,
                p.expected_spikes_per_s
            );
            checked += 1;
        }
        ensure!(checked >= 3, "only {checked} throughput points above the quantisation floor");
        Ok(format!(
            "n={n}: rtf non-increasing over {} rates (rho {:.2}), throughput within 5% at {checked} points",
            m.points.len(),
            m.spearman_rho
        ))
    });
}

// --- 7: capacity ordering across encoder families -------------------------------

#[test]
fn c07_capacity_ordering() {
    criterion(7, || {
        // Synthetic oracle first: the bisection must stay logarithmic and land
        // within 10% of the true border.
        let mut oracle_probes = 0usize;
        let search = bench::find_realtime_limit_with(
            |n| {
                oracle_probes += 1;
                Ok(1000.0 / n as f64)
            },
            100,
            1600,
        )
        .map_err(err_str)?;
        ensure!(
            (search.n_limit as f64 - 1000.0).abs() / 1000.0 <= 0.10,
            "oracle limit {} not within 10% of 1000",
            search.n_limit
        );
        ensure!(search.probes == oracle_probes, "probe accounting is wrong");
        ensure!(
            search.probes <= 12,
            "oracle search spent {} probes on a 16x bracket",
            search.probes
        );
        // Timed orderings: simple rate coding and Poisson coding both drive
        // far larger populations in real time than the population coder,
        // whose neurons integrate on a fine grid every tick.
        let dt = 0.01;
        let (rate, _) =
            bench::find_realtime_limit(EncoderKind::Rate, (512, 8192), dt, 0.25, 1, 42)
                .map_err(err_str)?;
        let (poisson, _) =
            bench::find_realtime_limit(EncoderKind::Poisson, (512, 8192), dt, 0.25, 1, 42)
                .map_err(err_str)?;
        let (nef, _) = bench::find_realtime_limit(EncoderKind::Nef, (64, 1024), dt, 0.25, 1, 42)
            .map_err(err_str)?;
        ensure!(
            rate.n_limit > nef.n_limit,
            "rate limit {} not above population-coder limit {}",
            rate.n_limit,
            nef.n_limit
        );
        ensure!(
            poisson.n_limit > nef.n_limit,
            "poisson limit {} not above population-coder limit {}",
            poisson.n_limit,
            nef.n_limit
        );
        Ok(format!(
            "oracle: {} probes, limit {}; measured limits rate {} and poisson {} both exceed nef {}",
            search.probes, search.n_limit, rate.n_limit, poisson.n_limit, nef.n_limit
        ))
    });
}

// --- 8: real-time border vs tick length ------------------------------------------

#[test]
fn c08_overhead_border_monotone() {
    criterion(8, || {
        let dts = [0.001, 0.005, 0.01, 0.05];
        let counts = [1024, 4096, 16384, 65536];
        let sweep = bench::sweep_overhead(&dts, &counts, EncoderKind::Rate, 0.5, 1, 42)
            .map_err(err_str)?;
        ensure!(
            sweep.records.len() == dts.len() * counts.len(),
            "expected a full {}x{} grid, got {} records",
            dts.len(),
            counts.len(),
            sweep.records.len()
        );
        let borders: Vec<String> =
            sweep.borders.iter().map(|(dt, b)| format!("{}ms:{b}", dt * 1e3)).collect();
        ensure!(
            sweep.border_monotone,
            "real-time border not monotone over tick lengths: {}",
            borders.join(" ")
        );
        ensure!(
            sweep.borders.last().unwrap().1 >= counts[0],
            "no population ran in real time even at the longest tick: {}",
            borders.join(" ")
        );
        Ok(format!("border non-decreasing over dt sweep: {}", borders.join(" ")))
    });
}

// --- 9: obstacle-avoidance demo ----------------------------------------------------

#[test]
fn c09_explorer_demo() {
    criterion(9, || {
        let started = Instant::now();
        let dir = configs_dir();
        let text = std::fs::read_to_string(dir.join("braitenberg.cfg")).map_err(err_str)?;
        let doc = ConfigDocument::parse(&text).map_err(err_str)?;
        ensure!(doc.stages.len() == 6, "demo pipeline has {} stages", doc.stages.len());
        ensure!(doc.global.delta_t == 0.05, "demo tick is {} s", doc.global.delta_t);
        ensure!(doc.global.t_sim == 60.0, "demo runs {} s", doc.global.t_sim);
        let mut graph = build_graph(&doc, &dir).map_err(err_str)?;
        let report = graph.run(doc.global.t_sim, RunOptions::default()).map_err(err_str)?;
        let collisions = report.metric("bot", "collision_ticks").unwrap_or(f64::NAN);
        let path = report.metric("bot", "path_length").unwrap_or(f64::NAN);
        ensure!(collisions == 0.0, "{collisions} collision ticks");
        ensure!(path >= 5.0, "path length {path:.2} m < 5 m");
        let pose = report.table("bot.pose").ok_or("no pose table")?;
        let rows = pose.lines().count() - 1;
        ensure!(rows == 1200, "pose trace has {rows} rows, expected 1200");
        let elapsed = started.elapsed().as_secs_f64();
        ensure!(elapsed < 60.0, "took {elapsed:.1} s, budget 60 s");
        Ok(format!(
            "60 s at 20 Hz: zero collisions, path {path:.2} m, 1200 pose rows"
        ))
    });
}

// --- 10: bit-level determinism ------------------------------------------------------

#[test]
fn c10_determinism() {
    criterion(10, || {
        // The shipped demo, twice in deterministic mode and once threaded.
        let dir = configs_dir();
        let text = std::fs::read_to_string(dir.join("braitenberg.cfg")).map_err(err_str)?;
        let mut doc = ConfigDocument::parse(&text).map_err(err_str)?;
        doc.global.t_sim = 5.0;
        let run = |mode: ExecMode| -> Result<(String, String), String> {
            let mut graph = build_graph(&doc, &dir).map_err(err_str)?;
            let report = graph
                .run(doc.global.t_sim, RunOptions { mode, record_transcript: true })
                .map_err(err_str)?;
            let transcript = report.transcript.as_ref().expect("recorded").to_csv();
            let pose = report.table("bot.pose").ok_or("no pose table")?.to_string();
            Ok((transcript, pose))
        };
        let (t1, p1) = run(ExecMode::SingleThread)?;
        let (t2, p2) = run(ExecMode::SingleThread)?;
        let (t3, p3) = run(ExecMode::Threaded { pace: false })?;
        ensure!(!t1.lines().nth(1).unwrap_or("").is_empty(), "demo transcript is empty");
        ensure!(t1 == t2 && p1 == p2, "repeat deterministic runs differ");
        ensure!(t1 == t3 && p1 == p3, "threaded run differs from deterministic run");

        // A stochastic encoder under the same seed must also reproduce.
        let scenario = Scenario::toolchain(EncoderKind::Poisson, 64, 0.01, 7);
        let stochastic = || -> Result<String, String> {
            let mut graph = scenario.build().map_err(err_str)?;
            let report = graph
                .run(2.0, RunOptions { record_transcript: true, ..Default::default() })
                .map_err(err_str)?;
            Ok(report.transcript.as_ref().expect("recorded").to_csv())
        };
        let s1 = stochastic()?;
        let s2 = stochastic()?;
        ensure!(!s1.lines().nth(1).unwrap_or("").is_empty(), "stochastic transcript is empty");
        ensure!(s1 == s2, "same-seed stochastic runs differ");
        Ok(format!(
            "demo transcripts and pose traces byte-identical across repeats and executors ({} transcript bytes); seeded stochastic run reproduces ({} bytes)",
            t1.len(),
            s1.len()
        ))
    });
}
