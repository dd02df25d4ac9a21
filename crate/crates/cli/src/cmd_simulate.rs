use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use padicprob::interference::{
    poisson_dispersion_test, run_scenario_streaming, visibility, window_counts, GroupBy,
    Histogram, ScenarioKind, ScenarioSpec,
};

use crate::common::{
    artifact_path, provenance, read_bytes, sha256_hex, stream_atomic, usage, write_atomic,
    CmdResult,
};

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario document (JSON)
    #[arg(short, long)]
    spec: PathBuf,
    /// Override the seed stored in the document
    #[arg(long)]
    seed: Option<u64>,
    /// Independent replicas, seeded seed, seed+1, …
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    /// Histogram grouping for per-group visibility
    #[arg(long, value_enum, default_value_t = GroupArg::Auto)]
    group_by: GroupArg,
    /// Odd moving-average window for visibility smoothing
    #[arg(long, default_value_t = 5)]
    smoothing: usize,
    /// Significance level for the Poisson dispersion check
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Basename for artifacts in the output directory
    #[arg(long, default_value = "run")]
    stem: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    /// slit-pair for random-two-slit, pooled otherwise
    Auto,
    SlitPair,
    Apparatus,
    None,
}

pub fn run(args: SimulateArgs, out_dir: &Path, verbose: bool) -> CmdResult<()> {
    let bytes = read_bytes(&args.spec)?;
    let spec_hash = sha256_hex(&bytes);
    let mut spec: ScenarioSpec = serde_json::from_slice(&bytes)
        .map_err(|e| usage(format!("{}: spec schema: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }

    // Collect every schema violation in one pass instead of failing on the
    // first: a rejected document should name all of its problems.
    let mut violations = Vec::new();
    if let Err(e) = spec.geometry.validate() {
        violations.push(format!("geometry: {e}"));
    }
    if let Err(e) = spec.kernel.validate() {
        violations.push(format!("kernel: {e}"));
    }
    if let Err(e) = spec.validate() {
        let msg = e.to_string();
        if !violations.iter().any(|v| v.ends_with(&msg)) {
            violations.push(format!("scenario: {msg}"));
        }
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        violations.push(format!("alpha must be in (0, 1), got {}", args.alpha));
    }
    if args.replicas == 0 || args.replicas > 256 {
        violations.push(format!("replicas must be in 1..=256, got {}", args.replicas));
    }
    if !violations.is_empty() {
        return Err(usage(format!(
            "invalid scenario spec {}:\n  - {}",
            args.spec.display(),
            violations.join("\n  - ")
        )));
    }

    let group = match args.group_by {
        GroupArg::Auto => match spec.scenario {
            ScenarioKind::RandomTwoSlit => GroupBy::SlitPair,
            _ => GroupBy::None,
        },
        GroupArg::SlitPair => GroupBy::SlitPair,
        GroupArg::Apparatus => GroupBy::Apparatus,
        GroupArg::None => GroupBy::None,
    };

    let mut replica_specs = Vec::new();
    for r in 0..args.replicas {
        let mut s = spec.clone();
        s.seed = spec.seed.wrapping_add(r);
        replica_specs.push(s);
    }

    let paths: Vec<(PathBuf, PathBuf)> = (0..args.replicas)
        .map(|r| {
            let stem = if args.replicas == 1 {
                args.stem.clone()
            } else {
                format!("{}.r{r}", args.stem)
            };
            (
                artifact_path(out_dir, &stem, "ndjson"),
                artifact_path(out_dir, &stem, "hist.csv"),
            )
        })
        .collect();

    let results: Vec<CmdResult<serde_json::Value>> = if args.replicas == 1 {
        vec![run_replica(&replica_specs[0], group, &args, &paths[0].0, &paths[0].1)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = replica_specs
                .iter()
                .zip(&paths)
                .map(|(s, (ndjson, hist))| {
                    scope.spawn(|| run_replica(s, group, &args, ndjson, hist))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("replica thread panicked")).collect()
        })
    };
    let replicas: Vec<serde_json::Value> = results.into_iter().collect::<CmdResult<_>>()?;

    let pooled_vis: Vec<f64> = replicas
        .iter()
        .filter_map(|r| r["visibility"]["all"].as_f64())
        .collect();
    let mean_visibility = pooled_vis.iter().sum::<f64>() / pooled_vis.len().max(1) as f64;
    let accepted = replicas
        .iter()
        .filter(|r| r["dispersion"]["accept"].as_bool() == Some(true))
        .count();
    let tested = replicas
        .iter()
        .filter(|r| r["dispersion"]["accept"].as_bool().is_some())
        .count();

    let doc = serde_json::json!({
        "scenario": kind_name(&spec.scenario),
        "trials": spec.trials,
        "mean_visibility": mean_visibility,
        "replicas": replicas,
        "provenance": provenance(Some(spec.seed), Some(&spec_hash), serde_json::json!({
            "spec_file": args.spec.display().to_string(),
            "replicas": args.replicas,
            "group_by": group_name(group),
            "smoothing": args.smoothing,
            "alpha": args.alpha,
        })),
    });
    let metrics_path = artifact_path(out_dir, &args.stem, "metrics.json");
    let mut text = serde_json::to_string_pretty(&doc).expect("metrics are serializable");
    text.push('\n');
    write_atomic(&metrics_path, text.as_bytes())?;

    println!(
        "simulated {} scenario: {} trials x {} replica{}, mean visibility {:.3}",
        kind_name(&spec.scenario),
        spec.trials,
        args.replicas,
        if args.replicas == 1 { "" } else { "s" },
        mean_visibility,
    );
    if tested > 0 {
        println!("dispersion test: Poisson hypothesis accepted in {accepted}/{tested} replicas");
    } else {
        println!("dispersion test: skipped (see metrics for the reason)");
    }
    if verbose {
        for r in &replicas {
            println!(
                "  seed {}: visibility {:.4}, events {}",
                r["seed"],
                r["visibility"]["all"].as_f64().unwrap_or(f64::NAN),
                r["events"].as_str().unwrap_or("?")
            );
        }
    }
    println!("wrote {}", metrics_path.display());
    Ok(())
}

fn run_replica(
    spec: &ScenarioSpec,
    group: GroupBy,
    args: &SimulateArgs,
    ndjson_path: &Path,
    hist_path: &Path,
) -> CmdResult<serde_json::Value> {
    let bins = spec.geometry.screen_bins;
    let mut pooled = Histogram::new("all", bins);
    let mut groups: BTreeMap<String, Histogram> = BTreeMap::new();
    let mut times: Vec<f64> = Vec::new();

    stream_atomic(ndjson_path, |out| {
        let mut io_err: Option<std::io::Error> = None;
        run_scenario_streaming(spec, |rec| {
            if io_err.is_some() {
                return;
            }
            let line = serde_json::to_string(&rec).expect("record is serializable");
            if let Err(e) = out.write_all(line.as_bytes()).and_then(|()| out.write_all(b"\n")) {
                io_err = Some(e);
                return;
            }
            pooled.record(rec.bin as usize);
            match group {
                GroupBy::SlitPair => {
                    let key = format!("{}-{}", rec.xi, rec.eta);
                    groups
                        .entry(key.clone())
                        .or_insert_with(|| Histogram::new(key, bins))
                        .record(rec.bin as usize);
                }
                GroupBy::Apparatus => {
                    groups
                        .entry(rec.apparatus.clone())
                        .or_insert_with(|| Histogram::new(rec.apparatus.clone(), bins))
                        .record(rec.bin as usize);
                }
                GroupBy::None => {}
            }
            times.push(rec.time);
        })?;
        match io_err {
            Some(e) => Err(usage(format!("cannot write {}: {e}", ndjson_path.display()))),
            None => Ok(()),
        }
    })?;

    write_atomic(hist_path, pooled.to_csv(&spec.geometry).as_bytes())?;

    let vis_all = visibility(&pooled, args.smoothing)?;
    let mut vis_groups = BTreeMap::new();
    for (key, h) in &groups {
        vis_groups.insert(key.clone(), visibility(h, args.smoothing)?);
    }

    let duration = times.last().copied().unwrap_or(0.0);
    let dispersion = dispersion_json(spec, &times, duration, args.alpha);

    Ok(serde_json::json!({
        "seed": spec.seed,
        "trials": spec.trials,
        "duration": duration,
        "visibility": {
            "all": vis_all,
            "groups": vis_groups,
        },
        "dispersion": dispersion,
        "events": ndjson_path.display().to_string(),
        "histogram": hist_path.display().to_string(),
    }))
}

/// The dispersion check needs Poisson arrivals and enough windows to say
/// anything; when either is missing the metrics say why instead of testing.
fn dispersion_json(
    spec: &ScenarioSpec,
    times: &[f64],
    duration: f64,
    alpha: f64,
) -> serde_json::Value {
    const MIN_WINDOWS: usize = 20;
    if let ScenarioKind::ExponentialSchedule { .. } = spec.scenario {
        return serde_json::json!({ "skipped": "deterministic arrival clock" });
    }
    if duration <= 0.0 {
        return serde_json::json!({ "skipped": "zero total duration" });
    }
    let width = MIN_WINDOWS as f64 * duration / times.len() as f64;
    let counts = window_counts(times, width);
    if counts.len() < MIN_WINDOWS {
        return serde_json::json!({
            "skipped": format!("only {} windows, need {MIN_WINDOWS}", counts.len())
        });
    }
    match poisson_dispersion_test(&counts, alpha) {
        Ok(report) => serde_json::to_value(&report).expect("report is serializable"),
        Err(e) => serde_json::json!({ "skipped": e.to_string() }),
    }
}

fn kind_name(kind: &ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Sequential => "sequential",
        ScenarioKind::FreshApparatusEnsemble => "fresh-apparatus-ensemble",
        ScenarioKind::CycleReset { .. } => "cycle-reset",
        ScenarioKind::RateSweep { .. } => "rate-sweep",
        ScenarioKind::ExponentialSchedule { .. } => "exponential-schedule",
        ScenarioKind::RandomTwoSlit => "random-two-slit",
    }
}

fn group_name(group: GroupBy) -> &'static str {
    match group {
        GroupBy::SlitPair => "slit-pair",
        GroupBy::Apparatus => "apparatus",
        GroupBy::None => "none",
    }
}
