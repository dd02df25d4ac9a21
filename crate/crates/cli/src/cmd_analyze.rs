use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use padicprob::complexity::{self, FitConfig};
use padicprob::frequency::{
    self, ClassifyParams, CollectiveClass, EventSequence, LimitEstimate, StabilizationVerdict,
    Status,
};
use padicprob::padic;
use padicprob::PrimeBase;

use crate::common::{
    artifact_path, parse_rational_arg, provenance, read_bytes, read_text, usage, write_atomic,
    CmdResult,
};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Sequence file: packed bits or ASCII 0/1 text
    #[arg(short, long)]
    input: PathBuf,
    /// Prime base for the p-adic topology
    #[arg(short, long)]
    prime: u64,
    /// Input encoding; default inferred from the extension (.bits is packed)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Digits that must agree for p-adic stabilization
    #[arg(long, default_value_t = 4)]
    digits: usize,
    /// Checkpoints in the decision window
    #[arg(long, default_value_t = 4)]
    tail: usize,
    /// Real-topology Cauchy tolerance, as a rational (e.g. 1/100)
    #[arg(long, default_value = "1/100")]
    tolerance: String,
    /// Scale c for the default checkpoint schedule ceil(c * p^k)
    #[arg(long, default_value_t = 1)]
    scale: u64,
    /// Explicit comma-separated checkpoint list, overriding the schedule
    #[arg(long)]
    checkpoints: Option<String>,
    /// Read the checkpoint schedule from a realization plan CSV
    #[arg(long, conflicts_with = "checkpoints")]
    plan: Option<PathBuf>,
    /// Geometric prefix factor for the complexity profile
    #[arg(long, default_value_t = 2.0)]
    growth_factor: f64,
    /// Basename for artifacts in the output directory
    #[arg(long, default_value = "analysis")]
    stem: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Bits,
    Ascii,
}

pub fn run(args: AnalyzeArgs, out_dir: &Path, verbose: bool) -> CmdResult<()> {
    let base = PrimeBase::new(args.prime)?;
    let seq = load_sequence(&args)?;
    if seq.is_empty() {
        return Err(usage(format!("{} holds no events", args.input.display())));
    }

    let checkpoints = match (&args.checkpoints, &args.plan) {
        (Some(list), _) => Some(parse_checkpoints(list)?),
        (None, Some(plan)) => Some(plan_checkpoints(plan)?),
        (None, None) => None,
    };
    let params = ClassifyParams {
        checkpoints,
        schedule_scale: args.scale,
        tolerance: parse_rational_arg(&args.tolerance)?,
        target_digits: args.digits,
        tail: args.tail,
    };
    let report = frequency::classify_collective(&seq, base, &params)?;
    let profile = complexity::profile(&seq, args.growth_factor, None)?;
    let growth = complexity::fit_growth(&profile, &FitConfig::default())?;

    let doc = serde_json::json!({
        "events": seq.len(),
        "ones": seq.count_ones(),
        "class": class_name(report.class),
        "real": verdict_json(&report.real),
        "padic": verdict_json(&report.padic),
        "growth": growth.to_json(),
        "provenance": provenance(None, None, serde_json::json!({
            "input": args.input.display().to_string(),
            "prime": args.prime,
            "target_digits": args.digits,
            "tail": args.tail,
            "tolerance": args.tolerance,
            "schedule_scale": args.scale,
            "growth_factor": args.growth_factor,
        })),
    });

    let analysis_path = artifact_path(out_dir, &args.stem, "analysis.json");
    let trace_path = artifact_path(out_dir, &args.stem, "trace.csv");
    let profile_path = artifact_path(out_dir, &args.stem, "profile.csv");
    let mut text = serde_json::to_string_pretty(&doc).expect("analysis is serializable");
    text.push('\n');
    write_atomic(&analysis_path, text.as_bytes())?;
    write_atomic(&trace_path, report.trace.to_csv().as_bytes())?;
    write_atomic(&profile_path, profile.to_csv().as_bytes())?;

    println!(
        "class={} growth={} over {} events ({} checkpoints, {} profile points)",
        class_name(report.class),
        growth.class.as_str(),
        seq.len(),
        report.trace.len(),
        profile.points.len(),
    );
    if verbose {
        println!(
            "  real:  {} (worst tail distance {})",
            status_name(report.real.status),
            padic::format_rational(&report.real.evidence)
        );
        println!(
            "  padic: {} (worst tail distance {})",
            status_name(report.padic.status),
            padic::format_rational(&report.padic.evidence)
        );
        println!(
            "  fit: linear residual {:.4}, log residual {:.4}, ratio {:.4}, flat={}",
            growth.linear.residual, growth.logarithmic.residual, growth.ratio, growth.flat
        );
    }
    println!(
        "wrote {}, {}, {}",
        analysis_path.display(),
        trace_path.display(),
        profile_path.display()
    );
    Ok(())
}

fn load_sequence(args: &AnalyzeArgs) -> CmdResult<EventSequence> {
    let data = read_bytes(&args.input)?;
    let format = args.format.unwrap_or_else(|| {
        match args.input.extension().and_then(|e| e.to_str()) {
            Some("bits") => FormatArg::Bits,
            _ => FormatArg::Ascii,
        }
    });
    match format {
        FormatArg::Bits => Ok(EventSequence::from_packed(&data)?),
        FormatArg::Ascii => {
            let filtered: Vec<u8> =
                data.into_iter().filter(|b| !b.is_ascii_whitespace()).collect();
            Ok(EventSequence::from_ascii(&filtered)?)
        }
    }
}

/// Pulls the N_k column out of a `realize` plan so the analysis tests the
/// prefixes the plan actually pinned.
fn plan_checkpoints(path: &Path) -> CmdResult<Vec<u64>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.starts_with("k,N_k,") => {}
        _ => return Err(usage(format!("{}: not a realization plan CSV", path.display()))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(',').nth(1).ok_or_else(|| {
            usage(format!("{}:{}: missing N_k column", path.display(), i + 1))
        })?;
        out.push(field.parse::<u64>().map_err(|e| {
            usage(format!("{}:{}: bad checkpoint: {e}", path.display(), i + 1))
        })?);
    }
    if out.is_empty() {
        return Err(usage(format!("{}: plan has no rows", path.display())));
    }
    Ok(out)
}

fn parse_checkpoints(list: &str) -> CmdResult<Vec<u64>> {
    list.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|e| usage(format!("bad checkpoint {part:?}: {e}")))
        })
        .collect()
}

fn class_name(class: CollectiveClass) -> &'static str {
    match class {
        CollectiveClass::Mises => "mises",
        CollectiveClass::PAdic => "p-adic",
        CollectiveClass::Both => "both",
        CollectiveClass::Neither => "neither",
    }
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Stabilized => "stabilized",
        Status::NotStabilized => "not-stabilized",
        Status::Undecided => "undecided",
    }
}

fn verdict_json(v: &StabilizationVerdict) -> serde_json::Value {
    let limit = match &v.limit_estimate {
        Some(LimitEstimate::Real(q)) => serde_json::json!(padic::format_rational(q)),
        Some(LimitEstimate::PAdic(x)) => serde_json::json!({
            "rendered": x.render(),
            "valuation": x.valuation(),
            "digits": x.digits(),
        }),
        None => serde_json::Value::Null,
    };
    serde_json::json!({
        "status": status_name(v.status),
        "evidence": padic::format_rational(&v.evidence),
        "limit": limit,
    })
}
