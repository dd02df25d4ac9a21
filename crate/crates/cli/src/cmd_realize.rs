use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use padicprob::frequency::EventSequence;
use padicprob::padic::{self, PAdicApprox, Valuation};
use padicprob::realization::{self, FillPolicy, PlanOptions, VerificationReport};
use padicprob::PrimeBase;
use rand::Rng;

use crate::common::{
    artifact_path, parse_rational_arg, provenance, read_bytes, usage, write_atomic, CmdError,
    CmdResult,
};

#[derive(Args)]
pub struct RealizeArgs {
    /// Prime base p
    #[arg(short, long)]
    prime: u64,
    /// Rational target to realize as a frequency limit
    #[arg(short = 'x', long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Realize the p-adic square root of this rational instead
    #[arg(long, allow_hyphen_values = true, conflicts_with = "target")]
    sqrt: Option<String>,
    /// Plan depth K: frequencies are pinned within p^-1 … p^-K
    #[arg(short = 'k', long, default_value_t = 8)]
    depth: usize,
    /// How 1-labels are laid out between checkpoints
    #[arg(long, value_enum, default_value_t = PolicyArg::Block)]
    policy: PolicyArg,
    /// Seed for the shuffle policy; generated and recorded when omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint spacing multiplier (larger = longer windows)
    #[arg(long, default_value_t = 1)]
    window_factor: u64,
    /// Basename for artifacts in the output directory
    #[arg(long, default_value = "realization")]
    stem: String,
    /// Verify an existing packed sequence against the plan instead of generating
    #[arg(long)]
    check: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Block,
    Spread,
    Shuffle,
}

pub fn run(args: RealizeArgs, out_dir: &Path, verbose: bool) -> CmdResult<()> {
    let base = PrimeBase::new(args.prime)?;
    if args.depth == 0 {
        return Err(usage("depth must be at least 1"));
    }

    let (target, target_desc) = resolve_target(&args, base)?;
    let plan = realization::plan_with(
        &target,
        args.depth,
        PlanOptions { window_factor: args.window_factor.max(1) },
    )?;

    let params = serde_json::json!({
        "prime": args.prime,
        "target": target_desc,
        "depth": args.depth,
        "policy": policy_name(args.policy),
        "window_factor": args.window_factor.max(1),
    });

    if let Some(check) = &args.check {
        let data = read_bytes(check)?;
        let seq = EventSequence::from_packed(&data)?;
        let report = realization::verify(&seq, &target, plan.rows())?;
        let verify_path = artifact_path(out_dir, &args.stem, "verify.json");
        write_atomic(&verify_path, verify_json(&report, None, &params).as_bytes())?;
        print_rows(&report, verbose);
        if report.pass {
            println!(
                "{}: {} checkpoints verified against {} — wrote {}",
                check.display(),
                report.rows.len(),
                target_desc,
                verify_path.display()
            );
            Ok(())
        } else {
            let failed = report.rows.iter().filter(|r| !r.pass).count();
            Err(CmdError::Failed(format!(
                "{}: verification FAILED at {} of {} checkpoints (details in {})",
                check.display(),
                failed,
                report.rows.len(),
                verify_path.display()
            )))
        }
    } else {
        let (fill, seed_used) = match args.policy {
            PolicyArg::Block => (FillPolicy::Block, None),
            PolicyArg::Spread => (FillPolicy::Spread, None),
            PolicyArg::Shuffle => {
                let seed = args.seed.unwrap_or_else(|| rand::rng().random());
                (FillPolicy::SeededShuffle(seed), Some(seed))
            }
        };
        let seq = realization::generate(&plan, fill);
        let report = realization::verify(&seq, &target, plan.rows())?;

        let plan_path = artifact_path(out_dir, &args.stem, "plan.csv");
        let bits_path = artifact_path(out_dir, &args.stem, "bits");
        let verify_path = artifact_path(out_dir, &args.stem, "verify.json");
        write_atomic(&plan_path, plan.to_csv().as_bytes())?;
        write_atomic(&bits_path, &seq.to_packed())?;
        write_atomic(&verify_path, verify_json(&report, seed_used, &params).as_bytes())?;

        print_rows(&report, verbose);
        println!(
            "realized {} in Q_{}: {} events, {} checkpoints, verification {}",
            target_desc,
            args.prime,
            seq.len(),
            report.rows.len(),
            if report.pass { "passed" } else { "FAILED" }
        );
        println!(
            "wrote {}, {}, {}",
            plan_path.display(),
            bits_path.display(),
            verify_path.display()
        );
        if report.pass {
            Ok(())
        } else {
            Err(CmdError::Failed("generated sequence failed its own plan".into()))
        }
    }
}

/// The working precision has to reach `depth` digits above the valuation or
/// the planner will reject the target as too short.
fn resolve_target(args: &RealizeArgs, base: PrimeBase) -> CmdResult<(PAdicApprox, String)> {
    if let Some(text) = &args.target {
        let q = parse_rational_arg(text)?;
        let v = match padic::valuation(&q, base) {
            Valuation::Finite(v) => v,
            Valuation::Infinite => return Err(usage("cannot realize 0: pick a nonzero target")),
        };
        let precision = (args.depth as i64 + 1 - v).max(2) as usize;
        Ok((padic::to_digits(&q, base, precision), text.clone()))
    } else if let Some(text) = &args.sqrt {
        let q = parse_rational_arg(text)?;
        let root = padic::hensel_sqrt(&q, base, args.depth + 1)?.ok_or_else(|| {
            CmdError::Failed(format!("{text} has no square root in Q_{}", args.prime))
        })?;
        Ok((root, format!("sqrt({text})")))
    } else {
        Err(usage("provide --target or --sqrt"))
    }
}

fn policy_name(p: PolicyArg) -> &'static str {
    match p {
        PolicyArg::Block => "block",
        PolicyArg::Spread => "spread",
        PolicyArg::Shuffle => "shuffle",
    }
}

fn verify_json(
    report: &VerificationReport,
    seed: Option<u64>,
    params: &serde_json::Value,
) -> String {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "k": r.k,
                "checkpoint": r.checkpoint,
                "ones": r.ones,
                "freq": padic::format_rational(&r.freq),
                "distance": padic::format_rational(&r.distance),
                "bound": padic::format_rational(&r.bound),
                "pass": r.pass,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "pass": report.pass,
        "rows": rows,
        "provenance": provenance(seed, None, params.clone()),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report is serializable");
    text.push('\n');
    text
}

fn print_rows(report: &VerificationReport, verbose: bool) {
    if !verbose {
        return;
    }
    for r in &report.rows {
        println!(
            "  k={:<3} N={:<12} ones={:<12} |freq - x|_p = {} (bound {}) {}",
            r.k,
            r.checkpoint,
            r.ones,
            padic::format_rational(&r.distance),
            padic::format_rational(&r.bound),
            if r.pass { "ok" } else { "FAIL" }
        );
    }
}
