use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::common::{artifact_path, read_text, usage, write_atomic, CmdResult};

#[derive(Args)]
pub struct ReportArgs {
    /// Histogram CSV with a bin_center,count header
    #[arg(long)]
    histogram: PathBuf,
    /// Metrics JSON from a simulation run to fold into the summary
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Basename for artifacts in the output directory
    #[arg(long, default_value = "report")]
    stem: String,
}

pub fn run(args: ReportArgs, out_dir: &Path, _verbose: bool) -> CmdResult<()> {
    let (centers, counts) = load_histogram(&args.histogram)?;

    let total: u64 = counts.iter().sum();
    let (peak_bin, peak) = counts
        .iter()
        .enumerate()
        .max_by_key(|&(_, &c)| c)
        .expect("histogram is nonempty");

    let mut summary = String::new();
    writeln!(summary, "histogram: {}", args.histogram.display()).unwrap();
    writeln!(summary, "bins: {}", counts.len()).unwrap();
    writeln!(summary, "total detections: {total}").unwrap();
    writeln!(summary, "peak: {} detections at y = {:.6e} m", peak, centers[peak_bin]).unwrap();

    if let Some(metrics_path) = &args.metrics {
        let doc: serde_json::Value = serde_json::from_str(&read_text(metrics_path)?)
            .map_err(|e| usage(format!("{}: bad metrics JSON: {e}", metrics_path.display())))?;
        if let Some(v) = doc["mean_visibility"].as_f64() {
            writeln!(summary, "mean visibility: {v:.4}").unwrap();
        }
        if let Some(reps) = doc["replicas"].as_array() {
            let tested = reps
                .iter()
                .filter(|r| r["dispersion"]["accept"].as_bool().is_some())
                .count();
            let accepted = reps
                .iter()
                .filter(|r| r["dispersion"]["accept"].as_bool() == Some(true))
                .count();
            if tested > 0 {
                writeln!(summary, "dispersion: Poisson accepted in {accepted}/{tested} replicas")
                    .unwrap();
            } else {
                writeln!(summary, "dispersion: not tested").unwrap();
            }
        }
    }

    let svg_path = artifact_path(out_dir, &args.stem, "fringe.svg");
    let txt_path = artifact_path(out_dir, &args.stem, "report.txt");
    write_atomic(&svg_path, render_svg(&centers, &counts, total).as_bytes())?;
    write_atomic(&txt_path, summary.as_bytes())?;

    print!("{summary}");
    println!("wrote {}, {}", svg_path.display(), txt_path.display());
    Ok(())
}

fn load_histogram(path: &Path) -> CmdResult<(Vec<f64>, Vec<u64>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "bin_center,count" => {}
        _ => {
            return Err(usage(format!(
                "{}: expected a bin_center,count header",
                path.display()
            )))
        }
    }
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (c, n) = line
            .split_once(',')
            .ok_or_else(|| usage(format!("{}:{}: expected center,count", path.display(), i + 1)))?;
        centers.push(
            c.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("{}:{}: bad center: {e}", path.display(), i + 1)))?,
        );
        counts.push(
            n.trim()
                .parse::<u64>()
                .map_err(|e| usage(format!("{}:{}: bad count: {e}", path.display(), i + 1)))?,
        );
    }
    if centers.len() < 2 {
        return Err(usage(format!("{}: need at least 2 bins to chart", path.display())));
    }
    Ok((centers, counts))
}

// Chart frame in SVG user units.
const W: f64 = 900.0;
const H: f64 = 380.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Hand-rolled fringe chart: one polyline over an axis frame. Every number
/// is formatted with fixed precision so identical inputs give identical
/// bytes.
fn render_svg(centers: &[f64], counts: &[u64], total: u64) -> String {
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let n = centers.len();

    let mut points = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let x = LEFT + plot_w * i as f64 / (n - 1) as f64;
        let y = TOP + plot_h * (1.0 - c as f64 / max_count);
        write!(points, "{x:.2},{y:.2} ").unwrap();
    }

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##).unwrap();
    writeln!(
        svg,
        r#"<text x="{LEFT}" y="24" font-size="14">detections per bin (N = {total})</text>"#
    )
    .unwrap();
    // frame
    writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444444"/>"##
    )
    .unwrap();
    // midline tick on y
    let y_mid = TOP + plot_h / 2.0;
    writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{y_mid:.2}" x2="{LEFT}" y2="{y_mid:.2}" stroke="#444444"/>"##,
        LEFT - 5.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.0}</text>"#,
        LEFT - 8.0,
        y_mid + 4.0,
        max_count / 2.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{max_count:.0}</text>"#,
        LEFT - 8.0,
        TOP + 4.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">0</text>"#,
        LEFT - 8.0,
        TOP + plot_h + 4.0
    )
    .unwrap();
    // x labels: left, center, right bin centers in meters
    let y_label = TOP + plot_h + 18.0;
    writeln!(
        svg,
        r#"<text x="{LEFT}" y="{y_label:.2}" text-anchor="start">{:.3e}</text>"#,
        centers[0]
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{y_label:.2}" text-anchor="middle">{:.3e}</text>"#,
        LEFT + plot_w / 2.0,
        centers[n / 2]
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{y_label:.2}" text-anchor="end">{:.3e}</text>"#,
        LEFT + plot_w,
        centers[n - 1]
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">screen position (m)</text>"#,
        LEFT + plot_w / 2.0,
        y_label + 18.0
    )
    .unwrap();
    writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##,
        points.trim_end()
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    svg
}
