//! Monte-Carlo multi-slit detection with inter-trial memory kernels.
//!
//! Detections are sampled from a mixture of the fringe distribution and
//! the no-interference (classical) distribution. The mixture weight — the
//! coherence coefficient — is not a constant of nature here but a function
//! of how much recent history the apparatus has accumulated, which is the
//! knob the scenario catalog turns: reuse the apparatus and fringes build
//! up; replace it every trial and they never form.

mod scenario;

pub use scenario::{
    run_scenario, run_scenario_streaming, ScenarioKind, ScenarioSpec, Simulator,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum InterferenceError {
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("invalid memory kernel: {0}")]
    BadKernel(String),
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error("random-two-slit needs a power-of-two slit count, got {0}")]
    NotPowerOfTwo(usize),
    #[error("scenario opens {0} slits; trial records hold exactly one pair")]
    OpenSlitCount(usize),
    #[error("open slit index {index} out of range for {slits} slits")]
    SlitOutOfRange { index: usize, slits: usize },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("smoothing window must be odd and positive, got {0}")]
    BadSmoothing(usize),
    #[error("smoothing window {window} does not fit {bins} bins")]
    SmoothingTooWide { window: usize, bins: usize },
    #[error("dispersion test needs at least {need} windows, got {have}")]
    TooFewWindows { have: usize, need: usize },
    #[error("count windows have zero mean")]
    ZeroMean,
    #[error("observed and expected lengths differ ({obs} vs {exp})")]
    GofLengthMismatch { obs: usize, exp: usize },
    #[error("goodness-of-fit collapsed to a single cell after pooling")]
    DegenerateGof,
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Point slits on a shield, a screen at far-field distance, binned detection.
/// The screen interval is `screen_width` meters centered on the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    pub slit_positions: Vec<f64>,
    pub wavelength: f64,
    pub screen_distance: f64,
    pub screen_width: f64,
    pub screen_bins: usize,
}

impl ApparatusConfig {
    pub fn validate(&self) -> Result<(), InterferenceError> {
        let bad = |m: String| Err(InterferenceError::BadGeometry(m));
        if self.slit_positions.is_empty() {
            return bad("at least one slit required".into());
        }
        if !self.slit_positions.iter().all(|y| y.is_finite()) {
            return bad("slit positions must be finite".into());
        }
        if self.screen_bins < 8 {
            return bad(format!("need at least 8 screen bins, got {}", self.screen_bins));
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("screen_distance", self.screen_distance),
            ("screen_width", self.screen_width),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Screen coordinate of the center of bin `i`.
    pub fn bin_center(&self, i: usize) -> f64 {
        let step = self.screen_width / self.screen_bins as f64;
        -self.screen_width / 2.0 + (i as f64 + 0.5) * step
    }
}

/// Unnormalized fringe intensity |Σ_j exp(i·2π·y_j·y/(λL))|² at screen
/// coordinate `y`.
pub fn fringe_intensity(cfg: &ApparatusConfig, open: &[usize], y: f64) -> f64 {
    let scale = 2.0 * std::f64::consts::PI / (cfg.wavelength * cfg.screen_distance);
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for &j in open {
        let phase = scale * cfg.slit_positions[j] * y;
        re += phase.cos();
        im += phase.sin();
    }
    re * re + im * im
}

fn normalized(mut weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Fringe sampling distribution over screen bins (sums to 1).
pub fn intensity_pmf(cfg: &ApparatusConfig, open: &[usize]) -> Vec<f64> {
    normalized(
        (0..cfg.screen_bins)
            .map(|i| fringe_intensity(cfg, open, cfg.bin_center(i)))
            .collect(),
    )
}

/// Probability of bin `bin` under the fringe distribution.
pub fn intensity(cfg: &ApparatusConfig, open: &[usize], bin: usize) -> f64 {
    intensity_pmf(cfg, open)[bin]
}

/// No-interference sampling distribution: the cross terms are dropped, so
/// point slits contribute |phasor|² = 1 each and the profile is flat.
pub fn classical_pmf(cfg: &ApparatusConfig, _open: &[usize]) -> Vec<f64> {
    vec![1.0 / cfg.screen_bins as f64; cfg.screen_bins]
}

pub fn classical_intensity(cfg: &ApparatusConfig, open: &[usize], bin: usize) -> f64 {
    classical_pmf(cfg, open)[bin]
}

// ---------------------------------------------------------------------------
// Memory kernels
// ---------------------------------------------------------------------------

/// Where the inter-trial memory is hypothesized to live. The site decides
/// which component's replacement erases the memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemorySite {
    /// Memory follows the particle source: any trial through the same
    /// apparatus feeds it, whatever the slit configuration.
    Source,
    /// Memory lives in the shield: keyed by apparatus and open-slit set.
    Aperture,
    /// Memory lives in the detection screen: keyed by screen instance and
    /// open-slit set, so a fresh screen starts cold.
    Screen,
}

/// Saturating, time-damped memory strength.
///
/// γ = 0 declares the identity kernel: no memory mechanism at all, i.e.
/// orthodox quantum sampling on every trial. For γ > 0 the coherence after
/// m same-key trials inside the recency window is (1−(1−γ)^m), damped by
/// exp(−Δt/τ) for the gap Δt since the last same-key trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryKernel {
    pub site: MemorySite,
    pub gamma: f64,
    /// `None` means no time decay (τ = ∞).
    pub tau_mem: Option<f64>,
    /// Recency window: only the last `window` trials feed the memory.
    pub window: usize,
}

impl MemoryKernel {
    pub fn validate(&self) -> Result<(), InterferenceError> {
        let bad = |m: String| Err(InterferenceError::BadKernel(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0,1], got {}", self.gamma));
        }
        if let Some(tau) = self.tau_mem {
            if !(tau > 0.0) {
                return bad(format!("tau_mem must be positive, got {tau}"));
            }
        }
        if self.window == 0 {
            return bad("recency window must be at least 1".into());
        }
        Ok(())
    }

    /// Mixture weight of the fringe distribution for the current trial.
    pub fn coherence(&self, same_key_in_window: usize, gap_seconds: f64) -> f64 {
        if self.gamma == 0.0 {
            return 1.0; // identity kernel: plain quantum mechanics
        }
        if same_key_in_window == 0 {
            return 0.0; // cold apparatus: purely corpuscular statistics
        }
        let saturation = 1.0 - (1.0 - self.gamma).powi(same_key_in_window as i32);
        let damping = match self.tau_mem {
            Some(tau) => (-gap_seconds / tau).exp(),
            None => 1.0,
        };
        saturation * damping
    }
}

// ---------------------------------------------------------------------------
// Trial records and histograms
// ---------------------------------------------------------------------------

/// One detected particle. For one-slit trials ξ = η.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: u64,
    pub time: f64,
    pub xi: u32,
    pub eta: u32,
    pub bin: u32,
    pub apparatus: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub key: String,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(key: impl Into<String>, bins: usize) -> Self {
        Histogram { key: key.into(), counts: vec![0; bins], total: 0 }
    }

    pub fn record(&mut self, bin: usize) {
        self.counts[bin] += 1;
        self.total += 1;
    }

    /// CSV with header `bin_center,count`; centers need the geometry.
    pub fn to_csv(&self, cfg: &ApparatusConfig) -> String {
        let mut out = String::from("bin_center,count\n");
        for (i, &c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{}", cfg.bin_center(i), c).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// One histogram per ordered (ξ, η) pair.
    SlitPair,
    /// One histogram per apparatus identifier.
    Apparatus,
    /// Everything pooled.
    None,
}

/// Partitions detections into histograms; keys are sorted, totals conserve
/// the record count.
pub fn aggregate(records: &[TrialRecord], bins: usize, group: GroupBy) -> Vec<Histogram> {
    let mut map: std::collections::BTreeMap<String, Histogram> = Default::default();
    for r in records {
        let key = match group {
            GroupBy::SlitPair => format!("{}-{}", r.xi, r.eta),
            GroupBy::Apparatus => r.apparatus.clone(),
            GroupBy::None => "all".to_string(),
        };
        map.entry(key.clone())
            .or_insert_with(|| Histogram::new(key, bins))
            .record(r.bin as usize);
    }
    map.into_values().collect()
}

// ---------------------------------------------------------------------------
// Fringe visibility
// ---------------------------------------------------------------------------

/// (I_max − I_min)/(I_max + I_min) over the central half of the screen,
/// after a moving-average smoothing of the stated odd width.
pub fn visibility(h: &Histogram, smoothing_window: usize) -> Result<f64, InterferenceError> {
    if smoothing_window == 0 || smoothing_window % 2 == 0 {
        return Err(InterferenceError::BadSmoothing(smoothing_window));
    }
    if h.total == 0 || h.counts.is_empty() {
        return Err(InterferenceError::EmptyHistogram);
    }
    let bins = h.counts.len();
    let half = smoothing_window / 2;
    if smoothing_window > bins {
        return Err(InterferenceError::SmoothingTooWide { window: smoothing_window, bins });
    }
    // smoothed value at i, defined where the full window fits
    let smooth = |i: usize| -> f64 {
        let lo = i - half;
        let hi = i + half;
        h.counts[lo..=hi].iter().sum::<u64>() as f64 / smoothing_window as f64
    };
    let lo = (bins / 4).max(half);
    let hi = (3 * bins / 4).min(bins - half);
    if lo >= hi {
        return Err(InterferenceError::SmoothingTooWide { window: smoothing_window, bins });
    }
    let mut max = f64::MIN;
    let mut min = f64::MAX;
    for i in lo..hi {
        let v = smooth(i);
        max = max.max(v);
        min = min.min(v);
    }
    if max + min == 0.0 {
        return Err(InterferenceError::EmptyHistogram);
    }
    Ok((max - min) / (max + min))
}

// ---------------------------------------------------------------------------
// Count statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport {
    /// Index of dispersion D = s²/mean.
    pub dispersion: f64,
    /// (n−1)·D, chi-square distributed with n−1 dof under Poisson counts.
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// True when the two-sided test does not reject at the given level.
    pub accept: bool,
}

/// Two-sided index-of-dispersion test against the Poisson hypothesis.
pub fn poisson_dispersion_test(
    counts: &[u64],
    alpha: f64,
) -> Result<DispersionReport, InterferenceError> {
    const MIN_WINDOWS: usize = 20;
    let n = counts.len();
    if n < MIN_WINDOWS {
        return Err(InterferenceError::TooFewWindows { have: n, need: MIN_WINDOWS });
    }
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    if mean == 0.0 {
        return Err(InterferenceError::ZeroMean);
    }
    let variance = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (n as f64 - 1.0);
    let dispersion = variance / mean;
    let dof = (n - 1) as u64;
    let statistic = dof as f64 * dispersion;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    let lower_tail = chi.cdf(statistic);
    let p_value = (2.0 * lower_tail.min(1.0 - lower_tail)).min(1.0);
    Ok(DispersionReport { dispersion, statistic, dof, p_value, accept: p_value > alpha })
}

/// Counts arrivals in consecutive windows of `width` seconds, covering the
/// full observed span.
pub fn window_counts(times: &[f64], width: f64) -> Vec<u64> {
    assert!(width > 0.0, "window width must be positive");
    let Some(&last) = times.last() else {
        return Vec::new();
    };
    let windows = (last / width).floor() as usize + 1;
    let mut counts = vec![0u64; windows];
    for &t in times {
        let idx = ((t / width).floor() as usize).min(windows - 1);
        counts[idx] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Cells after pooling sparse bins.
    pub cells: usize,
}

/// Pearson chi-square goodness of fit of observed counts against an
/// expected distribution (probabilities or expected counts — rescaled to
/// the observed total). Adjacent bins are pooled left to right until every
/// cell expects at least 5, which keeps the statistic well-calibrated near
/// intensity zeros.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<GofReport, InterferenceError> {
    if observed.len() != expected.len() {
        return Err(InterferenceError::GofLengthMismatch {
            obs: observed.len(),
            exp: expected.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    let escale: f64 = expected.iter().sum();
    if total == 0 || escale <= 0.0 {
        return Err(InterferenceError::EmptyHistogram);
    }
    const MIN_EXPECTED: f64 = 5.0;
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_obs += o as f64;
        acc_exp += e / escale * total as f64;
        if acc_exp >= MIN_EXPECTED {
            cells.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        // fold the sparse tail into the final cell
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => cells.push((acc_obs, acc_exp)),
        }
    }
    if cells.len() < 2 {
        return Err(InterferenceError::DegenerateGof);
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let dof = (cells.len() - 1) as u64;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(GofReport { statistic, dof, p_value, cells: cells.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    pub(crate) fn two_slit_config() -> ApparatusConfig {
        // slit separation 63.3 µm, fringe period 1 cm on the screen:
        // 64 bins per period, two periods across the 2 cm screen
        ApparatusConfig {
            slit_positions: vec![-3.165e-5, 3.165e-5],
            wavelength: 633e-9,
            screen_distance: 1.0,
            screen_width: 0.02,
            screen_bins: 128,
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(two_slit_config().validate().is_ok());
        let mut cfg = two_slit_config();
        cfg.slit_positions.clear();
        assert!(matches!(cfg.validate(), Err(InterferenceError::BadGeometry(_))));
        let mut cfg = two_slit_config();
        cfg.screen_bins = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = two_slit_config();
        cfg.wavelength = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constructive_center_is_four_single_slits() {
        let cfg = two_slit_config();
        let both = fringe_intensity(&cfg, &[0, 1], 0.0);
        let single = fringe_intensity(&cfg, &[0], 0.0);
        assert!((both - 4.0 * single).abs() < 1e-12);
        assert!((single - 1.0).abs() < 1e-12);
    }

    #[test]
    fn destructive_null_at_half_period() {
        let cfg = two_slit_config();
        let d = cfg.slit_positions[1] - cfg.slit_positions[0];
        let y = cfg.wavelength * cfg.screen_distance / (2.0 * d);
        assert!(fringe_intensity(&cfg, &[0, 1], y) < 1e-12);
    }

    #[test]
    fn pmfs_normalize() {
        let cfg = two_slit_config();
        for open in [vec![0usize], vec![0, 1]] {
            let q: f64 = intensity_pmf(&cfg, &open).iter().sum();
            let c: f64 = classical_pmf(&cfg, &open).iter().sum();
            assert!((q - 1.0).abs() < 1e-12);
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_slit_is_classical() {
        let cfg = two_slit_config();
        let q = intensity_pmf(&cfg, &[1]);
        let c = classical_pmf(&cfg, &[1]);
        for (a, b) in q.iter().zip(&c) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((intensity(&cfg, &[1], 7) - classical_intensity(&cfg, &[1], 7)).abs() < 1e-15);
    }

    #[test]
    fn coherence_shapes() {
        let k = MemoryKernel { site: MemorySite::Aperture, gamma: 0.0, tau_mem: None, window: 8 };
        assert_eq!(k.coherence(0, 0.0), 1.0); // identity kernel: quantum
        assert_eq!(k.coherence(5, 100.0), 1.0);

        let k = MemoryKernel { site: MemorySite::Aperture, gamma: 0.3, tau_mem: None, window: 8 };
        assert_eq!(k.coherence(0, 0.0), 0.0); // cold apparatus: classical
        let mut prev = 0.0;
        for m in 1..10 {
            let c = k.coherence(m, 0.0);
            assert!(c > prev, "saturation must grow with m");
            prev = c;
        }
        assert!((k.coherence(1, 0.0) - 0.3).abs() < 1e-12);

        let k = MemoryKernel {
            site: MemorySite::Source,
            gamma: 1.0,
            tau_mem: Some(2.0),
            window: 8,
        };
        assert!((k.coherence(3, 2.0) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((k.coherence(3, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_validation() {
        let ok = MemoryKernel { site: MemorySite::Screen, gamma: 0.5, tau_mem: None, window: 4 };
        assert!(ok.validate().is_ok());
        assert!(MemoryKernel { gamma: 1.5, ..ok }.validate().is_err());
        assert!(MemoryKernel { tau_mem: Some(0.0), ..ok }.validate().is_err());
        assert!(MemoryKernel { window: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn aggregation_conserves_counts() {
        let records: Vec<TrialRecord> = (0..100)
            .map(|t| TrialRecord {
                t,
                time: t as f64,
                xi: (t % 2) as u32,
                eta: ((t / 2) % 2) as u32,
                bin: (t % 16) as u32,
                apparatus: format!("A{}", t % 3),
            })
            .collect();
        let pairs = aggregate(&records, 16, GroupBy::SlitPair);
        let apparatuses = aggregate(&records, 16, GroupBy::Apparatus);
        let all = aggregate(&records, 16, GroupBy::None);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].total, 100);
        assert_eq!(pairs.iter().map(|h| h.total).sum::<u64>(), 100);
        assert_eq!(apparatuses.len(), 3);
        assert!(pairs.len() <= 4);
        // per-bin conservation: pair groups sum to the pooled histogram
        for bin in 0..16 {
            let split: u64 = pairs.iter().map(|h| h.counts[bin]).sum();
            assert_eq!(split, all[0].counts[bin]);
        }
        // deterministic ordering
        let keys: Vec<&str> = pairs.iter().map(|h| h.key.as_str()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn visibility_of_synthetic_fringe() {
        // alternating 3,1 pattern: (3-1)/(3+1) = 0.5 by hand
        let mut h = Histogram::new("syn", 32);
        for i in 0..32 {
            let c = if i % 2 == 0 { 3 } else { 1 };
            for _ in 0..c {
                h.record(i);
            }
        }
        assert!((visibility(&h, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn visibility_extremes() {
        let cfg = two_slit_config();
        // ideal fringe histogram: counts proportional to the pmf
        let pmf = intensity_pmf(&cfg, &[0, 1]);
        let mut fringe = Histogram::new("ideal", cfg.screen_bins);
        for (i, &p) in pmf.iter().enumerate() {
            let c = (p * 1e7).round() as u64;
            fringe.counts[i] = c;
            fringe.total += c;
        }
        let v = visibility(&fringe, 1).unwrap();
        assert!(v > 0.98, "ideal fringes read {v}");

        let flat = Histogram { key: "flat".into(), counts: vec![500; cfg.screen_bins], total: 64000 };
        assert_eq!(visibility(&flat, 5).unwrap(), 0.0);
    }

    #[test]
    fn visibility_argument_checks() {
        let h = Histogram { key: "h".into(), counts: vec![1; 32], total: 32 };
        assert!(matches!(visibility(&h, 2), Err(InterferenceError::BadSmoothing(2))));
        assert!(matches!(visibility(&h, 0), Err(InterferenceError::BadSmoothing(0))));
        assert!(matches!(
            visibility(&h, 33),
            Err(InterferenceError::SmoothingTooWide { .. })
        ));
        let empty = Histogram::new("e", 32);
        assert!(matches!(visibility(&empty, 3), Err(InterferenceError::EmptyHistogram)));
    }

    #[test]
    fn dispersion_accepts_poisson_counts() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let poisson = rand_distr::Poisson::new(10.0).unwrap();
        let counts: Vec<u64> = (0..1000).map(|_| poisson.sample(&mut rng) as u64).collect();
        let report = poisson_dispersion_test(&counts, 0.01).unwrap();
        assert!(report.accept, "D = {}, p = {}", report.dispersion, report.p_value);
        assert!((report.dispersion - 1.0).abs() < 0.15);
    }

    #[test]
    fn dispersion_rejects_constant_counts() {
        let counts = vec![10u64; 100];
        let report = poisson_dispersion_test(&counts, 0.01).unwrap();
        assert_eq!(report.dispersion, 0.0);
        assert!(!report.accept, "constant counts are maximally under-dispersed");
    }

    #[test]
    fn dispersion_rejects_burst_contamination() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let poisson = rand_distr::Poisson::new(10.0).unwrap();
        let counts: Vec<u64> = (0..10_000)
            .map(|i| {
                let c = poisson.sample(&mut rng) as u64;
                if i % 50 == 0 {
                    c * 2 // 2% of windows see duplicated bursts
                } else {
                    c
                }
            })
            .collect();
        let report = poisson_dispersion_test(&counts, 0.01).unwrap();
        assert!(!report.accept, "D = {} should reject", report.dispersion);
        assert!(report.dispersion > 1.0);
    }

    #[test]
    fn dispersion_argument_checks() {
        assert!(matches!(
            poisson_dispersion_test(&[1, 2, 3], 0.05),
            Err(InterferenceError::TooFewWindows { have: 3, need: 20 })
        ));
        assert!(matches!(
            poisson_dispersion_test(&vec![0u64; 50], 0.05),
            Err(InterferenceError::ZeroMean)
        ));
    }

    #[test]
    fn windowing_counts_arrivals() {
        let times = [0.1, 0.2, 0.9, 1.5, 2.7, 2.9];
        assert_eq!(window_counts(&times, 1.0), vec![3, 1, 2]);
        assert_eq!(window_counts(&[], 1.0), Vec::<u64>::new());
    }

    #[test]
    fn gof_accepts_its_own_expectation() {
        let expected: Vec<f64> = (0..32).map(|i| 100.0 + (i as f64)).collect();
        let observed: Vec<u64> = expected.iter().map(|&e| e.round() as u64).collect();
        let report = chi_square_gof(&observed, &expected).unwrap();
        assert!(report.statistic < 1e-6);
        assert!(report.p_value > 0.99);
    }

    #[test]
    fn gof_pools_sparse_bins() {
        // expectations of 0.5 per bin must be pooled, not divided by
        let observed = vec![1u64; 40];
        let expected = vec![0.5f64; 40];
        let report = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(report.cells, 8); // rescaled E = 1 per bin → pooled in fives
        assert!(report.p_value > 0.5);
    }

    #[test]
    fn gof_rejects_wrong_model() {
        let observed: Vec<u64> = (0..32).map(|i| if i < 16 { 200 } else { 50 }).collect();
        let expected = vec![1.0f64; 32];
        let report = chi_square_gof(&observed, &expected).unwrap();
        assert!(report.p_value < 1e-6);
    }

    #[test]
    fn gof_argument_checks() {
        assert!(matches!(
            chi_square_gof(&[1, 2], &[1.0]),
            Err(InterferenceError::GofLengthMismatch { obs: 2, exp: 1 })
        ));
        assert!(matches!(
            chi_square_gof(&[0, 0], &[1.0, 1.0]),
            Err(InterferenceError::EmptyHistogram)
        ));
        assert!(matches!(
            chi_square_gof(&[100], &[1.0]),
            Err(InterferenceError::DegenerateGof)
        ));
    }

    #[test]
    fn record_serialization_shape() {
        let r = TrialRecord {
            t: 3,
            time: 0.25,
            xi: 1,
            eta: 2,
            bin: 17,
            apparatus: "A0".into(),
        };
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(
            line,
            r#"{"t":3,"time":0.25,"xi":1,"eta":2,"bin":17,"apparatus":"A0"}"#
        );
        let back: TrialRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
    }
}
