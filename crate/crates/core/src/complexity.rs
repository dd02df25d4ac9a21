//! Computable complexity proxies and growth classification.
//!
//! True algorithmic complexity is uncomputable, so sequences are measured
//! with two proxies: LZ76 phrase counting (primary, self-contained) and the
//! compressed size under a pluggable lossless compressor (secondary). The
//! growth of a proxy over sequence prefixes is then fit against the two
//! competing hypotheses — C ~ a·n (incompressible stream) versus
//! C ~ a·ln n (stream produced by a short program).

use std::fmt::Write as _;
use std::io::Write as _;

use thiserror::Error;

use crate::frequency::EventSequence;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ComplexityError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("schedule base must exceed 1")]
    BadSchedule,
    #[error("sequence of length {len} yields only {points} profile points (need {need})")]
    TooShort { len: u64, points: usize, need: usize },
    #[error("compressor {id} failed its round-trip probe")]
    InvalidCompressor { id: String },
}

// ---------------------------------------------------------------------------
// LZ76 phrase counting
// ---------------------------------------------------------------------------

/// Number of phrases in the LZ76 exhaustive-history parsing.
///
/// Each phrase is the longest factor that already occurs starting at an
/// earlier position (self-overlap allowed) plus one innovation symbol; a
/// trailing phrase that never needs an innovation still counts.
pub fn lz76(seq: &EventSequence) -> Result<u64, ComplexityError> {
    if seq.is_empty() {
        return Err(ComplexityError::EmptySequence);
    }
    let s: Vec<u8> = seq.iter().map(|b| b as u8).collect();
    let lpf = longest_previous_factor(&s);
    let n = s.len();
    let mut phrases = 0u64;
    let mut pos = 0usize;
    while pos < n {
        phrases += 1;
        let reach = lpf[pos] as usize;
        if pos + reach >= n {
            break; // final phrase is an unfinished copy of the past
        }
        pos += reach + 1;
    }
    Ok(phrases)
}

/// LPF[i] = length of the longest common prefix of s[i..] with any suffix
/// s[j..] for j < i (occurrences may overlap position i). Computed from a
/// suffix array in O(n log² n) + O(n).
fn longest_previous_factor(s: &[u8]) -> Vec<u32> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let sa = suffix_array(s);
    let lcp = lcp_array(s, &sa);
    let mut rank = vec![0u32; n];
    for (r, &i) in sa.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    // Walk start positions from high to low, deleting each from a linked
    // list over suffix-array order; list neighbors then always start
    // earlier, and their stored pairwise lcp is exactly the LPF candidate.
    let mut prev: Vec<i64> = (0..n as i64).map(|r| r - 1).collect();
    let mut next: Vec<i64> = (1..=n as i64).collect();
    let mut pair_lcp = lcp; // pair_lcp[r] = lcp(list-prev(r), r)
    let mut lpf = vec![0u32; n];
    for i in (1..n).rev() {
        let r = rank[i] as usize;
        let p = prev[r];
        let nx = next[r];
        let with_prev = if p >= 0 { pair_lcp[r] } else { 0 };
        let with_next = if nx < n as i64 { pair_lcp[nx as usize] } else { 0 };
        lpf[i] = with_prev.max(with_next);
        // unlink r; the surviving pair (p, nx) shares the weaker of the
        // two lcps that met at r
        if nx < n as i64 {
            pair_lcp[nx as usize] = if p >= 0 { with_prev.min(with_next) } else { 0 };
            prev[nx as usize] = p;
        }
        if p >= 0 {
            next[p as usize] = nx;
        }
    }
    lpf[0] = 0;
    lpf
}

/// Plain prefix-doubling suffix array; adequate for the 2^16-bit profiles
/// the classifier runs on.
fn suffix_array(s: &[u8]) -> Vec<u32> {
    let n = s.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut rank: Vec<u32> = s.iter().map(|&b| b as u32).collect();
    let mut tmp = vec![0u32; n];
    let mut k = 1usize;
    loop {
        let key = |i: u32| {
            let i = i as usize;
            (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 })
        };
        sa.sort_unstable_by_key(|&i| key(i));
        tmp[sa[0] as usize] = 0;
        for w in 1..n {
            tmp[sa[w] as usize] =
                tmp[sa[w - 1] as usize] + u32::from(key(sa[w]) != key(sa[w - 1]));
        }
        rank.copy_from_slice(&tmp);
        if k >= n || rank[sa[n - 1] as usize] as usize == n - 1 {
            break;
        }
        k *= 2;
    }
    sa
}

/// Kasai's algorithm: lcp[r] = |common prefix of sa[r-1] and sa[r]|.
fn lcp_array(s: &[u8], sa: &[u32]) -> Vec<u32> {
    let n = s.len();
    let mut rank = vec![0u32; n];
    for (r, &i) in sa.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    let mut lcp = vec![0u32; n];
    let mut h = 0usize;
    for i in 0..n {
        let r = rank[i] as usize;
        if r == 0 {
            h = 0;
            continue;
        }
        let j = sa[r - 1] as usize;
        while i + h < n && j + h < n && s[i + h] == s[j + h] {
            h += 1;
        }
        lcp[r] = h as u32;
        h = h.saturating_sub(1);
    }
    lcp
}

// ---------------------------------------------------------------------------
// Compressor proxy
// ---------------------------------------------------------------------------

/// A lossless byte-stream compressor usable as a complexity proxy.
pub trait Compressor {
    fn id(&self) -> &str;
    fn compress(&self, data: &[u8]) -> Vec<u8>;
    fn decompress(&self, data: &[u8]) -> Option<Vec<u8>>;
}

/// Deflate at maximum effort.
#[derive(Debug, Default, Clone, Copy)]
pub struct DeflateCompressor;

impl Compressor for DeflateCompressor {
    fn id(&self) -> &str {
        "deflate"
    }

    fn compress(&self, data: &[u8]) -> Vec<u8> {
        let mut enc =
            flate2::write::DeflateEncoder::new(Vec::new(), flate2::Compression::best());
        enc.write_all(data).expect("writing to a Vec cannot fail");
        enc.finish().expect("finishing an in-memory deflate stream cannot fail")
    }

    fn decompress(&self, data: &[u8]) -> Option<Vec<u8>> {
        let mut dec = flate2::write::DeflateDecoder::new(Vec::new());
        dec.write_all(data).ok()?;
        dec.finish().ok()
    }
}

/// Compressed size of the packed sequence, in bits. The compressor is
/// probed with a round-trip on a fixed input first; a probe failure means
/// the proxy would be meaningless and is reported as an error.
pub fn compressor_size(
    seq: &EventSequence,
    compressor: &dyn Compressor,
) -> Result<u64, ComplexityError> {
    if seq.is_empty() {
        return Err(ComplexityError::EmptySequence);
    }
    let probe: Vec<u8> = (0..256u32).map(|i| (i * 7 + 3) as u8).collect();
    if compressor.decompress(&compressor.compress(&probe)).as_deref() != Some(&probe[..]) {
        return Err(ComplexityError::InvalidCompressor { id: compressor.id().to_string() });
    }
    let packed = seq.to_packed();
    Ok(compressor.compress(&packed).len() as u64 * 8)
}

// ---------------------------------------------------------------------------
// Prefix profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProxyId {
    Lz76,
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub n: u64,
    pub c: f64,
}

/// Proxy values over a geometric ladder of prefix lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityProfile {
    pub proxy: ProxyId,
    pub points: Vec<ProfilePoint>,
}

impl ComplexityProfile {
    /// CSV with header `n,C`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,C\n");
        for pt in &self.points {
            writeln!(out, "{},{}", pt.n, pt.c).unwrap();
        }
        out
    }
}

pub const MIN_PROFILE_POINTS: usize = 5;

/// Prefix lengths ⌈g^i⌉ for i = 1, 2, ..., capped at `len`, deduplicated.
pub fn geometric_schedule(g: f64, len: u64) -> Result<Vec<u64>, ComplexityError> {
    if !(g > 1.0) {
        return Err(ComplexityError::BadSchedule);
    }
    let mut out: Vec<u64> = Vec::new();
    let mut x = 1.0f64;
    loop {
        x *= g;
        let n = x.ceil() as u64;
        if n > len || !x.is_finite() {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Evaluates a proxy at each scheduled prefix of `seq`.
pub fn profile(
    seq: &EventSequence,
    g: f64,
    compressor: Option<&dyn Compressor>,
) -> Result<ComplexityProfile, ComplexityError> {
    if seq.is_empty() {
        return Err(ComplexityError::EmptySequence);
    }
    let schedule = geometric_schedule(g, seq.len())?;
    if schedule.len() < MIN_PROFILE_POINTS {
        return Err(ComplexityError::TooShort {
            len: seq.len(),
            points: schedule.len(),
            need: MIN_PROFILE_POINTS,
        });
    }
    let mut points = Vec::with_capacity(schedule.len());
    for &n in &schedule {
        let pre = seq.prefix(n);
        let c = match compressor {
            None => lz76(&pre)? as f64,
            Some(comp) => compressor_size(&pre, comp)? as f64,
        };
        points.push(ProfilePoint { n, c });
    }
    let proxy = match compressor {
        None => ProxyId::Lz76,
        Some(c) => ProxyId::External(c.id().to_string()),
    };
    Ok(ComplexityProfile { proxy, points })
}

// ---------------------------------------------------------------------------
// Growth classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    Linear,
    Logarithmic,
    Inconclusive,
}

impl GrowthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthClass::Linear => "Linear",
            GrowthClass::Logarithmic => "Logarithmic",
            GrowthClass::Inconclusive => "Inconclusive",
        }
    }
}

/// One least-squares fit C = a·f(n) + b with a clamped to be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Free-exponent diagnostic fit C = scale · n^exponent (log-log space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub scale: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// A model wins only when its residual is below `dead_zone` times the
    /// competitor's; ratios in between are Inconclusive.
    pub dead_zone: f64,
    /// Residuals above this fraction of the profile's standard deviation
    /// mean the model explains nothing.
    pub quality_ceiling: f64,
    /// A profile whose second half spans no more than this is flat:
    /// bounded complexity, classified with the sub-linear family.
    pub flat_range: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { dead_zone: 0.5, quality_ceiling: 0.5, flat_range: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict {
    pub class: GrowthClass,
    pub linear: FitDiagnostics,
    pub logarithmic: FitDiagnostics,
    pub power: Option<PowerFit>,
    /// linear residual / logarithmic residual (+inf when only the log
    /// residual vanishes).
    pub ratio: f64,
    /// Profile tail stalled (bounded complexity); classified Logarithmic
    /// without a residual contest.
    pub flat: bool,
}

impl GrowthVerdict {
    /// Flat JSON object with both fits and the decision trace.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "class": self.class.as_str(),
            "flat": self.flat,
            "residual_ratio": self.ratio,
            "linear_slope": self.linear.slope,
            "linear_intercept": self.linear.intercept,
            "linear_residual": self.linear.residual,
            "log_scale": self.logarithmic.slope,
            "log_intercept": self.logarithmic.intercept,
            "log_residual": self.logarithmic.residual,
            "power_exponent": self.power.map(|p| p.exponent),
            "power_scale": self.power.map(|p| p.scale),
            "power_residual": self.power.map(|p| p.residual),
        })
    }
}

fn ols_nonneg(xs: &[f64], ys: &[f64]) -> FitDiagnostics {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let mut slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    if slope < 0.0 {
        slope = 0.0; // both growth models are nondecreasing
    }
    let intercept = my - slope * mx;
    let mse = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n;
    FitDiagnostics { slope, intercept, residual: mse.sqrt() }
}

/// Classifies a profile as Linear (C ~ a·n), Logarithmic (C ~ a·ln n), or
/// Inconclusive, by comparing RMS residuals of the two fits.
pub fn fit_growth(
    pr: &ComplexityProfile,
    cfg: &FitConfig,
) -> Result<GrowthVerdict, ComplexityError> {
    if pr.points.len() < MIN_PROFILE_POINTS {
        return Err(ComplexityError::TooShort {
            len: pr.points.last().map_or(0, |p| p.n),
            points: pr.points.len(),
            need: MIN_PROFILE_POINTS,
        });
    }
    let ns: Vec<f64> = pr.points.iter().map(|p| p.n as f64).collect();
    let cs: Vec<f64> = pr.points.iter().map(|p| p.c).collect();
    let lns: Vec<f64> = ns.iter().map(|&x| x.ln()).collect();

    let linear = ols_nonneg(&ns, &cs);
    let logarithmic = ols_nonneg(&lns, &cs);

    // diagnostic power law over the strictly positive points
    let loglog: Vec<(f64, f64)> = pr
        .points
        .iter()
        .filter(|p| p.c > 0.0)
        .map(|p| ((p.n as f64).ln(), p.c.ln()))
        .collect();
    let power = if loglog.len() >= 2 {
        let xs: Vec<f64> = loglog.iter().map(|t| t.0).collect();
        let ys: Vec<f64> = loglog.iter().map(|t| t.1).collect();
        let fit = ols_nonneg(&xs, &ys);
        Some(PowerFit {
            exponent: fit.slope,
            scale: fit.intercept.exp(),
            residual: fit.residual,
        })
    } else {
        None
    };

    let mean_c = cs.iter().sum::<f64>() / cs.len() as f64;
    let std_c =
        (cs.iter().map(|c| (c - mean_c) * (c - mean_c)).sum::<f64>() / cs.len() as f64).sqrt();
    // a profile whose tail has stalled is decisively sub-linear, however
    // badly a sloped model fits its knee (periodic sequences do this)
    let tail = &cs[cs.len() / 2..];
    let tail_min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail_max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let flat = std_c == 0.0 || tail_max - tail_min <= cfg.flat_range;

    let ratio = if logarithmic.residual > 0.0 {
        linear.residual / logarithmic.residual
    } else if linear.residual > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };

    let class = if flat {
        GrowthClass::Logarithmic
    } else if linear.residual > cfg.quality_ceiling * std_c
        && logarithmic.residual > cfg.quality_ceiling * std_c
    {
        GrowthClass::Inconclusive
    } else if linear.residual < cfg.dead_zone * logarithmic.residual {
        GrowthClass::Linear
    } else if logarithmic.residual < cfg.dead_zone * linear.residual {
        GrowthClass::Logarithmic
    } else {
        GrowthClass::Inconclusive
    };

    Ok(GrowthVerdict { class, linear, logarithmic, power, ratio, flat })
}
