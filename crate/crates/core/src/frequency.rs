//! Relative frequencies of binary event streams and stabilization verdicts.
//!
//! Frequencies are exact rationals throughout. Stabilization (the existence
//! of a frequency limit) is decided from finite evidence, so verdicts are
//! three-valued and parameterized by a tail window: the last `tail`
//! checkpoints must look Cauchy in the chosen topology.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::padic::{self, PAdicApprox, PrimeBase, Rational};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum FrequencyError {
    #[error("checkpoint list is empty")]
    EmptyCheckpoints,
    #[error("checkpoints must be strictly increasing and positive")]
    UnsortedCheckpoints,
    #[error("checkpoint {checkpoint} exceeds sequence length {len}")]
    CheckpointOutOfRange { checkpoint: u64, len: u64 },
    #[error("invalid label byte {byte:#04x} at offset {offset}")]
    BadLabel { byte: u8, offset: usize },
    #[error("packed stream too short: header says {bits} bits, payload holds {have} bytes")]
    TruncatedPacked { bits: u64, have: usize },
    #[error("packed stream missing its 8-byte length header")]
    MissingHeader,
    #[error("tail window {tail} exceeds the {n} available checkpoints")]
    TailTooLarge { tail: usize, n: usize },
}

// ---------------------------------------------------------------------------
// Event sequences
// ---------------------------------------------------------------------------

/// A finite binary label stream, bit-packed (64 labels per word).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventSequence {
    words: Vec<u64>,
    len: u64,
}

impl EventSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: u64) -> Self {
        EventSequence { words: Vec::with_capacity((bits as usize + 63) / 64), len: 0 }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, label: bool) {
        let word = (self.len / 64) as usize;
        let bit = self.len % 64;
        if word == self.words.len() {
            self.words.push(0);
        }
        if label {
            self.words[word] |= 1u64 << bit;
        }
        self.len += 1;
    }

    /// Appends `count` copies of `label`.
    pub fn extend_run(&mut self, label: bool, count: u64) {
        if !label {
            // zero bits only need the length bumped and storage reserved
            self.len += count;
            let need = ((self.len + 63) / 64) as usize;
            self.words.resize(need, 0);
            return;
        }
        let mut remaining = count;
        while remaining > 0 {
            let bit = self.len % 64;
            let word = (self.len / 64) as usize;
            if word == self.words.len() {
                self.words.push(0);
            }
            let take = remaining.min(64 - bit);
            let mask = if take == 64 { u64::MAX } else { ((1u64 << take) - 1) << bit };
            self.words[word] |= mask;
            self.len += take;
            remaining -= take;
        }
    }

    pub fn get(&self, index: u64) -> Option<bool> {
        if index >= self.len {
            return None;
        }
        Some(self.words[(index / 64) as usize] >> (index % 64) & 1 == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i).unwrap())
    }

    /// Number of 1-labels among the first `n` entries.
    pub fn count_ones_prefix(&self, n: u64) -> u64 {
        let n = n.min(self.len);
        let full = (n / 64) as usize;
        let mut ones: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = n % 64;
        if rem > 0 {
            ones += (self.words[full] & ((1u64 << rem) - 1)).count_ones() as u64;
        }
        ones
    }

    pub fn count_ones(&self) -> u64 {
        self.count_ones_prefix(self.len)
    }

    pub fn from_labels<I: IntoIterator<Item = bool>>(labels: I) -> Self {
        let mut s = EventSequence::new();
        for b in labels {
            s.push(b);
        }
        s
    }

    /// The first `n` labels as a new sequence (clamped to the length).
    pub fn prefix(&self, n: u64) -> EventSequence {
        let n = n.min(self.len);
        let mut out = EventSequence::with_capacity(n);
        let full = (n / 64) as usize;
        out.words.extend_from_slice(&self.words[..full]);
        out.len = full as u64 * 64;
        for i in out.len..n {
            out.push(self.get(i).unwrap());
        }
        out
    }

    /// Parses a string of '0'/'1' characters.
    pub fn from_ascii(text: &[u8]) -> Result<Self, FrequencyError> {
        let mut s = EventSequence::with_capacity(text.len() as u64);
        for (offset, &byte) in text.iter().enumerate() {
            match byte {
                b'0' => s.push(false),
                b'1' => s.push(true),
                _ => return Err(FrequencyError::BadLabel { byte, offset }),
            }
        }
        Ok(s)
    }

    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Packed form: 8-byte little-endian label count, then the labels at
    /// 8 per byte, least significant bit first; padding bits are zero.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + ((self.len as usize + 7) / 8));
        out.extend_from_slice(&self.len.to_le_bytes());
        let nbytes = ((self.len + 7) / 8) as usize;
        for i in 0..nbytes {
            let word = self.words[i / 8];
            out.push((word >> (8 * (i % 8))) as u8);
        }
        out
    }

    pub fn from_packed(data: &[u8]) -> Result<Self, FrequencyError> {
        if data.len() < 8 {
            return Err(FrequencyError::MissingHeader);
        }
        let bits = u64::from_le_bytes(data[..8].try_into().unwrap());
        let payload = &data[8..];
        let need = ((bits + 7) / 8) as usize;
        if payload.len() < need {
            return Err(FrequencyError::TruncatedPacked { bits, have: payload.len() });
        }
        let mut s = EventSequence::with_capacity(bits);
        for i in 0..bits {
            let byte = payload[(i / 8) as usize];
            s.push(byte >> (i % 8) & 1 == 1);
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Frequency traces
// ---------------------------------------------------------------------------

/// Exact 1-label counts at an increasing list of prefix lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTrace {
    checkpoints: Vec<u64>,
    ones: Vec<u64>,
}

impl FrequencyTrace {
    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn ones(&self) -> &[u64] {
        &self.ones
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// ν_N(1) at checkpoint index `i`.
    pub fn freq1(&self, i: usize) -> Rational {
        Rational::new(self.ones[i].into(), self.checkpoints[i].into())
    }

    /// ν_N(0) at checkpoint index `i`.
    pub fn freq0(&self, i: usize) -> Rational {
        Rational::one() - self.freq1(i)
    }

    /// CSV with header `N,n1,nu1_num,nu1_den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,n1,nu1_num,nu1_den\n");
        for i in 0..self.len() {
            let f = self.freq1(i);
            writeln!(out, "{},{},{},{}", self.checkpoints[i], self.ones[i], f.numer(), f.denom())
                .unwrap();
        }
        out
    }
}

/// Counts 1-labels at each checkpoint prefix of `seq`.
pub fn trace(seq: &EventSequence, checkpoints: &[u64]) -> Result<FrequencyTrace, FrequencyError> {
    if checkpoints.is_empty() {
        return Err(FrequencyError::EmptyCheckpoints);
    }
    let mut prev = 0u64;
    for &c in checkpoints {
        if c <= prev {
            return Err(FrequencyError::UnsortedCheckpoints);
        }
        if c > seq.len() {
            return Err(FrequencyError::CheckpointOutOfRange { checkpoint: c, len: seq.len() });
        }
        prev = c;
    }
    let ones = checkpoints.iter().map(|&c| seq.count_ones_prefix(c)).collect();
    Ok(FrequencyTrace { checkpoints: checkpoints.to_vec(), ones })
}

/// Geometric checkpoint schedule ⌈c·p^k⌉ for k = 1, 2, ... capped at `len`,
/// deduplicated and strictly increasing.
pub fn geometric_checkpoints(base: PrimeBase, len: u64, scale: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut power = base.get();
    loop {
        let n = scale.saturating_mul(power);
        if n > len {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        match power.checked_mul(base.get()) {
            Some(next) => power = next,
            None => break,
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Stabilization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Real,
    PAdic(PrimeBase),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Stabilized,
    NotStabilized,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitEstimate {
    Real(Rational),
    PAdic(PAdicApprox),
}

/// Outcome of a finite Cauchy test in one topology.
///
/// `limit_estimate` is present exactly when `status` is `Stabilized`;
/// `evidence` is the worst distance observed inside the tail window
/// (to the limit estimate when stabilized, pairwise otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationVerdict {
    pub topology: Topology,
    pub status: Status,
    pub limit_estimate: Option<LimitEstimate>,
    pub evidence: Rational,
}

/// Cauchy test in the ordinary absolute-value metric over the last `tail`
/// checkpoints: stabilized iff every pairwise distance is ≤ `tolerance`.
pub fn real_stabilization(
    tr: &FrequencyTrace,
    tolerance: &Rational,
    tail: usize,
) -> Result<StabilizationVerdict, FrequencyError> {
    if tail == 0 || tail > tr.len() {
        return Err(FrequencyError::TailTooLarge { tail, n: tr.len() });
    }
    let start = tr.len() - tail;
    let freqs: Vec<Rational> = (start..tr.len()).map(|i| tr.freq1(i)).collect();
    if freqs.len() < 2 {
        return Ok(StabilizationVerdict {
            topology: Topology::Real,
            status: Status::Undecided,
            limit_estimate: None,
            evidence: Rational::zero(),
        });
    }
    // pairwise max distance in the real metric = max − min
    let max = freqs.iter().max().unwrap();
    let min = freqs.iter().min().unwrap();
    let spread = max - min;
    if &spread <= tolerance {
        Ok(StabilizationVerdict {
            topology: Topology::Real,
            status: Status::Stabilized,
            limit_estimate: Some(LimitEstimate::Real(freqs.last().unwrap().clone())),
            evidence: spread,
        })
    } else {
        Ok(StabilizationVerdict {
            topology: Topology::Real,
            status: Status::NotStabilized,
            limit_estimate: None,
            evidence: spread,
        })
    }
}

/// Digit-stabilization test in the p-adic metric: stabilized iff the first
/// `target_digits` digits of ν_N(1) coincide across the last `tail`
/// checkpoints (which requires matching valuations).
pub fn padic_stabilization(
    tr: &FrequencyTrace,
    base: PrimeBase,
    target_digits: usize,
    tail: usize,
) -> Result<StabilizationVerdict, FrequencyError> {
    assert!(target_digits > 0, "target_digits must be positive");
    if tail == 0 || tail > tr.len() {
        return Err(FrequencyError::TailTooLarge { tail, n: tr.len() });
    }
    let start = tr.len() - tail;
    let freqs: Vec<Rational> = (start..tr.len()).map(|i| tr.freq1(i)).collect();
    if freqs.len() < 2 {
        return Ok(StabilizationVerdict {
            topology: Topology::PAdic(base),
            status: Status::Undecided,
            limit_estimate: None,
            evidence: Rational::zero(),
        });
    }
    let expansions: Vec<PAdicApprox> =
        freqs.iter().map(|f| padic::to_digits(f, base, target_digits)).collect();
    let agree = expansions.windows(2).all(|w| w[0] == w[1]);
    if agree {
        let limit = expansions.into_iter().next_back().unwrap();
        let value = padic::from_digits(&limit);
        let evidence = freqs
            .iter()
            .map(|f| padic::distance(f, &value, base))
            .max()
            .unwrap();
        Ok(StabilizationVerdict {
            topology: Topology::PAdic(base),
            status: Status::Stabilized,
            limit_estimate: Some(LimitEstimate::PAdic(limit)),
            evidence,
        })
    } else {
        let mut worst = Rational::zero();
        for i in 0..freqs.len() {
            for j in i + 1..freqs.len() {
                worst = worst.max(padic::distance(&freqs[i], &freqs[j], base));
            }
        }
        Ok(StabilizationVerdict {
            topology: Topology::PAdic(base),
            status: Status::NotStabilized,
            limit_estimate: None,
            evidence: worst,
        })
    }
}

// ---------------------------------------------------------------------------
// Collective classification
// ---------------------------------------------------------------------------

/// Which frequency theory admits the sequence as a collective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectiveClass {
    /// Stabilizes in the real topology only.
    Mises,
    /// Stabilizes in the p-adic topology only.
    PAdic,
    /// Stabilizes in both.
    Both,
    /// Stabilizes in neither (or the evidence is insufficient).
    Neither,
}

#[derive(Debug, Clone)]
pub struct ClassifyParams {
    /// Prefix lengths to test at; `None` selects the geometric schedule.
    pub checkpoints: Option<Vec<u64>>,
    /// Scale c for the default schedule ⌈c·p^k⌉.
    pub schedule_scale: u64,
    /// Real-topology Cauchy tolerance.
    pub tolerance: Rational,
    /// Digits that must agree for p-adic stabilization.
    pub target_digits: usize,
    /// Checkpoints in the decision window.
    pub tail: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            checkpoints: None,
            schedule_scale: 1,
            tolerance: Rational::new(1.into(), 100.into()),
            target_digits: 4,
            tail: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class: CollectiveClass,
    pub real: StabilizationVerdict,
    pub padic: StabilizationVerdict,
    pub trace: FrequencyTrace,
}

/// Runs both stabilization tests and combines them. Undecided verdicts
/// count as non-stabilized for the class label; the per-topology verdicts
/// are returned so callers can tell the cases apart.
pub fn classify_collective(
    seq: &EventSequence,
    base: PrimeBase,
    params: &ClassifyParams,
) -> Result<ClassificationReport, FrequencyError> {
    let checkpoints = match &params.checkpoints {
        Some(c) => c.clone(),
        None => geometric_checkpoints(base, seq.len(), params.schedule_scale),
    };
    let tr = trace(seq, &checkpoints)?;
    let tail = params.tail.min(tr.len());
    let real = real_stabilization(&tr, &params.tolerance, tail)?;
    let padic = padic_stabilization(&tr, base, params.target_digits, tail)?;
    let class = match (real.status, padic.status) {
        (Status::Stabilized, Status::Stabilized) => CollectiveClass::Both,
        (Status::Stabilized, _) => CollectiveClass::Mises,
        (_, Status::Stabilized) => CollectiveClass::PAdic,
        _ => CollectiveClass::Neither,
    };
    Ok(ClassificationReport { class, real, padic, trace: tr })
}
