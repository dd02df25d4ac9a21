//! Realizes a p-adic target as the frequency limit of a binary sequence.
//!
//! The construction picks checkpoints N_k (divisible by exactly p^v, where
//! v compensates a negative target valuation) and one-counts n_k with
//! n_k ≡ x·N_k (mod p^{k+v}). Then |n_k/N_k − x|_p ≤ p^{−k} row by row,
//! so the frequencies converge p-adically to x while wandering freely in
//! [0, 1] as real numbers. Windows of size ≥ p^{k+v} make the congruence
//! satisfiable without ever decreasing the running count.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use std::fmt::Write as _;
use thiserror::Error;

use crate::frequency::{self, EventSequence};
use crate::padic::{self, PAdicApprox, PrimeBase, Rational};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum RealizationError {
    #[error("depth must be at least 1")]
    DepthZero,
    #[error("target carries {have} digits but depth {depth} needs {need}")]
    PrecisionInsufficient { have: usize, need: usize, depth: usize },
    #[error("checkpoint overflow: plan does not fit in 64-bit counts")]
    Overflow,
    #[error("sequence length {len} is shorter than the last checkpoint {checkpoint}")]
    SequenceTooShort { len: u64, checkpoint: u64 },
}

/// One row of a checkpoint plan: after `checkpoint` trials exactly `ones`
/// of them are 1-labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanRow {
    pub k: usize,
    pub checkpoint: u64,
    pub ones: u64,
}

/// A depth-K realization plan for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointPlan {
    base: PrimeBase,
    target: PAdicApprox,
    rows: Vec<PlanRow>,
}

/// How the 1-labels are laid out inside each checkpoint window. The counts
/// — and therefore every frequency — are identical across policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillPolicy {
    /// Ones first, zeros after.
    Block,
    /// Ones spread evenly through the window.
    Spread,
    /// Uniformly random positions from a seeded generator.
    SeededShuffle(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct PlanOptions {
    /// Multiplies the minimal window size p^(k+v); larger factors spread
    /// the checkpoints out.
    pub window_factor: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { window_factor: 1 }
    }
}

impl CheckpointPlan {
    pub fn base(&self) -> PrimeBase {
        self.base
    }

    pub fn target(&self) -> &PAdicApprox {
        &self.target
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[PlanRow] {
        &self.rows
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.checkpoint).collect()
    }

    /// Total sequence length the plan prescribes.
    pub fn len(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.checkpoint)
    }

    /// CSV with header `k,N_k,n_k,bound_num,bound_den`; the bound column
    /// is the guaranteed p-adic error p^(-k) at that row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,N_k,n_k,bound_num,bound_den\n");
        for row in &self.rows {
            let bound = self.base.pow_rational(-(row.k as i64));
            writeln!(
                out,
                "{},{},{},{},{}",
                row.k,
                row.checkpoint,
                row.ones,
                bound.numer(),
                bound.denom()
            )
            .unwrap();
        }
        out
    }
}

/// Builds a depth-K plan with minimal windows.
pub fn plan(target: &PAdicApprox, depth: usize) -> Result<CheckpointPlan, RealizationError> {
    plan_with(target, depth, PlanOptions::default())
}

pub fn plan_with(
    target: &PAdicApprox,
    depth: usize,
    opts: PlanOptions,
) -> Result<CheckpointPlan, RealizationError> {
    if depth == 0 {
        return Err(RealizationError::DepthZero);
    }
    let base = target.base();
    let p = base.get();
    let v = match target.valuation() {
        Some(val) => (-val).max(0) as u32,
        None => 0, // a zero target needs no denominator compensation
    };
    // The congruence n_k ≡ x·N_k (mod p^(k+v)) and the row bound both need
    // the target pinned modulo p^k for every k ≤ depth.
    let need = depth + v as usize;
    if target.is_zero() {
        if target.abs_precision() < depth as i64 {
            return Err(RealizationError::PrecisionInsufficient {
                have: target.abs_precision().max(0) as usize,
                need: depth,
                depth,
            });
        }
    } else if target.precision() < need {
        return Err(RealizationError::PrecisionInsufficient {
            have: target.precision(),
            need,
            depth,
        });
    }
    let window_factor = opts.window_factor.max(1);
    let x = padic::from_digits(target);
    let p_v = (p as u128).checked_pow(v).ok_or(RealizationError::Overflow)?;

    let mut rows = Vec::with_capacity(depth);
    let mut prev_n: u128 = 0; // N_{k-1}
    let mut prev_ones: u128 = 0; // n_{k-1}
    for k in 1..=depth {
        let modulus = (p as u128)
            .checked_pow(k as u32 + v)
            .ok_or(RealizationError::Overflow)?;
        let window = modulus
            .checked_mul(window_factor as u128)
            .ok_or(RealizationError::Overflow)?;
        // smallest N ≥ N_{k-1} + window with p^v || N
        let floor = prev_n + window;
        let mut n_k = floor.div_ceil(p_v) * p_v;
        while (n_k / p_v) % p as u128 == 0 {
            n_k += p_v;
        }
        // residue class the count must land in: x·N_k mod p^(k+v)
        let scaled = &x * BigInt::from(n_k);
        debug_assert!(scaled.is_integer(), "p^v | N_k clears the denominator");
        let r = scaled
            .to_integer()
            .mod_floor(&BigInt::from(modulus))
            .to_u128()
            .expect("residue below modulus");
        // unique representative in the half-open window (n_{k-1}, n_{k-1} + p^(k+v)]
        let offset = (r + modulus - (prev_ones + 1) % modulus) % modulus;
        let ones = prev_ones + 1 + offset;
        debug_assert!(ones > prev_ones && ones - prev_ones <= modulus);
        debug_assert!(ones <= n_k);
        rows.push(PlanRow {
            k,
            checkpoint: n_k.to_u64().ok_or(RealizationError::Overflow)?,
            ones: ones.to_u64().ok_or(RealizationError::Overflow)?,
        });
        prev_n = n_k;
        prev_ones = ones;
    }
    Ok(CheckpointPlan { base, target: target.clone(), rows })
}

/// Emits a binary sequence honoring every checkpoint count of the plan.
pub fn generate(plan: &CheckpointPlan, fill: FillPolicy) -> EventSequence {
    let mut seq = EventSequence::with_capacity(plan.len());
    let mut rng = match fill {
        FillPolicy::SeededShuffle(seed) => Some(rand_chacha::ChaCha12Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut prev_n = 0u64;
    let mut prev_ones = 0u64;
    for row in &plan.rows {
        let window = row.checkpoint - prev_n;
        let ones = row.ones - prev_ones;
        match fill {
            FillPolicy::Block => {
                seq.extend_run(true, ones);
                seq.extend_run(false, window - ones);
            }
            FillPolicy::Spread => {
                // Bresenham spacing: a 1 wherever the running quota ticks up
                let mut quota = 0u64;
                for i in 0..window {
                    let next = ((i + 1) as u128 * ones as u128 / window as u128) as u64;
                    seq.push(next > quota);
                    quota = next;
                }
            }
            FillPolicy::SeededShuffle(_) => {
                let rng = rng.as_mut().expect("rng prepared for shuffle fill");
                let picks = rand::seq::index::sample(rng, window as usize, ones as usize);
                let mut mask = vec![false; window as usize];
                for idx in picks {
                    mask[idx] = true;
                }
                for b in mask {
                    seq.push(b);
                }
            }
        }
        prev_n = row.checkpoint;
        prev_ones = row.ones;
    }
    seq
}

/// Per-checkpoint outcome of an independent frequency check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub k: usize,
    pub checkpoint: u64,
    pub ones: u64,
    pub freq: Rational,
    pub distance: Rational,
    pub bound: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
}

/// Recounts the sequence through the frequency module and checks each
/// checkpoint's p-adic distance to the target against its p^(-k) bound.
pub fn verify(
    seq: &EventSequence,
    target: &PAdicApprox,
    rows: &[PlanRow],
) -> Result<VerificationReport, RealizationError> {
    let base = target.base();
    if let Some(last) = rows.last() {
        if seq.len() < last.checkpoint {
            return Err(RealizationError::SequenceTooShort {
                len: seq.len(),
                checkpoint: last.checkpoint,
            });
        }
    }
    let checkpoints: Vec<u64> = rows.iter().map(|r| r.checkpoint).collect();
    let tr = frequency::trace(seq, &checkpoints).map_err(|_| RealizationError::DepthZero)?;
    let x = padic::from_digits(target);
    let mut out = Vec::with_capacity(rows.len());
    let mut pass = true;
    for (i, row) in rows.iter().enumerate() {
        let freq = tr.freq1(i);
        let distance = padic::distance(&freq, &x, base);
        let bound = base.pow_rational(-(row.k as i64));
        let row_pass = distance <= bound;
        pass &= row_pass;
        out.push(VerifyRow {
            k: row.k,
            checkpoint: row.checkpoint,
            ones: tr.ones()[i],
            freq,
            distance,
            bound,
            pass: row_pass,
        });
    }
    Ok(VerificationReport { rows: out, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn p(n: u64) -> PrimeBase {
        PrimeBase::new(n).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn minus_one_depth_three() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        let plan = plan(&target, 3).unwrap();
        let got: Vec<(u64, u64)> = plan.rows().iter().map(|r| (r.checkpoint, r.ones)).collect();
        assert_eq!(got, vec![(3, 1), (7, 5), (15, 9)]);
        // row-wise bounds, checked with exact arithmetic
        assert_eq!(padic::distance(&rat(1, 3), &rat(-1, 1), p(2)), rat(1, 4));
        assert_eq!(padic::distance(&rat(5, 7), &rat(-1, 1), p(2)), rat(1, 4));
        assert_eq!(padic::distance(&rat(9, 15), &rat(-1, 1), p(2)), rat(1, 8));
    }

    #[test]
    fn plan_rejects_thin_targets() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        assert_eq!(
            plan(&target, 4).unwrap_err(),
            RealizationError::PrecisionInsufficient { have: 3, need: 4, depth: 4 }
        );
        assert_eq!(plan(&target, 0).unwrap_err(), RealizationError::DepthZero);
        // negative valuation raises the digit requirement by v
        let thin = padic::to_digits(&rat(5, 3), p(3), 2);
        assert_eq!(
            plan(&thin, 2).unwrap_err(),
            RealizationError::PrecisionInsufficient { have: 2, need: 3, depth: 2 }
        );
    }

    #[test]
    fn negative_valuation_targets_force_divisible_checkpoints() {
        let target = padic::to_digits(&rat(5, 3), p(3), 4);
        let plan = plan(&target, 2).unwrap();
        for row in plan.rows() {
            assert_eq!(row.checkpoint % 3, 0);
            assert_eq!(row.checkpoint % 9 == 0, false, "exactly one factor of 3");
            let freq = rat(row.ones as i64, row.checkpoint as i64);
            let d = padic::distance(&freq, &rat(5, 3), p(3));
            assert!(d <= p(3).pow_rational(-(row.k as i64)));
        }
    }

    #[test]
    fn constant_target_one() {
        let target = padic::to_digits(&rat(1, 1), p(5), 3);
        let plan = plan(&target, 3).unwrap();
        let seq = generate(&plan, FillPolicy::Block);
        let report = verify(&seq, &target, plan.rows()).unwrap();
        assert!(report.pass);
        for row in &report.rows {
            assert!(row.distance <= row.bound);
        }
    }

    #[test]
    fn plan_invariants_hold() {
        for (q, pr, depth) in [
            (rat(-1, 1), 2u64, 8usize),
            (rat(2, 1), 3, 6),
            (rat(100, 1), 5, 5),
            (rat(5, 3), 3, 5),
            (rat(-7, 4), 2, 6),
        ] {
            let base = p(pr);
            let v = match padic::valuation(&q, base) {
                padic::Valuation::Finite(val) => (-val).max(0) as usize,
                padic::Valuation::Infinite => 0,
            };
            let target = padic::to_digits(&q, base, depth + v);
            let plan = plan(&target, depth).unwrap();
            let rows = plan.rows();
            assert_eq!(rows.len(), depth);
            for w in rows.windows(2) {
                assert!(w[1].checkpoint > w[0].checkpoint, "N_k strictly increasing");
                assert!(w[1].ones >= w[0].ones, "n_k nondecreasing");
                assert!(
                    w[1].ones - w[0].ones <= w[1].checkpoint - w[0].checkpoint,
                    "window has room for the new ones"
                );
            }
            for row in rows {
                assert!(row.ones <= row.checkpoint);
                let freq = rat(row.ones as i64, row.checkpoint as i64);
                let d = padic::distance(&freq, &q, base);
                assert!(
                    d <= base.pow_rational(-(row.k as i64)),
                    "row bound violated for {q} at k={}",
                    row.k
                );
            }
        }
    }

    #[test]
    fn generated_block_sequence_hits_all_counts() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        let plan = plan(&target, 3).unwrap();
        let seq = generate(&plan, FillPolicy::Block);
        assert_eq!(seq.len(), 15);
        assert_eq!(seq.count_ones_prefix(3), 1);
        assert_eq!(seq.count_ones_prefix(7), 5);
        assert_eq!(seq.count_ones_prefix(15), 9);
    }

    #[test]
    fn depth_one_block_fill_is_one_then_zeros() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 1);
        let plan = plan(&target, 1).unwrap();
        assert_eq!(plan.rows(), &[PlanRow { k: 1, checkpoint: 3, ones: 1 }]);
        assert_eq!(generate(&plan, FillPolicy::Block).to_ascii(), "100");
    }

    #[test]
    fn fill_policies_share_the_trace() {
        let target = padic::to_digits(&rat(5, 3), p(3), 6);
        let plan = plan(&target, 4).unwrap();
        let cps = plan.checkpoints();
        let block = frequency::trace(&generate(&plan, FillPolicy::Block), &cps).unwrap();
        let spread = frequency::trace(&generate(&plan, FillPolicy::Spread), &cps).unwrap();
        for seed in [0u64, 1, 42] {
            let shuffled =
                frequency::trace(&generate(&plan, FillPolicy::SeededShuffle(seed)), &cps).unwrap();
            assert_eq!(shuffled, block);
        }
        assert_eq!(spread, block);
    }

    #[test]
    fn shuffle_is_deterministic_per_seed() {
        let target = padic::to_digits(&rat(2, 1), p(3), 5);
        let plan = plan(&target, 4).unwrap();
        let a = generate(&plan, FillPolicy::SeededShuffle(7));
        let b = generate(&plan, FillPolicy::SeededShuffle(7));
        let c = generate(&plan, FillPolicy::SeededShuffle(8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn verify_catches_corruption() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        let plan = plan(&target, 3).unwrap();
        let seq = generate(&plan, FillPolicy::Block);
        assert!(verify(&seq, &target, plan.rows()).unwrap().pass);

        // flip one label inside the last window: the final count is off by
        // one, which lands in the wrong residue class
        let mut labels: Vec<bool> = seq.iter().collect();
        labels[10] = !labels[10];
        let corrupt = EventSequence::from_labels(labels);
        let report = verify(&corrupt, &target, plan.rows()).unwrap();
        assert!(!report.pass);
        assert!(report.rows[0].pass);
        assert!(report.rows[1].pass);
        assert!(!report.rows[2].pass);
    }

    #[test]
    fn verify_needs_the_whole_sequence() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        let plan = plan(&target, 3).unwrap();
        let seq = generate(&plan, FillPolicy::Block);
        let short = EventSequence::from_labels(seq.iter().take(10));
        assert_eq!(
            verify(&short, &target, plan.rows()).unwrap_err(),
            RealizationError::SequenceTooShort { len: 10, checkpoint: 15 }
        );
    }

    #[test]
    fn window_factor_spreads_checkpoints() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 4);
        let tight = plan(&target, 4).unwrap();
        let sparse = plan_with(&target, 4, PlanOptions { window_factor: 4 }).unwrap();
        for (t, s) in tight.rows().iter().zip(sparse.rows()) {
            assert!(s.checkpoint > t.checkpoint);
        }
        let seq = generate(&sparse, FillPolicy::Spread);
        assert!(verify(&seq, &target, sparse.rows()).unwrap().pass);
    }

    #[test]
    fn plan_csv_format() {
        let target = padic::to_digits(&rat(-1, 1), p(2), 3);
        let plan = plan(&target, 3).unwrap();
        assert_eq!(
            plan.to_csv(),
            "k,N_k,n_k,bound_num,bound_den\n1,3,1,1,2\n2,7,5,1,4\n3,15,9,1,8\n"
        );
    }

    #[test]
    fn zero_target_realizes_vanishing_frequencies() {
        let target = PAdicApprox::zero(p(2), 4);
        let plan = plan(&target, 4).unwrap();
        let seq = generate(&plan, FillPolicy::Block);
        let report = verify(&seq, &target, plan.rows()).unwrap();
        assert!(report.pass);
        for row in plan.rows() {
            assert_eq!(row.ones % (1 << (row.k)), 0);
        }
    }
}
