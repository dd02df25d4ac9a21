//! Scenario catalog: who gets replaced between trials, and when.
//!
//! Every scenario draws arrival times, decides which apparatus/screen a
//! trial runs through, asks the memory kernel for a coherence weight, and
//! samples the detection bin from the resulting mixture. All randomness
//! flows from one seeded ChaCha stream with a fixed per-trial draw count,
//! so runs are reproducible bit for bit.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{
    intensity_pmf, ApparatusConfig, InterferenceError, MemoryKernel, MemorySite, TrialRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// One apparatus, one screen, uninterrupted run.
    Sequential,
    /// Brand-new apparatus for every single trial: memory never accumulates.
    FreshApparatusEnsemble,
    /// Apparatus (and screen) swapped at the start of each cycle.
    CycleReset { cycle_len: u64 },
    /// Sequential run whose arrival rate steps through the given values in
    /// equal-length segments — an attenuator sweep.
    RateSweep { rates: Vec<f64> },
    /// Deterministic arrival clock t_n = p^n: gaps grow geometrically.
    ExponentialSchedule { p: f64 },
    /// Per trial, two slit indices ξ, η are drawn uniformly (ξ = η opens a
    /// single slit) and the detection screen is replaced. Requires a
    /// power-of-two slit count.
    RandomTwoSlit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: ScenarioKind,
    pub geometry: ApparatusConfig,
    pub kernel: MemoryKernel,
    pub trials: u64,
    pub seed: u64,
    /// Homogeneous Poisson arrival rate in Hz (ignored by the exponential
    /// schedule, which owns its clock).
    pub rate: f64,
    /// Open slit indices for the fixed-configuration scenarios; default is
    /// all slits. Random-two-slit draws its own and rejects this field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_slits: Option<Vec<usize>>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), InterferenceError> {
        self.geometry.validate()?;
        self.kernel.validate()?;
        let bad = |m: String| Err(InterferenceError::BadScenario(m));
        if self.trials == 0 {
            return bad("at least one trial required".into());
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return bad(format!("arrival rate must be positive, got {}", self.rate));
        }
        match &self.scenario {
            ScenarioKind::CycleReset { cycle_len } if *cycle_len == 0 => {
                return bad("cycle length must be at least 1".into());
            }
            ScenarioKind::RateSweep { rates } => {
                if rates.is_empty() {
                    return bad("rate sweep needs at least one segment".into());
                }
                if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return bad("rate sweep segments must be positive".into());
                }
            }
            ScenarioKind::ExponentialSchedule { p } => {
                if !(*p > 1.0) || !p.is_finite() {
                    return bad(format!("schedule base must exceed 1, got {p}"));
                }
            }
            ScenarioKind::RandomTwoSlit => {
                let n = self.geometry.slit_positions.len();
                if n < 2 || !n.is_power_of_two() {
                    return Err(InterferenceError::NotPowerOfTwo(n));
                }
                if self.open_slits.is_some() {
                    return bad("random-two-slit draws its slit pair per trial".into());
                }
            }
            _ => {}
        }
        if !matches!(self.scenario, ScenarioKind::RandomTwoSlit) {
            let open = self.open_set()?;
            if open.is_empty() || open.len() > 2 {
                return Err(InterferenceError::OpenSlitCount(open.len()));
            }
        }
        Ok(())
    }

    /// Sorted open-slit set for the fixed-configuration scenarios.
    fn open_set(&self) -> Result<Vec<usize>, InterferenceError> {
        let slits = self.geometry.slit_positions.len();
        let mut open = match &self.open_slits {
            Some(list) => list.clone(),
            None => (0..slits).collect(),
        };
        for &idx in &open {
            if idx >= slits {
                return Err(InterferenceError::SlitOutOfRange { index: idx, slits });
            }
        }
        let before = open.len();
        open.sort_unstable();
        open.dedup();
        if open.len() != before {
            return Err(InterferenceError::BadScenario("duplicate open slit index".into()));
        }
        Ok(open)
    }
}

/// Multiplicity bookkeeping over the last `window` trials, plus the wall
/// clock of each key's most recent occurrence.
struct RecencyMemory {
    window: usize,
    recent: VecDeque<u64>,
    in_window: HashMap<u64, usize>,
    last_seen: HashMap<u64, f64>,
}

impl RecencyMemory {
    fn new(window: usize) -> Self {
        RecencyMemory {
            window,
            recent: VecDeque::with_capacity(window + 1),
            in_window: HashMap::new(),
            last_seen: HashMap::new(),
        }
    }

    /// Returns (multiplicity of `key` among the last `window` prior trials,
    /// seconds since its most recent occurrence), then records the trial.
    fn observe(&mut self, key: u64, now: f64) -> (usize, f64) {
        let m = self.in_window.get(&key).copied().unwrap_or(0);
        let gap = if m > 0 { now - self.last_seen[&key] } else { 0.0 };
        self.recent.push_back(key);
        *self.in_window.entry(key).or_insert(0) += 1;
        self.last_seen.insert(key, now);
        if self.recent.len() > self.window {
            let old = self.recent.pop_front().unwrap();
            let slot = self.in_window.get_mut(&old).unwrap();
            *slot -= 1;
            if *slot == 0 {
                self.in_window.remove(&old);
            }
        }
        (m, gap)
    }
}

fn fnv1a(h: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *h ^= b as u64;
        *h = h.wrapping_mul(0x100000001b3);
    }
}

fn memory_key(site: MemorySite, apparatus: &str, screen: &str, open: &[usize]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    match site {
        MemorySite::Source => fnv1a(&mut h, apparatus.as_bytes()),
        MemorySite::Aperture => {
            fnv1a(&mut h, apparatus.as_bytes());
            fnv1a(&mut h, &[0xff]);
            for &s in open {
                fnv1a(&mut h, &(s as u64).to_le_bytes());
            }
        }
        MemorySite::Screen => {
            fnv1a(&mut h, screen.as_bytes());
            fnv1a(&mut h, &[0xff]);
            for &s in open {
                fnv1a(&mut h, &(s as u64).to_le_bytes());
            }
        }
    }
    h
}

pub struct Simulator {
    spec: ScenarioSpec,
    fixed_open: Vec<usize>,
    rng: ChaCha12Rng,
    t: u64,
    now: f64,
    memory: RecencyMemory,
    /// Fringe CDF per open-slit set (the flat branch needs no table).
    cdf_cache: HashMap<Vec<usize>, Vec<f64>>,
}

impl Simulator {
    pub fn new(spec: ScenarioSpec) -> Result<Self, InterferenceError> {
        spec.validate()?;
        let fixed_open = if matches!(spec.scenario, ScenarioKind::RandomTwoSlit) {
            Vec::new()
        } else {
            spec.open_set()?
        };
        let window = spec.kernel.window;
        let rng = ChaCha12Rng::seed_from_u64(spec.seed);
        Ok(Simulator {
            spec,
            fixed_open,
            rng,
            t: 0,
            now: 0.0,
            memory: RecencyMemory::new(window),
            cdf_cache: HashMap::new(),
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    fn advance_clock(&mut self) {
        match &self.spec.scenario {
            ScenarioKind::ExponentialSchedule { p } => {
                self.now = p.powi(self.t as i32 + 1);
            }
            ScenarioKind::RateSweep { rates } => {
                let seg = (self.t as usize * rates.len()) / self.spec.trials as usize;
                let seg = seg.min(rates.len() - 1);
                let gap = Exp::new(rates[seg]).expect("validated rate").sample(&mut self.rng);
                self.now += gap;
            }
            _ => {
                let gap = Exp::new(self.spec.rate).expect("validated rate").sample(&mut self.rng);
                self.now += gap;
            }
        }
    }

    fn fringe_cdf(&mut self, open: &[usize]) -> &Vec<f64> {
        if !self.cdf_cache.contains_key(open) {
            let pmf = intensity_pmf(&self.spec.geometry, open);
            let mut acc = 0.0;
            let cdf: Vec<f64> = pmf
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            self.cdf_cache.insert(open.to_vec(), cdf);
        }
        &self.cdf_cache[open]
    }

    /// Components for a fixed-configuration trial: one label names the
    /// apparatus, its screen, and the record.
    fn fixed_setup(&self, label: String) -> (String, String, String, Vec<usize>, u32, u32) {
        let open = self.fixed_open.clone();
        let xi = open[0] as u32;
        let eta = *open.last().unwrap() as u32;
        (label.clone(), label.clone(), label, open, xi, eta)
    }

    /// Runs one trial: arrival, apparatus bookkeeping, coherence lookup,
    /// detection draw. Exactly the same number of random draws on every
    /// path of a given scenario, so seeds stay aligned.
    pub fn next_trial(&mut self) -> TrialRecord {
        self.advance_clock();
        let t = self.t;
        let bins = self.spec.geometry.screen_bins;

        // which components this trial runs through
        let (label, mem_apparatus, screen, open, xi, eta) = match &self.spec.scenario {
            ScenarioKind::Sequential
            | ScenarioKind::RateSweep { .. }
            | ScenarioKind::ExponentialSchedule { .. } => self.fixed_setup("A0".into()),
            ScenarioKind::FreshApparatusEnsemble => self.fixed_setup(format!("F{t}")),
            ScenarioKind::CycleReset { cycle_len } => {
                self.fixed_setup(format!("C{}", t / cycle_len))
            }
            ScenarioKind::RandomTwoSlit => {
                let n = self.spec.geometry.slit_positions.len();
                let xi = self.rng.random_range(0..n);
                let eta = self.rng.random_range(0..n);
                let open = if xi == eta {
                    vec![xi]
                } else {
                    vec![xi.min(eta), xi.max(eta)]
                };
                // the shield stays, every trial gets a brand-new screen
                (format!("S{t}"), "A0".into(), format!("S{t}"), open, xi as u32, eta as u32)
            }
        };

        let key = memory_key(self.spec.kernel.site, &mem_apparatus, &screen, &open);
        let (m, gap) = self.memory.observe(key, self.now);
        let c = self.spec.kernel.coherence(m, gap);

        let branch: f64 = self.rng.random();
        let u: f64 = self.rng.random();
        let bin = if branch < c {
            let cdf = self.fringe_cdf(&open);
            cdf.partition_point(|&acc| acc <= u).min(bins - 1) as u32
        } else {
            ((u * bins as f64) as usize).min(bins - 1) as u32
        };

        self.t += 1;
        TrialRecord { t, time: self.now, xi, eta, bin, apparatus: label }
    }
}

/// Runs the scenario, handing each detection to `sink` as it happens.
pub fn run_scenario_streaming(
    spec: &ScenarioSpec,
    mut sink: impl FnMut(TrialRecord),
) -> Result<(), InterferenceError> {
    let mut sim = Simulator::new(spec.clone())?;
    for _ in 0..spec.trials {
        sink(sim.next_trial());
    }
    Ok(())
}

/// Runs the scenario and collects every detection.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Vec<TrialRecord>, InterferenceError> {
    let mut records = Vec::with_capacity(spec.trials.min(1 << 24) as usize);
    run_scenario_streaming(spec, |r| records.push(r))?;
    Ok(records)
}
