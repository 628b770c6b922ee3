//! Shot-based simulation of the preparation, measurement and post-selection protocol.
//!
//! Each attempt draws a member `r` of the ensemble and prepares `|Ψʳ⟩_SA = Σ α_ij |j⟩_S |i⟩_A`.
//! The observer applies a Kraus operator to `S`, sampled by the Born rule, and the pair is then
//! post-selected on `|Ψ⁺⟩_SA`. Only the success bit matters, so it is drawn from the exact
//! overlap `|⟨Ψ⁺|state⟩|²` instead of simulating the full Bell measurement.
//!
//! # Random streams
//!
//! The master seed is expanded once with `ChaCha8Rng::seed_from_u64(seed)`. Attempt `k` uses the
//! same key with the ChaCha stream (nonce) set to `k`, starting at word position 0. Uniform
//! variates are `(next_u64 >> 11) · 2⁻⁵³`. Every attempt consumes its draws in the fixed order
//! choice, member, outcome, success. Results therefore depend only on `(seed, shots)` and not on
//! how the attempt range is split across workers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::measurements::Measurement;
use crate::states::Ensemble;
use crate::vectors::{pair, Dim, DensityVector, KrausOperator, TwoTimeState, DENOMINATOR_TOL, EQ_TOL};

/// Width of the statistical acceptance band, in standard errors.
pub const SIGMA_BAND: f64 = 4.0;

/// How the observer picks a measurement on each attempt.
#[derive(Clone, Debug)]
pub enum ObserverPolicy {
    Fixed(Measurement),
    /// `(choice probability, measurement)` pairs.
    RandomChoice(Vec<(f64, Measurement)>),
}

impl ObserverPolicy {
    fn choices(&self) -> Vec<(f64, &Measurement)> {
        match self {
            ObserverPolicy::Fixed(m) => vec![(1.0, m)],
            ObserverPolicy::RandomChoice(list) => list.iter().map(|(q, m)| (*q, m)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Attempted preparations.
    pub shots: u64,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub policy: ObserverPolicy,
}

/// Summed counts of a simulation run. All fields add under [`SimResult::merge`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub attempts: u64,
    pub successes: u64,
    /// Successful attempts per outcome position, over all measurement choices.
    pub counts: Vec<u64>,
    /// `[choice][outcome]` success counts.
    pub choice_counts: Vec<Vec<u64>>,
    /// `[choice][member]` attempts.
    pub member_attempts: Vec<Vec<u64>>,
    /// `[choice][member]` successes.
    pub member_successes: Vec<Vec<u64>>,
}

impl SimResult {
    fn empty(outcomes: usize, choice_outcomes: &[usize], members: usize) -> Self {
        let choices = choice_outcomes.len();
        SimResult {
            attempts: 0,
            successes: 0,
            counts: vec![0; outcomes],
            choice_counts: choice_outcomes.iter().map(|&n| vec![0; n]).collect(),
            member_attempts: vec![vec![0; members]; choices],
            member_successes: vec![vec![0; members]; choices],
        }
    }

    /// Adds the counts of `other`, which must come from the same simulator.
    pub fn merge(&mut self, other: &SimResult) {
        fn add(a: &mut [u64], b: &[u64]) {
            assert_eq!(a.len(), b.len(), "merging results of different shapes");
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.attempts += other.attempts;
        self.successes += other.successes;
        add(&mut self.counts, &other.counts);
        for (a, b) in self.choice_counts.iter_mut().zip(&other.choice_counts) {
            add(a, b);
        }
        for (a, b) in self.member_attempts.iter_mut().zip(&other.member_attempts) {
            add(a, b);
        }
        for (a, b) in self.member_successes.iter_mut().zip(&other.member_successes) {
            add(a, b);
        }
    }

    /// `n_μ / successes`; all zeros when nothing succeeded.
    pub fn frequencies(&self) -> Vec<f64> {
        frequencies(&self.counts)
    }
}

fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&n| n as f64 / total as f64).collect()
}

/// `(f − p) / √(p(1 − p)/n)`. A degenerate target gives 0 when hit exactly and ±∞ otherwise.
pub fn z_score(freq: f64, target: f64, n: u64) -> f64 {
    let var = target * (1.0 - target);
    let diff = freq - target;
    if n == 0 {
        return 0.0;
    }
    if var <= 0.0 {
        if diff.abs() <= EQ_TOL {
            return 0.0;
        }
        return if diff > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    diff / libm::sqrt(var / n as f64)
}

/// One row of a simulation summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeStat {
    pub count: u64,
    pub frequency: f64,
    pub analytic: f64,
    pub z: f64,
}

/// Outcome of a single attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Attempt {
    pub choice: usize,
    pub member: usize,
    pub outcome: usize,
    pub success: bool,
}

/// Sampling table for one (choice, member) pair: the flattened `(μ, χ)` branches with their
/// Born probabilities and post-selection success probabilities.
#[derive(Clone, Debug)]
struct Branches {
    cumulative: Vec<f64>,
    outcome: Vec<usize>,
    success: Vec<f64>,
}

/// The bipartite state `M[s][a] = α_{a s}` of system and ancilla.
fn entangled_preparation(psi: &TwoTimeState) -> CMatrix {
    psi.coeffs().transpose()
}

/// Branches from explicit state evolution: `M' = A M`, `p = ‖M'‖²`, and the post-selection
/// overlap of the normalized `M'/√p` with `|Ψ⁺⟩`, i.e. `|tr M'|² / (d p)`.
fn branches(psi: &TwoTimeState, m: &Measurement) -> Branches {
    let d = psi.dim().get() as f64;
    let state = entangled_preparation(psi);
    let mut cumulative = Vec::new();
    let mut outcome = Vec::new();
    let mut success = Vec::new();
    let mut acc = 0.0;
    for (mu, o) in m.outcomes().iter().enumerate() {
        for a in &o.kraus {
            let evolved = a.entries().matmul(&state);
            let born: f64 = evolved.as_slice().iter().map(|z| z.norm_sqr()).sum();
            if born <= 0.0 {
                continue;
            }
            let overlap = evolved.trace().norm_sqr() / (d * born);
            acc += born;
            cumulative.push(acc);
            outcome.push(mu);
            success.push(overlap.clamp(0.0, 1.0));
        }
    }
    // Completeness makes the total one up to rounding; pin the last edge.
    if let Some(last) = cumulative.last_mut() {
        *last = f64::INFINITY;
    }
    Branches {
        cumulative,
        outcome,
        success,
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A validated configuration with precomputed sampling tables.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: SimConfig,
    base: ChaCha8Rng,
    choice_cum: Vec<f64>,
    member_cum: Vec<f64>,
    /// `[choice][member]`.
    tables: Vec<Vec<Branches>>,
    outcomes: usize,
    choice_outcomes: Vec<usize>,
    /// Analytic `[choice][outcome]` joint weights `q_c · K^μ • η / d`.
    joint: Vec<Vec<f64>>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        if config.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1"));
        }
        let choices = config.policy.choices();
        if choices.is_empty() {
            return Err(Error::Empty("measurement choices"));
        }
        let mut qsum = 0.0;
        for (i, (q, m)) in choices.iter().enumerate() {
            if !(*q > 0.0 && *q <= 1.0) {
                return Err(Error::InvalidWeight { index: i, weight: *q });
            }
            qsum += q;
            config.ensemble.dim().check(m.dim())?;
            m.require_complete()?;
        }
        if (qsum - 1.0).abs() > EQ_TOL {
            return Err(Error::NotNormalized {
                what: "choice probabilities",
                value: qsum,
            });
        }

        let d = config.ensemble.dim().get() as f64;
        let eta = crate::states::density_from_ensemble(&config.ensemble);
        let mut joint = Vec::with_capacity(choices.len());
        let mut tables = Vec::with_capacity(choices.len());
        for (q, m) in &choices {
            let w = m
                .kraus_density_vectors()
                .iter()
                .map(|k| pair(k, &eta).map(|x| q * x / d))
                .collect::<Result<Vec<_>>>()?;
            joint.push(w);
            tables.push(config.ensemble.members().iter().map(|(_, psi)| branches(psi, m)).collect());
        }
        let total: f64 = joint.iter().flatten().sum();
        if !(total > DENOMINATOR_TOL) {
            return Err(Error::PostSelectionImpossible { success: total });
        }

        let choice_outcomes: Vec<usize> = choices.iter().map(|(_, m)| m.len()).collect();
        let outcomes = choice_outcomes.iter().copied().max().unwrap_or(0);
        let choice_cum = cumulative(&choices.iter().map(|(q, _)| *q).collect::<Vec<_>>());
        let member_cum = cumulative(&config.ensemble.members().iter().map(|(p, _)| *p).collect::<Vec<_>>());
        let base = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Simulator {
            config,
            base,
            choice_cum,
            member_cum,
            tables,
            outcomes,
            choice_outcomes,
            joint,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn dim(&self) -> Dim {
        self.config.ensemble.dim()
    }

    /// The random stream of attempt `k`.
    pub fn stream(&self, attempt: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(attempt);
        rng
    }

    /// Runs attempt `k` and returns its record together with the rest of its stream.
    pub fn attempt(&self, k: u64) -> (Attempt, ChaCha8Rng) {
        let mut rng = self.stream(k);
        let choice = pick(&self.choice_cum, uniform(&mut rng));
        let member = pick(&self.member_cum, uniform(&mut rng));
        let table = &self.tables[choice][member];
        let branch = pick(&table.cumulative, uniform(&mut rng));
        let success = uniform(&mut rng) < table.success[branch];
        let rec = Attempt {
            choice,
            member,
            outcome: table.outcome[branch],
            success,
        };
        (rec, rng)
    }

    fn empty_result(&self) -> SimResult {
        SimResult::empty(self.outcomes, &self.choice_outcomes, self.config.ensemble.len())
    }

    /// Runs the attempts with indices in `range`.
    pub fn run_range(&self, range: Range<u64>) -> SimResult {
        let mut res = self.empty_result();
        for k in range {
            let (a, _) = self.attempt(k);
            res.attempts += 1;
            res.member_attempts[a.choice][a.member] += 1;
            if a.success {
                res.successes += 1;
                res.counts[a.outcome] += 1;
                res.choice_counts[a.choice][a.outcome] += 1;
                res.member_successes[a.choice][a.member] += 1;
            }
        }
        res
    }

    /// Splits `0..shots` into `parts` contiguous ranges (see [`partition`]).
    pub fn partition(&self, parts: usize) -> Vec<Range<u64>> {
        partition(self.config.shots, parts)
    }

    /// Runs every part in turn and merges the counts.
    pub fn run_partitioned(&self, parts: usize) -> SimResult {
        let mut res = self.empty_result();
        for r in self.partition(parts) {
            res.merge(&self.run_range(r));
        }
        res
    }

    pub fn run(&self) -> SimResult {
        self.run_range(0..self.config.shots)
    }

    /// Analytic conditional probabilities per outcome position over all choices.
    pub fn analytic(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.outcomes];
        for row in &self.joint {
            for (x, y) in w.iter_mut().zip(row) {
                *x += y;
            }
        }
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// Analytic conditional probabilities given that measurement `choice` was made.
    /// `None` when that choice can never succeed.
    pub fn analytic_for_choice(&self, choice: usize) -> Option<Vec<f64>> {
        let row = &self.joint[choice];
        let total: f64 = row.iter().sum();
        (total > DENOMINATOR_TOL).then(|| row.iter().map(|x| x / total).collect())
    }

    /// Analytic probability that an attempt succeeds.
    pub fn analytic_success_rate(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }

    /// Counts, frequencies, analytic targets and z-scores per outcome.
    pub fn summarize(&self, res: &SimResult) -> Vec<OutcomeStat> {
        let freqs = res.frequencies();
        self.analytic()
            .into_iter()
            .zip(freqs)
            .zip(&res.counts)
            .map(|((p, f), &count)| OutcomeStat {
                count,
                frequency: f,
                analytic: p,
                z: z_score(f, p, res.successes),
            })
            .collect()
    }
}

/// Splits `0..shots` into `parts` contiguous ranges whose lengths differ by at most one.
pub fn partition(shots: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = parts.max(1) as u64;
    let base = shots / parts;
    let extra = shots % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

pub fn simulate(config: SimConfig) -> Result<SimResult> {
    Ok(Simulator::new(config)?.run())
}

/// The eigen-ensemble of `eta`, which prepares it exactly.
pub fn ensemble_from_density(eta: &DensityVector) -> Result<Ensemble> {
    Ensemble::normalized(eta.eigen_ensemble(0.0))
}

/// Success counts and proportions of the two prepared states in the ensemble scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateProportions {
    pub successes: [u64; 2],
    pub proportions: [f64; 2],
    pub expected: [f64; 2],
    /// z-score of the first state's proportion against its expected value.
    pub z: f64,
}

impl StateProportions {
    fn new(successes: [u64; 2], expected: [f64; 2]) -> Self {
        let n = successes[0] + successes[1];
        let f = frequencies(&successes);
        StateProportions {
            successes,
            proportions: [f[0], f[1]],
            expected,
            z: z_score(f[0], expected[0], n),
        }
    }

    pub fn total(&self) -> u64 {
        self.successes[0] + self.successes[1]
    }

    pub fn within_band(&self) -> bool {
        self.z.abs() <= SIGMA_BAND
    }
}

/// Post-hoc discarding under the first measurement alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscardDemo {
    pub before: StateProportions,
    pub after: StateProportions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceDemoReport {
    pub shots: u64,
    pub seed: u64,
    pub attempts: u64,
    pub successes: u64,
    pub under_m1: StateProportions,
    pub under_m2: StateProportions,
    pub overall: StateProportions,
    /// Two-proportion z statistic comparing the first state's share under M₁ and M₂.
    pub difference_z: f64,
    /// Overall proportions agree with 1:1 within the band.
    pub overall_equal: bool,
    /// Proportions under M₁ and M₂ differ beyond the band.
    pub conditional_differ: bool,
    pub discard: DiscardDemo,
}

impl ChoiceDemoReport {
    /// Every statistical expectation of the scenario holds.
    pub fn passes(&self) -> bool {
        self.under_m1.within_band()
            && self.under_m2.within_band()
            && self.overall_equal
            && self.conditional_differ
            && self.discard.before.within_band()
            && self.discard.after.within_band()
    }
}

fn ket(v: [f64; 2]) -> [num_complex::Complex64; 2] {
    [num_complex::Complex64::new(v[0], 0.0), num_complex::Complex64::new(v[1], 0.0)]
}

fn ket_bra(u: [f64; 2], v: [f64; 2]) -> KrausOperator {
    KrausOperator::ket_bra(&ket(u), &ket(v)).expect("2-dimensional vectors")
}

/// `M₁ = {|0⟩⟨0|, |+⟩⟨1|}` and `M₂ = {|+⟩⟨0|, |0⟩⟨1|}`.
pub fn choice_demo_measurements() -> (Measurement, Measurement) {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let zero = [1.0, 0.0];
    let one = [0.0, 1.0];
    let plus = [s, s];
    let m1 = Measurement::detailed(vec![ket_bra(zero, zero), ket_bra(plus, one)]).expect("complete");
    let m2 = Measurement::detailed(vec![ket_bra(plus, zero), ket_bra(zero, one)]).expect("complete");
    (m1, m2)
}

/// `{½ Ψ(0←0), ½ Ψ(0←1)}`.
pub fn choice_demo_ensemble() -> Ensemble {
    let d = Dim::new(2).expect("nonzero");
    Ensemble::new(vec![(0.5, TwoTimeState::basis(d, 0, 0)), (0.5, TwoTimeState::basis(d, 0, 1))])
        .expect("weights sum to one")
}

/// Runs the two-state ensemble under a 50/50 random choice of M₁ and M₂, then separately under
/// M₁ alone with half of the first state's successes discarded.
pub fn simulate_choice_demo(shots: u64, seed: u64) -> Result<ChoiceDemoReport> {
    let (m1, m2) = choice_demo_measurements();
    let mixed = Simulator::new(SimConfig {
        shots,
        seed,
        ensemble: choice_demo_ensemble(),
        policy: ObserverPolicy::RandomChoice(vec![(0.5, m1.clone()), (0.5, m2)]),
    })?;
    let res = mixed.run();
    let by_state = |c: usize| [res.member_successes[c][0], res.member_successes[c][1]];
    let m1_counts = by_state(0);
    let m2_counts = by_state(1);
    let under_m1 = StateProportions::new(m1_counts, [2.0 / 3.0, 1.0 / 3.0]);
    let under_m2 = StateProportions::new(m2_counts, [1.0 / 3.0, 2.0 / 3.0]);
    let overall = StateProportions::new([m1_counts[0] + m2_counts[0], m1_counts[1] + m2_counts[1]], [0.5, 0.5]);

    let (n1, n2) = (under_m1.total() as f64, under_m2.total() as f64);
    let pooled = (m1_counts[0] + m2_counts[0]) as f64 / (n1 + n2);
    let se = libm::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    let difference_z = if se > 0.0 {
        (under_m1.proportions[0] - under_m2.proportions[0]) / se
    } else {
        0.0
    };

    let only_m1 = Simulator::new(SimConfig {
        shots,
        seed,
        ensemble: choice_demo_ensemble(),
        policy: ObserverPolicy::Fixed(m1),
    })?;
    let mut before = [0u64; 2];
    let mut after = [0u64; 2];
    for k in 0..shots {
        let (a, mut rng) = only_m1.attempt(k);
        if !a.success {
            continue;
        }
        before[a.member] += 1;
        if a.member == 0 && uniform(&mut rng) < 0.5 {
            continue;
        }
        after[a.member] += 1;
    }

    Ok(ChoiceDemoReport {
        shots,
        seed,
        attempts: res.attempts,
        successes: res.successes,
        under_m1,
        under_m2,
        overall_equal: overall.within_band(),
        overall,
        difference_z,
        conditional_differ: difference_z.abs() > SIGMA_BAND,
        discard: DiscardDemo {
            before: StateProportions::new(before, [2.0 / 3.0, 1.0 / 3.0]),
            after: StateProportions::new(after, [0.5, 0.5]),
        },
    })
}
