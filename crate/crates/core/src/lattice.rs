//! Additive binomial lattice and a long/flat trading MDP on top of it.
//!
//! Prices move by `+u` or `-d` each step, so after `k` ups and `t - k` downs
//! the price is `S0 + k·u - (t-k)·d`. Prices are always computed from the
//! up/down counts, which keeps recombining nodes bit-identical.
//!
//! A position held over `[t, t+1)` earns `position_t · (S_{t+1} - S_t)`,
//! discounted by `rho^t`. Policies come in three kinds: Markov (sees
//! `(t, S_t)`), path-adapted (sees `ω_1..ω_t`) and prescient (sees all of
//! `ω`). Only the last can leak future information, which
//! [`leak_detect`] finds by checking that decisions are constant on the atoms
//! of each `F_t`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::outcome::{Event, OutcomeSpace, ProbabilityMeasure};
use crate::random_variable::{RandomVariable, StochasticProcess};
use crate::sigma::SigmaAlgebra;

pub const UP: char = 'u';
pub const DOWN: char = 'd';

/// Tolerance for comparing conditional next-step distributions.
pub const MARKOV_TOLERANCE: f64 = 1e-12;

/// Probability of an up move.
#[derive(Debug, Clone, PartialEq)]
pub enum UpProbability {
    /// One probability per step, independent of history.
    PerStep(Vec<f64>),
    /// `table[t][prefix]` is the up probability after the length-`t` prefix
    /// with lexicographic index `prefix` (`u` before `d`). History dependent
    /// and generally not Markov in the price.
    PerPrefix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub s0: f64,
    pub up: f64,
    pub down: f64,
    pub horizon: usize,
    pub up_probability: UpProbability,
}

impl LatticeModel {
    /// Model with up probability 0.5 at every step.
    pub fn new(s0: f64, up: f64, down: f64, horizon: usize) -> Result<Self> {
        let m = LatticeModel {
            s0,
            up,
            down,
            horizon,
            up_probability: UpProbability::PerStep(vec![0.5; horizon]),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_up_probability(self, p: f64) -> Result<Self> {
        let steps = vec![p; self.horizon];
        self.with_step_probabilities(steps)
    }

    pub fn with_step_probabilities(mut self, steps: Vec<f64>) -> Result<Self> {
        self.up_probability = UpProbability::PerStep(steps);
        self.validate()?;
        Ok(self)
    }

    pub fn with_prefix_probabilities(mut self, table: Vec<Vec<f64>>) -> Result<Self> {
        self.up_probability = UpProbability::PerPrefix(table);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s0.is_finite() {
            return Err(Error::validation("S0 must be finite"));
        }
        if !(self.up.is_finite() && self.up > 0.0 && self.down.is_finite() && self.down > 0.0) {
            return Err(Error::validation("increments u and d must be positive and finite"));
        }
        if self.horizon == 0 {
            return Err(Error::validation("lattice horizon must be at least 1"));
        }
        let check = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::validation(format!("up probability {p} outside [0, 1]")))
            }
        };
        match &self.up_probability {
            UpProbability::PerStep(steps) => {
                if steps.len() != self.horizon {
                    return Err(Error::HorizonMismatch {
                        expected: self.horizon,
                        found: steps.len(),
                    });
                }
                steps.iter().try_for_each(|&p| check(p))
            }
            UpProbability::PerPrefix(table) => {
                if table.len() != self.horizon {
                    return Err(Error::HorizonMismatch {
                        expected: self.horizon,
                        found: table.len(),
                    });
                }
                for (t, row) in table.iter().enumerate() {
                    if row.len() != 1 << t {
                        return Err(Error::validation(format!(
                            "step {t} needs {} prefix probabilities, found {}",
                            1usize << t,
                            row.len()
                        )));
                    }
                    row.iter().try_for_each(|&p| check(p))?;
                }
                Ok(())
            }
        }
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.up_probability, UpProbability::PerStep(_))
    }

    /// Up probability for the step after the given prefix (0 = up, 1 = down).
    pub fn up_probability_after(&self, prefix: &[usize]) -> f64 {
        let t = prefix.len();
        match &self.up_probability {
            UpProbability::PerStep(steps) => steps[t],
            UpProbability::PerPrefix(table) => {
                let idx = prefix.iter().fold(0, |acc, &d| acc * 2 + d);
                table[t][idx]
            }
        }
    }

    /// `S0 + ups·u - downs·d`.
    pub fn price(&self, ups: usize, downs: usize) -> f64 {
        self.s0 + ups as f64 * self.up - downs as f64 * self.down
    }

    pub fn space(&self) -> Result<Arc<OutcomeSpace>> {
        OutcomeSpace::binary(self.horizon)
    }

    pub fn measure(&self, space: &Arc<OutcomeSpace>) -> Result<ProbabilityMeasure> {
        ProbabilityMeasure::from_transitions(space, |prefix| {
            let p = self.up_probability_after(prefix);
            vec![p, 1.0 - p]
        })
    }

    /// Price after the given symbols (`u`/`d`), at most T of them.
    pub fn replay_state(&self, prefix: &[char]) -> Result<f64> {
        if prefix.len() > self.horizon {
            return Err(Error::validation(format!(
                "prefix length {} exceeds horizon {}",
                prefix.len(),
                self.horizon
            )));
        }
        let mut ups = 0;
        for &c in prefix {
            match c {
                UP => ups += 1,
                DOWN => {}
                other => return Err(Error::UnknownSymbol { symbol: other }),
            }
        }
        Ok(self.price(ups, prefix.len() - ups))
    }

    /// The space, its measure and the price process `S_0..S_T`.
    pub fn build_price_process(&self) -> Result<LatticeProcess> {
        self.validate()?;
        let space = self.space()?;
        let measure = self.measure(&space)?;
        let prices = StochasticProcess::from_fn(&space, |t, p| {
            let ups = space.path_digits(p)[..t].iter().filter(|&&d| d == 0).count();
            self.price(ups, t - ups)
        })?;
        Ok(LatticeProcess {
            space,
            measure,
            prices,
        })
    }

    /// Checks that paths reaching the same price at time t face the same
    /// distribution of `S_{t+1}`.
    pub fn verify_markov_property(&self) -> Result<MarkovVerdict> {
        let lp = self.build_price_process()?;
        Ok(verify_markov(&lp.prices, &lp.measure))
    }
}

/// Output of [`LatticeModel::build_price_process`].
#[derive(Debug, Clone)]
pub struct LatticeProcess {
    pub space: Arc<OutcomeSpace>,
    pub measure: ProbabilityMeasure,
    pub prices: StochasticProcess,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkovVerdict {
    Ok,
    /// Two `F_t` atoms with equal `X_t` but different laws of `X_{t+1}`.
    Violated { t: usize, first: Event, second: Event },
}

impl MarkovVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, MarkovVerdict::Ok)
    }
}

/// Markov check for any process on a path space: for each `t < T`, atoms of
/// the natural `F_t` on which `X_t` agrees must induce the same conditional
/// law of `X_{t+1}`. Zero-probability atoms are skipped.
pub fn verify_markov(process: &StochasticProcess, measure: &ProbabilityMeasure) -> MarkovVerdict {
    let space = process.space();
    let natural = Filtration::natural(space);
    for t in 0..process.horizon() {
        let stage = &natural.stages()[t];
        let now = process.at(t);
        let next = process.at(t + 1);
        // state key -> (atom index, law of X_{t+1})
        let mut seen: BTreeMap<u64, (usize, BTreeMap<u64, f64>)> = BTreeMap::new();
        for (i, atom) in stage.atom_sets().iter().enumerate() {
            let mass: f64 = atom.iter().map(|p| measure.weight(p)).sum();
            if mass <= 0.0 {
                continue;
            }
            let mut law: BTreeMap<u64, f64> = BTreeMap::new();
            for p in atom.iter() {
                *law.entry(state_key(next.value(p))).or_insert(0.0) += measure.weight(p) / mass;
            }
            let first = atom.first().expect("atoms are nonempty");
            let key = state_key(now.value(first));
            match seen.get(&key) {
                None => {
                    seen.insert(key, (i, law));
                }
                Some((j, reference)) => {
                    if !same_law(reference, &law) {
                        return MarkovVerdict::Violated {
                            t,
                            first: stage.atom(*j),
                            second: stage.atom(i),
                        };
                    }
                }
            }
        }
    }
    MarkovVerdict::Ok
}

fn same_law(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> bool {
    let keys: alloc::collections::BTreeSet<&u64> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        let pa = a.get(k).copied().unwrap_or(0.0);
        let pb = b.get(k).copied().unwrap_or(0.0);
        (pa - pb).abs() <= MARKOV_TOLERANCE
    })
}

fn state_key(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Flat,
    Long,
}

impl Action {
    pub fn position(self) -> f64 {
        match self {
            Action::Flat => 0.0,
            Action::Long => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Flat => "flat",
            Action::Long => "long",
        }
    }
}

impl core::fmt::Display for Action {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Action::Flat),
            "long" => Ok(Action::Long),
            other => Err(Error::validation(format!("unknown action {other:?}"))),
        }
    }
}

/// One unit long or flat in the lattice asset, rewarded by the price change.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingMdp {
    pub model: LatticeModel,
    pub rho: f64,
}

impl TradingMdp {
    pub fn new(model: LatticeModel, rho: f64) -> Result<Self> {
        model.validate()?;
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::validation(format!("discount {rho} outside (0, 1]")));
        }
        Ok(TradingMdp { model, rho })
    }

    /// Discounted reward of `policy` along one full path.
    pub fn realized_reward(&self, policy: &Policy, path: &[char]) -> Result<f64> {
        let mut total = 0.0;
        let mut discount = 1.0;
        let mut price = self.model.replay_state(&[])?;
        for t in 0..self.model.horizon {
            let next = self.model.replay_state(&path[..=t])?;
            let action = policy.action(&self.model, t, path)?;
            total += discount * action.position() * (next - price);
            discount *= self.rho;
            price = next;
        }
        Ok(total)
    }

    /// `Σ_ω P(ω) Σ_t rho^t position_t(ω) (S_{t+1}(ω) - S_t(ω))`, by enumeration.
    pub fn evaluate_policy_exact(&self, policy: &Policy) -> Result<f64> {
        let space = self.model.space()?;
        let measure = self.model.measure(&space)?;
        let mut value = 0.0;
        for p in 0..space.num_paths() {
            let path = space.path_symbols(p);
            value += measure.weight(p) * self.realized_reward(policy, &path)?;
        }
        Ok(value)
    }

    /// Backward induction over the recombining lattice nodes `(t, #ups)`.
    ///
    /// Returns the optimal value and a greedy Markov policy keyed by
    /// `(t, S_t)`. Ties go to flat. Requires history-free step probabilities.
    pub fn optimal_adapted_value(&self) -> Result<(f64, Policy)> {
        let UpProbability::PerStep(steps) = &self.model.up_probability else {
            return Err(Error::validation(
                "backward induction over prices needs per-step up probabilities",
            ));
        };
        let horizon = self.model.horizon;
        let mut value_next = vec![0.0; horizon + 1];
        let mut table = Vec::new();
        for t in (0..horizon).rev() {
            let p = steps[t];
            let mut value_now = vec![0.0; t + 1];
            for (ups, slot) in value_now.iter_mut().enumerate() {
                let price = self.model.price(ups, t - ups);
                let up_price = self.model.price(ups + 1, t - ups);
                let down_price = self.model.price(ups, t + 1 - ups);
                let drift = p * (up_price - price) + (1.0 - p) * (down_price - price);
                let continuation = self.rho * (p * value_next[ups + 1] + (1.0 - p) * value_next[ups]);
                let (action, v) = if drift > 0.0 {
                    (Action::Long, drift + continuation)
                } else {
                    (Action::Flat, continuation)
                };
                *slot = v;
                table.push((t, price, action));
            }
            value_next = value_now;
        }
        Ok((value_next[0], Policy::markov_table(table)))
    }

    /// Sample-mean estimate of the policy value, deterministic given `seed`.
    ///
    /// Samples are drawn in chunks of [`MC_CHUNK`] paths, chunk `c` using
    /// stream `c` of the seeded generator, so chunks can be computed
    /// independently with [`TradingMdp::monte_carlo_chunk`] and merged in
    /// order with the same result.
    pub fn monte_carlo_value(&self, policy: &Policy, samples: usize, seed: u64) -> Result<McEstimate> {
        if samples == 0 {
            return Err(Error::validation("need at least one sample"));
        }
        let mut stats = RunningStats::default();
        let mut chunk = 0u64;
        let mut remaining = samples;
        while remaining > 0 {
            let count = remaining.min(MC_CHUNK);
            stats.merge(&self.monte_carlo_chunk(policy, seed, chunk, count)?);
            remaining -= count;
            chunk += 1;
        }
        Ok(stats.estimate())
    }

    pub fn monte_carlo_chunk(&self, policy: &Policy, seed: u64, chunk: u64, count: usize) -> Result<RunningStats> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let mut stats = RunningStats::default();
        let mut digits = Vec::with_capacity(self.model.horizon);
        let mut path = Vec::with_capacity(self.model.horizon);
        for _ in 0..count {
            digits.clear();
            path.clear();
            for _ in 0..self.model.horizon {
                let p = self.model.up_probability_after(&digits);
                let up = rng.gen::<f64>() < p;
                digits.push(if up { 0 } else { 1 });
                path.push(if up { UP } else { DOWN });
            }
            stats.push(self.realized_reward(policy, &path)?);
        }
        Ok(stats)
    }
}

/// Sample count per Monte Carlo chunk.
pub const MC_CHUNK: usize = 4096;

/// Welford accumulator; merging is Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Mean and standard error of the mean. A single sample reports a
    /// standard error of zero.
    pub fn estimate(&self) -> McEstimate {
        let standard_error = if self.count > 1 {
            let var = self.m2 / (self.count - 1) as f64;
            libm::sqrt(var / self.count as f64)
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            standard_error,
            samples: self.count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
}

pub type MarkovRule = Arc<dyn Fn(usize, f64) -> Option<Action> + Send + Sync>;
pub type HistoryRule = Arc<dyn Fn(usize, &[char]) -> Option<Action> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Markov,
    PathAdapted,
    Prescient,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Markov => "markov",
            PolicyKind::PathAdapted => "path_adapted",
            PolicyKind::Prescient => "prescient",
        }
    }
}

/// A decision rule. Rules return `None` where they are undefined.
#[derive(Clone)]
pub enum Policy {
    /// Sees `(t, S_t)`.
    Markov(MarkovRule),
    /// Sees `(t, ω_1..ω_t)`.
    PathAdapted(HistoryRule),
    /// Sees `(t, ω)` for the whole path.
    Prescient(HistoryRule),
}

impl core::fmt::Debug for Policy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Policy::{}", self.kind().as_str())
    }
}

impl Policy {
    pub fn markov(rule: impl Fn(usize, f64) -> Action + Send + Sync + 'static) -> Self {
        Policy::Markov(Arc::new(move |t, s| Some(rule(t, s))))
    }

    pub fn path_adapted(rule: impl Fn(usize, &[char]) -> Action + Send + Sync + 'static) -> Self {
        Policy::PathAdapted(Arc::new(move |t, h| Some(rule(t, h))))
    }

    pub fn prescient(rule: impl Fn(usize, &[char]) -> Action + Send + Sync + 'static) -> Self {
        Policy::Prescient(Arc::new(move |t, w| Some(rule(t, w))))
    }

    pub fn always_long() -> Self {
        Self::markov(|_, _| Action::Long)
    }

    pub fn always_flat() -> Self {
        Self::markov(|_, _| Action::Flat)
    }

    /// Long exactly when the next move is up; reads `ω_{t+1}`.
    pub fn prescient_next_up() -> Self {
        Self::prescient(|t, path| if path[t] == UP { Action::Long } else { Action::Flat })
    }

    /// Markov decision table keyed by `(t, S_t)`.
    pub fn markov_table(entries: impl IntoIterator<Item = (usize, f64, Action)>) -> Self {
        let table: BTreeMap<(usize, u64), Action> = entries
            .into_iter()
            .map(|(t, s, a)| ((t, state_key(s)), a))
            .collect();
        Policy::Markov(Arc::new(move |t, s| table.get(&(t, state_key(s))).copied()))
    }

    /// Path-adapted decision table keyed by `(t, prefix)` with `prefix` the
    /// first `t` symbols as a string.
    pub fn path_table(entries: impl IntoIterator<Item = (usize, String, Action)>) -> Self {
        let table: BTreeMap<(usize, String), Action> =
            entries.into_iter().map(|(t, h, a)| ((t, h), a)).collect();
        Policy::PathAdapted(Arc::new(move |t, h: &[char]| {
            let key: String = h.iter().collect();
            table.get(&(t, key)).copied()
        }))
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Markov(_) => PolicyKind::Markov,
            Policy::PathAdapted(_) => PolicyKind::PathAdapted,
            Policy::Prescient(_) => PolicyKind::Prescient,
        }
    }

    /// The same behaviour expressed on prefixes: a Markov rule replays the
    /// price from the prefix. Prescient policies have no such form.
    pub fn to_path_adapted(&self, model: &LatticeModel) -> Result<Policy> {
        match self {
            Policy::Markov(rule) => {
                let rule = rule.clone();
                let model = model.clone();
                Ok(Policy::PathAdapted(Arc::new(move |t, prefix: &[char]| {
                    let s = model.replay_state(prefix).ok()?;
                    rule(t, s)
                })))
            }
            Policy::PathAdapted(_) => Ok(self.clone()),
            Policy::Prescient(_) => Err(Error::validation(
                "a prescient policy reads the future and has no path-adapted form",
            )),
        }
    }

    /// Decision at epoch `t` on the full path `path`.
    pub fn action(&self, model: &LatticeModel, t: usize, path: &[char]) -> Result<Action> {
        if t >= path.len() {
            return Err(Error::validation(format!(
                "decision epoch {t} outside path of length {}",
                path.len()
            )));
        }
        match self {
            Policy::Markov(rule) => {
                let s = model.replay_state(&path[..t])?;
                rule(t, s).ok_or_else(|| Error::PartialPolicy {
                    t,
                    input: format!("S_t={s}"),
                })
            }
            Policy::PathAdapted(rule) => rule(t, &path[..t]).ok_or_else(|| Error::PartialPolicy {
                t,
                input: format!("prefix {:?}", path[..t].iter().collect::<String>()),
            }),
            Policy::Prescient(rule) => rule(t, path).ok_or_else(|| Error::PartialPolicy {
                t,
                input: format!("path {:?}", path.iter().collect::<String>()),
            }),
        }
    }

    /// `x_t` as {0, 1}-valued random variables for `t = 0..T-1`.
    pub fn decision_variables(&self, model: &LatticeModel, space: &Arc<OutcomeSpace>) -> Result<Vec<RandomVariable>> {
        let paths: Vec<Vec<char>> = (0..space.num_paths()).map(|p| space.path_symbols(p)).collect();
        (0..model.horizon)
            .map(|t| {
                let values = paths
                    .iter()
                    .map(|path| Ok(self.action(model, t, path)?.position()))
                    .collect::<Result<Vec<_>>>()?;
                RandomVariable::new(space, values)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeakVerdict {
    Adapted,
    /// Within `atom` of `F_t` the time-t decision takes both `actions`.
    Leak {
        t: usize,
        atom: Event,
        actions: (Action, Action),
    },
}

impl LeakVerdict {
    pub fn is_adapted(&self) -> bool {
        matches!(self, LeakVerdict::Adapted)
    }
}

/// Checks that the policy's time-t decision is constant on every atom of
/// `F_t`, for every decision epoch `t < T`.
pub fn leak_detect(model: &LatticeModel, filtration: &Filtration, policy: &Policy) -> Result<LeakVerdict> {
    let space = filtration.space();
    if space.horizon() != model.horizon || space.alphabet() != [UP, DOWN] {
        return Err(Error::SpaceMismatch);
    }
    let epochs = model.horizon.min(filtration.len());
    let paths: Vec<Vec<char>> = (0..space.num_paths()).map(|p| space.path_symbols(p)).collect();
    for t in 0..epochs {
        let stage: &SigmaAlgebra = &filtration.stages()[t];
        for (i, atom) in stage.atom_sets().iter().enumerate() {
            let mut members = atom.iter();
            let Some(first) = members.next() else { continue };
            let a0 = policy.action(model, t, &paths[first])?;
            for p in members {
                let a = policy.action(model, t, &paths[p])?;
                if a != a0 {
                    return Ok(LeakVerdict::Leak {
                        t,
                        atom: stage.atom(i),
                        actions: (a0, a),
                    });
                }
            }
        }
    }
    Ok(LeakVerdict::Adapted)
}

impl core::fmt::Display for LeakVerdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LeakVerdict::Adapted => f.write_str("adapted"),
            LeakVerdict::Leak { t, atom, actions } => {
                write!(f, "leak at t={t} in atom {atom}: {} vs {}", actions.0, actions.1)
            }
        }
    }
}
