//! Finite outcome spaces Ω of length-T event paths, events as subsets of Ω,
//! and probability measures on them.
//!
//! Paths are indexed lexicographically by the declared symbol order, so for
//! the alphabet `[u, d]` and `T = 3` index 0 is `uuu` and index 7 is `ddd`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::PathSet;
use crate::error::{Error, Result};
use crate::NORMALIZATION_TOLERANCE;

/// The set of all `|alphabet|^T` event paths over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeSpace {
    horizon: usize,
    alphabet: Vec<char>,
    num_paths: usize,
}

impl OutcomeSpace {
    pub const DEFAULT_PATH_CAP: usize = 1 << 24;

    pub fn new(horizon: usize, alphabet: &[char]) -> Result<Arc<Self>> {
        Self::with_cap(horizon, alphabet, Self::DEFAULT_PATH_CAP)
    }

    /// Builds a space, refusing anything with more than `cap` paths.
    pub fn with_cap(horizon: usize, alphabet: &[char], cap: usize) -> Result<Arc<Self>> {
        if alphabet.is_empty() {
            return Err(Error::validation("alphabet must be nonempty"));
        }
        for (i, c) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(c) {
                return Err(Error::validation(format!("duplicate symbol {c:?} in alphabet")));
            }
        }
        let base = alphabet.len() as u128;
        let mut count: u128 = 1;
        for _ in 0..horizon {
            count = count.saturating_mul(base);
            if count > cap as u128 {
                return Err(Error::Capacity {
                    what: "number of paths",
                    requested: base.saturating_pow(horizon.min(u32::MAX as usize) as u32),
                    cap: cap as u128,
                });
            }
        }
        Ok(Arc::new(OutcomeSpace {
            horizon,
            alphabet: alphabet.to_vec(),
            num_paths: count as usize,
        }))
    }

    /// The up/down space used by the lattice examples.
    pub fn binary(horizon: usize) -> Result<Arc<Self>> {
        Self::new(horizon, &['u', 'd'])
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn symbol_index(&self, symbol: char) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&c| c == symbol)
            .ok_or(Error::UnknownSymbol { symbol })
    }

    /// Number of paths sharing any given prefix of length `len`.
    pub fn cylinder_size(&self, len: usize) -> usize {
        assert!(len <= self.horizon);
        self.alphabet.len().pow((self.horizon - len) as u32)
    }

    /// Index of the length-`len` prefix of `path` among all such prefixes.
    pub fn prefix_index(&self, path: usize, len: usize) -> usize {
        path / self.cylinder_size(len)
    }

    /// Symbol indices `ω_1..ω_T` of a path.
    pub fn path_digits(&self, path: usize) -> Vec<usize> {
        assert!(path < self.num_paths, "path index {path} out of range");
        let base = self.alphabet.len();
        let mut digits = vec![0; self.horizon];
        let mut rest = path;
        for slot in digits.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        digits
    }

    pub fn path_symbols(&self, path: usize) -> Vec<char> {
        self.path_digits(path)
            .into_iter()
            .map(|d| self.alphabet[d])
            .collect()
    }

    pub fn path_string(&self, path: usize) -> String {
        self.path_symbols(path).into_iter().collect()
    }

    /// Index of a path given by its symbols; the symbol count must equal T.
    pub fn path_index(&self, symbols: &[char]) -> Result<usize> {
        if symbols.len() != self.horizon {
            return Err(Error::validation(format!(
                "path has {} symbols, horizon is {}",
                symbols.len(),
                self.horizon
            )));
        }
        self.prefix_position(symbols)
    }

    pub fn parse_path(&self, s: &str) -> Result<usize> {
        let symbols: Vec<char> = s.chars().collect();
        self.path_index(&symbols)
    }

    fn prefix_position(&self, prefix: &[char]) -> Result<usize> {
        let base = self.alphabet.len();
        prefix
            .iter()
            .try_fold(0usize, |acc, &c| Ok(acc * base + self.symbol_index(c)?))
    }

    pub fn universe(self: &Arc<Self>) -> Event {
        Event::new(self.clone(), PathSet::full(self.num_paths))
    }

    pub fn empty_event(self: &Arc<Self>) -> Event {
        Event::new(self.clone(), PathSet::empty(self.num_paths))
    }

    /// The cylinder of all paths that begin with `prefix`.
    pub fn event_from_prefix(self: &Arc<Self>, prefix: &[char]) -> Result<Event> {
        if prefix.len() > self.horizon {
            return Err(Error::validation(format!(
                "prefix length {} exceeds horizon {}",
                prefix.len(),
                self.horizon
            )));
        }
        let position = self.prefix_position(prefix)?;
        let block = self.cylinder_size(prefix.len());
        let start = position * block;
        Ok(Event::new(
            self.clone(),
            PathSet::from_range(self.num_paths, start, start + block),
        ))
    }

    pub fn event_from_paths(self: &Arc<Self>, paths: impl IntoIterator<Item = usize>) -> Result<Event> {
        let mut members = PathSet::empty(self.num_paths);
        for p in paths {
            if p >= self.num_paths {
                return Err(Error::validation(format!("path index {p} out of range")));
            }
            members.insert(p);
        }
        Ok(Event::new(self.clone(), members))
    }

    pub fn event_from_strings<S: AsRef<str>>(self: &Arc<Self>, paths: impl IntoIterator<Item = S>) -> Result<Event> {
        let indices = paths
            .into_iter()
            .map(|s| self.parse_path(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.event_from_paths(indices)
    }

    pub fn event_from_set(self: &Arc<Self>, members: PathSet) -> Result<Event> {
        if members.universe_len() != self.num_paths {
            return Err(Error::SpaceMismatch);
        }
        Ok(Event::new(self.clone(), members))
    }
}

pub(crate) fn same_space(a: &Arc<OutcomeSpace>, b: &Arc<OutcomeSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A subset of Ω.
#[derive(Clone)]
pub struct Event {
    space: Arc<OutcomeSpace>,
    members: PathSet,
}

impl Event {
    fn new(space: Arc<OutcomeSpace>, members: PathSet) -> Self {
        Event { space, members }
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn members(&self) -> &PathSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.count()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_universe(&self) -> bool {
        self.members.is_full()
    }

    pub fn contains(&self, path: usize) -> bool {
        self.members.contains(path)
    }

    pub fn paths(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter()
    }

    /// Member paths rendered as symbol strings, in canonical path order.
    pub fn path_strings(&self) -> Vec<String> {
        self.paths().map(|p| self.space.path_string(p)).collect()
    }

    pub fn complement(&self) -> Event {
        Event::new(self.space.clone(), self.members.complement())
    }

    pub fn union(&self, other: &Event) -> Result<Event> {
        self.check_space(other)?;
        Ok(Event::new(self.space.clone(), self.members.union(&other.members)))
    }

    pub fn intersect(&self, other: &Event) -> Result<Event> {
        self.check_space(other)?;
        Ok(Event::new(
            self.space.clone(),
            self.members.intersection(&other.members),
        ))
    }

    pub fn difference(&self, other: &Event) -> Result<Event> {
        self.check_space(other)?;
        Ok(Event::new(
            self.space.clone(),
            self.members.difference(&other.members),
        ))
    }

    pub fn is_subset(&self, other: &Event) -> Result<bool> {
        self.check_space(other)?;
        Ok(self.members.is_subset(&other.members))
    }

    pub(crate) fn check_space(&self, other: &Event) -> Result<()> {
        self.check_on(&other.space)
    }

    pub(crate) fn check_on(&self, space: &Arc<OutcomeSpace>) -> Result<()> {
        if same_space(&self.space, space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.members == other.members
    }
}

impl Eq for Event {}

/// Canonical event order; meaningful only for events on the same space.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.members.cmp(&other.members)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl core::fmt::Debug for Event {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_set().entries(self.path_strings()).finish()
    }
}

/// Renders an event in set notation, e.g. `{uuu,uud}` or `∅`.
impl core::fmt::Display for Event {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (i, p) in self.paths().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&self.space.path_string(p))?;
        }
        f.write_str("}")
    }
}

/// A probability measure on Ω, stored as explicit per-path weights.
///
/// When built from per-step distributions the step table is retained so it
/// can be serialized back in product form.
#[derive(Debug, Clone)]
pub struct ProbabilityMeasure {
    space: Arc<OutcomeSpace>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    step_probabilities: Option<Vec<Vec<f64>>>,
}

impl ProbabilityMeasure {
    /// i.i.d. uniform over the alphabet at every step.
    pub fn uniform(space: &Arc<OutcomeSpace>) -> Self {
        let k = space.alphabet().len();
        let step = vec![1.0 / k as f64; k];
        Self::iid(space, &step).expect("uniform step distribution is valid")
    }

    pub fn iid(space: &Arc<OutcomeSpace>, step: &[f64]) -> Result<Self> {
        Self::product(space, vec![step.to_vec(); space.horizon()])
    }

    /// Product measure from one distribution over the alphabet per time step.
    pub fn product(space: &Arc<OutcomeSpace>, steps: Vec<Vec<f64>>) -> Result<Self> {
        if steps.len() != space.horizon() {
            return Err(Error::HorizonMismatch {
                expected: space.horizon(),
                found: steps.len(),
            });
        }
        for (t, dist) in steps.iter().enumerate() {
            check_distribution(dist, space.alphabet().len())
                .map_err(|e| Error::validation(format!("step {}: {e}", t + 1)))?;
        }
        let weights = (0..space.num_paths())
            .map(|p| {
                space
                    .path_digits(p)
                    .iter()
                    .zip(&steps)
                    .map(|(&d, dist)| dist[d])
                    .product()
            })
            .collect();
        let mut m = Self::explicit(space, weights)?;
        m.step_probabilities = Some(steps);
        Ok(m)
    }

    /// A measure given directly by one weight per path.
    pub fn explicit(space: &Arc<OutcomeSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.num_paths() {
            return Err(Error::validation(format!(
                "expected {} path weights, found {}",
                space.num_paths(),
                weights.len()
            )));
        }
        check_distribution(&weights, space.num_paths())?;
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(ProbabilityMeasure {
            space: space.clone(),
            weights,
            cumulative,
            step_probabilities: None,
        })
    }

    /// Both forms supplied; they must agree path by path.
    pub fn from_both(space: &Arc<OutcomeSpace>, steps: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let product = Self::product(space, steps)?;
        if weights.len() != product.weights.len() {
            return Err(Error::validation("weight vector length does not match the space"));
        }
        for (p, (a, b)) in product.weights.iter().zip(&weights).enumerate() {
            if (a - b).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::validation(format!(
                    "product and explicit weights disagree at path {}: {a} vs {b}",
                    space.path_string(p)
                )));
            }
        }
        Ok(product)
    }

    /// Tree measure: `next(prefix)` gives the distribution of the next symbol
    /// after the symbol-index prefix. Allows history-dependent steps.
    pub fn from_transitions(space: &Arc<OutcomeSpace>, next: impl Fn(&[usize]) -> Vec<f64>) -> Result<Self> {
        let mut weights = Vec::with_capacity(space.num_paths());
        for p in 0..space.num_paths() {
            let digits = space.path_digits(p);
            let mut w = 1.0;
            for t in 0..digits.len() {
                let dist = next(&digits[..t]);
                check_distribution(&dist, space.alphabet().len())?;
                w *= dist[digits[t]];
            }
            weights.push(w);
        }
        Self::explicit(space, weights)
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn weight(&self, path: usize) -> f64 {
        self.weights[path]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_probabilities(&self) -> Option<&[Vec<f64>]> {
        self.step_probabilities.as_deref()
    }

    pub fn probability(&self, event: &Event) -> Result<f64> {
        event.check_on(&self.space)?;
        Ok(event.paths().map(|p| self.weights[p]).sum())
    }

    /// Draws one path; the same seed always yields the same path.
    pub fn sample_path(&self, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    /// Inverse-CDF draw from an existing generator. Zero-weight paths are
    /// never returned.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        if idx < self.weights.len() {
            idx
        } else {
            // rounding pushed u past the last cumulative value
            self.weights
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("measure has positive mass")
        }
    }
}

fn check_distribution(dist: &[f64], expected_len: usize) -> Result<()> {
    if dist.len() != expected_len {
        return Err(Error::validation(format!(
            "distribution has {} entries, expected {expected_len}",
            dist.len()
        )));
    }
    if let Some(w) = dist.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::validation(format!("invalid probability weight {w}")));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::validation(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}
