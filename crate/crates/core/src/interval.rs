//! Exact finite unions of real intervals inside a bounded universe, plus the
//! bounded-increment random walk whose reachable prices form a cone.
//!
//! Endpoints are stored exactly as given and compared with plain `f64`
//! ordering; there is no tolerance anywhere in the set algebra. Each endpoint
//! carries its own open/closed flag so complements are exact: complementing
//! an excluded endpoint includes it and vice versa.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One interval with per-endpoint closure. A degenerate `[x, x]` is a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Interval {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, true, hi, true)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, false, hi, false)
    }

    /// `[lo, hi)`
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Self::new(lo, true, hi, false)
    }

    /// `(lo, hi]`
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, false, hi, true)
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => !(self.lo_closed && self.hi_closed),
            _ => true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Same endpoints, both closed.
    pub fn closure(&self) -> Self {
        Self::closed(self.lo, self.hi)
    }
}

impl core::fmt::Display for Interval {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A finite union of intervals inside the closed universe `[L, U]`, kept in
/// canonical form: sorted, pairwise disjoint, and no two pieces mergeable.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    universe: (f64, f64),
    pieces: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty(lo: f64, hi: f64) -> Result<Self> {
        Self::new((lo, hi), Vec::new())
    }

    pub fn full(lo: f64, hi: f64) -> Result<Self> {
        Self::new((lo, hi), alloc::vec![Interval::closed(lo, hi)])
    }

    /// Canonicalizes `pieces`; every nonempty piece must lie in the universe.
    pub fn new(universe: (f64, f64), pieces: Vec<Interval>) -> Result<Self> {
        let (lo, hi) = universe;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::validation(format!("invalid universe [{lo}, {hi}]")));
        }
        let mut kept = Vec::with_capacity(pieces.len());
        for p in pieces {
            if p.lo.is_nan() || p.hi.is_nan() {
                return Err(Error::validation("interval endpoint is NaN"));
            }
            if p.is_empty() {
                continue;
            }
            if p.lo < lo || p.hi > hi {
                return Err(Error::validation(format!(
                    "interval {p} is not inside the universe [{lo}, {hi}]"
                )));
            }
            kept.push(p);
        }
        Ok(IntervalSet {
            universe,
            pieces: canonicalize(kept),
        })
    }

    pub fn single(universe: (f64, f64), piece: Interval) -> Result<Self> {
        Self::new(universe, alloc::vec![piece])
    }

    pub fn universe(&self) -> (f64, f64) {
        self.universe
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    /// Membership in the closure; used for probabilities, where endpoints
    /// carry no mass.
    pub fn closure_contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|p| p.closure().contains(x))
    }

    /// Total length of the pieces.
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(Interval::length).sum()
    }

    /// Complement relative to the universe.
    pub fn complement(&self) -> IntervalSet {
        let (lo, hi) = self.universe;
        let mut out = Vec::with_capacity(self.pieces.len() + 1);
        let mut cursor = (lo, true);
        for p in &self.pieces {
            let gap = Interval::new(cursor.0, cursor.1, p.lo, !p.lo_closed);
            if !gap.is_empty() {
                out.push(gap);
            }
            cursor = (p.hi, !p.hi_closed);
        }
        let tail = Interval::new(cursor.0, cursor.1, hi, true);
        if !tail.is_empty() {
            out.push(tail);
        }
        IntervalSet {
            universe: self.universe,
            pieces: out,
        }
    }

    pub fn union(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.check_universe(other)?;
        let mut all = self.pieces.clone();
        all.extend_from_slice(&other.pieces);
        Ok(IntervalSet {
            universe: self.universe,
            pieces: canonicalize(all),
        })
    }

    /// Pairwise sweep over both canonical piece lists.
    pub fn intersect(&self, other: &IntervalSet) -> Result<IntervalSet> {
        self.check_universe(other)?;
        let (a, b) = (&self.pieces, &other.pieces);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = max_lower(&a[i], &b[j]);
            let hi = min_upper(&a[i], &b[j]);
            let piece = Interval::new(lo.0, lo.1, hi.0, hi.1);
            if !piece.is_empty() {
                out.push(piece);
            }
            // advance whichever ends first
            if upper_cmp(&a[i], &b[j]) == Ordering::Less {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(IntervalSet {
            universe: self.universe,
            pieces: canonicalize(out),
        })
    }

    pub fn is_subset(&self, other: &IntervalSet) -> Result<bool> {
        Ok(self.intersect(other)? == *self)
    }

    fn check_universe(&self, other: &IntervalSet) -> Result<()> {
        if self.universe == other.universe {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }
}

impl core::fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("∅");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Orders by lower endpoint; a closed lower endpoint starts before an open
/// one at the same value.
fn lower_cmp(a: &Interval, b: &Interval) -> Ordering {
    a.lo.total_cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed))
}

/// Orders by upper endpoint; an open upper endpoint ends before a closed one
/// at the same value.
fn upper_cmp(a: &Interval, b: &Interval) -> Ordering {
    a.hi.total_cmp(&b.hi).then_with(|| a.hi_closed.cmp(&b.hi_closed))
}

fn max_lower(a: &Interval, b: &Interval) -> (f64, bool) {
    let w = if lower_cmp(a, b) == Ordering::Less { b } else { a };
    (w.lo, w.lo_closed)
}

fn min_upper(a: &Interval, b: &Interval) -> (f64, bool) {
    let w = if upper_cmp(a, b) == Ordering::Less { a } else { b };
    (w.hi, w.hi_closed)
}

/// `next` (starting no earlier than `cur`) overlaps or touches `cur` with a
/// closed endpoint on at least one side.
fn mergeable(cur: &Interval, next: &Interval) -> bool {
    next.lo < cur.hi || (next.lo == cur.hi && (cur.hi_closed || next.lo_closed))
}

fn canonicalize(mut pieces: Vec<Interval>) -> Vec<Interval> {
    pieces.retain(|p| !p.is_empty());
    pieces.sort_by(lower_cmp);
    let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(cur) if mergeable(cur, &p) => {
                if upper_cmp(&p, cur) == Ordering::Greater {
                    cur.hi = p.hi;
                    cur.hi_closed = p.hi_closed;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

/// Smallest `n ≥ 1` with `a + 1/n ≤ x ≤ b - 1/n`, witnessing
/// `x ∈ ∪_n [a + 1/n, b - 1/n] = (a, b)`. `None` when `x ∉ (a, b)`.
pub fn limit_union_witness(a: f64, b: f64, x: f64) -> Result<Option<u64>> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::validation(format!("need finite a < b, got a={a}, b={b}")));
    }
    if !(a < x && x < b) {
        return Ok(None);
    }
    let inside = |n: u64| {
        let step = 1.0 / n as f64;
        a + step <= x && x <= b - step
    };
    // the condition is monotone in n, so start from the real-arithmetic
    // answer and correct for rounding in either direction
    let gap = (x - a).min(b - x);
    let mut n = libm::ceil(1.0 / gap).clamp(1.0, u64::MAX as f64 / 2.0) as u64;
    while n > 1 && inside(n - 1) {
        n -= 1;
    }
    while !inside(n) {
        n = n.checked_add(1).ok_or_else(|| Error::validation("no representable witness"))?;
    }
    Ok(Some(n))
}

/// Distribution of one increment, always within `[-d, u]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum IncrementDistribution {
    /// Uniform on `[-d, u]`.
    #[default]
    Uniform,
    /// `+u` with probability `p_up`, otherwise `-d`; the lattice as a walk.
    TwoPoint { p_up: f64 },
    /// Always the given value.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousWalkModel {
    pub s0: f64,
    pub down: f64,
    pub up: f64,
    pub horizon: usize,
    pub increments: IncrementDistribution,
}

impl ContinuousWalkModel {
    pub fn new(s0: f64, down: f64, up: f64, horizon: usize) -> Result<Self> {
        Self::with_increments(s0, down, up, horizon, IncrementDistribution::Uniform)
    }

    pub fn with_increments(
        s0: f64,
        down: f64,
        up: f64,
        horizon: usize,
        increments: IncrementDistribution,
    ) -> Result<Self> {
        if !(s0.is_finite() && down.is_finite() && up.is_finite() && down > 0.0 && up > 0.0) {
            return Err(Error::validation("need finite S0 and positive finite d, u"));
        }
        match increments {
            IncrementDistribution::TwoPoint { p_up } if !(0.0..=1.0).contains(&p_up) => {
                return Err(Error::validation(format!("p_up {p_up} outside [0, 1]")));
            }
            IncrementDistribution::Fixed(x) if !(x >= -down && x <= up) => {
                return Err(Error::validation(format!("fixed increment {x} outside [-d, u]")));
            }
            _ => {}
        }
        Ok(ContinuousWalkModel {
            s0,
            down,
            up,
            horizon,
            increments,
        })
    }

    fn increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match self.increments {
            IncrementDistribution::Uniform => -self.down + (self.up + self.down) * rng.gen::<f64>(),
            IncrementDistribution::TwoPoint { p_up } => {
                if rng.gen::<f64>() < p_up {
                    self.up
                } else {
                    -self.down
                }
            }
            IncrementDistribution::Fixed(x) => x,
        };
        // rounding in the affine map can overshoot by an ulp
        x.clamp(-self.down, self.up)
    }

    /// `[S0 - t·d, S0 + t·u]`.
    ///
    /// The bounds are accumulated one step at a time, the same way simulated
    /// prices are, so monotone rounding keeps every simulated `S_t` inside.
    pub fn cone_bounds(&self, t: usize) -> Result<Interval> {
        if t > self.horizon {
            return Err(Error::validation(format!("t={t} beyond horizon {}", self.horizon)));
        }
        Ok(self.cone_table()[t])
    }

    fn cone_table(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.horizon + 1);
        let (mut lo, mut hi) = (self.s0, self.s0);
        out.push(Interval::closed(lo, hi));
        for _ in 0..self.horizon {
            lo -= self.down;
            hi += self.up;
            out.push(Interval::closed(lo, hi));
        }
        out
    }

    /// One price path `S_0..S_T`.
    pub fn simulate_path(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.path_with(&mut rng, self.horizon)
    }

    pub fn path_with<R: Rng + ?Sized>(&self, rng: &mut R, steps: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut s = self.s0;
        out.push(s);
        for _ in 0..steps {
            s += self.increment(rng);
            out.push(s);
        }
        out
    }

    /// `n` independent draws of `S_t`, deterministic given `seed`. Path `i`
    /// uses stream `i` of the seeded generator.
    pub fn sample_prices(&self, t: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
        if t > self.horizon {
            return Err(Error::validation(format!("t={t} beyond horizon {}", self.horizon)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|i| {
                rng.set_stream(i as u64);
                rng.set_word_pos(0);
                let mut s = self.s0;
                for _ in 0..t {
                    s += self.increment(&mut rng);
                }
                s
            })
            .collect())
    }

    /// Monte Carlo estimate of `P(S_t ∈ set)` with its standard error.
    /// Endpoint flags are ignored.
    pub fn estimate_event_probability(&self, t: usize, set: &IntervalSet, n: usize, seed: u64) -> Result<(f64, f64)> {
        if n == 0 {
            return Err(Error::validation("need at least one sample"));
        }
        let cone = self.cone_bounds(t)?;
        let (lo, hi) = set.universe();
        if lo > cone.lo || hi < cone.hi {
            return Err(Error::validation(format!(
                "universe [{lo}, {hi}] does not contain the cone {cone} at t={t}"
            )));
        }
        let samples = self.sample_prices(t, n, seed)?;
        Ok(frequency(&samples, set))
    }

    /// Per-step rows for one simulated path plus one row per event set.
    pub fn emit_cone_figure_data(&self, seed: u64, events: &[(usize, IntervalSet)]) -> Result<ConeFigure> {
        if let Some((t, _)) = events.iter().find(|(t, _)| *t > self.horizon) {
            return Err(Error::validation(format!(
                "event time {t} beyond horizon {}",
                self.horizon
            )));
        }
        let path = self.simulate_path(seed);
        let cone = self.cone_table();
        let path_rows = path
            .iter()
            .zip(&cone)
            .enumerate()
            .map(|(t, (&price, c))| PathRow {
                t,
                price,
                cone_low: c.lo,
                cone_high: c.hi,
            })
            .collect();
        let event_rows = events
            .iter()
            .map(|(t, set)| EventRow {
                t: *t,
                set: set.clone(),
                price: path[*t],
                contains: set.contains(path[*t]),
            })
            .collect();
        Ok(ConeFigure {
            path_rows,
            event_rows,
        })
    }
}

/// Fraction of `samples` in the closure of `set`, with its standard error.
pub fn frequency(samples: &[f64], set: &IntervalSet) -> (f64, f64) {
    let n = samples.len() as f64;
    let hits = samples.iter().filter(|&&x| set.closure_contains(x)).count() as f64;
    let p = hits / n;
    (p, libm::sqrt(p * (1.0 - p) / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub t: usize,
    pub price: f64,
    pub cone_low: f64,
    pub cone_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub t: usize,
    pub set: IntervalSet,
    pub price: f64,
    pub contains: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeFigure {
    pub path_rows: Vec<PathRow>,
    pub event_rows: Vec<EventRow>,
}
