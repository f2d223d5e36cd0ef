//! Brute-force oracles and random generators shared by the integration tests.
//!
//! Everything here works on raw `u32` path masks and plain enumeration, so it
//! stays independent of the partition-based code paths it checks.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use filtra_core::{Event, OutcomeSpace, ProbabilityMeasure, SigmaAlgebra};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn full_mask(n: usize) -> u32 {
    if n == 32 { u32::MAX } else { (1u32 << n) - 1 }
}

pub fn mask_of(e: &Event) -> u32 {
    e.paths().fold(0, |m, p| m | 1 << p)
}

pub fn event_of(space: &Arc<OutcomeSpace>, mask: u32) -> Event {
    space
        .event_from_paths((0..space.num_paths()).filter(|p| mask >> p & 1 == 1))
        .unwrap()
}

/// Closes `{∅, Ω} ∪ gens` under complement and pairwise union by iterating to
/// a fixpoint.
pub fn closure_oracle(n: usize, gens: &[u32]) -> BTreeSet<u32> {
    let full = full_mask(n);
    let mut family: BTreeSet<u32> = gens.iter().copied().collect();
    family.insert(0);
    family.insert(full);
    loop {
        let current: Vec<u32> = family.iter().copied().collect();
        let mut grew = false;
        for &a in &current {
            grew |= family.insert(full & !a);
            for &b in &current {
                grew |= family.insert(a | b);
            }
        }
        if !grew {
            return family;
        }
    }
}

/// Direct check of the finite σ-algebra axioms on a mask family.
pub fn is_sigma_algebra_oracle(n: usize, family: &BTreeSet<u32>) -> bool {
    let full = full_mask(n);
    family.contains(&full)
        && family.iter().all(|&a| family.contains(&(full & !a)))
        && family
            .iter()
            .all(|&a| family.iter().all(|&b| family.contains(&(a | b))))
}

/// All set partitions of `0..n` as restricted-growth label vectors.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, labels: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(labels.clone());
            return;
        }
        for l in 0..=max + 1 {
            labels.push(l);
            rec(i + 1, n, labels, max.max(l), out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut labels = vec![0];
    rec(1, n, &mut labels, 0, &mut out);
    out
}

/// A random finite space with at most `max_paths` paths.
pub fn random_space(rng: &mut impl Rng, max_paths: usize) -> Arc<OutcomeSpace> {
    const SYMBOLS: [char; 4] = ['a', 'b', 'c', 'd'];
    loop {
        let k: usize = rng.gen_range(1..=4);
        let t = rng.gen_range(0..=4);
        if k.pow(t as u32) <= max_paths {
            return OutcomeSpace::new(t, &SYMBOLS[..k]).unwrap();
        }
    }
}

pub fn random_mask(rng: &mut impl Rng, n: usize) -> u32 {
    rng.gen::<u32>() & full_mask(n)
}

pub fn random_event(rng: &mut impl Rng, space: &Arc<OutcomeSpace>) -> Event {
    event_of(space, random_mask(rng, space.num_paths()))
}

pub fn random_generators(rng: &mut impl Rng, space: &Arc<OutcomeSpace>, max: usize) -> Vec<Event> {
    let count = rng.gen_range(0..=max);
    (0..count).map(|_| random_event(rng, space)).collect()
}

/// Random σ-algebra via a random labelling of paths.
pub fn random_algebra(rng: &mut impl Rng, space: &Arc<OutcomeSpace>) -> SigmaAlgebra {
    let blocks = rng.gen_range(1..=space.num_paths());
    let labels: Vec<usize> = (0..space.num_paths()).map(|_| rng.gen_range(0..blocks)).collect();
    SigmaAlgebra::from_keys(space, |p| labels[p])
}

/// Random coarsening of `fine`: merges its atoms by a random labelling.
pub fn random_coarsening(rng: &mut impl Rng, fine: &SigmaAlgebra) -> SigmaAlgebra {
    let blocks = rng.gen_range(1..=fine.num_atoms());
    let labels: Vec<usize> = (0..fine.num_atoms()).map(|_| rng.gen_range(0..blocks)).collect();
    SigmaAlgebra::from_keys(fine.space(), |p| labels[fine.atom_of(p)])
}

/// Random measure with every path weight strictly positive.
pub fn random_full_support(rng: &mut impl Rng, space: &Arc<OutcomeSpace>) -> ProbabilityMeasure {
    let raw: Vec<f64> = (0..space.num_paths()).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ProbabilityMeasure::explicit(space, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// Price along a lattice path by direct additive recursion.
pub fn lattice_prices_oracle(s0: f64, u: f64, d: f64, path: &str) -> Vec<f64> {
    let mut out = vec![s0];
    let mut s = s0;
    for c in path.chars() {
        s += if c == 'u' { u } else { -d };
        out.push(s);
    }
    out
}

/// All strings over `{u, d}` of length `t`, in lexicographic `u < d` order.
pub fn binary_strings(t: usize) -> Vec<String> {
    (0..1usize << t)
        .map(|i| {
            (0..t)
                .map(|k| if i >> (t - 1 - k) & 1 == 0 { 'u' } else { 'd' })
                .collect()
        })
        .collect()
}
