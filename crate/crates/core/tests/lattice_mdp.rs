mod common;

use std::collections::BTreeSet;

use common::*;
use filtra_core::filtration::Filtration;
use filtra_core::lattice::leak_detect;
use filtra_core::{Action, LatticeModel, Policy, TradingMdp};
use proptest::prelude::*;
use rand::Rng;

/// Reward of a path-adapted decision table on one path, computed directly.
/// `table[t][prefix]` is the position over step t.
fn oracle_reward(u: f64, d: f64, path: &str, decide: impl Fn(usize, &str) -> bool) -> f64 {
    path.chars()
        .enumerate()
        .map(|(t, c)| {
            let inc = if c == 'u' { u } else { -d };
            if decide(t, &path[..t]) { inc } else { 0.0 }
        })
        .sum()
}

/// Every deterministic path-adapted policy at horizon `t`, as bit tables
/// over the `2^t - 1` prefixes.
fn all_adapted_tables(t: usize) -> Vec<Vec<bool>> {
    let points = (1usize << t) - 1;
    (0..1usize << points)
        .map(|m| (0..points).map(|i| m >> i & 1 == 1).collect())
        .collect()
}

fn prefix_slot(prefix: &str) -> usize {
    // prefixes of length t occupy slots 2^t - 1 .. 2^{t+1} - 2
    let t = prefix.len();
    let idx = prefix.chars().fold(0, |acc, c| acc * 2 + usize::from(c == 'd'));
    (1 << t) - 1 + idx
}

#[test]
fn prescient_dominates_every_adapted_policy_pathwise() {
    for t in 1..=4 {
        let (u, d) = (10.0, 5.0);
        let tables = all_adapted_tables(t);
        for path in binary_strings(t) {
            let prescient = oracle_reward(u, d, &path, |i, _| path.as_bytes()[i] == b'u');
            for table in &tables {
                let r = oracle_reward(u, d, &path, |_, h| table[prefix_slot(h)]);
                assert!(prescient >= r);
            }
        }
    }
}

#[test]
fn backward_induction_matches_brute_force_over_markov_policies() {
    let mut r = rng(21);
    for _ in 0..40 {
        let t = r.gen_range(1..=3);
        let model = LatticeModel::new(100.0, r.gen_range(1.0..12.0), r.gen_range(1.0..12.0), t)
            .unwrap()
            .with_step_probabilities((0..t).map(|_| r.gen_range(0.0..1.0)).collect())
            .unwrap();
        let rho = if r.gen_bool(0.5) { 1.0 } else { r.gen_range(0.5..1.0) };
        let mdp = TradingMdp::new(model.clone(), rho).unwrap();
        let (value, policy) = mdp.optimal_adapted_value().unwrap();

        // Markov nodes (step, #ups); brute force over all on/off assignments
        let nodes: Vec<(usize, usize)> = (0..t).flat_map(|s| (0..=s).map(move |k| (s, k))).collect();
        let lp = model.build_price_process().unwrap();
        let mut best = f64::NEG_INFINITY;
        for mask in 0..1u32 << nodes.len() {
            let long = |s: usize, k: usize| {
                let i = nodes.iter().position(|&n| n == (s, k)).unwrap();
                mask >> i & 1 == 1
            };
            let mut v = 0.0;
            for p in 0..lp.space.num_paths() {
                let path = lp.space.path_string(p);
                let prices = lattice_prices_oracle(100.0, model.up, model.down, &path);
                let mut disc = 1.0;
                let mut total = 0.0;
                for s in 0..t {
                    let ups = path[..s].matches('u').count();
                    if long(s, ups) {
                        total += disc * (prices[s + 1] - prices[s]);
                    }
                    disc *= rho;
                }
                v += lp.measure.weight(p) * total;
            }
            best = best.max(v);
        }
        assert!((value - best).abs() < 1e-9, "{value} vs {best}");
        assert!((mdp.evaluate_policy_exact(&policy).unwrap() - value).abs() < 1e-9);
    }
}

#[test]
fn distinct_prices_per_step() {
    let model = LatticeModel::new(100.0, 10.0, 5.0, 6).unwrap();
    let lp = model.build_price_process().unwrap();
    for t in 0..=6 {
        let prices: BTreeSet<u64> = lp.prices.at(t).values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(prices.len(), t + 1);
    }
}

#[test]
fn monte_carlo_brackets_exact_values() {
    let mdp = TradingMdp::new(LatticeModel::new(100.0, 10.0, 5.0, 3).unwrap(), 1.0).unwrap();
    for (policy, exact) in [(Policy::always_long(), 7.5), (Policy::prescient_next_up(), 15.0)] {
        let est = mdp.monte_carlo_value(&policy, 100_000, 2024).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.standard_error, "{est:?}");
        assert_eq!(est.samples, 100_000);
    }
}

#[test]
fn markov_policies_are_always_adapted() {
    let model = LatticeModel::new(50.0, 3.0, 2.0, 4).unwrap();
    let space = model.space().unwrap();
    let nat = Filtration::natural(&space);
    let mut r = rng(4);
    for _ in 0..20 {
        let cut = r.gen_range(40.0..60.0);
        let pi = Policy::markov(move |t, s| if s + t as f64 > cut { Action::Long } else { Action::Flat });
        assert!(leak_detect(&model, &nat, &pi).unwrap().is_adapted());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leak_verdict_matches_measurability(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = r.gen_range(1..=4);
        let model = LatticeModel::new(100.0, 10.0, 5.0, t).unwrap();
        let space = model.space().unwrap();
        let nat = Filtration::natural(&space);
        let table: Vec<bool> = (0..space.num_paths() * t).map(|_| r.gen_bool(0.5)).collect();
        let n = space.num_paths();
        let full_path = Policy::prescient(move |step, path| {
            let idx = path.iter().fold(0, |acc, &c| acc * 2 + usize::from(c == 'd'));
            if table[step * n + idx] { Action::Long } else { Action::Flat }
        });
        let verdict = leak_detect(&model, &nat, &full_path).unwrap();
        let decisions = full_path.decision_variables(&model, &space).unwrap();
        let measurable = decisions
            .iter()
            .enumerate()
            .all(|(i, x)| x.is_measurable(&nat.stages()[i]).unwrap());
        prop_assert_eq!(verdict.is_adapted(), measurable);
    }

    #[test]
    fn always_long_reward_telescopes(s0 in 1.0f64..200.0, u in 0.5f64..20.0, d in 0.5f64..20.0, t in 1usize..=5) {
        let model = LatticeModel::new(s0, u, d, t).unwrap();
        let mdp = TradingMdp::new(model.clone(), 1.0).unwrap();
        let lp = model.build_price_process().unwrap();
        for p in 0..lp.space.num_paths() {
            let path = lp.space.path_symbols(p);
            let reward = mdp.realized_reward(&Policy::always_long(), &path).unwrap();
            let expected = lp.prices.at(t).value(p) - s0;
            prop_assert!((reward - expected).abs() <= 1e-9);
        }
        prop_assert!(Filtration::natural(&lp.space).is_adapted(&lp.prices).unwrap());
    }
}
