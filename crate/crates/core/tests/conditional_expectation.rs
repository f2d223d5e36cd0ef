mod common;

use common::*;
use filtra_core::{LatticeModel, RandomVariable, SigmaAlgebra};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-12;

fn random_variable(r: &mut impl Rng, s: &std::sync::Arc<filtra_core::OutcomeSpace>) -> RandomVariable {
    let values = (0..s.num_paths()).map(|_| r.gen_range(-10.0..10.0)).collect();
    RandomVariable::new(s, values).unwrap()
}

fn close(a: &RandomVariable, b: &RandomVariable) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= TOL)
}

#[test]
fn lattice_conditional_expectation_matches_enumeration() {
    let lp = LatticeModel::new(100.0, 10.0, 5.0, 3).unwrap().build_price_process().unwrap();
    // oracle: average S_3 over the four continuations of each first move
    let mut by_first = [0.0f64; 2];
    for path in binary_strings(3) {
        let s3 = *lattice_prices_oracle(100.0, 10.0, 5.0, &path).last().unwrap();
        by_first[usize::from(path.starts_with('d'))] += s3 / 4.0;
    }
    assert_eq!(by_first[0], 115.0);
    let f1 = SigmaAlgebra::from_keys(&lp.space, |p| lp.space.prefix_index(p, 1));
    let cond = lp.prices.at(3).conditional_expectation(&f1, &lp.measure).unwrap();
    for p in 0..8 {
        let expected = by_first[usize::from(lp.space.path_string(p).starts_with('d'))];
        assert!((cond.value(p) - expected).abs() <= TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conditional_expectation_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_space(&mut r, 16);
        let p = random_full_support(&mut r, &s);
        let fine = random_algebra(&mut r, &s);
        let coarse = random_coarsening(&mut r, &fine);
        prop_assert!(coarse.is_sub_algebra(&fine).unwrap());
        let x = random_variable(&mut r, &s);
        let y = random_variable(&mut r, &s);
        let (a, b) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));

        let e_x_coarse = x.conditional_expectation(&coarse, &p).unwrap();
        // tower
        let tower = x
            .conditional_expectation(&fine, &p).unwrap()
            .conditional_expectation(&coarse, &p).unwrap();
        prop_assert!(close(&tower, &e_x_coarse));
        // linearity
        let combo = x.zip_with(&y, |u, v| a * u + b * v).unwrap();
        let lhs = combo.conditional_expectation(&coarse, &p).unwrap();
        let rhs = e_x_coarse
            .zip_with(&y.conditional_expectation(&coarse, &p).unwrap(), |u, v| a * u + b * v)
            .unwrap();
        prop_assert!(close(&lhs, &rhs));
        // total expectation
        let total = e_x_coarse.expectation(&p).unwrap();
        prop_assert!((total - x.expectation(&p).unwrap()).abs() <= TOL);
        // taking out what is known
        let z = RandomVariable::from_fn(&s, |q| (coarse.atom_of(q) as f64) - 1.5).unwrap();
        prop_assert!(z.is_measurable(&coarse).unwrap());
        let zx = z.zip_with(&x, |u, v| u * v).unwrap();
        let lhs = zx.conditional_expectation(&coarse, &p).unwrap();
        let rhs = z.zip_with(&e_x_coarse, |u, v| u * v).unwrap();
        prop_assert!(close(&lhs, &rhs));
        // the result is measurable
        prop_assert!(e_x_coarse.is_measurable(&coarse).unwrap());
    }

    #[test]
    fn measurability_matches_sub_algebra_test(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_space(&mut r, 8);
        let f = random_algebra(&mut r, &s);
        let x = if r.gen_bool(0.5) {
            let table: Vec<f64> = (0..f.num_atoms()).map(|_| r.gen_range(0..4) as f64).collect();
            RandomVariable::from_fn(&s, |q| table[f.atom_of(q)]).unwrap()
        } else {
            let values = (0..s.num_paths()).map(|_| r.gen_range(0..4) as f64).collect();
            RandomVariable::new(&s, values).unwrap()
        };
        prop_assert_eq!(x.is_measurable(&f).unwrap(), x.sigma().is_sub_algebra(&f).unwrap());
    }
}
