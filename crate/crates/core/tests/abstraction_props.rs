mod common;

use common::{check_properties, random_program, D};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stabguard::abstraction::{beta_minus, beta_plus};
use stabguard::corpus;
use stabguard::lang::{BoolExpr, VarMap};
use stabguard::semantics::{is_possibly_sat, SatContext};
use stabguard::transform::{atom_errors, program_analysis_env};

#[test]
fn corpus_guards_satisfy_properties() {
    assert_eq!(check_properties(&corpus::eps_line(D), &corpus::eps_line_ranges(), 5000, 1), (0, 0));
    assert_eq!(
        check_properties(&corpus::winding_number_edge(D), &corpus::winding_number_edge_ranges(), 3000, 2),
        (0, 0)
    );
}

#[test]
fn mutual_exclusion_by_refutation() {
    for (p, ranges) in [
        (corpus::eps_line(D), corpus::eps_line_ranges()),
        (corpus::winding_number_edge(D), corpus::winding_number_edge_ranges()),
    ] {
        let errs = atom_errors(&p, &ranges).unwrap();
        let env = program_analysis_env(&p, &ranges).unwrap();
        let mut names = p.params.clone();
        names.extend(p.body.let_bindings().into_iter().map(|(n, _)| n.to_string()));
        let ctx = SatContext::from_analysis(&env, &names, &VarMap::canonical(), D);
        for g in p.body.guards() {
            let both = BoolExpr::and(beta_plus(g, &errs, D).unwrap(), beta_minus(g, &errs, D).unwrap());
            assert!(!is_possibly_sat(&BoolExpr::True, &both, Some(&ctx)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_guards_satisfy_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng, 0);
        prop_assert_eq!(check_properties(&p, &common::gen_ranges(), 200, seed), (0, 0));
    }

    #[test]
    fn double_negation_is_transparent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng, 0);
        let errs = atom_errors(&p, &common::gen_ranges()).unwrap();
        for g in p.body.guards() {
            let nn = BoolExpr::not(BoolExpr::not(g.clone()));
            prop_assert_eq!(beta_plus(&nn, &errs, D).unwrap(), beta_plus(g, &errs, D).unwrap());
            prop_assert_eq!(
                beta_minus(&BoolExpr::not(g.clone()), &errs, D).unwrap(),
                beta_plus(g, &errs, D).unwrap()
            );
        }
    }
}
