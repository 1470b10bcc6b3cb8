mod common;

use common::props::*;
use common::{normal_program, program, tight_convex_program};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config() -> Config {
    Config {
        cases: 128,
        rng_seed: RngSeed::Fixed(0x5eed_0001),
        failure_persistence: None,
        ..Config::default()
    }
}

fn lift(r: Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn step_keeps_unfounded_sets_exact(p in program(), seed in any::<u64>()) {
        lift(incremental_unfounded(&p, seed))?;
    }

    #[test]
    fn succeeded_computations_reach_answer_sets(p in program(), seed in any::<u64>()) {
        lift(soundness(&p, seed))?;
    }

    #[test]
    fn every_answer_set_has_a_guided_computation(p in program()) {
        lift(completeness(&p))?;
    }

    #[test]
    fn jump_matches_its_expansion(p in program(), seed in any::<u64>()) {
        lift(jump_expansion(&p, seed))?;
    }

    #[test]
    fn step_order_does_not_change_the_result(p in program(), seed in any::<u64>()) {
        lift(order_independence(&p, seed))?;
    }

    #[test]
    fn dependency_graphs_agree_on_acyclicity(p in program()) {
        lift(graph_equivalence(&p))?;
    }

    #[test]
    fn certificate_order_stays_stable(p in tight_convex_program()) {
        lift(certificate_stability(&p))?;
    }

    #[test]
    fn answer_sets_match_gelfond_lifschitz(p in normal_program()) {
        lift(gl_agreement(&p))?;
    }
}
