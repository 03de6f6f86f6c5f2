mod common;

use proptest::prelude::*;

use taskplan::oracle::{exact_completion_optimum, exact_optimum, exact_schedule};
use taskplan::planner::{alt_lower_bound, bnb, lower_bound, schedule, upper_bound, BnbConfig, Instance, LbMode, Node};

fn exhaustive() -> BnbConfig {
    BnbConfig { budget: std::time::Duration::from_secs(60), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhausted_search_matches_oracle(seed in any::<u64>()) {
        let (team, poset) = common::random_case(seed, 5);
        let inst = Instance::from_poset(&poset, &team).unwrap();
        let opt = exact_optimum(&inst).unwrap().makespan;
        for mode in [LbMode::Min, LbMode::Max] {
            let r = bnb(&inst, &BnbConfig { lb_mode: mode, ..exhaustive() }, |_| {});
            prop_assert!(r.proven);
            prop_assert!((r.makespan().unwrap() - opt).abs() < 1e-6, "bnb {:?} oracle {}", r.makespan(), opt);
        }
    }

    #[test]
    fn bounds_bracket_completion_optimum(seed in any::<u64>(), walk in any::<u64>()) {
        let (team, poset) = common::random_case(seed, 4);
        let inst = Instance::from_poset(&poset, &team).unwrap();
        let mut node = Node::root(&inst);
        let mut w = walk;
        loop {
            let opt = exact_completion_optimum(&inst, &node).map(|s| s.makespan).unwrap_or(f64::INFINITY);
            prop_assert!(lower_bound(&inst, &node, LbMode::Min) <= opt + 1e-6);
            prop_assert!(lower_bound(&inst, &node, LbMode::Max) <= opt + 1e-6);
            prop_assert!(alt_lower_bound(&inst, &node) <= opt + 1e-6);
            if let Some((_, ub)) = upper_bound(&inst, &node) {
                prop_assert!(ub >= opt - 1e-6);
            }
            let kids = node.children(&inst);
            if kids.is_empty() {
                break;
            }
            node = kids[(w % kids.len() as u64) as usize].clone();
            w /= 7;
        }
    }

    #[test]
    fn schedule_matches_exact_schedule(seed in any::<u64>()) {
        let (team, poset) = common::random_case(seed, 5);
        let inst = Instance::from_poset(&poset, &team).unwrap();
        if let Some((node, _)) = upper_bound(&inst, &Node::root(&inst)) {
            let s = schedule(&inst, &node).unwrap();
            let exact = exact_schedule(&inst, &node).unwrap();
            prop_assert!((s.makespan - exact).abs() < 1e-6);
            let word: Vec<(f64, f64)> = (0..inst.len()).map(|w| (s.start[w], inst.tasks[w].duration())).collect();
            prop_assert!(poset.admits_schedule(&word));
        }
    }

    #[test]
    fn incumbent_history_strictly_decreases(seed in any::<u64>()) {
        let (team, poset) = common::random_case(seed, 5);
        let inst = Instance::from_poset(&poset, &team).unwrap();
        let r = bnb(&inst, &exhaustive(), |_| {});
        for w in r.history.windows(2) {
            prop_assert!(w[1].makespan < w[0].makespan);
        }
    }
}
