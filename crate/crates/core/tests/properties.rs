use proptest::prelude::*;

use rwre::critical_constants::survivor_count;
use rwre::env_model::{push_profile, tilt, EnvDistribution};
use rwre::random_env::EnvSample;
use rwre::seed::derive_seed;
use rwre::tree_model::{Tree, TreeSpec};
use rwre::tube_estimates::{tube_ln_prob_exact, TubeSpec};

fn lattice_law() -> impl Strategy<Value = EnvDistribution> {
    prop::collection::vec((-3i32..=3, 1u32..10), 2..5).prop_filter_map("needs both signs", |atoms| {
        let total: u32 = atoms.iter().map(|a| a.1).sum();
        let pts: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (x as f64, w as f64 / total as f64)).collect();
        EnvDistribution::lattice(&pts).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tilted_law_is_centred(dist in lattice_law()) {
        if let Ok(p) = push_profile(&dist) {
            if p.top_heavy {
                let t = tilt(&dist).unwrap();
                prop_assert!(t.mean().abs() < 1e-10);
                prop_assert!(p.beta >= -1e-12);
            }
        }
    }

    #[test]
    fn conductance_is_monotone_and_below_bottleneck(seed in any::<u64>(), b in 2u32..4) {
        let tree = Tree::new(TreeSpec::bary(b, 7).unwrap(), 7, u64::MAX).unwrap();
        let env = EnvSample::new(tree, EnvDistribution::gaussian(-0.3, 1.5).unwrap(), seed);
        let levels: Vec<usize> = (1..=7).collect();
        let c = env.ln_effective_conductances(&levels).unwrap();
        let u = env.ln_bottleneck_stats(&levels).unwrap();
        for w in c.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (a, b) in c.iter().zip(&u) {
            prop_assert!(*a <= *b + 1e-9);
        }
    }

    #[test]
    fn survivors_shrink_with_later_band(seed in any::<u64>(), c in 1.0f64..6.0) {
        let tree = Tree::new(TreeSpec::bary(2, 9).unwrap(), 9, u64::MAX).unwrap();
        let env = EnvSample::new(tree, EnvDistribution::plus_minus_one(0.5).unwrap(), seed);
        // a later band start only removes constraints
        let early = survivor_count(&env, c, 1, 9).unwrap();
        let late = survivor_count(&env, c, 4, 9).unwrap();
        prop_assert!(early <= late);
    }

    #[test]
    fn tube_probability_decreases_in_horizon(half in 1.0f64..6.0, p in 0.2f64..0.8) {
        let dist = EnvDistribution::plus_minus_one(p).unwrap();
        let spec = TubeSpec::symmetric(half).unwrap();
        let mut prev = 0.0;
        for n in 1..30 {
            let lp = tube_ln_prob_exact(&dist, &spec, n).unwrap();
            prop_assert!(lp <= prev + 1e-12);
            prev = lp;
        }
    }

    #[test]
    fn wider_tube_is_likelier(half in 1.0f64..5.0, extra in 0.5f64..3.0, n in 1usize..60) {
        let dist = EnvDistribution::plus_minus_one(0.5).unwrap();
        let narrow = tube_ln_prob_exact(&dist, &TubeSpec::symmetric(half).unwrap(), n).unwrap();
        let wide = tube_ln_prob_exact(&dist, &TubeSpec::symmetric(half + extra).unwrap(), n).unwrap();
        prop_assert!(narrow <= wide + 1e-12);
    }

    #[test]
    fn derived_seeds_separate_tags(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(master, &[a]), derive_seed(master, &[b]));
        prop_assert_eq!(derive_seed(master, &[a, b]), derive_seed(master, &[a, b]));
    }
}
