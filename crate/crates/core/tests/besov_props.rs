use fedwave::besov::{self, besov_norm, tail_constant, BesovParams, SampleStyle};
use fedwave::wavelet::{build_family, FamilyName};
use proptest::prelude::*;

fn params(alpha: f64, p: f64, q: f64, r: f64) -> BesovParams {
    BesovParams::new(alpha, p, q, r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_trees_obey_tail_bound(
        alpha in 0.6f64..1.9,
        p in prop::sample::select(vec![2.0, 4.0, f64::INFINITY]),
        q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]),
        r in 0.1f64..5.0,
        cosine in any::<bool>(),
        seed in any::<u64>(),
    ) {
        prop_assume!(alpha - 1.0 / p >= 0.5);
        let f = build_family(FamilyName::Daubechies2, 12).unwrap();
        let b = params(alpha, p, q, r);
        let style = if cosine { SampleStyle::CosinePrior } else { SampleStyle::UniformDecay };
        let lmax = 9;
        let tree = besov::sample_besov(&b, &f, lmax, style, seed).unwrap();
        prop_assert!(besov_norm(&tree, &b) <= r * (1.0 + 1e-12));
        for level in f.l0()..lmax {
            let bound = tail_constant(alpha) * 2f64.powf(-2.0 * level as f64 * alpha) * r * r;
            prop_assert!(tree.tail_energy(level) <= bound * (1.0 + 1e-12), "level {}", level);
        }
    }

    #[test]
    fn norm_is_absolutely_homogeneous(seed in any::<u64>(), t in -10.0f64..10.0) {
        let f = build_family(FamilyName::Haar, 12).unwrap();
        let b = params(0.75, 4.0, 2.0, 1.0);
        let tree = besov::sample_besov(&b, &f, 7, SampleStyle::UniformDecay, seed).unwrap();
        let lhs = besov_norm(&tree.scaled(t), &b);
        let rhs = t.abs() * besov_norm(&tree, &b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn noiseless_samples_lie_on_the_curve(seed in any::<u64>(), db in any::<bool>()) {
        let name = if db { FamilyName::Daubechies3 } else { FamilyName::Haar };
        let f = build_family(name, 12).unwrap();
        let b = params(1.0, f64::INFINITY, f64::INFINITY, 1.0);
        let tree = besov::sample_besov(&b, &f, 6, SampleStyle::UniformDecay, seed).unwrap();
        let data = besov::generate_sample(&tree, &f, 200, 0.0, seed ^ 1).unwrap();
        for (x, y) in data.iter() {
            prop_assert_eq!(y, f.synthesize(&tree, x).unwrap());
        }
    }

    #[test]
    fn envelope_dominates_sup_norm(seed in any::<u64>()) {
        let f = build_family(FamilyName::Daubechies2, 12).unwrap();
        let b = params(0.75, f64::INFINITY, f64::INFINITY, 1.0);
        let tree = besov::sample_besov(&b, &f, 8, SampleStyle::UniformDecay, seed).unwrap();
        let envelope = besov::sup_norm_bound(&tree, &f);
        for i in 0..=1024 {
            let x = i as f64 / 1024.0;
            prop_assert!(f.synthesize(&tree, x).unwrap().abs() <= envelope);
        }
    }
}
