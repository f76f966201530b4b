use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smomp_core::experiment::Stats;
use smomp_core::index::split_dictionary_index;
use smomp_core::random::{random_separable_problem, ProblemShape};
use smomp_core::{
    densify, group_dictionary_index, momp_solve, smomp_solve, IndexSpace, MultiIndex, SolverConfig,
};

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flatten_inverts_unflatten(dims in dims(), pick in any::<prop::sample::Index>()) {
        let space = IndexSpace::new(dims).unwrap();
        let lin = pick.index(space.total_size());
        let idx = space.unflatten(lin).unwrap();
        prop_assert_eq!(space.flatten(&idx).unwrap(), lin);
        // first index fastest
        if idx.coords()[0] + 1 < space.dims()[0] {
            let mut next = idx.coords().to_vec();
            next[0] += 1;
            prop_assert_eq!(space.flatten_coords(&next).unwrap(), lin + 1);
        }
    }

    #[test]
    fn grouped_index_round_trips(layout in prop::collection::vec(1usize..4, 1..4), pick in any::<prop::sample::Index>()) {
        let total: usize = layout.iter().sum();
        let g = pick.index(total);
        let (f, k) = split_dictionary_index(g, &layout).unwrap();
        prop_assert!(k < layout[f]);
        prop_assert_eq!(group_dictionary_index(f, k, &layout).unwrap(), g);
    }

    #[test]
    fn separable_and_dense_solvers_agree(seed in any::<u64>(), n_atoms in 1usize..=3, sweeps in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_separable_problem(&ProblemShape::default(), n_atoms, 3, 0.1, &mut rng);
        let cfg = SolverConfig { n_atoms, refinement_sweeps: sweeps, ..SolverConfig::default() };
        let s = smomp_solve(&p, &cfg).unwrap();
        let m = momp_solve(&densify(&p, None).unwrap(), &cfg).unwrap();
        prop_assert_eq!(&s.support, &m.support);
        let scale = m.coefficients.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let diff = s.coefficients.iter().zip(&m.coefficients).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-8 * scale, "coefficient difference {diff}");
    }

    #[test]
    fn solution_is_a_least_squares_fit(seed in any::<u64>(), n_atoms in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_separable_problem(&ProblemShape::default(), n_atoms, 3, 0.1, &mut rng);
        let sol = smomp_solve(&p, &SolverConfig::with_atoms(n_atoms)).unwrap();
        prop_assert!(sol.residual_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(sol.len() <= n_atoms);
        let distinct: std::collections::BTreeSet<&MultiIndex> = sol.support.iter().collect();
        prop_assert_eq!(distinct.len(), sol.len());

        // observation = sum of coefficient-weighted columns + residual
        let nq = p.n_observations();
        let mut rebuilt: Vec<Complex64> = sol.residual.data().to_vec();
        for (a, j) in sol.support.iter().enumerate() {
            let col = p.joint_column(j).unwrap();
            for m in 0..sol.n_columns {
                let c = sol.coefficient(a, m);
                for q in 0..nq {
                    rebuilt[m * nq + q] += col[q] * c;
                }
            }
        }
        let err = rebuilt.iter().zip(p.observation.data()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10 * p.observation.norm().max(1.0));
    }

    #[test]
    fn densify_preserves_joint_columns(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_separable_problem(&ProblemShape::default(), 1, 3, 0.0, &mut rng);
        let d = densify(&p, None).unwrap();
        let j = p.random_atom(&mut rng);
        let a = p.joint_column(&j).unwrap();
        let b = d.combined_atom(&j).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }

    #[test]
    fn percentiles_are_ordered(values in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let s = Stats::from_values(values.iter().copied());
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let (p10, med, p90) = (s.p10.unwrap(), s.median.unwrap(), s.p90.unwrap());
        prop_assert!(lo <= p10 && p10 <= med && med <= p90 && p90 <= hi);
        prop_assert_eq!(s.n, values.len());
    }
}
