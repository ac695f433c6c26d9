use cheeger_core::*;
use proptest::prelude::*;

fn line(res: u32) -> Grid {
    build_grid(&DomainSpec::unit_interval(), res).unwrap()
}

fn square(res: u32) -> Grid {
    build_grid(&DomainSpec::unit_square(), res).unwrap()
}

fn set_from_bits(g: &Grid, bits: &[bool]) -> CellSet {
    CellSet::from_mask(&bits[..g.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_perimeter_never_exceeds_dirichlet(bits in proptest::collection::vec(any::<bool>(), 36)) {
        let g = square(6);
        let s = set_from_bits(&g, &bits);
        prop_assume!(!s.is_empty());
        prop_assert!(g.iso_ratio(&s, PerimeterMode::Relative) <= g.iso_ratio(&s, PerimeterMode::Dirichlet));
    }

    #[test]
    fn complement_partitions_the_grid(bits in proptest::collection::vec(any::<bool>(), 36)) {
        let g = square(6);
        let s = set_from_bits(&g, &bits);
        let c = s.complement(&g);
        prop_assert!(s.is_disjoint(&c));
        prop_assert_eq!(s.len() + c.len(), g.len());
    }

    #[test]
    fn sweep_respects_the_discrete_chain(
        vals in proptest::collection::vec(0.0f64..1.0, 36),
        p in 1.2f64..3.0,
    ) {
        let g = square(6);
        let f = ScalarField::new(&g, vals).unwrap();
        prop_assume!(!f.is_zero());
        let s = sweep(&g, &f, p, PerimeterMode::Dirichlet).unwrap();
        prop_assert!(s.phi <= s.discrete_bound());
        prop_assert_eq!(g.iso_ratio(&s.set, PerimeterMode::Dirichlet), s.phi);
    }

    #[test]
    fn sweep_set_is_a_superlevel_set(vals in proptest::collection::vec(-1.0f64..1.0, 20)) {
        let g = line(20);
        let f = ScalarField::new(&g, vals).unwrap();
        prop_assume!(!f.is_zero());
        let s = sweep(&g, &f, 2.0, PerimeterMode::Dirichlet).unwrap();
        for c in 0..g.len() {
            prop_assert_eq!(s.set.contains(c), f.get(c).abs() >= s.t_opt);
        }
        let best = sweep_profile(&g, &f, PerimeterMode::Dirichlet)
            .unwrap()
            .into_iter()
            .map(|(_, r)| r)
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!(best, s.phi);
    }

    #[test]
    fn rayleigh_is_scale_and_sign_invariant(
        vals in proptest::collection::vec(0.01f64..1.0, 16),
        scale in 0.1f64..10.0,
        p in 1.1f64..4.0,
    ) {
        let g = line(16);
        let f = ScalarField::new(&g, vals).unwrap();
        let a = rayleigh(&g, &f, p).unwrap();
        let b = rayleigh(&g, &f.scaled(-scale), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn bruteforce_is_below_any_local_search(
        cut_a in 1usize..10,
        cut_b in 1usize..10,
        k in 1usize..3,
    ) {
        let g = line(12);
        let mut cuts = [cut_a.min(cut_b), cut_a.max(cut_b) + 1];
        cuts[1] = cuts[1].min(11);
        let seed: Vec<CellSet> = match k {
            1 => vec![CellSet::new(&g, 0..cuts[0]).unwrap()],
            _ => vec![
                CellSet::new(&g, 0..cuts[0]).unwrap(),
                CellSet::new(&g, cuts[1]..12).unwrap(),
            ],
        };
        let exact = hk_bruteforce(&g, seed.len(), PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap();
        let ls = hk_local_search(&g, PerimeterMode::Dirichlet, &seed, 1000).unwrap();
        let seed_value = seed.iter().map(|s| g.iso_ratio(s, PerimeterMode::Dirichlet)).fold(0.0, f64::max);
        prop_assert!(exact.value <= ls.value);
        prop_assert!(ls.value <= seed_value);
    }

    #[test]
    fn disjoint_families_bound_the_spectrum(cuts in proptest::collection::btree_set(1usize..15, 1..4)) {
        let g = line(16);
        let mut edges: Vec<usize> = vec![0];
        edges.extend(cuts.iter().copied());
        edges.push(16);
        let family: Vec<ScalarField> = edges
            .windows(2)
            .map(|w| ScalarField::indicator(&g, &CellSet::new(&g, w[0]..w[1]).unwrap()))
            .collect();
        let k = family.len();
        let bound = lambda_upper_from_family(&g, &family, 2.0).unwrap();
        let lambdas = spectrum_p2(&g, k).unwrap().eigenvalues;
        prop_assert!(bound.bound >= lambdas[k - 1] * (1.0 - 1e-9));
    }
}

#[test]
fn exact_values_grow_with_k() {
    for g in [line(10), square(3)] {
        let mut last = 0.0;
        for k in 1..=3 {
            let v = hk_bruteforce(&g, k, PerimeterMode::Dirichlet, DEFAULT_BUDGET).unwrap().value;
            assert!(v >= last);
            last = v;
        }
    }
}
