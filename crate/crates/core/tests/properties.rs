use proptest::prelude::*;
use urbsys::analysis::{location_multiplicity, uniqueness_condition, LocationMultiplicity};
use urbsys::equilibrium::{scalar_composites, ModelParams};
use urbsys::geometry::{assign_labels, build_grid, DistanceSystem, DomainGrid, Site};

fn unit_grid(n: usize) -> DomainGrid {
    build_grid([0.0, 0.0, 1.0, 1.0], (n, n), |_| true).unwrap()
}

fn sites_and_weights() -> impl Strategy<Value = (Vec<Site>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec((0.05f64..0.95, 0.05f64..0.95), n),
            prop::collection::vec(-0.3f64..0.3, n),
        )
            .prop_map(|(pos, w)| {
                let sites = pos
                    .into_iter()
                    .enumerate()
                    .map(|(i, (x, y))| Site::new(i, [x, y], 1.0))
                    .collect();
                (sites, w)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn labels_ignore_common_weight_shift((sites, w) in sites_and_weights(), c in -2.0f64..2.0) {
        let grid = unit_grid(24);
        let metric = DistanceSystem::euclidean(sites.len());
        let a = assign_labels(&grid, &sites, &metric, &w).unwrap();
        // Shift by a dyadic amount so the comparison stays exact.
        let c = (c * 64.0).round() / 64.0;
        let shifted: Vec<f64> = w.iter().map(|x| x + c).collect();
        let b = assign_labels(&grid, &sites, &metric, &shifted).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn raising_a_weight_never_shrinks_its_cell((sites, w) in sites_and_weights(), bump in 0.0f64..0.3, pick in 0usize..5) {
        let grid = unit_grid(24);
        let metric = DistanceSystem::euclidean(sites.len());
        let i = pick % sites.len();
        let before = assign_labels(&grid, &sites, &metric, &w).unwrap();
        let mut w2 = w.clone();
        w2[i] += bump;
        let after = assign_labels(&grid, &sites, &metric, &w2).unwrap();
        for cell in 0..grid.n_cells() {
            if before.labels[cell] as usize == i {
                prop_assert_eq!(after.labels[cell] as usize, i);
            }
        }
        prop_assert!(after.cell_measure[i] >= before.cell_measure[i] - 1e-12);
    }

    #[test]
    fn labels_match_exhaustive_argmin((sites, w) in sites_and_weights()) {
        let grid = unit_grid(20);
        let metric = DistanceSystem::euclidean(sites.len());
        let tess = assign_labels(&grid, &sites, &metric, &w).unwrap();
        for cell in 0..grid.n_cells() {
            let x = grid.center(cell);
            let best = (0..sites.len())
                .map(|i| (i, metric.distance(i, sites[i].position, x) - w[i]))
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            prop_assert_eq!(tess.labels[cell] as usize, best.0);
        }
    }

    #[test]
    fn measures_sum_to_domain_area((sites, w) in sites_and_weights()) {
        let grid = unit_grid(24);
        let metric = DistanceSystem::euclidean(sites.len());
        let tess = assign_labels(&grid, &sites, &metric, &w).unwrap();
        prop_assert!((tess.total_measure() - grid.inside_area()).abs() < 1e-9);
    }

    #[test]
    fn uniqueness_lhs_is_monotone(
        sigma in 1.5f64..10.0,
        alpha in 0.0f64..0.5,
        beta in -0.8f64..-0.05,
        eta in 0.0f64..1.0,
        d_eta in 0.0f64..1.0,
        n in 1usize..8,
    ) {
        let p = ModelParams::baseline(sigma, alpha, beta, 1.0, 0.0);
        let comp = scalar_composites(&p).unwrap();
        prop_assume!(comp.gamma1.abs() > 1e-6);
        let base = uniqueness_condition(&comp, n, eta).unwrap();
        let more_eta = uniqueness_condition(&comp, n, eta + d_eta).unwrap();
        let more_sites = uniqueness_condition(&comp, n + 1, eta).unwrap();
        prop_assert!(more_eta.lhs >= base.lhs);
        prop_assert!(more_sites.lhs >= base.lhs);
        prop_assert!(base.lhs >= base.gamma_ratio);
    }

    #[test]
    fn multiplicity_flips_at_the_cutoff(sigma in 1.1f64..20.0, off in 1e-6f64..0.5) {
        let cut = 1.0 / (sigma - 1.0);
        prop_assert_eq!(location_multiplicity(cut + off, sigma), LocationMultiplicity::Multiple);
        prop_assert_eq!(location_multiplicity(cut - off, sigma), LocationMultiplicity::Spread);
        prop_assert_eq!(location_multiplicity(cut, sigma), LocationMultiplicity::KnifeEdge);
    }
}
