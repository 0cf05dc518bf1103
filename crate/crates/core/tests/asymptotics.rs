//! Scaling behavior of the two Lagrangian terms on the scaled design
//! family: the edge-length term grows like n^4 while the mean-offset bound
//! grows like n^2, so their ratio must shrink roughly fourfold per
//! doubling.

use mdlq_core::analysis::side_approximation_deviation;
use mdlq_core::labeling::{lcm_reduce, solve_labeling_reduced, TieMode};
use mdlq_core::lattice::Lattice;
use mdlq_core::rings::GaussianInt;
use mdlq_core::sublattice::{build_system, Xi};
use mdlq_core::{rat_from_i64, rat_to_f64};

#[test]
fn mean_offset_bound_loses_to_edge_term_quadratically() {
    let g1 = rat_from_i64(9);
    let g2 = rat_from_i64(5);
    let mut ratios = vec![];
    for n in [1i64, 2, 4] {
        let sys = build_system(
            &Lattice::zn(2),
            Xi::Gauss(GaussianInt::new(2 * n, n)),
            Xi::Gauss(GaussianInt::new(3 * n, 0)),
        )
        .unwrap();
        let red = solve_labeling_reduced(&sys, &g1, &g2, TieMode::Resolve).unwrap();
        let lab = lcm_reduce(&sys, &red, &g1, &g2, TieMode::Resolve).unwrap();
        let (_s1, s2, _dev) =
            side_approximation_deviation(&sys, &|p: &[i64]| lab.label_of(p), &g1, &g2).unwrap();
        // s2 sums (g2/S)^2 ||edge||^2 over the intersection Voronoi set;
        // recover the weighted edge-length term from it.
        let s = rat_to_f64(&(g1.clone() + g2.clone()));
        let sum_edges = rat_to_f64(&s2) * (s / rat_to_f64(&g2)).powi(2);
        let js1 = rat_to_f64(&g1) * rat_to_f64(&g2) / s * sum_edges / sys.n_cap as f64;
        let bound = s * rat_to_f64(&sys.meet.covering_radius_sq_normalized());
        ratios.push(bound / js1);
    }
    // Expected factors near 4 at each doubling.
    for w in ratios.windows(2) {
        let shrink = w[0] / w[1];
        assert!(
            (3.5..=4.5).contains(&shrink),
            "shrink factor {shrink} per doubling, ratios {ratios:?}"
        );
    }
}
