//! Exact finite-n lattice identities and the asymptotic weight identities on
//! the synthetic index-set families.

use rvfield::families::{spacetime, synthetic_families};
use rvfield::lattice::{InvariantOrder, Point};
use rvfield::shape::{analyze, census, census_xi, weight_identities, AnalysisConfig};

const N: i64 = 48;

#[test]
fn census_partition_and_refinement_are_exact() {
    for fam in synthetic_families() {
        let lam = fam.build(N);
        let ord = fam.order();
        let upper: Vec<_> = [1, 2, 3, 5].iter().map(|&p| census(&lam, p, &ord)).collect();
        let full: Vec<_> = [1, 2, 3, 5].iter().map(|&p| census_xi(&lam, p)).collect();
        for c in upper.iter().chain(&full) {
            assert_eq!(c.sum_counts(), lam.len(), "{}", fam.name);
        }
        let rep = weight_identities(&upper, &full, None).unwrap();
        assert!(rep.exact_ok(), "{}: {rep:?}", fam.name);
    }
}

#[test]
fn partitions_cover_and_are_disjoint_up_to_k32() {
    for fam in synthetic_families() {
        let lam = fam.build(N);
        let ord = fam.order();
        let a = analyze(&lam, &ord, &AnalysisConfig::new(fam.p)).unwrap();
        let r = if fam.dim == 3 { 12 } else { 32 };
        for s in &a.shapes {
            s.partition.verify(&s.shape, &ord, r).unwrap_or_else(|e| panic!("{}: {e}", fam.name));
        }
    }
}

#[test]
fn gamma_weights_sum_to_one_within_boundary_bound() {
    for fam in synthetic_families() {
        let lam = fam.build(N);
        let a = analyze(&lam, &fam.order(), &AnalysisConfig::new(fam.p)).unwrap();
        let resid = (a.sum_gamma_e - 1.0).abs();
        println!("{:<22} |Λ|={:>5} shapes={:>3} I*={} Σγ|E|={:.4} bound={:.4}", fam.name, lam.len(), a.shapes.len(), a.i_star.len(), a.sum_gamma_e, a.boundary_bound());
        assert!(resid <= a.boundary_bound(), "{}: residual {resid} > {}", fam.name, a.boundary_bound());
    }
}

#[test]
fn station_grid_gamma_is_one_over_station_count() {
    // the full-window census loses p time steps at each end, so γ* = (m − 2p)/(m|C|);
    // a 4×4 station block with p = 3 spans C and keeps the loss under 1/m
    let cs: Vec<Point> = (0..4).flat_map(|i| (0..4).map(move |j| Point::of(&[i, j]))).collect();
    for m in [50, 200] {
        let lam = spacetime(&cs, m).unwrap();
        let a = analyze(&lam, &InvariantOrder::lexicographic(3), &AnalysisConfig::new(3)).unwrap();
        assert_eq!(a.i_star.len(), 1);
        let g = a.i_star[0].gamma_star;
        assert_eq!(a.i_star[0].e_size, 16);
        assert!((g - 1.0 / 16.0).abs() <= 1.0 / m as f64, "m={m}: γ* = {g}");
    }
}
