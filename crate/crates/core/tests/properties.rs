//! Property tests for the structural invariants.

use std::sync::Arc;

use proptest::prelude::*;
use rvfield::extremal::{argmax_t_star, ThetaEstimate, ThetaVariant};
use rvfield::lattice::{
    box_points, cube_points, window_shape, Component, IndexSet, InvariantOrder, LatticeUnion, Point, Sublattice,
};
use rvfield::models::{kernel_1d, simulate, FieldModel};
use rvfield::shape::{census, census_xi, refinement_violation, truncate_key};
use rvfield::spectral::Modulus;

fn point(k: usize, r: i64) -> impl Strategy<Value = Point> {
    prop::collection::vec(-r..=r, k).prop_map(|v| Point::of(&v))
}

fn order(k: usize) -> impl Strategy<Value = InvariantOrder> {
    Just((0..k).collect::<Vec<_>>()).prop_shuffle().prop_map(|p| InvariantOrder::permuted(p).unwrap())
}

/// Random subset of the box [0, side]^k, keeping each point with probability ~density.
fn random_set(k: usize, side: i64) -> impl Strategy<Value = IndexSet> {
    let all = box_points(&Point::zero(k), &Point::of(&vec![side; k]));
    let n = all.len();
    prop::collection::vec(prop::bool::weighted(0.6), n).prop_map(move |keep| {
        let pts: Vec<Point> = all.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
        IndexSet::new(k, pts).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn order_is_total_antisymmetric_and_shift_invariant(
        (o, s, t, z) in (1usize..=3).prop_flat_map(|k| (order(k), point(k, 20), point(k, 20), point(k, 20)))
    ) {
        let a = o.cmp(&s, &t);
        prop_assert_eq!(a, o.cmp(&t, &s).reverse());
        prop_assert_eq!(a, o.cmp(&(s + z), &(t + z)));
        prop_assert_eq!(a == std::cmp::Ordering::Equal, s == t);
        // exactly one of d ≻ 0, −d ≻ 0, d = 0
        let d = s - t;
        let pos = [o.is_positive(&d), o.is_positive(&-d), d.is_zero()];
        prop_assert_eq!(pos.iter().filter(|b| **b).count(), 1);
    }

    #[test]
    fn window_shape_refines_by_truncation(
        (lam, o) in (1usize..=2).prop_flat_map(|k| (random_set(k, if k == 1 { 40 } else { 9 }), order(k))),
        p in 1i64..=3,
        extra in 1i64..=3,
    ) {
        prop_assume!(!lam.is_empty());
        for t in lam.iter() {
            let coarse = window_shape(&lam, t, p, &o).unwrap();
            let fine = window_shape(&lam, t, p + extra, &o).unwrap();
            prop_assert_eq!(truncate_key(fine.points(), p), coarse.points().to_vec());
        }
    }

    #[test]
    fn census_counts_and_refinement_are_exact(
        (lam, o) in (1usize..=2).prop_flat_map(|k| (random_set(k, if k == 1 { 60 } else { 8 }), order(k))),
        p in 1i64..=2,
    ) {
        prop_assume!(!lam.is_empty());
        let c1 = census(&lam, p, &o);
        let c2 = census(&lam, p + 1, &o);
        prop_assert_eq!(c1.sum_counts(), lam.len());
        prop_assert_eq!(c2.sum_counts(), lam.len());
        prop_assert_eq!(*c1.sum_weights().numer(), *c1.sum_weights().denom());
        prop_assert_eq!(refinement_violation(&c1, &c2).unwrap(), 0);
        let x1 = census_xi(&lam, p);
        let x2 = census_xi(&lam, p + 1);
        prop_assert_eq!(x1.sum_counts(), lam.len());
        prop_assert_eq!(refinement_violation(&x1, &x2).unwrap(), 0);
    }

    #[test]
    fn hnf_is_canonical_under_unimodular_change(
        (gens, ops) in (2usize..=3).prop_flat_map(|k| (
            prop::collection::vec(point(k, 6), 1..=k),
            prop::collection::vec((0usize..3, 0usize..3, -3i64..=3, 0u8..3), 0..12),
        ))
    ) {
        let k = gens[0].dim();
        let base = Sublattice::from_generators(k, &gens).unwrap();
        let mut g = gens.clone();
        let n = g.len();
        for (i, j, m, kind) in ops {
            let (i, j) = (i % n, j % n);
            match kind {
                0 if i != j => { let add = g[j].scale(m); g[i] = g[i] + add; }
                1 => g.swap(i, j),
                _ => g[i] = -g[i],
            }
        }
        let changed = Sublattice::from_generators(k, &g).unwrap();
        prop_assert_eq!(&base, &changed);
        for x in &gens {
            prop_assert!(changed.contains(x));
        }
        // adding a member as a generator changes nothing
        let mut more = g.clone();
        more.push(gens[0] + gens[gens.len() - 1]);
        prop_assert_eq!(&base, &Sublattice::from_generators(k, &more).unwrap());
    }

    #[test]
    fn lattice_union_scan_matches_enumeration(
        (comps, isolated, o, half) in (1usize..=3).prop_flat_map(|k| (
            prop::collection::vec((prop::collection::vec(point(k, 4), 1..=k), point(k, 3)), 1..=3),
            prop::collection::vec(point(k, 5), 0..4),
            order(k),
            any::<bool>(),
        )),
        r in 1i64..=5,
    ) {
        let k = o.dim();
        let components: Vec<Component> = comps
            .iter()
            .map(|(g, off)| Component { lattice: Sublattice::from_generators(k, g).unwrap(), offset: *off })
            .collect();
        let mut u = LatticeUnion::from_components(k, components, isolated);
        if half {
            u = u.positive(&o);
        }
        prop_assert_eq!(u.intersect_cube(r), u.enumerate_cube(r));
    }

    #[test]
    fn modulus_is_homogeneous_and_bracketed_by_sup(
        x in prop::collection::vec(0.0f64..10.0, 1..8),
        lam in 0.01f64..100.0,
        alpha in 0.3f64..4.0,
        sup_kind in any::<bool>(),
    ) {
        let ups: Vec<Point> = (0..x.len() as i64).map(|i| Point::of(&[i])).collect();
        let rho = if sup_kind { Modulus::sup(ups).unwrap() } else { Modulus::alpha_norm(alpha, ups).unwrap() };
        let a = rho.apply(x.iter().copied());
        let b = rho.apply(x.iter().map(|v| lam * v));
        prop_assert!((b - lam * a).abs() <= 1e-9 * (1.0 + b.abs()));
        let sup = x.iter().copied().fold(0.0, f64::max);
        let (c, d) = rho.constants();
        prop_assert!(c <= d);
        // sup ≤ C ⇒ ρ ≤ 1, i.e. C·ρ ≤ sup; ρ ≤ 1 ⇒ sup ≤ D, i.e. sup ≤ D·ρ
        prop_assert!(c * a <= sup * (1.0 + 1e-12) + 1e-300);
        prop_assert!(sup <= d * a * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn t_star_is_scale_invariant(
        vals in prop::collection::vec(0.0f64..5.0, 13),
        c in 0.001f64..1000.0,
    ) {
        let o = InvariantOrder::lexicographic(1);
        let offsets: Vec<Point> = (-6..=6).map(|x| Point::of(&[x])).collect();
        let e = [Point::zero(1)];
        let l: Vec<Point> = offsets.clone();
        let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
        prop_assert_eq!(argmax_t_star(&vals, &offsets, &e, &l, &o), argmax_t_star(&scaled, &offsets, &e, &l, &o));
    }

    #[test]
    fn theta_is_clamped_and_flagged(raw in -2.0f64..3.0, se in 0.0f64..1.0) {
        let t = ThetaEstimate::new(ThetaVariant::Block, raw, se, 10, None);
        prop_assert!((0.0..=1.0).contains(&t.value));
        prop_assert_eq!(t.out_of_range, !(0.0..=1.0).contains(&raw));
        prop_assert_eq!(t.raw, raw);
        if !t.out_of_range {
            prop_assert_eq!(t.value, raw);
        }
    }
}

#[test]
fn simulation_is_independent_of_thread_count() {
    let w = Arc::new(IndexSet::new(2, cube_points(12, 2)).unwrap());
    let model = FieldModel::moving_maxima(1.5, kernel_1d(&[1.0, 0.5]).into_iter().map(|mut t| {
        t.at = Point::of(&[t.at.get(0), 0]);
        t
    }).collect());
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (0..6).map(|s| simulate(&model, &w, 99, s).unwrap().values).collect::<Vec<_>>())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}
