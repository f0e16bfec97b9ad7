use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cube_points, Component, IndexSet, InvariantOrder, LatticeUnion, Point, Sublattice};

/// Anything with exact membership.
pub trait ShapeSet {
    fn dim(&self) -> usize;
    fn contains(&self, p: &Point) -> bool;
}

/// Sets supporting ((S)_{-z})^+.
pub trait Recenter: ShapeSet + Sized {
    fn recenter_positive(&self, z: &Point, order: &InvariantOrder) -> Result<Self>;
}

impl ShapeSet for LatticeUnion {
    fn dim(&self) -> usize {
        self.dim
    }
    fn contains(&self, p: &Point) -> bool {
        LatticeUnion::contains(self, p)
    }
}

impl Recenter for LatticeUnion {
    fn recenter_positive(&self, z: &Point, order: &InvariantOrder) -> Result<Self> {
        LatticeUnion::recenter_positive(self, z, order)
    }
}

impl ShapeSet for IndexSet {
    fn dim(&self) -> usize {
        IndexSet::dim(self)
    }
    fn contains(&self, p: &Point) -> bool {
        IndexSet::contains(self, p)
    }
}

/// A shape D ⊂ {≻0} written as the positive parts of finitely many cosets of a
/// single lattice L: D = ⋃_c (c + L)^+. When L = {0} the cosets are points and
/// D is bounded. Every (D)_{-z}^+ for z ∈ D has the same form, which keeps all
/// derived sets exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeD {
    pub order: InvariantOrder,
    pub lattice: Sublattice,
    /// Canonical coset representatives (`lattice.reduce`), sorted.
    pub cosets: Vec<Point>,
    /// True when lattice inference failed on the window and the observed
    /// finite shape was kept as a bounded set.
    pub fallback_bounded: bool,
}

impl ShapeD {
    pub fn new(order: InvariantOrder, lattice: Sublattice, cosets: impl IntoIterator<Item = Point>) -> Self {
        let mut c: Vec<Point> = if lattice.is_zero() {
            cosets.into_iter().filter(|p| order.is_positive(p)).collect()
        } else {
            cosets.into_iter().map(|p| lattice.reduce(&p)).collect()
        };
        c.sort_unstable();
        c.dedup();
        ShapeD { order, lattice, cosets: c, fallback_bounded: false }
    }

    pub fn is_bounded(&self) -> bool {
        self.lattice.is_zero()
    }

    /// D ∩ K_r (lexicographically sorted).
    pub fn window(&self, r: i64) -> Vec<Point> {
        let mut out: Vec<Point> = self
            .cosets
            .iter()
            .flat_map(|c| self.lattice.points_in_window(c, r))
            .filter(|p| self.order.is_positive(p))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn to_union(&self) -> LatticeUnion {
        let dim = self.lattice.dim();
        if self.is_bounded() {
            LatticeUnion::from_components(dim, vec![], self.cosets.clone()).positive(&self.order)
        } else {
            let comps =
                self.cosets.iter().map(|c| Component { lattice: self.lattice.clone(), offset: *c }).collect();
            LatticeUnion::from_components(dim, comps, vec![]).positive(&self.order)
        }
    }
}

impl ShapeSet for ShapeD {
    fn dim(&self) -> usize {
        self.lattice.dim()
    }
    fn contains(&self, p: &Point) -> bool {
        self.order.is_positive(p) && self.cosets.binary_search(&self.lattice.reduce(p)).is_ok()
    }
}

impl Recenter for ShapeD {
    fn recenter_positive(&self, z: &Point, order: &InvariantOrder) -> Result<Self> {
        if !order.is_positive(z) {
            return Err(Error::InvalidArgument(format!("recentering point {z} is not positive")));
        }
        // for z ≻ 0, ((c+L)^+ - z)^+ = (c - z + L)^+
        let shifted: Vec<Point> = self.cosets.iter().map(|c| *c - *z).collect();
        Ok(ShapeD::new(order.clone(), self.lattice.clone(), shifted))
    }
}

/// Infers the exact shape behind a finite window observation `key` = D ∩ K_p.
/// Candidate shifts z with |z| ≤ p/2 are those leaving the observation
/// unchanged on K_{p/2}; they generate L, and D is rebuilt from the L-cosets
/// met by the observation. The rebuilt shape must reproduce the observation on
/// all of K_p, otherwise the finite set itself is kept (flagged).
pub fn infer_shape(key: &[Point], p: i64, order: &InvariantOrder) -> Result<ShapeD> {
    let dim = order.dim();
    let s = IndexSet::new(dim, key.iter().copied())?;
    let half = p / 2;
    let probe: Vec<Point> = cube_points(half, dim).into_iter().filter(|u| order.is_positive(u)).collect();
    let candidates: Vec<Point> = s
        .iter()
        .copied()
        .filter(|z| z.norm_inf() <= half && probe.iter().all(|u| s.contains(&(*u + *z)) == s.contains(u)))
        .collect();
    let bounded = || {
        let mut d = ShapeD::new(order.clone(), Sublattice::zero(dim), key.iter().copied());
        d.fallback_bounded = false;
        d
    };
    if candidates.is_empty() {
        return Ok(bounded());
    }
    let lattice = Sublattice::from_generators(dim, &candidates)?;
    let shape = ShapeD::new(order.clone(), lattice, key.iter().copied());
    if shape.window(p) == s.points() {
        Ok(shape)
    } else {
        let mut d = bounded();
        d.fallback_bounded = true;
        Ok(d)
    }
}

/// G = {z ∈ D ∪ {0} : ((D)_{-z})^+ = D}, returned as the lattice L = G ∪ -G.
/// Shifts are searched in K_{probe/2} and verified against D on K_probe.
pub fn stabilizer<S: ShapeSet>(d: &S, order: &InvariantOrder, probe_radius: i64) -> Result<Sublattice> {
    let dim = d.dim();
    let half = (probe_radius / 2).max(1);
    let verify: Vec<Point> = cube_points(probe_radius, dim).into_iter().filter(|u| order.is_positive(u)).collect();
    let in_d: Vec<bool> = verify.iter().map(|u| d.contains(u)).collect();
    let candidates: BTreeSet<Point> = cube_points(half, dim)
        .into_iter()
        .filter(|z| order.is_positive(z) && d.contains(z))
        .filter(|z| verify.iter().zip(&in_d).all(|(u, &inside)| d.contains(&(*u + *z)) == inside))
        .collect();
    for a in &candidates {
        for b in &candidates {
            let s = *a + *b;
            if s.norm_inf() <= half && !candidates.contains(&s) {
                return Err(Error::NotTranslationStable(format!("{a} + {b} = {s} is not a stabilizing shift")));
            }
        }
    }
    let gens: Vec<Point> = candidates.iter().copied().collect();
    let lattice = Sublattice::from_generators(dim, &gens)?;
    for q in lattice.points_in_window(&Point::zero(dim), half) {
        if order.is_positive(&q) && !candidates.contains(&q) {
            return Err(Error::NotTranslationStable(format!("lattice point {q} does not stabilize the shape")));
        }
    }
    Ok(lattice)
}

/// D = L^+ ∪ ⋃_i ((L_{l_i})_{z_{l_i}})^+ with pairwise disjoint pieces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// L_j.
    pub lattice: Sublattice,
    /// (L_{l_i}, z_{l_i}); the piece L_j^+ (if present) comes first with offset 0.
    pub components: Vec<Component>,
    pub probe_radius: i64,
}

impl Partition {
    /// Number of translated pieces besides L_j^+ (b_j).
    pub fn b(&self) -> usize {
        self.components.iter().filter(|c| !c.offset.is_zero()).count()
    }

    pub fn to_union(&self, order: &InvariantOrder) -> LatticeUnion {
        LatticeUnion::from_components(self.lattice.dim(), self.components.clone(), vec![]).positive(order)
    }

    /// Checks disjointness of the pieces and that they reproduce `d` on K_r.
    pub fn verify<S: ShapeSet>(&self, d: &S, order: &InvariantOrder, r: i64) -> Result<()> {
        let u = self.to_union(order);
        u.check_disjoint(r)?;
        let covered = u.enumerate_cube(r);
        let target: Vec<Point> = cube_points(r, d.dim()).into_iter().filter(|p| d.contains(p)).collect();
        if covered != target {
            return Err(Error::PartitionCoverage(format!(
                "pieces give {} points of K_{r}, shape has {}",
                covered.len(),
                target.len()
            )));
        }
        Ok(())
    }

    /// b_j ≤ ⌊1/λ_j⌋ - 1.
    pub fn weight_bound_holds(&self, lambda: f64) -> bool {
        lambda <= 0.0 || (self.b() as f64) <= (1.0 / lambda).floor() - 1.0 + 1e-9
    }
}

fn closest(order: &InvariantOrder, a: &Point, b: &Point) -> Ordering {
    let l1 = |p: &Point| p.coords().iter().map(|x| x.abs()).sum::<i64>();
    a.norm_inf().cmp(&b.norm_inf()).then_with(|| l1(a).cmp(&l1(b))).then_with(|| order.cmp(a, b))
}

pub fn partition_shape<S: Recenter>(
    d: &S,
    lattice: &Sublattice,
    order: &InvariantOrder,
    probe_radius: i64,
) -> Result<Partition> {
    let dim = d.dim();
    // one representative z per L-coset met by D: smallest sup norm, then ≺-smallest
    let mut best: BTreeMap<Point, Point> = BTreeMap::new();
    for q in cube_points(probe_radius, dim).into_iter().filter(|q| d.contains(q)) {
        let key = lattice.reduce(&q);
        best.entry(key)
            .and_modify(|z| {
                if closest(order, &q, z) == Ordering::Less {
                    *z = q;
                }
            })
            .or_insert(q);
    }
    let zero_key = lattice.reduce(&Point::zero(dim));
    let mut keys: Vec<(Point, Point)> = best.into_iter().collect();
    keys.sort_by(|a, b| {
        (b.0 == zero_key).cmp(&(a.0 == zero_key)).then_with(|| order.cmp(&a.1, &b.1))
    });
    let present: BTreeSet<Point> = keys.iter().map(|k| k.0).collect();
    let mut covered = BTreeSet::new();
    let mut components = Vec::new();
    for (key, z) in keys {
        if covered.contains(&key) {
            continue;
        }
        if key == zero_key && !lattice.is_zero() {
            covered.insert(key);
            components.push(Component { lattice: lattice.clone(), offset: Point::zero(dim) });
            continue;
        }
        let dz = d.recenter_positive(&z, order)?;
        let lz = stabilizer(&dz, order, probe_radius)?;
        if !lz.contains_lattice(lattice) || lz.rank() != lattice.rank() {
            return Err(Error::PartitionCoverage(format!(
                "stabilizer at {z} is not a same-rank superlattice of L"
            )));
        }
        for r in lattice.coset_reps_in(&lz)? {
            let k = lattice.reduce(&(r + z));
            if !present.contains(&k) {
                return Err(Error::PartitionCoverage(format!("piece through {z} leaves the shape at coset {k}")));
            }
            covered.insert(k);
        }
        components.push(Component { lattice: lz, offset: z });
    }
    let part = Partition { lattice: lattice.clone(), components, probe_radius };
    part.verify(d, order, probe_radius)?;
    Ok(part)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TipResult {
    pub holds: bool,
    /// x in the piece and y ∈ G with x ≺ y.
    pub witness: Option<(Point, Point)>,
    /// Negative answers are certified only on this window.
    pub window_radius: i64,
}

/// TIP for piece `i`: some x ∈ ((L_{l_i})_{z_{l_i}})^+ with x ≺ y for some y ∈ G_j.
pub fn tip_check(part: &Partition, i: usize, order: &InvariantOrder, radius: i64) -> TipResult {
    let dim = part.lattice.dim();
    let g_max = order.max(
        part.lattice.points_in_window(&Point::zero(dim), radius).iter().filter(|q| order.is_positive(q)),
    );
    let comp = &part.components[i];
    let x_min = order.min(comp.lattice.points_in_window(&comp.offset, radius).iter().filter(|q| order.is_positive(q)));
    let witness = match (x_min, g_max) {
        (Some(x), Some(y)) if order.cmp(&x, &y) == Ordering::Less => Some((x, y)),
        _ => None,
    };
    TipResult { holds: witness.is_some(), witness, window_radius: radius }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HatD {
    pub shape: ShapeD,
    /// Bounded D: no piece satisfies TIP and hat-D is taken to be D itself.
    pub bounded_interpretation: bool,
}

/// hat-D_j = ⋃_{h∈W_j} D_{l_h}, the union over TIP-satisfying pieces of
/// ((D_j)_{-z_{l_h}})^+ (with D_{l_0} = D_j).
pub fn hat_d(d: &ShapeD, part: &Partition, tips: &[TipResult]) -> Result<HatD> {
    if d.is_bounded() {
        return Ok(HatD { shape: d.clone(), bounded_interpretation: true });
    }
    let mut cosets: Vec<Point> = Vec::new();
    for (comp, tip) in part.components.iter().zip(tips) {
        if !tip.holds {
            continue;
        }
        if comp.offset.is_zero() {
            cosets.extend_from_slice(&d.cosets);
        } else {
            cosets.extend(d.recenter_positive(&comp.offset, &d.order)?.cosets);
        }
    }
    Ok(HatD { shape: ShapeD::new(d.order.clone(), d.lattice.clone(), cosets), bounded_interpretation: false })
}

/// hat-D ∪ {0} ∪ -hat-D is invariant under every generator of L (checked on K_r).
pub fn symmetric_invariance(hat: &ShapeD, r: i64) -> bool {
    let sym = |u: &Point| u.is_zero() || hat.contains(u) || hat.contains(&-*u);
    hat.lattice
        .basis()
        .iter()
        .all(|g| cube_points(r, hat.lattice.dim()).iter().all(|u| sym(u) == sym(&(*u + *g))))
}

/// Ξ*_j = ⋃_{s∈E_j} (L_j)_s with its finite pattern E_j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiStructure {
    pub order: InvariantOrder,
    pub lattice: Sublattice,
    /// Canonical L-coset keys of Ξ*.
    pub cosets: Vec<Point>,
    /// One ⪰0 representative per coset, ≺-sorted; E[0] = 0.
    pub e: Vec<Point>,
    /// Some coset has no ≺-smallest ⪰0 element; the representative with the
    /// smallest sup norm (then ≺-smallest) was taken instead.
    pub fallback_representatives: bool,
}

impl XiStructure {
    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn is_lattice_case(&self) -> bool {
        self.e.len() == 1
    }

    pub fn xi_star(&self) -> LatticeUnion {
        let dim = self.lattice.dim();
        if self.lattice.is_zero() {
            return LatticeUnion::from_components(dim, vec![], self.e.clone());
        }
        let comps = self.e.iter().map(|s| Component { lattice: self.lattice.clone(), offset: *s }).collect();
        LatticeUnion::from_components(dim, comps, vec![])
    }

    /// Ξ* ∩ K_r (= H_j ∩ K_r).
    pub fn window(&self, r: i64) -> Vec<Point> {
        let mut v: Vec<Point> = self.e.iter().flat_map(|s| self.lattice.points_in_window(s, r)).collect();
        v.sort_unstable();
        v
    }

    /// L_j ∩ K_r.
    pub fn lattice_window(&self, r: i64) -> Vec<Point> {
        self.lattice.points_in_window(&Point::zero(self.lattice.dim()), r)
    }

    /// D̃_j ∩ K_r with D̃_j = ⋃_{s∈G_j∖{0}} (E_j)_s.
    pub fn d_tilde(&self, r: i64) -> Vec<Point> {
        let reach = r + self.e.iter().map(|p| p.norm_inf()).max().unwrap_or(0);
        let mut out: BTreeSet<Point> = BTreeSet::new();
        for s in self.lattice.points_in_window(&Point::zero(self.lattice.dim()), reach) {
            if !self.order.is_positive(&s) {
                continue;
            }
            out.extend(self.e.iter().map(|e| *e + s).filter(|p| p.norm_inf() <= r));
        }
        out.into_iter().collect()
    }

    /// (Ξ* - x) expressed by its coset keys.
    fn shifted_keys(&self, x: &Point) -> Vec<Point> {
        let mut v: Vec<Point> = self.cosets.iter().map(|c| self.lattice.reduce(&(*c - *x))).collect();
        v.sort_unstable();
        v
    }

    /// Whether `other` is a translate (Ξ*)_{-x} of this structure for some x ∈ E.
    pub fn translate_of(&self, other: &XiStructure) -> Option<Point> {
        if self.lattice != other.lattice || self.cosets.len() != other.cosets.len() {
            return None;
        }
        if self.lattice.is_zero() {
            return self.e.iter().copied().find(|x| {
                let mut v: Vec<Point> = self.e.iter().map(|p| *p - *x).collect();
                v.sort_unstable();
                let mut w = other.e.clone();
                w.sort_unstable();
                v == w
            });
        }
        self.e.iter().copied().find(|x| self.shifted_keys(x) == other.cosets)
    }
}

impl ShapeSet for XiStructure {
    fn dim(&self) -> usize {
        self.lattice.dim()
    }
    fn contains(&self, p: &Point) -> bool {
        if self.lattice.is_zero() {
            self.e.contains(p)
        } else {
            self.cosets.binary_search(&self.lattice.reduce(p)).is_ok()
        }
    }
}

/// Builds Ξ*_j = ⋃_i (L_{l_i})_{z_{l_i}} (unrestricted, including L_j itself)
/// and chooses E_j.
pub fn xi_structure(part: &Partition, order: &InvariantOrder, probe_radius: i64) -> Result<XiStructure> {
    let l = &part.lattice;
    let dim = l.dim();
    let zero = Point::zero(dim);
    let mut keys: BTreeSet<Point> = BTreeSet::new();
    keys.insert(l.reduce(&zero));
    for comp in &part.components {
        for r in l.coset_reps_in(&comp.lattice)? {
            keys.insert(l.reduce(&(r + comp.offset)));
        }
    }
    let mut fallback = false;
    let mut e = Vec::with_capacity(keys.len());
    for key in &keys {
        if l.is_zero() {
            e.push(*key);
            continue;
        }
        let nonneg = |r: i64| -> Vec<Point> {
            l.points_in_window(key, r).into_iter().filter(|q| q.is_zero() || order.is_positive(q)).collect()
        };
        let near = nonneg(probe_radius);
        let m1 = order.min(near.iter());
        let m2 = order.min(nonneg(2 * probe_radius).iter());
        match (m1, m2) {
            (Some(a), Some(b)) if a == b => e.push(a),
            _ => {
                fallback = true;
                let pick = near
                    .iter()
                    .copied()
                    .min_by(|a, b| closest(order, a, b))
                    .ok_or_else(|| Error::CosetDecomposition(format!("coset {key} has no ⪰0 point in K_{probe_radius}")))?;
                e.push(pick);
            }
        }
    }
    order.sort(&mut e);
    if e.first() != Some(&zero) {
        return Err(Error::CosetDecomposition("0 is not the ≺-minimum of E".into()));
    }
    Ok(XiStructure {
        order: order.clone(),
        lattice: l.clone(),
        cosets: keys.into_iter().collect(),
        e,
        fallback_representatives: fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Point {
        Point::of(c)
    }

    fn two_line_shapes() -> (InvariantOrder, ShapeD, ShapeD) {
        // order compares y first; lattice is the x-axis
        let o = InvariantOrder::permuted(vec![1, 0]).unwrap();
        let x_axis = Sublattice::from_generators(2, &[p(&[1, 0])]).unwrap();
        let d1 = ShapeD::new(o.clone(), x_axis.clone(), [p(&[0, 0])]);
        let d2 = ShapeD::new(o.clone(), x_axis, [p(&[0, 0]), p(&[0, 1])]);
        (o, d1, d2)
    }

    #[test]
    fn stabilizer_of_positive_integers() {
        let o = InvariantOrder::lexicographic(1);
        let d = ShapeD::new(o.clone(), Sublattice::full(1), [p(&[0])]);
        assert_eq!(stabilizer(&d, &o, 8).unwrap(), Sublattice::full(1));
    }

    #[test]
    fn stabilizer_of_bounded_shape() {
        let o = InvariantOrder::lexicographic(2);
        let d = ShapeD::new(o.clone(), Sublattice::zero(2), [p(&[0, 1]), p(&[1, -1]), p(&[2, 2])]);
        assert!(stabilizer(&d, &o, 8).unwrap().is_zero());
    }

    #[test]
    fn two_line_stabilizer_and_tip() {
        let (o, _, d2) = two_line_shapes();
        let l = stabilizer(&d2, &o, 8).unwrap();
        assert_eq!(l, Sublattice::from_generators(2, &[p(&[1, 0])]).unwrap());
        let part = partition_shape(&d2, &l, &o, 8).unwrap();
        assert_eq!(part.components.len(), 2);
        assert!(tip_check(&part, 0, &o, 8).holds);
        assert!(!tip_check(&part, 1, &o, 8).holds);
        let tips: Vec<_> = (0..2).map(|i| tip_check(&part, i, &o, 8)).collect();
        let hat = hat_d(&d2, &part, &tips).unwrap();
        assert_eq!(hat.shape, d2);
        assert!(symmetric_invariance(&hat.shape, 6));
        let xi = xi_structure(&part, &o, 8).unwrap();
        assert_eq!(xi.n(), 2);
        assert!(xi.fallback_representatives);
        assert_eq!(xi.e, vec![p(&[0, 0]), p(&[0, 1])]);
    }

    #[test]
    fn odd_positives_single_piece() {
        let o = InvariantOrder::lexicographic(1);
        let two_z = Sublattice::from_generators(1, &[p(&[2])]).unwrap();
        let d = LatticeUnion::from_components(1, vec![Component { lattice: two_z.clone(), offset: p(&[1]) }], vec![])
            .positive(&o);
        let part = partition_shape(&d, &two_z, &o, 12).unwrap();
        assert_eq!(part.components, vec![Component { lattice: two_z, offset: p(&[1]) }]);
    }

    #[test]
    fn bounded_shape_partition_points() {
        let o = InvariantOrder::lexicographic(1);
        let d = ShapeD::new(o.clone(), Sublattice::zero(1), [p(&[1]), p(&[3]), p(&[4])]);
        let l = stabilizer(&d, &o, 8).unwrap();
        let part = partition_shape(&d, &l, &o, 8).unwrap();
        assert_eq!(part.components.len(), 3);
        assert!(part.components.iter().all(|c| c.lattice.is_zero()));
        assert!((0..3).all(|i| !tip_check(&part, i, &o, 8).holds));
        let xi = xi_structure(&part, &o, 8).unwrap();
        assert_eq!(xi.e, vec![p(&[0]), p(&[1]), p(&[3]), p(&[4])]);
    }

    #[test]
    fn orthant_partition_is_lattice_alone() {
        let o = InvariantOrder::lexicographic(2);
        let d = ShapeD::new(o.clone(), Sublattice::full(2), [p(&[0, 0])]);
        let l = stabilizer(&d, &o, 6).unwrap();
        let part = partition_shape(&d, &l, &o, 6).unwrap();
        assert_eq!(part.components, vec![Component { lattice: Sublattice::full(2), offset: p(&[0, 0]) }]);
        let xi = xi_structure(&part, &o, 6).unwrap();
        assert!(xi.is_lattice_case());
    }

    #[test]
    fn infer_from_window() {
        let o = InvariantOrder::lexicographic(1);
        let key: Vec<Point> = (1..=6).map(|i| p(&[i])).collect();
        let d = infer_shape(&key, 6, &o).unwrap();
        assert_eq!(d.lattice, Sublattice::full(1));
        let boundary = vec![p(&[1]), p(&[2])];
        let d = infer_shape(&boundary, 6, &o).unwrap();
        assert!(d.is_bounded());
    }
}
