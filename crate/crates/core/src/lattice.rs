//! Direct and reciprocal lattices, and detection of exceptional Bloch
//! vectors: points `k` for which several reciprocal-lattice vectors `m`
//! satisfy `|k - m| = |k|`, i.e. `2 k·m = |m|²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::vec3::{det3, Vec3};

/// Default relative tolerance of the membership test `|2k·m - |m|²| ≤ tol |k|²`.
pub const DEFAULT_EXCEPTIONAL_TOL: f64 = 1e-9;

/// Periodicity cell edges `l_i` with the reciprocal basis `b_j`,
/// `l_i · b_j = 2π δ_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec<T> {
    pub edges: [Vec3<T>; 3],
    pub reciprocal: [Vec3<T>; 3],
    /// `|det[l1; l2; l3]|`.
    pub cell_volume: T,
}

impl<T: Real> LatticeSpec<T> {
    /// Simple cubic cell `[-π, π]³`: `l_i = 2π e_i`, reciprocal lattice `Z³`.
    pub fn cubic() -> Self {
        let two_pi = T::TAU();
        Self {
            edges: [0, 1, 2].map(|i| Vec3::unit(i) * two_pi),
            reciprocal: [0, 1, 2].map(Vec3::unit),
            cell_volume: two_pi * two_pi * two_pi,
        }
    }

    /// Cartesian reciprocal-lattice point `Σ m_i b_i`.
    pub fn point(&self, m: [i64; 3]) -> Vec3<T> {
        (0..3)
            .map(|i| self.reciprocal[i] * T::from_i64(m[i]).expect("lattice index fits the scalar"))
            .sum()
    }

    /// Largest `|l_i · b_j - 2π δ_ij| / 2π`.
    pub fn biorthogonality_defect(&self) -> T {
        let two_pi = T::TAU();
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { two_pi } else { T::zero() };
                worst = worst.max((self.edges[i].dot(&self.reciprocal[j]) - target).abs() / two_pi);
            }
        }
        worst
    }
}

/// Builds the reciprocal basis of the cell spanned by `l1, l2, l3`.
pub fn reciprocal_basis<T: Real>(l1: Vec3<T>, l2: Vec3<T>, l3: Vec3<T>) -> Result<LatticeSpec<T>> {
    if !(l1.is_finite() && l2.is_finite() && l3.is_finite()) {
        return Err(invalid("lattice", "edge vectors must be finite"));
    }
    let det = det3(&l1, &l2, &l3);
    let scale = l1.norm() * l2.norm() * l3.norm();
    if !(det.abs() > T::lit(1e-12) * scale) {
        return Err(Error::DegenerateLattice {
            det: det.to_f64().unwrap_or(f64::NAN),
        });
    }
    let factor = T::TAU() / det;
    let reciprocal = [
        l2.cross(&l3) * factor,
        l3.cross(&l1) * factor,
        l1.cross(&l2) * factor,
    ];
    Ok(LatticeSpec {
        edges: [l1, l2, l3],
        reciprocal,
        cell_volume: det.abs(),
    })
}

/// One reciprocal-lattice point on the sphere `|k - m| = |k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member<T> {
    pub index: [i64; 3],
    pub vector: Vec3<T>,
}

/// A Bloch vector together with every reciprocal point `m` with
/// `|k - m| = |k|`. The first member is always `m = 0`, so `order() == 1`
/// means `k` is not exceptional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSet<T> {
    pub k: Vec3<T>,
    pub members: Vec<Member<T>>,
    pub tol: T,
}

impl<T: Real> ExceptionalSet<T> {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn is_exceptional(&self) -> bool {
        self.order() > 1
    }

    pub fn indices(&self) -> Vec<[i64; 3]> {
        self.members.iter().map(|m| m.index).collect()
    }

    pub fn shifts(&self) -> Vec<Vec3<T>> {
        self.members.iter().map(|m| m.vector).collect()
    }
}

/// Integer box `|m_i| ≤ bound_i` containing every lattice point with
/// `|m| ≤ radius`. Since `m_i = l_i · m / 2π`, `|m_i| ≤ |l_i| radius / 2π`.
fn index_bounds<T: Real>(lattice: &LatticeSpec<T>, radius: T) -> [i64; 3] {
    lattice.edges.map(|l| {
        let b = (l.norm() * radius / T::TAU()).floor();
        b.to_i64().unwrap_or(i64::MAX / 4).max(0)
    })
}

fn for_each_index(bounds: [i64; 3], mut f: impl FnMut([i64; 3])) {
    for a in -bounds[0]..=bounds[0] {
        for b in -bounds[1]..=bounds[1] {
            for c in -bounds[2]..=bounds[2] {
                f([a, b, c]);
            }
        }
    }
}

/// Finds the exceptional set of `k`. Members after the leading zero are
/// ordered by `(|m|, index)`.
pub fn find_exceptional_set<T: Real>(
    k: Vec3<T>,
    lattice: &LatticeSpec<T>,
    tol: T,
) -> Result<ExceptionalSet<T>> {
    if !k.is_finite() {
        return Err(invalid("k", "Bloch vector must be finite"));
    }
    let k2 = k.norm_squared();
    if k2 == T::zero() {
        return Err(Error::ZeroBlochVector);
    }
    if !(tol >= T::zero() && tol < T::lit(0.5)) {
        return Err(invalid("tol", format!("must lie in [0, 0.5), got {tol}")));
    }
    let radius = T::lit(2.0) * k2.sqrt() * (T::one() + tol);
    // The bound is inflated by a couple of ulps so that |m| exactly equal to
    // 2|k| (m = 2k) survives rounding in the box computation.
    let bounds = index_bounds(lattice, radius * (T::one() + T::lit(8.0) * T::epsilon()));
    let radius2 = radius * radius;

    let mut found: Vec<(T, Member<T>)> = Vec::new();
    for_each_index(bounds, |index| {
        if index == [0, 0, 0] {
            return;
        }
        let m = lattice.point(index);
        let m2 = m.norm_squared();
        if m2 > radius2 {
            return;
        }
        if (T::lit(2.0) * k.dot(&m) - m2).abs() <= tol * k2 {
            found.push((m2, Member { index, vector: m }));
        }
    });
    found.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.index.cmp(&b.1.index))
    });

    let mut members = vec![Member {
        index: [0, 0, 0],
        vector: Vec3::zero(),
    }];
    members.extend(found.into_iter().map(|(_, m)| m));
    Ok(ExceptionalSet { k, members, tol })
}

/// Distance from `k` to the Bragg plane `2 k·m = |m|²` of a lattice point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneDistance<T> {
    pub index: [i64; 3],
    pub distance: T,
}

/// Distances from `k` to the planes of every nonzero `m` with `|m| ≤ radius`,
/// nearest first.
pub fn plane_distances<T: Real>(
    k: Vec3<T>,
    lattice: &LatticeSpec<T>,
    radius: T,
) -> Result<Vec<PlaneDistance<T>>> {
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(invalid("radius", "must be positive and finite"));
    }
    let bounds = index_bounds(lattice, radius);
    let mut out: Vec<(T, PlaneDistance<T>)> = Vec::new();
    for_each_index(bounds, |index| {
        if index == [0, 0, 0] {
            return;
        }
        let m = lattice.point(index);
        let m2 = m.norm_squared();
        if m2 > radius * radius {
            return;
        }
        let norm = m2.sqrt();
        let distance = (T::lit(2.0) * k.dot(&m) - m2).abs() / (T::lit(2.0) * norm);
        out.push((m2, PlaneDistance { index, distance }));
    });
    out.sort_by(|a, b| {
        a.1.distance
            .partial_cmp(&b.1.distance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.1.index.cmp(&b.1.index))
    });
    Ok(out.into_iter().map(|(_, p)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn standard_cubic_cell() {
        let tau = std::f64::consts::TAU;
        let lat = reciprocal_basis(v(tau, 0.0, 0.0), v(0.0, tau, 0.0), v(0.0, 0.0, tau)).unwrap();
        for j in 0..3 {
            assert!((lat.reciprocal[j] - Vec3::unit(j)).max_abs() < 1e-15);
        }
        assert!((lat.cell_volume - tau.powi(3)).abs() < 1e-12 * tau.powi(3));
        assert!(lat.biorthogonality_defect() < 1e-15);
    }

    #[test]
    fn rectangular_cell() {
        let tau = std::f64::consts::TAU;
        let lat =
            reciprocal_basis(v(tau, 0.0, 0.0), v(0.0, 2.0 * tau, 0.0), v(0.0, 0.0, tau)).unwrap();
        assert!((lat.reciprocal[1] - v(0.0, 0.5, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn sheared_cell() {
        let tau = std::f64::consts::TAU;
        let lat = reciprocal_basis(v(tau, 0.0, 0.0), v(tau, tau, 0.0), v(0.0, 0.0, tau)).unwrap();
        let expect = [v(1.0, -1.0, 0.0), v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)];
        for (b, want) in lat.reciprocal.iter().zip(expect) {
            assert!((*b - want).max_abs() < 1e-15);
        }
        assert!(lat.biorthogonality_defect() < 1e-12);
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let r = reciprocal_basis(v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0), v(0.0, 0.0, 1.0));
        assert!(matches!(r, Err(Error::DegenerateLattice { .. })));
    }

    #[test]
    fn zero_bloch_vector_is_rejected() {
        let lat = LatticeSpec::<f64>::cubic();
        assert!(matches!(
            find_exceptional_set(Vec3::zero(), &lat, 1e-9),
            Err(Error::ZeroBlochVector)
        ));
        assert!(find_exceptional_set(v(0.1, 0.0, 0.0), &lat, 0.5).is_err());
    }

    #[test]
    fn order_two_point() {
        let lat = LatticeSpec::cubic();
        let set = find_exceptional_set(v(0.5, 0.2, 0.3), &lat, 1e-9).unwrap();
        assert_eq!(set.indices(), vec![[0, 0, 0], [1, 0, 0]]);
    }

    #[test]
    fn order_four_point() {
        let lat = LatticeSpec::cubic();
        let set = find_exceptional_set(v(0.5, 1.0 / 3.0, 2.0 / 3.0), &lat, 1e-12).unwrap();
        assert_eq!(
            set.indices(),
            vec![[0, 0, 0], [1, 0, 0], [0, 1, 1], [1, 1, 1]]
        );
    }

    #[test]
    fn generic_point_has_order_one() {
        let lat = LatticeSpec::cubic();
        let set = find_exceptional_set(v(0.2, 0.3, 0.4), &lat, 1e-9).unwrap();
        assert_eq!(set.order(), 1);
        assert!(!set.is_exceptional());
    }

    #[test]
    fn exact_binary_inputs_classify_with_zero_tolerance() {
        let lat = LatticeSpec::cubic();
        let set = find_exceptional_set(v(0.5, 0.25, 0.0), &lat, 0.0).unwrap();
        assert_eq!(set.indices(), vec![[0, 0, 0], [1, 0, 0]]);
    }

    #[test]
    fn plane_distance_examples() {
        let lat = LatticeSpec::cubic();
        let d = plane_distances(v(0.5, 0.0, 0.0), &lat, 1.0).unwrap();
        assert_eq!(d[0].index, [1, 0, 0]);
        assert_eq!(d[0].distance, 0.0);

        let d = plane_distances(v(0.4, 0.0, 0.0), &lat, 1.0).unwrap();
        let p = d.iter().find(|p| p.index == [1, 0, 0]).unwrap();
        assert!((p.distance - 0.1).abs() < 1e-15);

        let d = plane_distances(Vec3::zero(), &lat, 2.0).unwrap();
        assert!(!d.is_empty());
        for p in &d {
            let m = lat.point(p.index).norm();
            assert!((p.distance - m / 2.0).abs() < 1e-15);
        }
        assert!(d.windows(2).all(|w| w[0].distance <= w[1].distance));
    }

    #[test]
    fn works_in_single_precision() {
        let lat = LatticeSpec::<f32>::cubic();
        let set = find_exceptional_set(Vec3::new(0.5_f32, 0.2, 0.3), &lat, 1e-5).unwrap();
        assert_eq!(set.order(), 2);
    }
}
