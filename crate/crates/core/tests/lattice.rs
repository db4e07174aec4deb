use bloch_core::lattice::{
    find_exceptional_set, plane_distances, reciprocal_basis, LatticeSpec, DEFAULT_EXCEPTIONAL_TOL,
};
use bloch_core::Vec3;
use proptest::prelude::*;

/// Every nonzero lattice point in the box `|m_i| ≤ 7` that passes the
/// membership test, found without any radius pruning.
fn brute_force(k: Vec3<f64>, lattice: &LatticeSpec<f64>, tol: f64) -> Vec<[i64; 3]> {
    let k2 = k.norm_squared();
    let mut out = vec![[0, 0, 0]];
    for a in -7..=7i64 {
        for b in -7..=7i64 {
            for c in -7..=7i64 {
                if [a, b, c] == [0, 0, 0] {
                    continue;
                }
                let m = lattice.point([a, b, c]);
                if (2.0 * k.dot(&m) - m.norm_squared()).abs() <= tol * k2 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn sorted(mut v: Vec<[i64; 3]>) -> Vec<[i64; 3]> {
    v.sort();
    v
}

#[test]
fn order_four_member_set() {
    let lat = LatticeSpec::<f64>::cubic();
    let set = find_exceptional_set(Vec3::new(0.5, 1.0 / 3.0, 2.0 / 3.0), &lat, 1e-9).unwrap();
    assert_eq!(
        set.indices(),
        vec![[0, 0, 0], [1, 0, 0], [0, 1, 1], [1, 1, 1]]
    );
}

#[test]
fn order_two_member_set() {
    let lat = LatticeSpec::<f64>::cubic();
    let set = find_exceptional_set(Vec3::new(0.5, 0.2, 0.3), &lat, 1e-9).unwrap();
    assert_eq!(set.indices(), vec![[0, 0, 0], [1, 0, 0]]);
}

#[test]
fn rounded_input_needs_looser_tolerance() {
    let lat = LatticeSpec::<f64>::cubic();
    let k = Vec3::new(0.5, 0.333333333, 0.666666667);
    assert_eq!(find_exceptional_set(k, &lat, 1e-6).unwrap().order(), 4);
    // Truncating both components misses (0,1,1) and (1,1,1) by 2e-7.
    let k = Vec3::new(0.5, 0.3333333, 0.6666666);
    assert_eq!(find_exceptional_set(k, &lat, 1e-6).unwrap().order(), 4);
    assert_eq!(
        find_exceptional_set(k, &lat, 1e-12).unwrap().indices(),
        vec![[0, 0, 0], [1, 0, 0]]
    );
}

#[test]
fn generic_point_is_not_exceptional() {
    let lat = LatticeSpec::<f64>::cubic();
    let k = Vec3::new(0.2, 0.3, 0.4);
    let set = find_exceptional_set(k, &lat, DEFAULT_EXCEPTIONAL_TOL).unwrap();
    assert_eq!(set.order(), 1);
    assert_eq!(brute_force(k, &lat, DEFAULT_EXCEPTIONAL_TOL).len(), 1);
}

#[test]
fn reciprocal_of_skewed_cell() {
    let l1: Vec3<f64> = Vec3::new(1.0, 0.0, 0.0);
    let l2 = Vec3::new(0.5, 1.2, 0.0);
    let l3 = Vec3::new(0.1, -0.3, 0.9);
    let lat = reciprocal_basis(l1, l2, l3).unwrap();
    assert!(lat.biorthogonality_defect() < 1e-13);
    assert!((lat.cell_volume - 1.08).abs() < 1e-14);
    assert!(reciprocal_basis(l1, l2, l1 + l2).is_err());
}

#[test]
fn plane_distances_vanish_on_the_plane() {
    let lat = LatticeSpec::<f64>::cubic();
    let d = plane_distances(Vec3::new(0.5, 0.2, 0.3), &lat, 2.0).unwrap();
    assert_eq!(d[0].index, [1, 0, 0]);
    assert!(d[0].distance < 1e-15);
    assert!(d[1].distance > 0.0);
}

fn lattice_strategy() -> impl Strategy<Value = LatticeSpec<f64>> {
    prop_oneof![
        Just(LatticeSpec::cubic()),
        (0.8f64..1.5, 0.8f64..1.5, 0.8f64..1.5, -0.3f64..0.3).prop_map(|(a, b, c, s)| {
            reciprocal_basis(
                Vec3::new(a, 0.0, 0.0),
                Vec3::new(s, b, 0.0),
                Vec3::new(0.0, s, c),
            )
            .unwrap()
        }),
    ]
}

proptest! {
    #[test]
    fn matches_brute_force(
        lat in lattice_strategy(),
        x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5,
        snap in 0usize..4,
    ) {
        // Snap some samples onto a Bragg plane so non-trivial sets appear.
        let mut k = Vec3::new(x, y, z);
        if snap > 0 {
            let m = lat.reciprocal[snap - 1];
            let m2 = m.norm_squared();
            let off = (2.0 * k.dot(&m) - m2) / (2.0 * m2);
            k -= m * off;
        }
        prop_assume!(k.norm() > 1e-3);
        // The brute-force box covers |m| ≤ 2|k| for these cells.
        prop_assume!(2.0 * k.norm() * lat.edges.iter().map(|l| l.norm()).fold(0.0, f64::max)
            / std::f64::consts::TAU < 7.0);
        let tol = 1e-9;
        let set = find_exceptional_set(k, &lat, tol).unwrap();
        prop_assert_eq!(sorted(set.indices()), sorted(brute_force(k, &lat, tol)));
        prop_assert_eq!(set.indices()[0], [0, 0, 0]);
        if snap > 0 {
            prop_assert!(set.order() >= 2);
        }
    }

    #[test]
    fn members_are_equidistant(
        x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5,
    ) {
        let lat = LatticeSpec::<f64>::cubic();
        let k = Vec3::new(x, y, z);
        prop_assume!(k.norm() > 1e-3);
        let set = find_exceptional_set(k, &lat, 1e-9).unwrap();
        for m in &set.members {
            let gap = ((k - m.vector).norm_squared() - k.norm_squared()).abs();
            prop_assert!(gap <= 1e-9 * k.norm_squared() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn reflected_vector_shares_the_order(
        a in -2i64..=2, b in -2i64..=2, c in -2i64..=2,
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
    ) {
        // k and m0 - k swap the roles of 0 and m0, so the orders agree.
        let lat = LatticeSpec::<f64>::cubic();
        prop_assume!([a, b, c] != [0, 0, 0]);
        let m0 = lat.point([a, b, c]);
        let m2 = m0.norm_squared();
        let mut k = Vec3::new(x, y, z);
        k -= m0 * ((2.0 * k.dot(&m0) - m2) / (2.0 * m2));
        prop_assume!(k.norm() > 1e-3);
        let s1 = find_exceptional_set(k, &lat, 1e-9).unwrap();
        let s2 = find_exceptional_set(m0 - k, &lat, 1e-9).unwrap();
        prop_assert_eq!(s1.order(), s2.order());
        prop_assert!(s1.indices().contains(&[a, b, c]));
    }
}
