use bloch_core::bem::PolarizabilityTensor;
use bloch_core::cluster::{
    build_clusters, export_field_grid, write_field_grid, ClusterSolution, FieldGrid,
};
use bloch_core::dispersion::{
    assemble_mode_matrix, eigen_modes, frequencies_fixed_k, wavevectors_fixed_omega, GeometryScale,
    MediumParams,
};
use bloch_core::lattice::{find_exceptional_set, LatticeSpec};
use bloch_core::{Error, Vec3};
use num_complex::Complex;
use rand::{Rng, SeedableRng};

fn clusters(k: [f64; 3], fixed_omega: bool) -> Vec<ClusterSolution<f64>> {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 0.8).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let set = find_exceptional_set(Vec3::from_f64(k), &LatticeSpec::cubic(), 1e-9).unwrap();
    let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
    let geo = GeometryScale::with_volume_fraction(0.01, 4.0 * std::f64::consts::PI / 3.0, 248.05)
        .unwrap();
    let res = if fixed_omega {
        wavevectors_fixed_omega(&set, &modes, &medium, &geo).unwrap()
    } else {
        frequencies_fixed_k(&set, &modes, &medium, &geo).unwrap()
    };
    build_clusters(&res, &set).unwrap()
}

fn samples(n: usize) -> Vec<Vec3<f64>> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
        })
        .collect()
}

fn has_pattern(cs: &[ClusterSolution<f64>], pattern: &[f64]) -> bool {
    cs.iter().any(|c| {
        c.coefficients
            .iter()
            .zip(pattern)
            .all(|(a, b)| (a - b).abs() < 1e-10)
    })
}

#[test]
fn order_two_patterns() {
    let cs = clusters([0.5, 0.2, 0.3], false);
    assert_eq!(cs.len(), 2);
    assert!(has_pattern(&cs, &[-1.0, 1.0]));
    assert!(has_pattern(&cs, &[1.0, 1.0]));
    let odd = cs.iter().find(|c| c.coefficients[0] < 0.0).unwrap();
    assert!(odd.value_at(Vec3::zero()).norm() < 1e-15);
}

#[test]
fn order_four_patterns() {
    let cs = clusters([0.5, 1.0 / 3.0, 2.0 / 3.0], false);
    for p in [
        [1.0, -1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0, 1.0],
        [-1.0, -1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0, 1.0],
    ] {
        assert!(has_pattern(&cs, &p), "{p:?}");
    }
    let even = cs
        .iter()
        .find(|c| c.coefficients.iter().all(|v| *v > 0.0))
        .unwrap();
    let c = Complex::new(0.3, -2.0);
    let u = even.clone().with_amplitude(c).value_at(Vec3::zero());
    assert!((u - c * 4.0).norm() < 1e-14);
}

#[test]
fn quasi_periodic_to_roundoff() {
    let lat = LatticeSpec::cubic();
    let pts = samples(100);
    for k in [
        [0.5, 0.2, 0.3],
        [0.5, 1.0 / 3.0, 2.0 / 3.0],
        [0.2, 0.3, 0.4],
    ] {
        for fixed_omega in [false, true] {
            for c in clusters(k, fixed_omega) {
                assert!(c.bloch_residual(&lat, &pts) <= 1e-12);
            }
        }
    }
}

#[test]
fn corrupted_shift_breaks_periodicity() {
    let lat = LatticeSpec::cubic();
    let mut c = clusters([0.5, 0.2, 0.3], false).remove(0);
    c.shifts[1] += Vec3::new(0.1, 0.0, 0.0);
    assert!(c.bloch_residual(&lat, &samples(100)) >= 0.1);
}

#[test]
fn plane_wave_has_unit_modulus() {
    let cs = clusters([0.2, 0.3, 0.4], false);
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].coefficients, vec![1.0]);
    for u in cs[0].evaluate(&samples(50)) {
        assert!((u.norm() - 1.0).abs() < 1e-15);
    }
    assert!(cs[0].bloch_residual(&LatticeSpec::cubic(), &samples(20)) <= 1e-15);
}

#[test]
fn evaluation_is_linear() {
    let c = clusters([0.5, 1.0 / 3.0, 2.0 / 3.0], true).remove(2);
    let (a, b) = (Complex::new(1.5, 0.5), Complex::new(-0.25, 2.0));
    let pts = samples(10);
    let ua = c.clone().with_amplitude(a).evaluate(&pts);
    let ub = c.clone().with_amplitude(b).evaluate(&pts);
    let uab = c.clone().with_amplitude(a + b).evaluate(&pts);
    for i in 0..pts.len() {
        assert!((ua[i] + ub[i] - uab[i]).norm() < 1e-13);
    }
    // Splitting the coefficients splits the field.
    let mut first = c.clone();
    let mut rest = c.clone();
    first.coefficients[1..].iter_mut().for_each(|v| *v = 0.0);
    rest.coefficients[0] = 0.0;
    for x in &pts {
        assert!((first.value_at(*x) + rest.value_at(*x) - c.value_at(*x)).norm() < 1e-13);
    }
}

#[test]
fn fixed_omega_spatial_frequencies() {
    // With k_s = k*(1 - ε), |k_s - m_j|² = (1-ε)²|k*|² + ε|m_j|², so members
    // of one cluster agree only to O(ε), while clusters differ by the split.
    let f = 0.01;
    let cs = clusters([0.5, 1.0 / 3.0, 2.0 / 3.0], true);
    let kstar = Vec3::new(0.5, 1.0 / 3.0, 2.0 / 3.0);
    for c in &cs {
        let eps = 0.5 * c.lambda * f;
        let ks = c.wave_vector.norm();
        for m in &c.shifts {
            let want = ((1.0 - eps).powi(2) * kstar.norm_squared() + eps * m.norm_squared()).sqrt();
            assert!(((c.wave_vector - *m).norm() - want).abs() < 1e-14);
            assert!(
                ((c.wave_vector - *m).norm() - ks).abs()
                    <= eps.abs() * m.norm_squared() / ks + 1e-14
            );
        }
    }
    for a in &cs {
        for b in &cs {
            let split = (a.wave_vector.norm() - b.wave_vector.norm()).abs();
            assert!((split - 0.5 * (a.lambda - b.lambda).abs() * f * kstar.norm()).abs() < 1e-15);
        }
    }
}

#[test]
fn mismatched_inputs() {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let lat = LatticeSpec::cubic();
    let two = find_exceptional_set(Vec3::new(0.5, 0.2, 0.3), &lat, 1e-9).unwrap();
    let four = find_exceptional_set(Vec3::new(0.5, 1.0 / 3.0, 2.0 / 3.0), &lat, 1e-9).unwrap();
    let geo = GeometryScale::with_volume_fraction(0.01, 1.0, 100.0).unwrap();
    let res = frequencies_fixed_k(
        &two,
        &eigen_modes(&assemble_mode_matrix(&two, &x, &medium).unwrap()),
        &medium,
        &geo,
    )
    .unwrap();
    assert!(matches!(
        build_clusters(&res, &four),
        Err(Error::MismatchedInputs(_))
    ));
}

#[test]
fn field_grid_rows() {
    let c = clusters([0.5, 0.2, 0.3], false).remove(1);
    let grid = FieldGrid {
        origin: Vec3::zero(),
        axes: [Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)],
        counts: [2, 2, 2],
    };
    let mut buf = Vec::new();
    write_field_grid(&mut buf, &c, &grid).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,z,re,im");
    assert_eq!(lines.len(), 9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fields.csv");
    export_field_grid(&path, &c, &grid).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn translated_grid_is_phase_shifted() {
    let lat = LatticeSpec::cubic();
    let c = clusters([0.5, 1.0 / 3.0, 2.0 / 3.0], false).remove(1);
    let grid = FieldGrid::over_cell(&lat, 3);
    let shifted = FieldGrid {
        origin: lat.edges[1],
        ..grid.clone()
    };
    let phase = Complex::from_polar(1.0, -c.wave_vector.dot(&lat.edges[1]));
    for (p, q) in grid.points().zip(shifted.points()) {
        assert!((c.value_at(q) - phase * c.value_at(p)).norm() < 1e-12);
    }
}
