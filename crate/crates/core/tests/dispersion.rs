use bloch_core::bem::PolarizabilityTensor;
use bloch_core::dispersion::{
    assemble_mode_matrix, dispersion_scan, eigen_modes, frequencies_fixed_k, maxwell_effective,
    wavevectors_fixed_omega, GeometryScale, MediumParams, Regime, ScanSetup,
};
use bloch_core::lattice::{find_exceptional_set, ExceptionalSet, LatticeSpec};
use bloch_core::{Error, Vec3};
use proptest::prelude::*;

const SPHERE_VOLUME: f64 = 4.0 * std::f64::consts::PI / 3.0;

fn cell() -> f64 {
    std::f64::consts::TAU.powi(3)
}

fn geo(f: f64) -> GeometryScale<f64> {
    GeometryScale::with_volume_fraction(f, SPHERE_VOLUME, cell()).unwrap()
}

fn exceptional(k: [f64; 3]) -> ExceptionalSet<f64> {
    find_exceptional_set(Vec3::from_f64(k), &LatticeSpec::cubic(), 1e-9).unwrap()
}

fn kappa2(sigma: f64) -> f64 {
    (sigma - 1.0) / (sigma + 2.0)
}

/// Eigenvalue belonging to the eigenvector closest to `pattern`.
fn lambda_for(modes: &bloch_core::dispersion::EigenModes<f64>, pattern: &[f64]) -> (f64, f64) {
    let norm = pattern.iter().map(|p| p * p).sum::<f64>().sqrt();
    modes
        .vectors
        .iter()
        .zip(&modes.lambdas)
        .map(|(v, l)| {
            let c: f64 = v.iter().zip(pattern).map(|(a, b)| a * b / norm).sum();
            (*l, c.abs())
        })
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
}

#[test]
fn order_two_closed_forms() {
    let (alpha, beta) = (0.2, 0.3);
    for (rho_plus, gamma_minus) in [(2.0, 1.0), (0.5, 1.7), (7.0, 0.3)] {
        let medium = MediumParams::new(rho_plus, 1.0, 1.0, gamma_minus).unwrap();
        let x = PolarizabilityTensor::analytic_sphere(medium.sigma()).unwrap();
        let set = exceptional([0.5, alpha, beta]);
        let mm = assemble_mode_matrix(&set, &x, &medium).unwrap();
        let k2 = kappa2(medium.sigma());
        let g = medium.g();
        let den = 1.0 + 4.0 * alpha * alpha + 4.0 * beta * beta;
        let off = (1.0 - g) + 3.0 * k2 * (-1.0 + 4.0 * alpha * alpha + 4.0 * beta * beta) / den;
        assert!((mm.m0.get(0, 1) - off).abs() < 1e-12);
        assert!(mm.asymmetry < 1e-15);

        let modes = eigen_modes(&mm);
        let (l1, c1) = lambda_for(&modes, &[-1.0, 1.0]);
        let (l2, c2) = lambda_for(&modes, &[1.0, 1.0]);
        assert!((c1 - 1.0).abs() < 1e-12 && (c2 - 1.0).abs() < 1e-12);
        assert!((l1 - 6.0 * k2 / den).abs() < 1e-12);
        let want2 = 2.0 * (1.0 - g) + 24.0 * k2 * (alpha * alpha + beta * beta) / den;
        assert!((l2 - want2).abs() < 1e-12);
    }
}

#[test]
fn order_two_numbers() {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let set = exceptional([0.5, 0.2, 0.3]);
    let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
    assert!((modes.lambdas[0] - 0.5131579).abs() < 1e-7);
    assert!((modes.lambdas[1] - 0.9868421).abs() < 1e-7);

    let res = wavevectors_fixed_omega(&set, &modes, &medium, &geo(0.01)).unwrap();
    let k1 = &res.modes[1];
    assert!((k1.wave_vector.norm() / set.k.norm() - 0.99506579).abs() < 1e-8);
    assert!(k1.wave_vector.cross(&set.k).norm() < 1e-15);
    assert_eq!(res.regime, Regime::FixedOmega);
}

#[test]
fn order_four_eigen_system() {
    for sigma in [2.0, 0.4, 9.0] {
        for gamma_minus in [1.0, 0.6, 2.5] {
            let medium = MediumParams::new(sigma, 1.0, 1.0, gamma_minus).unwrap();
            let x = PolarizabilityTensor::analytic_sphere(sigma).unwrap();
            let set = exceptional([0.5, 1.0 / 3.0, 2.0 / 3.0]);
            assert_eq!(set.order(), 4);
            let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
            let k2 = kappa2(sigma);
            let expect = [
                ([1.0, -1.0, -1.0, 1.0], 0.0),
                ([-1.0, 1.0, -1.0, 1.0], 108.0 / 29.0 * k2),
                ([-1.0, -1.0, 1.0, 1.0], 216.0 / 29.0 * k2),
                (
                    [1.0, 1.0, 1.0, 1.0],
                    4.0 * (1.0 - gamma_minus) + 24.0 / 29.0 * k2,
                ),
            ];
            for (pattern, want) in expect {
                let (l, c) = lambda_for(&modes, &pattern);
                assert!(
                    (c - 1.0).abs() < 1e-10,
                    "sigma={sigma} g={gamma_minus} {pattern:?}"
                );
                assert!(
                    (l - want).abs() < 1e-12,
                    "sigma={sigma} g={gamma_minus}: {l} vs {want}"
                );
            }
        }
    }
}

#[test]
fn zero_contrast_matrix_vanishes() {
    let medium = MediumParams::new(1.3, 1.3, 0.8, 0.8).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(1.0).unwrap();
    let mm = assemble_mode_matrix(&exceptional([0.5, 1.0 / 3.0, 2.0 / 3.0]), &x, &medium).unwrap();
    assert_eq!(mm.m0.max_abs(), 0.0);
    assert!(eigen_modes(&mm).degenerate);
}

#[test]
fn non_exceptional_is_one_by_one() {
    let medium = MediumParams::new(3.0, 1.0, 1.0, 2.0).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(3.0).unwrap();
    let set = exceptional([0.2, 0.3, 0.4]);
    let mm = assemble_mode_matrix(&set, &x, &medium).unwrap();
    assert_eq!(mm.order(), 1);
    // For a sphere X d̂·d̂ = 3κ2 whatever the direction.
    assert!((mm.m0.get(0, 0) - (1.0 - 2.0 + 3.0 * kappa2(3.0))).abs() < 1e-14);
    let res = frequencies_fixed_k(&set, &eigen_modes(&mm), &medium, &geo(0.02)).unwrap();
    assert_eq!(res.regime, Regime::NonExceptional);
    assert!(!res.degenerate);
}

#[test]
fn fixed_k_frequencies() {
    let medium = MediumParams::new(2.0, 1.0, 0.7, 1.1).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let set = exceptional([0.5, 1.0 / 3.0, 2.0 / 3.0]);
    let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
    let k2 = set.k.norm_squared();

    let f0 = frequencies_fixed_k(&set, &modes, &medium, &geo(0.0)).unwrap();
    for m in &f0.modes {
        assert!((m.omega - medium.c_plus() * set.k.norm()).abs() < 1e-15);
    }

    let f = 0.03;
    let res = frequencies_fixed_k(&set, &modes, &medium, &geo(f)).unwrap();
    assert_eq!(res.regime, Regime::FixedK);
    for m in &res.modes {
        let lhs = m.omega * m.omega * medium.rho_plus() * medium.gamma_plus();
        assert!((lhs - k2 * (1.0 + m.lambda * f)).abs() <= 1e-13 * lhs);
        assert!((m.epsilon - 0.5 * m.lambda * f).abs() < 1e-16);
    }
    assert!(res.modes.windows(2).all(|w| w[0].omega <= w[1].omega));
    // The sign pattern (1,-1,-1,1) has λ = 0, so its frequency is unshifted.
    let zero = res.modes.iter().find(|m| m.lambda.abs() < 1e-12).unwrap();
    assert!((zero.omega - medium.c_plus() * set.k.norm()).abs() < 1e-14);
}

#[test]
fn volume_fraction_guard() {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let set = exceptional([0.5, 0.2, 0.3]);
    let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
    assert!(matches!(
        GeometryScale::with_volume_fraction(0.2, SPHERE_VOLUME, cell()),
        Err(Error::VolumeFractionTooLarge(_))
    ));
    let mut big = geo(0.05);
    big.f = 0.2;
    assert!(matches!(
        frequencies_fixed_k(&set, &modes, &medium, &big),
        Err(Error::VolumeFractionTooLarge(_))
    ));
    big.forced = true;
    assert!(frequencies_fixed_k(&set, &modes, &medium, &big).is_ok());
}

#[test]
fn asymmetric_tensor_is_rejected() {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let mut m = PolarizabilityTensor::analytic_sphere(2.0).unwrap().matrix;
    m[0][1] = 0.1;
    let x = PolarizabilityTensor::from_matrix(
        m,
        2.0,
        bloch_core::bem::TensorSource::AnalyticSphere,
        1e-6,
    );
    let r = assemble_mode_matrix(&exceptional([0.5, 0.2, 0.3]), &x, &medium);
    assert!(matches!(r, Err(Error::AsymmetricTensor { .. })));
}

#[test]
fn maxwell_formula() {
    let e =
        maxwell_effective(&MediumParams::<f64>::new(1.0, 2.0, 1.0, 1.0).unwrap(), 0.05).unwrap();
    assert!((e.nu_avg - 0.97).abs() < 1e-15);
    assert!((e.gamma_bar - 1.0).abs() < 1e-15);
}

#[test]
fn maxwell_matches_single_branch_at_small_f() {
    // Deterministic spread of contrasts in both directions.
    let f = 1e-3;
    for i in 0..20 {
        let t = i as f64 / 19.0;
        let medium = MediumParams::new(1.0, 0.5 + 1.5 * t, 1.0, 2.0 - 1.5 * t).unwrap();
        let x = PolarizabilityTensor::analytic_sphere(medium.sigma()).unwrap();
        let set = exceptional([0.21, 0.17, 0.05]);
        let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
        let w = frequencies_fixed_k(&set, &modes, &medium, &geo(f))
            .unwrap()
            .modes[0]
            .omega;
        let eff = maxwell_effective(&medium, f)
            .unwrap()
            .frequency(set.k.norm());
        assert!((w - eff).abs() <= 1e-5 * eff, "i={i}: {w} vs {eff}");
    }
}

fn scan_setup<'a>(
    medium: &'a MediumParams<f64>,
    g: &'a GeometryScale<f64>,
    lat: &'a LatticeSpec<f64>,
    x: &'a PolarizabilityTensor<f64>,
) -> ScanSetup<'a, f64> {
    ScanSetup {
        medium,
        geo: g,
        lattice: lat,
        polarizability: x,
        tol: 1e-9,
    }
}

#[test]
fn scan_marks_the_bragg_plane() {
    let medium = MediumParams::new(2.0, 1.0, 1.0, 1.5).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let lat = LatticeSpec::cubic();
    let g = geo(0.01);
    let scan = dispersion_scan(
        Vec3::unit(0),
        (0.45, 0.55),
        11,
        scan_setup(&medium, &g, &lat, &x),
    )
    .unwrap();
    assert_eq!(scan.rows.len(), 11);
    let marked: Vec<usize> = (0..11).filter(|&i| scan.rows[i].exceptional).collect();
    assert_eq!(marked, vec![5]);
    assert_eq!(scan.rows[5].order, 2);
    assert_eq!(scan.rows[5].members, vec![[0, 0, 0], [1, 0, 0]]);
    assert_eq!(
        scan.rows[5].nearest_plane.as_ref().unwrap().index,
        [1, 0, 0]
    );
    assert_eq!(scan.max_order(), 2);

    let away = dispersion_scan(
        Vec3::unit(0),
        (0.1, 0.4),
        7,
        scan_setup(&medium, &g, &lat, &x),
    )
    .unwrap();
    assert!(away.rows.iter().all(|r| r.order == 1));
    assert!(away
        .rows
        .iter()
        .all(|r| r.nearest_plane.as_ref().unwrap().distance > 0.0));
}

#[test]
fn scan_without_inclusions_is_the_light_cone() {
    let medium = MediumParams::new(2.0, 1.0, 0.5, 1.5).unwrap();
    let x = PolarizabilityTensor::analytic_sphere(2.0).unwrap();
    let lat = LatticeSpec::cubic();
    let g = geo(0.0);
    let dir = Vec3::new(0.6, 0.0, 0.8);
    let scan = dispersion_scan(dir, (0.0, 1.2), 25, scan_setup(&medium, &g, &lat, &x)).unwrap();
    for row in &scan.rows {
        for w in &row.omegas {
            assert!((w - medium.c_plus() * row.abs_k).abs() < 1e-14);
        }
    }
    assert!(dispersion_scan(dir, (0.0, 1.0), 1, scan_setup(&medium, &g, &lat, &x)).is_err());
}

#[test]
fn single_precision_smoke() {
    let medium = MediumParams::<f32>::new(2.0, 1.0, 1.0, 1.0).unwrap();
    let x = PolarizabilityTensor::<f32>::analytic_sphere(2.0).unwrap();
    let set =
        find_exceptional_set(Vec3::<f32>::new(0.5, 0.2, 0.3), &LatticeSpec::cubic(), 1e-5).unwrap();
    let modes = eigen_modes(&assemble_mode_matrix(&set, &x, &medium).unwrap());
    assert!((modes.lambdas[0] - 0.5131579).abs() < 1e-5);
    assert!((modes.lambdas[1] - 0.9868421).abs() < 1e-5);
}

proptest! {
    #[test]
    fn eigen_residuals_and_scaling(
        rp in 0.2f64..5.0, rm in 0.2f64..5.0, gp in 0.2f64..5.0, gm in 0.2f64..5.0,
        scale in 0.1f64..10.0,
        alpha in -0.45f64..0.45, beta in -0.45f64..0.45,
    ) {
        let medium = MediumParams::new(rp, rm, gp, gm).unwrap();
        let x = PolarizabilityTensor::analytic_sphere(medium.sigma()).unwrap();
        let set = exceptional([0.5, alpha, beta]);
        let mm = assemble_mode_matrix(&set, &x, &medium).unwrap();
        let modes = eigen_modes(&mm);
        let norm = mm.m0.max_abs() * mm.order() as f64;
        for (l, v) in modes.lambdas.iter().zip(&modes.vectors) {
            let mv = mm.m0.mul_vec(v);
            let r = mv.iter().zip(v).map(|(a, b)| (a - l * b).abs()).fold(0.0, f64::max);
            prop_assert!(r <= 1e-10 * norm.max(1e-300));
        }
        for i in 0..modes.vectors.len() {
            for j in 0..modes.vectors.len() {
                let d: f64 = modes.vectors[i].iter().zip(&modes.vectors[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-10);
            }
        }

        // Scaling both densities or both compressibilities changes nothing.
        let scaled = MediumParams::new(rp * scale, rm * scale, gp / scale, gm / scale).unwrap();
        let again = eigen_modes(&assemble_mode_matrix(&set, &x, &scaled).unwrap());
        for (a, b) in modes.lambdas.iter().zip(&again.lambdas) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
