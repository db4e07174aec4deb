//! Acceptance suite: eleven numbered checks against closed forms and
//! independent oracles. `bloch validate` and the `acceptance` test target
//! both drive this module.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use bloch_core::bem::{ellipsoid, icosphere, PolarizabilityTensor, TransmissionSolver};
use bloch_core::cluster::build_clusters;
use bloch_core::dispersion::{
    assemble_mode_matrix, eigen_modes, frequencies_fixed_k, maxwell_effective,
    wavevectors_fixed_omega, EigenModes, GeometryScale, MediumParams,
};
use bloch_core::lattice::{find_exceptional_set, ExceptionalSet, LatticeSpec};
use bloch_core::specfun::{
    ball_constants, integrate_sphere, plane_wave_moments, sph_bessel_j, sph_bessel_y,
    sphere_quadrature,
};
use bloch_core::{Error, Vec3};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const CHECK_NAMES: [&str; 11] = [
    "exceptional classification",
    "sphere polarizability",
    "order-two eigen-system",
    "order-four eigen-system",
    "Maxwell reduction",
    "Bessel identities",
    "surface-integral identities",
    "zero-mean density",
    "cluster quasi-periodicity",
    "spheroid M0 symmetry",
    "regime consistency",
];

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    /// Added to every eigenvalue before the order-two comparison; a nonzero
    /// value is a negative control that must make check 3 fail.
    pub lambda_perturbation: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            lambda_perturbation: 0.0,
            seed: 20_240_601,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

type CheckResult = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: bloch_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

pub fn run_check(id: usize, opts: &ValidationOptions) -> CheckOutcome {
    let result = match id {
        1 => check_exceptional(),
        2 => check_sphere_polarizability(),
        3 => check_order_two(opts),
        4 => check_order_four(),
        5 => check_maxwell(opts),
        6 => check_bessel(),
        7 => check_surface_integrals(opts),
        8 => check_zero_mean(),
        9 => check_clusters(opts),
        10 => check_spheroid(),
        11 => check_round_trip(),
        _ => Err(format!("no check numbered {id}")),
    };
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckOutcome {
        id,
        name: CHECK_NAMES
            .get(id.wrapping_sub(1))
            .copied()
            .unwrap_or("unknown"),
        passed,
        detail,
    }
}

pub fn run_all(opts: &ValidationOptions) -> Vec<CheckOutcome> {
    (1..=CHECK_NAMES.len())
        .map(|id| run_check(id, opts))
        .collect()
}

pub fn render_table(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(s, "{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(
        s,
        "{} of {} checks passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    s
}

fn cubic_set(k: [f64; 3], tol: f64) -> Result<ExceptionalSet<f64>, String> {
    core(find_exceptional_set(
        Vec3::from_f64(k),
        &LatticeSpec::cubic(),
        tol,
    ))
}

const ORDER_TWO_K: [f64; 3] = [0.5, 0.2, 0.3];
const ORDER_FOUR_K: [f64; 3] = [0.5, 1.0 / 3.0, 2.0 / 3.0];

fn check_exceptional() -> CheckResult {
    let four = cubic_set(ORDER_FOUR_K, 1e-9)?;
    let want4 = vec![[0, 0, 0], [1, 0, 0], [0, 1, 1], [1, 1, 1]];
    ensure(four.indices() == want4, || {
        format!("order-four members {:?}", four.indices())
    })?;
    let two = cubic_set(ORDER_TWO_K, 1e-9)?;
    ensure(two.indices() == vec![[0, 0, 0], [1, 0, 0]], || {
        format!("order-two members {:?}", two.indices())
    })?;
    Ok("exact member sets at tol 1e-9".into())
}

fn relative_sphere_error(x: &PolarizabilityTensor<f64>, sigma: f64) -> Result<f64, String> {
    let exact = core(PolarizabilityTensor::analytic_sphere(sigma))?;
    Ok(x.frobenius_distance(&exact.matrix) / exact.frobenius_distance(&[[0.0; 3]; 3]))
}

fn check_sphere_polarizability() -> CheckResult {
    let sigmas = [0.5, 2.0, 10.0];
    let levels = [2usize, 3, 4];
    let mut errs = [[0.0; 3]; 3];
    for (li, &s) in levels.iter().enumerate() {
        let mesh = core(icosphere::<f64>(s, 1.0))?;
        let solver = core(TransmissionSolver::new(&mesh))?;
        for (si, &sigma) in sigmas.iter().enumerate() {
            let x = core(solver.polarizability(sigma))?;
            errs[si][li] = relative_sphere_error(&x, sigma)?;
        }
    }
    for (si, e) in errs.iter().enumerate() {
        let sigma = sigmas[si];
        ensure(e[0] > e[1] && e[1] > e[2], || {
            format!("sigma={sigma}: not monotone {e:?}")
        })?;
        ensure(e[1] <= 0.02, || {
            format!("sigma={sigma}: s=3 error {:.3e} > 2%", e[1])
        })?;
        ensure(e[2] <= 0.006, || {
            format!("sigma={sigma}: s=4 error {:.3e} > 0.6%", e[2])
        })?;
    }
    let worst3 = errs.iter().map(|e| e[1]).fold(0.0, f64::max);
    let worst4 = errs.iter().map(|e| e[2]).fold(0.0, f64::max);
    Ok(format!("max rel. error s=3 {worst3:.2e}, s=4 {worst4:.2e}"))
}

fn kappa2(sigma: f64) -> f64 {
    (sigma - 1.0) / (sigma + 2.0)
}

/// `(λ, |cos|)` for the eigenvector best aligned with `pattern`.
fn aligned(modes: &EigenModes<f64>, pattern: &[f64], shift: f64) -> (f64, f64) {
    let norm = pattern.iter().map(|p| p * p).sum::<f64>().sqrt();
    modes
        .vectors
        .iter()
        .zip(&modes.lambdas)
        .map(|(v, l)| {
            let c: f64 = v.iter().zip(pattern).map(|(a, b)| a * b).sum::<f64>() / norm;
            (l + shift, c.abs())
        })
        .fold(
            (f64::NAN, -1.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

fn check_order_two(opts: &ValidationOptions) -> CheckResult {
    let (alpha, beta) = (0.2, 0.3);
    let set = cubic_set(ORDER_TWO_K, 1e-9)?;
    let mut worst: f64 = 0.0;
    for (rho_plus, gamma_minus) in [(2.0, 1.0), (2.0, 0.7), (0.4, 1.6), (10.0, 1.2)] {
        let medium = core(MediumParams::new(rho_plus, 1.0, 1.0, gamma_minus))?;
        let x = core(PolarizabilityTensor::analytic_sphere(medium.sigma()))?;
        let modes = eigen_modes(&core(assemble_mode_matrix(&set, &x, &medium))?);
        let k2 = kappa2(medium.sigma());
        let g = medium.g();
        let den = 1.0 + 4.0 * alpha * alpha + 4.0 * beta * beta;
        let l1 = 6.0 * k2 / den;
        let l2 = 2.0 * (1.0 - g) + 24.0 * k2 * (alpha * alpha + beta * beta) / den;
        for (pattern, want) in [([-1.0, 1.0], l1), ([1.0, 1.0], l2)] {
            let (l, c) = aligned(&modes, &pattern, opts.lambda_perturbation);
            ensure((c - 1.0).abs() <= 1e-12, || {
                format!("eigenvector not ∝ {pattern:?} (|cos| = {c})")
            })?;
            worst = worst.max((l - want).abs());
            ensure((l - want).abs() <= 1e-12, || {
                format!(
                    "sigma={} g={g}: λ = {l} vs closed form {want}",
                    medium.sigma()
                )
            })?;
        }
    }
    Ok(format!("max |Δλ| = {worst:.1e} over 4 media"))
}

fn check_order_four() -> CheckResult {
    let set = cubic_set(ORDER_FOUR_K, 1e-9)?;
    let mut worst: f64 = 0.0;
    let mut inverted_gap: f64 = f64::INFINITY;
    for sigma in [0.5, 2.0, 10.0] {
        for gamma_minus in [1.0, 0.6, 2.5] {
            let medium = core(MediumParams::new(sigma, 1.0, 1.0, gamma_minus))?;
            let x = core(PolarizabilityTensor::analytic_sphere(sigma))?;
            let modes = eigen_modes(&core(assemble_mode_matrix(&set, &x, &medium))?);
            let k2 = kappa2(sigma);
            let g = medium.g();
            let expect = [
                ([1.0, -1.0, -1.0, 1.0], 0.0),
                ([-1.0, 1.0, -1.0, 1.0], 108.0 / 29.0 * k2),
                ([-1.0, -1.0, 1.0, 1.0], 216.0 / 29.0 * k2),
                ([1.0, 1.0, 1.0, 1.0], 4.0 * (1.0 - g) + 24.0 / 29.0 * k2),
            ];
            for (pattern, want) in expect {
                let (l, c) = aligned(&modes, &pattern, 0.0);
                ensure((c - 1.0).abs() <= 1e-12, || {
                    format!("sigma={sigma} g={g}: no eigenvector ∝ {pattern:?} (|cos| = {c})")
                })?;
                worst = worst.max((l - want).abs());
                ensure((l - want).abs() <= 1e-12, || {
                    format!("sigma={sigma} g={g} {pattern:?}: λ = {l} vs {want}")
                })?;
            }
            if gamma_minus != 1.0 {
                let (l4, _) = aligned(&modes, &[1.0, 1.0, 1.0, 1.0], 0.0);
                let inverted = 4.0 * (1.0 - 1.0 / g) + 24.0 / 29.0 * k2;
                inverted_gap = inverted_gap.min((l4 - inverted).abs());
            }
        }
    }
    ensure(inverted_gap > 1e-3, || {
        "inverted compressibility ratio unexpectedly matches".into()
    })?;
    Ok(format!(
        "max |Δλ| = {worst:.1e}; γ+/γ- reading of λ4 off by ≥ {inverted_gap:.2}"
    ))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

fn check_maxwell(opts: &ValidationOptions) -> CheckResult {
    let f = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lattice = LatticeSpec::cubic();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let medium = core(MediumParams::new(
            log_uniform(&mut rng, 0.5, 2.0),
            log_uniform(&mut rng, 0.5, 2.0),
            log_uniform(&mut rng, 0.5, 2.0),
            log_uniform(&mut rng, 0.5, 2.0),
        ))?;
        // |k| < 1/2 keeps k off every Bragg plane of the cubic lattice.
        let k = random_direction(&mut rng) * rng.random_range(0.1..0.45);
        let set = core(find_exceptional_set(k, &lattice, 1e-9))?;
        ensure(set.order() == 1, || {
            format!("sample {i} landed on a Bragg plane")
        })?;
        let x = core(PolarizabilityTensor::analytic_sphere(medium.sigma()))?;
        let geo = core(GeometryScale::with_volume_fraction(
            f,
            4.0 * PI / 3.0,
            lattice.cell_volume,
        ))?;
        let modes = eigen_modes(&core(assemble_mode_matrix(&set, &x, &medium))?);
        let w = core(frequencies_fixed_k(&set, &modes, &medium, &geo))?.modes[0].omega;
        let eff = core(maxwell_effective(&medium, f))?;
        // γ̄ ω² = ⟨ν⟩ |k|².
        let w_eff = eff.frequency(k.norm());
        let rel = (w - w_eff).abs() / w_eff;
        worst = worst.max(rel);
        ensure(rel <= 1e-5, || {
            format!("sample {i}: relative error {rel:.3e}")
        })?;
    }
    Ok(format!("max relative error {worst:.2e} over 20 media"))
}

fn check_bessel() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut zs: Vec<f64> = (0..400)
        .map(|i| 0.1 * 500f64.powf(i as f64 / 399.0))
        .collect();
    zs.extend([0.1, 1.0, 4.49, 20.0]);
    for n in 0..=10 {
        for &z in &zs {
            let lhs = core(sph_bessel_j(n + 1, z))? * core(sph_bessel_y(n, z))?
                - core(sph_bessel_j(n, z))? * core(sph_bessel_y(n + 1, z))?;
            let rhs = 1.0 / (z * z);
            let rel = (lhs - rhs).abs() / rhs;
            worst = worst.max(rel);
            ensure(rel <= 1e-12, || {
                format!("Wronskian n={n} z={z}: relative {rel:.2e}")
            })?;
        }
    }
    let mut agree: f64 = 0.0;
    for (r, k) in [(1.0, 1.0), (0.05, 1.0), (0.3, 2.0), (2.5, 1.0), (0.7, 5.5)] {
        let b = core(ball_constants(r, k))?;
        agree = agree.max(b.disagreement());
        ensure(b.disagreement() <= 1e-10, || {
            format!("R={r} k={k}: disagreement {:e}", b.disagreement())
        })?;
    }
    for kr in [PI, 4.493409457909064] {
        match ball_constants(kr, 1.0) {
            Err(Error::ResonantRadius { .. }) => {}
            other => return Err(format!("k+R = {kr} not rejected: {other:?}")),
        }
    }
    Ok(format!(
        "Wronskian max rel. {worst:.1e}; ball-constant agreement {agree:.1e}; resonances rejected"
    ))
}

fn check_surface_integrals(opts: &ValidationOptions) -> CheckResult {
    let nodes = core(sphere_quadrature::<f64>(48))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let dirs = [
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 1.0, 1.0) / 3f64.sqrt(),
        random_direction(&mut rng),
    ];
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        for kr in [0.0, 0.5, 1.0, 2.5, 5.0, 7.5, 10.0] {
            for d in &dirs {
                let k = *d * (kr / r);
                let exact = core(plane_wave_moments(k, r))?;
                let s: Complex<f64> =
                    integrate_sphere(&nodes, r, |x| Complex::from_polar(1.0, k.dot(&x)));
                let area = 4.0 * PI * r * r;
                let mut err = (s - exact.scalar).norm() / area;
                for a in 0..3 {
                    let v: Complex<f64> = integrate_sphere(&nodes, r, |x: Vec3<f64>| {
                        Complex::from_polar(x[a] / r, k.dot(&x))
                    });
                    err = err.max((v - exact.vector[a]).norm() / area);
                }
                worst = worst.max(err);
                ensure(err <= 1e-10, || {
                    format!("R={r} |k|R={kr}: error {err:.2e} of 4πR²")
                })?;
            }
        }
    }
    Ok(format!("max error {worst:.1e} relative to 4πR², |k|R ≤ 10"))
}

/// Roundoff floor below which two zero-mean defects count as equal.
const ZERO_MEAN_FLOOR: f64 = 1e-13;

fn check_zero_mean() -> CheckResult {
    let mut ratios = Vec::new();
    for s in 1..=4 {
        let mesh = core(icosphere::<f64>(s, 1.0))?;
        let solver = core(TransmissionSolver::new(&mesh))?;
        let dirs = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.6, 0.0, 0.8)];
        let mut worst: f64 = 0.0;
        for beta in core(solver.solve(2.0, &dirs))? {
            let total: f64 = beta
                .values
                .iter()
                .zip(mesh.panel_areas())
                .map(|(b, a)| b.abs() * a)
                .sum();
            worst = worst.max(beta.zero_mean_defect(&mesh) / total);
        }
        ratios.push(worst);
    }
    for w in ratios.windows(2) {
        ensure(w[1] <= w[0] || w[1] <= ZERO_MEAN_FLOOR, || {
            format!("grew under refinement: {ratios:?}")
        })?;
    }
    ensure(ratios[3] <= 1e-3, || format!("s=4 ratio {:e}", ratios[3]))?;
    Ok(format!("|∫β|/∫|β| by level: {}", fmt_list(&ratios)))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.1e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn example_medium() -> Result<MediumParams<f64>, String> {
    core(MediumParams::new(2.0, 1.0, 1.0, 0.8))
}

fn check_clusters(opts: &ValidationOptions) -> CheckResult {
    let lattice = LatticeSpec::cubic();
    let medium = example_medium()?;
    let x = core(PolarizabilityTensor::analytic_sphere(medium.sigma()))?;
    let geo = core(GeometryScale::with_volume_fraction(
        1e-3,
        4.0 * PI / 3.0,
        lattice.cell_volume,
    ))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc1);
    let samples: Vec<Vec3<f64>> = (0..100)
        .map(|_| {
            Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
        })
        .collect();
    let (mut worst, mut weakest, mut count) = (0.0f64, f64::INFINITY, 0);
    for k in [ORDER_TWO_K, ORDER_FOUR_K] {
        let set = cubic_set(k, 1e-9)?;
        let modes = eigen_modes(&core(assemble_mode_matrix(&set, &x, &medium))?);
        for res in [
            core(frequencies_fixed_k(&set, &modes, &medium, &geo))?,
            core(wavevectors_fixed_omega(&set, &modes, &medium, &geo))?,
        ] {
            for c in core(build_clusters(&res, &set))? {
                let r = c.bloch_residual(&lattice, &samples);
                worst = worst.max(r);
                ensure(r <= 1e-12, || format!("k={k:?}: residual {r:e}"))?;
                let mut bad = c.clone();
                bad.shifts[1] += Vec3::new(0.1, 0.0, 0.0);
                let rb = bad.bloch_residual(&lattice, &samples);
                weakest = weakest.min(rb);
                ensure(rb >= 0.1, || format!("corrupted shift only gives {rb:e}"))?;
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} clusters: max residual {worst:.1e}; corrupted-shift control min {weakest:.2}"
    ))
}

/// Depolarization factor of the ellipsoid with semi-axes `(a, b, c)` along
/// `a`: `(abc/2) ∫_0^∞ ds / ((s+a²) √((s+a²)(s+b²)(s+c²)))`, mapped to
/// `[0, 1)` by `s = t/(1-t)` and integrated with composite Simpson.
pub fn depolarization_factor(a: f64, b: f64, c: f64) -> f64 {
    let n = 200_000;
    let h = 1.0 / n as f64;
    let f = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let s = t / u;
        1.0 / (u * u * (s + a * a) * ((s + a * a) * (s + b * b) * (s + c * c)).sqrt())
    };
    let mut sum = f(0.0) + f(1.0);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    0.5 * a * b * c * sum * h / 3.0
}

fn check_spheroid() -> CheckResult {
    let sigma = 5.0;
    let semi = [2.0, 1.0, 1.0];
    let mesh = core(ellipsoid::<f64>(3, Vec3::from_f64(semi)))?;
    let x = core(TransmissionSolver::new(&mesh).and_then(|s| s.polarizability(sigma)))?;
    let mut diag_err: f64 = 0.0;
    for i in 0..3 {
        let l = depolarization_factor(semi[i], semi[(i + 1) % 3], semi[(i + 2) % 3]);
        let want = (sigma - 1.0) / (1.0 + l * (sigma - 1.0));
        let rel = (x.matrix[i][i] - want).abs() / want;
        diag_err = diag_err.max(rel);
        ensure(rel <= 0.02, || {
            format!("X[{i}][{i}] = {} vs oracle {want}", x.matrix[i][i])
        })?;
    }
    let medium = core(MediumParams::new(sigma, 1.0, 1.0, 0.8))?;
    let mut asym: f64 = 0.0;
    for k in [ORDER_TWO_K, ORDER_FOUR_K] {
        let set = cubic_set(k, 1e-9)?;
        let mm = core(assemble_mode_matrix(&set, &x, &medium))?;
        asym = asym.max(mm.asymmetry);
    }
    ensure(asym <= 1e-3, || format!("M0 asymmetry {asym:e}"))?;
    Ok(format!(
        "{} panels: M0 asymmetry {asym:.1e}, diagonal vs depolarization oracle {:.2}%",
        mesh.panel_count(),
        100.0 * diag_err
    ))
}

fn check_round_trip() -> CheckResult {
    let lattice = LatticeSpec::cubic();
    let medium = example_medium()?;
    let x = core(PolarizabilityTensor::analytic_sphere(medium.sigma()))?;
    let geo = core(GeometryScale::with_volume_fraction(
        1e-3,
        4.0 * PI / 3.0,
        lattice.cell_volume,
    ))?;
    let mut worst: f64 = 0.0;
    for k in [ORDER_TWO_K, ORDER_FOUR_K] {
        let set = cubic_set(k, 1e-9)?;
        let modes = eigen_modes(&core(assemble_mode_matrix(&set, &x, &medium))?);
        let fixed = core(wavevectors_fixed_omega(&set, &modes, &medium, &geo))?;
        for (s, rec) in fixed.modes.iter().enumerate() {
            // Re-evaluate the fixed-k branch s at the perturbed wave vector.
            let at_ks = ExceptionalSet {
                k: rec.wave_vector,
                members: set.members.clone(),
                tol: set.tol,
            };
            let back = core(frequencies_fixed_k(&at_ks, &modes, &medium, &geo))?;
            let w = back.modes[s].omega;
            let rel = (w - rec.omega).abs() / rec.omega;
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || {
                format!("k={k:?} mode {s}: relative {rel:e}")
            })?;
        }
    }
    Ok(format!("max relative ω mismatch {worst:.1e} at f = 1e-3"))
}
