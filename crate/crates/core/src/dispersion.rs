//! Mode matrix `M⁰`, its eigen-decomposition, and the three leading-order
//! dispersion regimes: non-exceptional `k`, fixed exceptional `k` (split
//! frequencies) and fixed `ω` (split wave vectors).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem::density::check_unit;
use crate::bem::PolarizabilityTensor;
use crate::error::{invalid, Error, Result};
use crate::lattice::{
    find_exceptional_set, plane_distances, ExceptionalSet, LatticeSpec, PlaneDistance,
};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::scalar::Real;
use crate::vec3::{mat3_mul_vec, Vec3};

/// Upper bound on the volume fraction for the asymptotics to be trusted.
pub const MAX_VOLUME_FRACTION: f64 = 0.1;

/// Relative eigenvalue gap below which modes are flagged degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Host (`+`) and inclusion (`-`) mass densities and compressibilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumParams<T> {
    rho_plus: T,
    rho_minus: T,
    gamma_plus: T,
    gamma_minus: T,
}

impl<T: Real> MediumParams<T> {
    pub fn new(rho_plus: T, rho_minus: T, gamma_plus: T, gamma_minus: T) -> Result<Self> {
        for (name, v) in [
            ("rho_plus", rho_plus),
            ("rho_minus", rho_minus),
            ("gamma_plus", gamma_plus),
            ("gamma_minus", gamma_minus),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(Self {
            rho_plus,
            rho_minus,
            gamma_plus,
            gamma_minus,
        })
    }

    pub fn rho_plus(&self) -> T {
        self.rho_plus
    }
    pub fn rho_minus(&self) -> T {
        self.rho_minus
    }
    pub fn gamma_plus(&self) -> T {
        self.gamma_plus
    }
    pub fn gamma_minus(&self) -> T {
        self.gamma_minus
    }

    /// `σ = ρ+/ρ-`.
    pub fn sigma(&self) -> T {
        self.rho_plus / self.rho_minus
    }

    /// `κ = (σ-1)/(σ+1)`, always in `(-1, 1)`.
    pub fn kappa(&self) -> T {
        let s = self.sigma();
        (s - T::one()) / (s + T::one())
    }

    /// `g = γ-/γ+`.
    pub fn g(&self) -> T {
        self.gamma_minus / self.gamma_plus
    }

    pub fn c_plus(&self) -> T {
        T::one() / (self.gamma_plus * self.rho_plus).sqrt()
    }

    pub fn c_minus(&self) -> T {
        T::one() / (self.gamma_minus * self.rho_minus).sqrt()
    }

    pub fn nu_plus(&self) -> T {
        T::one() / self.rho_plus
    }

    pub fn nu_minus(&self) -> T {
        T::one() / self.rho_minus
    }

    /// `q = k-² - k+²` at angular frequency `ω`.
    pub fn q(&self, omega: T) -> T {
        omega * omega * (self.rho_minus * self.gamma_minus - self.rho_plus * self.gamma_plus)
    }
}

/// Inclusion scale and volume fraction `f = a³ |Ω̂| / |Π|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryScale<T> {
    pub a: T,
    pub omega_hat_volume: T,
    pub cell_volume: T,
    pub f: T,
    /// Skips the `f < 0.1` guard.
    pub forced: bool,
}

impl<T: Real> GeometryScale<T> {
    pub fn new(a: T, omega_hat_volume: T, cell_volume: T) -> Result<Self> {
        let g = Self::new_forced(a, omega_hat_volume, cell_volume)?;
        Self { forced: false, ..g }.checked()
    }

    /// As [`GeometryScale::new`] without the volume-fraction guard.
    pub fn new_forced(a: T, omega_hat_volume: T, cell_volume: T) -> Result<Self> {
        if !(a >= T::zero() && a.is_finite()) {
            return Err(invalid("a", "inclusion scale must be non-negative"));
        }
        if !(omega_hat_volume > T::zero() && cell_volume > T::zero()) {
            return Err(invalid("volume", "volumes must be positive"));
        }
        Ok(Self {
            a,
            omega_hat_volume,
            cell_volume,
            f: a * a * a * omega_hat_volume / cell_volume,
            forced: true,
        })
    }

    /// Picks `a` so that the volume fraction equals `f`.
    pub fn with_volume_fraction(f: T, omega_hat_volume: T, cell_volume: T) -> Result<Self> {
        if !(f >= T::zero()) {
            return Err(invalid("f", "volume fraction must be non-negative"));
        }
        let a = (f * cell_volume / omega_hat_volume).cbrt();
        let g = Self::new_forced(a, omega_hat_volume, cell_volume)?;
        Self {
            f,
            forced: false,
            ..g
        }
        .checked()
    }

    fn checked(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        if !self.forced && !(self.f < T::lit(MAX_VOLUME_FRACTION)) {
            return Err(Error::VolumeFractionTooLarge(
                self.f.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(())
    }
}

/// `M⁰_ij = 1 - γ-/γ+ + (X d̂_i)·d̂_j` with `d̂_j = (k - m_j)/|k|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeMatrix<T> {
    pub m0: DenseMatrix<T>,
    pub directions: Vec<Vec3<T>>,
    pub exceptional: ExceptionalSet<T>,
    /// `max |M⁰_ij - M⁰_ji|`.
    pub asymmetry: T,
}

impl<T: Real> ModeMatrix<T> {
    pub fn order(&self) -> usize {
        self.m0.rows()
    }

    /// Leading term of the full form matrix, `|Π| |k|² f M⁰`.
    pub fn scaled(&self, cell_volume: T, f: T) -> DenseMatrix<T> {
        let s = cell_volume * self.exceptional.k.norm_squared() * f;
        let n = self.order();
        DenseMatrix::from_fn(n, n, |i, j| s * self.m0.get(i, j))
    }
}

pub fn assemble_mode_matrix<T: Real>(
    exceptional: &ExceptionalSet<T>,
    x: &PolarizabilityTensor<T>,
    medium: &MediumParams<T>,
) -> Result<ModeMatrix<T>> {
    if !x.is_symmetric() {
        return Err(Error::AsymmetricTensor {
            defect: x.symmetry_defect().to_f64().unwrap_or(f64::NAN),
            tolerance: x.tolerance.to_f64().unwrap_or(f64::NAN),
        });
    }
    let k = exceptional.k;
    let kn = k.norm();
    if !(kn > T::zero()) {
        return Err(Error::ZeroBlochVector);
    }
    let directions: Vec<Vec3<T>> = exceptional
        .members
        .iter()
        .map(|m| (k - m.vector) / kn)
        .collect();
    let slack = exceptional.tol + T::lit(16.0) * T::epsilon();
    for d in &directions {
        if (d.norm_squared() - T::one()).abs() > slack {
            return Err(Error::MismatchedInputs(format!(
                "|k - m| differs from |k| (|d| = {})",
                d.norm()
            )));
        }
    }
    let base = T::one() - medium.g();
    let chis: Vec<Vec3<T>> = directions
        .iter()
        .map(|d| mat3_mul_vec(&x.matrix, d))
        .collect();
    let n = directions.len();
    let m0 = DenseMatrix::from_fn(n, n, |i, j| base + chis[i].dot(&directions[j]));
    let asymmetry = m0.asymmetry();
    Ok(ModeMatrix {
        m0,
        directions,
        exceptional: exceptional.clone(),
        asymmetry,
    })
}

/// Alias matching the mathematical name.
#[allow(non_snake_case)]
pub fn assemble_M0<T: Real>(
    exceptional: &ExceptionalSet<T>,
    x: &PolarizabilityTensor<T>,
    medium: &MediumParams<T>,
) -> Result<ModeMatrix<T>> {
    assemble_mode_matrix(exceptional, x, medium)
}

/// Eigenpairs of `M⁰`, eigenvalues ascending.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenModes<T> {
    pub lambdas: Vec<T>,
    /// Orthonormal; sign fixed so the last significant component is positive.
    pub vectors: Vec<Vec<T>>,
    /// Set when two eigenvalues are closer than `1e-8` times the spectral
    /// radius; the split-mode results then assume distinct eigenvalues that
    /// do not exist.
    pub degenerate: bool,
}

pub fn eigen_modes<T: Real>(m: &ModeMatrix<T>) -> EigenModes<T> {
    let n = m.order();
    let half = T::lit(0.5);
    let sym = DenseMatrix::from_fn(n, n, |i, j| (m.m0.get(i, j) + m.m0.get(j, i)) * half);
    let eig = symmetric_eigen(&sym);
    let cutoff = T::lit(1e-8);
    let vectors = eig
        .vectors
        .into_iter()
        .map(|mut v| {
            if let Some(last) = v.iter().rev().find(|c| c.abs() > cutoff) {
                if *last < T::zero() {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
            }
            v
        })
        .collect();
    let radius = eig.values.iter().fold(T::zero(), |r, v| r.max(v.abs()));
    let degenerate = eig
        .values
        .windows(2)
        .any(|w| w[1] - w[0] <= T::lit(DEGENERACY_GAP) * radius);
    EigenModes {
        lambdas: eig.values,
        vectors,
        degenerate,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonExceptional,
    FixedK,
    FixedOmega,
}

/// One perturbed branch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeRecord<T> {
    pub lambda: T,
    /// Relative detuning `λ f / 2`.
    pub epsilon: T,
    pub omega: T,
    pub wave_vector: Vec3<T>,
    pub coefficients: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionResult<T> {
    pub regime: Regime,
    /// The `k` (or `k*`) the modes were derived at.
    pub bloch_vector: Vec3<T>,
    pub volume_fraction: T,
    pub degenerate: bool,
    pub modes: Vec<ModeRecord<T>>,
}

fn check_modes<T: Real>(exceptional: &ExceptionalSet<T>, modes: &EigenModes<T>) -> Result<()> {
    let n = exceptional.order();
    if modes.lambdas.len() != n || modes.vectors.iter().any(|v| v.len() != n) {
        return Err(Error::MismatchedInputs(format!(
            "{} eigenpairs for an exceptional set of order {n}",
            modes.lambdas.len()
        )));
    }
    Ok(())
}

/// Frequencies `ω_s = c+ |k| √(1 + λ_s f)` at a fixed Bloch vector. For
/// order one this is the non-exceptional dispersion relation.
pub fn frequencies_fixed_k<T: Real>(
    exceptional: &ExceptionalSet<T>,
    modes: &EigenModes<T>,
    medium: &MediumParams<T>,
    geo: &GeometryScale<T>,
) -> Result<DispersionResult<T>> {
    geo.check()?;
    check_modes(exceptional, modes)?;
    let k = exceptional.k;
    let base = medium.c_plus() * k.norm();
    let f = geo.f;
    let half = T::lit(0.5);
    let mut records = Vec::with_capacity(modes.lambdas.len());
    for (lambda, mu) in modes.lambdas.iter().zip(&modes.vectors) {
        let stretch = T::one() + *lambda * f;
        if !(stretch > T::zero()) {
            return Err(invalid(
                "volume fraction",
                format!("1 + λf = {stretch} leaves no real frequency"),
            ));
        }
        records.push(ModeRecord {
            lambda: *lambda,
            epsilon: *lambda * f * half,
            omega: base * stretch.sqrt(),
            wave_vector: k,
            coefficients: mu.clone(),
        });
    }
    Ok(DispersionResult {
        regime: if exceptional.is_exceptional() {
            Regime::FixedK
        } else {
            Regime::NonExceptional
        },
        bloch_vector: k,
        volume_fraction: f,
        degenerate: modes.degenerate,
        modes: records,
    })
}

/// Wave vectors `k_s = k*(1 - λ_s f / 2)` at the fixed frequency
/// `ω = c+ |k*|`.
pub fn wavevectors_fixed_omega<T: Real>(
    exceptional: &ExceptionalSet<T>,
    modes: &EigenModes<T>,
    medium: &MediumParams<T>,
    geo: &GeometryScale<T>,
) -> Result<DispersionResult<T>> {
    geo.check()?;
    check_modes(exceptional, modes)?;
    let k = exceptional.k;
    let omega = medium.c_plus() * k.norm();
    let f = geo.f;
    let half = T::lit(0.5);
    let records = modes
        .lambdas
        .iter()
        .zip(&modes.vectors)
        .map(|(lambda, mu)| ModeRecord {
            lambda: *lambda,
            epsilon: *lambda * f * half,
            omega,
            wave_vector: k * (T::one() - half * *lambda * f),
            coefficients: mu.clone(),
        })
        .collect();
    Ok(DispersionResult {
        regime: Regime::FixedOmega,
        bloch_vector: k,
        volume_fraction: f,
        degenerate: modes.degenerate,
        modes: records,
    })
}

/// Effective compressibility and specific volume of a dilute suspension of
/// spheres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMedium<T> {
    /// `γ̄ = γ+(1-f) + γ- f`.
    pub gamma_bar: T,
    /// `⟨ν⟩ = ν+(1 + 3f(ν- - ν+)/(ν- + 2ν+))`.
    pub nu_avg: T,
}

impl<T: Real> EffectiveMedium<T> {
    /// `ω` solving `γ̄ ω² = ⟨ν⟩ |k|²`.
    pub fn frequency(&self, abs_k: T) -> T {
        abs_k * (self.nu_avg / self.gamma_bar).sqrt()
    }
}

pub fn maxwell_effective<T: Real>(medium: &MediumParams<T>, f: T) -> Result<EffectiveMedium<T>> {
    if !(f >= T::zero()) {
        return Err(invalid("f", "volume fraction must be non-negative"));
    }
    if !(f < T::lit(MAX_VOLUME_FRACTION)) {
        return Err(Error::VolumeFractionTooLarge(
            f.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let (np, nm) = (medium.nu_plus(), medium.nu_minus());
    Ok(EffectiveMedium {
        gamma_bar: medium.gamma_plus() * (T::one() - f) + medium.gamma_minus() * f,
        nu_avg: np * (T::one() + T::lit(3.0) * f * (nm - np) / (nm + T::lit(2.0) * np)),
    })
}

/// One sample of a band scan along a ray.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub abs_k: T,
    pub order: usize,
    pub exceptional: bool,
    pub members: Vec<[i64; 3]>,
    pub lambdas: Vec<T>,
    pub omegas: Vec<T>,
    pub coefficients: Vec<Vec<T>>,
    pub degenerate: bool,
    /// Closest Bragg plane `2k·m = |m|²`.
    pub nearest_plane: Option<PlaneDistance<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanResult<T> {
    pub direction: Vec3<T>,
    pub k_range: (T, T),
    pub tol: T,
    pub rows: Vec<ScanRow<T>>,
}

impl<T> ScanResult<T> {
    pub fn max_order(&self) -> usize {
        self.rows.iter().map(|r| r.order).max().unwrap_or(0)
    }
}

/// Scan inputs that stay fixed along the ray.
#[derive(Clone, Copy, Debug)]
pub struct ScanSetup<'a, T> {
    pub medium: &'a MediumParams<T>,
    pub geo: &'a GeometryScale<T>,
    pub lattice: &'a LatticeSpec<T>,
    pub polarizability: &'a PolarizabilityTensor<T>,
    pub tol: T,
}

/// Samples `|k|` uniformly over `k_range` along `direction` and evaluates the
/// fixed-`k` frequencies at each point, marking exceptional samples.
pub fn dispersion_scan<T: Real>(
    direction: Vec3<T>,
    k_range: (T, T),
    steps: usize,
    setup: ScanSetup<'_, T>,
) -> Result<ScanResult<T>> {
    check_unit(&direction)?;
    if steps < 2 {
        return Err(invalid("steps", "a scan needs at least two samples"));
    }
    let (lo, hi) = k_range;
    if !(lo >= T::zero() && hi >= lo && hi.is_finite()) {
        return Err(invalid("k_range", "need 0 <= k_min <= k_max"));
    }
    setup.geo.check()?;
    let denom = T::from_count(steps - 1);
    let reach = setup
        .lattice
        .reciprocal
        .iter()
        .fold(T::zero(), |m, b| m.max(b.norm()));

    let rows: Result<Vec<ScanRow<T>>> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let t = T::from_count(i) / denom;
            let abs_k = lo * (T::one() - t) + hi * t;
            scan_row(direction, abs_k, reach, &setup)
        })
        .collect();
    Ok(ScanResult {
        direction,
        k_range,
        tol: setup.tol,
        rows: rows?,
    })
}

fn scan_row<T: Real>(
    direction: Vec3<T>,
    abs_k: T,
    reach: T,
    s: &ScanSetup<'_, T>,
) -> Result<ScanRow<T>> {
    let k = direction * abs_k;
    let nearest_plane = plane_distances(k, s.lattice, T::lit(2.0) * abs_k + reach)?
        .into_iter()
        .next();
    if abs_k == T::zero() {
        let chi = s.polarizability.chi_for_direction(direction)?;
        return Ok(ScanRow {
            abs_k,
            order: 1,
            exceptional: false,
            members: vec![[0, 0, 0]],
            lambdas: vec![T::one() - s.medium.g() + chi.dot(&direction)],
            omegas: vec![T::zero()],
            coefficients: vec![vec![T::one()]],
            degenerate: false,
            nearest_plane,
        });
    }
    let set = find_exceptional_set(k, s.lattice, s.tol)?;
    let mm = assemble_mode_matrix(&set, s.polarizability, s.medium)?;
    let modes = eigen_modes(&mm);
    let res = frequencies_fixed_k(&set, &modes, s.medium, s.geo)?;
    Ok(ScanRow {
        abs_k,
        order: set.order(),
        exceptional: set.is_exceptional(),
        members: set.indices(),
        lambdas: modes.lambdas.clone(),
        omegas: res.modes.iter().map(|m| m.omega).collect(),
        coefficients: modes.vectors,
        degenerate: modes.degenerate,
        nearest_plane,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(rp: f64, rm: f64, gp: f64, gm: f64) -> MediumParams<f64> {
        MediumParams::new(rp, rm, gp, gm).unwrap()
    }

    #[test]
    fn derived_medium_quantities() {
        let m = medium(2.0, 1.0, 0.5, 1.5);
        assert_eq!(m.sigma(), 2.0);
        assert!((m.kappa() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.g(), 3.0);
        assert!((m.c_plus() - 1.0).abs() < 1e-15);
        assert!((m.c_minus() - 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
        assert!(MediumParams::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn volume_fraction_guard() {
        let tau3 = std::f64::consts::TAU.powi(3);
        assert!(matches!(
            GeometryScale::new(3.0, 4.18879, tau3),
            Err(Error::VolumeFractionTooLarge(_))
        ));
        let forced = GeometryScale::new_forced(3.0, 4.18879, tau3).unwrap();
        assert!(forced.f > 0.1);
        assert!(forced.check().is_ok());
        let g = GeometryScale::<f64>::new(0.5, 2.0, 8.0).unwrap();
        assert!((g.f - 0.03125).abs() < 1e-16);
    }

    #[test]
    fn maxwell_examples() {
        let m = medium(1.0, 2.0, 1.0, 1.0);
        let e = maxwell_effective(&m, 0.05).unwrap();
        assert!((e.nu_avg - 0.97).abs() < 1e-15);
        let e0 = maxwell_effective(&m, 0.0).unwrap();
        assert_eq!((e0.gamma_bar, e0.nu_avg), (1.0, 1.0));
        let same = maxwell_effective(&medium(1.5, 1.5, 1.0, 3.0), 0.07).unwrap();
        assert!((same.nu_avg - 1.0 / 1.5).abs() < 1e-15);
        assert!(maxwell_effective(&m, 0.2).is_err());
    }
}
