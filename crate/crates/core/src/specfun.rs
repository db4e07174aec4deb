//! Spherical Bessel functions, product quadrature on the sphere, and the
//! ball-boundary constants `d`, `d1` together with the closed-form surface
//! moments of a plane wave.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Highest order accepted by [`sph_bessel_j`] and [`sph_bessel_y`].
pub const MAX_BESSEL_ORDER: usize = 50;

/// `|j0(k+R)|` or `|j1(k+R)|` below this marks a resonant auxiliary radius.
pub const RESONANCE_GUARD: f64 = 1e-10;

fn check_order(n: usize) -> Result<()> {
    if n > MAX_BESSEL_ORDER {
        return Err(Error::DomainError(format!(
            "order {n} exceeds {MAX_BESSEL_ORDER}"
        )));
    }
    Ok(())
}

/// Power series `z^n/(2n+1)!! Σ_k (-z²/2)^k / (k! (2n+3)…(2n+2k+1))`.
fn j_series<T: Real>(n: usize, z: T) -> T {
    let mut prefactor = T::one();
    for i in 1..=n {
        prefactor *= z / T::from_count(2 * i + 1);
    }
    let q = -z * z / T::lit(2.0);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..200 {
        term *= q / (T::from_count(k) * T::from_count(2 * n + 2 * k + 1));
        sum += term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

fn j0_closed<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-4) {
        let z2 = z * z;
        T::one() - z2 / T::lit(6.0) + z2 * z2 / T::lit(120.0)
    } else {
        z.sin() / z
    }
}

fn j1_closed<T: Real>(z: T) -> T {
    (z.sin() / z - z.cos()) / z
}

/// Spherical Bessel function of the first kind `j_n(z)`, `n ≤ 50`.
///
/// Power series for `|z| < 1`, upward recurrence when `|z| ≥ n`, and
/// Miller's downward recurrence (normalized on `j0` or `j1`) otherwise.
pub fn sph_bessel_j<T: Real>(n: usize, z: T) -> Result<T> {
    check_order(n)?;
    if !z.is_finite() {
        return Err(Error::DomainError(format!(
            "j_{n} at non-finite argument {z}"
        )));
    }
    if z < T::zero() {
        let v = sph_bessel_j(n, -z)?;
        return Ok(if n.is_multiple_of(2) { v } else { -v });
    }
    if n == 0 {
        return Ok(j0_closed(z));
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    if z < T::one() {
        return Ok(j_series(n, z));
    }
    if z >= T::from_count(n) {
        let mut prev = j0_closed(z);
        let mut cur = j1_closed(z);
        for k in 1..n {
            let next = T::from_count(2 * k + 1) / z * cur - prev;
            prev = cur;
            cur = next;
        }
        return Ok(cur);
    }

    // Miller: recur downward from an order well above n with arbitrary
    // seeds, then fix the scale with an exactly known low order.
    let start = n + 60;
    let huge = T::max_value().sqrt();
    let mut above = T::zero();
    let mut cur = T::min_positive_value().sqrt();
    let mut at_n = T::zero();
    let mut f0 = T::zero();
    let mut f1 = T::zero();
    for k in (0..start).rev() {
        // cur holds f_{k+1}, above holds f_{k+2}
        let next = T::from_count(2 * k + 3) / z * cur - above;
        above = cur;
        cur = next;
        if cur.abs() > huge {
            cur /= huge;
            above /= huge;
            at_n /= huge;
            f1 /= huge;
        }
        match k {
            0 => f0 = cur,
            1 => f1 = cur,
            _ => {}
        }
        if k == n {
            at_n = cur;
        }
    }
    let j0 = j0_closed(z);
    let j1 = j1_closed(z);
    let scale = if j0.abs() >= j1.abs() {
        j0 / f0
    } else {
        j1 / f1
    };
    Ok(at_n * scale)
}

/// Spherical Bessel function of the second kind `y_n(z)`, `z > 0`, `n ≤ 50`,
/// by upward recurrence.
pub fn sph_bessel_y<T: Real>(n: usize, z: T) -> Result<T> {
    check_order(n)?;
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::DomainError(format!("y_{n} requires z > 0, got {z}")));
    }
    let (s, c) = z.sin_cos();
    let mut prev = -c / z;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = (prev - s) / z;
    for k in 1..n {
        let next = T::from_count(2 * k + 1) / z * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Constants `d = 1/(4πR² j0(k+R))` and `d1 = k+/(4πR² j1(k+R))` on the
/// auxiliary ball boundary, with the same quantities evaluated through the
/// bracketed `j/y` combinations for cross-checking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallConstants<T> {
    pub radius: T,
    pub kplus: T,
    pub d: T,
    pub d1: T,
    /// `-k+²/(4π) [y1 - j1 y0 / j0]` at `k+R`.
    pub d_bracket: T,
    /// `-k+³/(4π) [y2 j1 - j2 y1] / j1` at `k+R`.
    pub d1_bracket: T,
}

impl<T: Real> BallConstants<T> {
    /// Largest relative difference between the two evaluation routes.
    pub fn disagreement(&self) -> T {
        let rel = |a: T, b: T| (a - b).abs() / a.abs().max(b.abs());
        rel(self.d, self.d_bracket).max(rel(self.d1, self.d1_bracket))
    }
}

pub fn ball_constants<T: Real>(radius: T, kplus: T) -> Result<BallConstants<T>> {
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(invalid("radius", "must be positive"));
    }
    if !(kplus > T::zero() && kplus.is_finite()) {
        return Err(invalid("kplus", "must be positive"));
    }
    let z = kplus * radius;
    let j0 = sph_bessel_j(0, z)?;
    let j1 = sph_bessel_j(1, z)?;
    let guard = T::lit(RESONANCE_GUARD);
    if j0.abs() < guard || j1.abs() < guard {
        return Err(Error::ResonantRadius {
            kr: z.to_f64().unwrap_or(f64::NAN),
            j0: j0.abs().to_f64().unwrap_or(f64::NAN),
            j1: j1.abs().to_f64().unwrap_or(f64::NAN),
        });
    }
    let j2 = sph_bessel_j(2, z)?;
    let y0 = sph_bessel_y(0, z)?;
    let y1 = sph_bessel_y(1, z)?;
    let y2 = sph_bessel_y(2, z)?;

    let four_pi = T::lit(4.0) * T::PI();
    let area = four_pi * radius * radius;
    let consts = BallConstants {
        radius,
        kplus,
        d: T::one() / (area * j0),
        d1: kplus / (area * j1),
        d_bracket: -kplus * kplus / four_pi * (y1 - j1 * y0 / j0),
        d1_bracket: -kplus * kplus * kplus / four_pi * (y2 * j1 - j2 * y1) / j1,
    };
    let defect = consts.disagreement();
    if !(defect <= T::tol(1e-10, 1e3)) {
        return Err(Error::InconsistentBallConstants(
            defect.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(consts)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_n`.
pub fn gauss_legendre<T: Real>(n: usize) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(n);
    let nf = T::from_count(n);
    for i in 0..n {
        // Tricomi-style initial guess, descending in x.
        let mut x = (T::PI() * (T::from_count(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        out.push((x, w));
    }
    out.reverse();
    out
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::from_count(k);
        let next = ((T::lit(2.0) * kf - T::one()) * x * p - (kf - T::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let d = T::from_count(n) * (x * p - p_prev) / (x * x - T::one());
    (p, d)
}

/// Quadrature node on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereNode<T> {
    pub point: Vec3<T>,
    pub weight: T,
}

/// Product rule on the unit sphere: `order` Gauss–Legendre nodes in `cos θ`
/// times `2·order` equispaced azimuths. Exact for spherical polynomials of
/// degree below `2·order`.
pub fn sphere_quadrature<T: Real>(order: usize) -> Result<Vec<SphereNode<T>>> {
    if !(2..=64).contains(&order) {
        return Err(Error::OrderOutOfRange(order));
    }
    let azimuths = 2 * order;
    let dphi = T::TAU() / T::from_count(azimuths);
    let mut nodes = Vec::with_capacity(order * azimuths);
    for (t, w) in gauss_legendre::<T>(order) {
        let s = (T::one() - t * t).max(T::zero()).sqrt();
        for j in 0..azimuths {
            let phi = dphi * (T::from_count(j) + T::lit(0.5));
            let (sp, cp) = phi.sin_cos();
            nodes.push(SphereNode {
                point: Vec3::new(s * cp, s * sp, t),
                weight: w * dphi,
            });
        }
    }
    Ok(nodes)
}

/// `∫ f(x) dS` over the sphere `|x| = radius` with a precomputed rule.
pub fn integrate_sphere<T: Real, V, F>(nodes: &[SphereNode<T>], radius: T, mut f: F) -> V
where
    V: std::ops::Add<Output = V> + std::ops::Mul<T, Output = V> + Default,
    F: FnMut(Vec3<T>) -> V,
{
    let r2 = radius * radius;
    nodes.iter().fold(V::default(), |acc, n| {
        acc + f(n.point * radius) * (n.weight * r2)
    })
}

/// Surface moments of `e^{i k·x}` over the sphere of radius `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveMoments<T> {
    /// `∫ e^{ik·x} dS = 4πR² j0(|k|R)`.
    pub scalar: Complex<T>,
    /// `∫ x̂ e^{ik·x} dS = 4πi R² j1(|k|R) k̂`.
    pub vector: [Complex<T>; 3],
}

pub fn plane_wave_moments<T: Real>(k: Vec3<T>, radius: T) -> Result<PlaneWaveMoments<T>> {
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(invalid("radius", "must be positive"));
    }
    let area = T::lit(4.0) * T::PI() * radius * radius;
    let kn = k.norm();
    let Some(khat) = k.normalized() else {
        return Ok(PlaneWaveMoments {
            scalar: Complex::new(area, T::zero()),
            vector: [Complex::new(T::zero(), T::zero()); 3],
        });
    };
    let z = kn * radius;
    let j0 = sph_bessel_j(0, z)?;
    let j1 = sph_bessel_j(1, z)?;
    Ok(PlaneWaveMoments {
        scalar: Complex::new(area * j0, T::zero()),
        vector: khat.0.map(|c| Complex::new(T::zero(), area * j1 * c)),
    })
}
