//! Cluster (plane-wave superposition) fields for the split modes:
//! `u_s(x) = C Σ_j μ_j exp(-i (k_s - m_j)·x)`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionResult, Regime};
use crate::error::{Error, Result};
use crate::lattice::{ExceptionalSet, LatticeSpec};
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterSolution<T> {
    pub regime: Regime,
    /// `k_s` for fixed-`ω` modes, otherwise the Bloch vector itself.
    pub wave_vector: Vec3<T>,
    pub shifts: Vec<Vec3<T>>,
    pub shift_indices: Vec<[i64; 3]>,
    /// Eigenvector scaled so its largest entry has modulus one.
    pub coefficients: Vec<T>,
    pub amplitude: Complex<T>,
    pub omega: T,
    pub lambda: T,
}

/// One cluster per mode of `result`, each with amplitude `C = 1`.
pub fn build_clusters<T: Real>(
    result: &DispersionResult<T>,
    exceptional: &ExceptionalSet<T>,
) -> Result<Vec<ClusterSolution<T>>> {
    let n = exceptional.order();
    if result.bloch_vector != exceptional.k {
        return Err(Error::MismatchedInputs(
            "dispersion result was computed at a different Bloch vector".into(),
        ));
    }
    if result.modes.len() != n {
        return Err(Error::MismatchedInputs(format!(
            "{} modes for an exceptional set of order {n}",
            result.modes.len()
        )));
    }
    result
        .modes
        .iter()
        .map(|mode| {
            if mode.coefficients.len() != n {
                return Err(Error::MismatchedInputs(format!(
                    "mode has {} coefficients, expected {n}",
                    mode.coefficients.len()
                )));
            }
            let peak = mode
                .coefficients
                .iter()
                .fold(T::zero(), |m, c| m.max(c.abs()));
            if !(peak > T::zero()) {
                return Err(Error::MismatchedInputs(
                    "mode has a zero coefficient vector".into(),
                ));
            }
            Ok(ClusterSolution {
                regime: result.regime,
                wave_vector: mode.wave_vector,
                shifts: exceptional.shifts(),
                shift_indices: exceptional.indices(),
                coefficients: mode.coefficients.iter().map(|c| *c / peak).collect(),
                amplitude: Complex::new(T::one(), T::zero()),
                omega: mode.omega,
                lambda: mode.lambda,
            })
        })
        .collect()
}

impl<T: Real> ClusterSolution<T> {
    pub fn with_amplitude(mut self, amplitude: Complex<T>) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Field values at each point, in order.
    pub fn evaluate(&self, points: &[Vec3<T>]) -> Vec<Complex<T>> {
        points.par_iter().map(|x| self.value_at(*x)).collect()
    }

    pub fn value_at(&self, x: Vec3<T>) -> Complex<T> {
        let sum = self.coefficients.iter().zip(&self.shifts).fold(
            Complex::new(T::zero(), T::zero()),
            |acc, (mu, m)| {
                let phase = -(self.wave_vector - *m).dot(&x);
                acc + Complex::from_polar(*mu, phase)
            },
        );
        self.amplitude * sum
    }

    /// `max |u(x + l_i) - exp(-i k_s·l_i) u(x)|` over the sample points and
    /// the three lattice edges.
    pub fn bloch_residual(&self, lattice: &LatticeSpec<T>, points: &[Vec3<T>]) -> T {
        let mut worst = T::zero();
        for x in points {
            let u = self.value_at(*x);
            for l in &lattice.edges {
                let shifted = self.value_at(*x + *l);
                let factor = Complex::from_polar(T::one(), -self.wave_vector.dot(l));
                worst = worst.max((shifted - factor * u).norm());
            }
        }
        worst
    }
}

/// Regular sample grid `origin + i·axes[0] + j·axes[1] + k·axes[2]` with
/// `0 ≤ i < counts[0]` and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid<T> {
    pub origin: Vec3<T>,
    pub axes: [Vec3<T>; 3],
    pub counts: [usize; 3],
}

impl<T: Real> FieldGrid<T> {
    /// `n` points per edge across one period cell, starting at the origin.
    pub fn over_cell(lattice: &LatticeSpec<T>, n: usize) -> Self {
        let step = T::from_count(n.max(1));
        Self {
            origin: Vec3::zero(),
            axes: lattice.edges.map(|l| l / step),
            counts: [n; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        let [na, nb, nc] = self.counts;
        (0..na).flat_map(move |i| {
            (0..nb).flat_map(move |j| {
                (0..nc).map(move |k| {
                    self.origin
                        + self.axes[0] * T::from_count(i)
                        + self.axes[1] * T::from_count(j)
                        + self.axes[2] * T::from_count(k)
                })
            })
        })
    }
}

/// Writes `x,y,z,re,im` rows for every grid point.
pub fn write_field_grid<T: Real, W: Write>(
    mut w: W,
    solution: &ClusterSolution<T>,
    grid: &FieldGrid<T>,
) -> Result<()> {
    writeln!(w, "x,y,z,re,im")?;
    for p in grid.points() {
        let u = solution.value_at(p);
        writeln!(w, "{},{},{},{},{}", p.x(), p.y(), p.z(), u.re, u.im)?;
    }
    Ok(())
}

pub fn export_field_grid<T: Real>(
    path: impl AsRef<Path>,
    solution: &ClusterSolution<T>,
    grid: &FieldGrid<T>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field_grid(&mut w, solution, grid)?;
    w.flush()?;
    Ok(())
}
