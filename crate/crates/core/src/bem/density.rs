//! Density of the exterior transmission problem and the polarizability
//! tensor derived from its first moment.
//!
//! For incidence along `d̂` the normal-derivative jump of the layer potential
//! is `-i|k| β`, where `β` solves `(½I - κT) β = κ (n·d̂)` with
//! `κ = (σ-1)/(σ+1)`. The dipole moment `p = -i|k| ∫ ξ β dS` gives the
//! polarizability `χ = i p / (|k| |Ω̂|) = X d̂` with the real tensor
//! `X_ab = (1/|Ω̂|) ∫ ξ_a β^(b) dS`.

use serde::{Deserialize, Serialize};

use crate::bem::mesh::SurfaceMesh;
use crate::bem::operator::{assemble_adjoint_double_layer_with, AssemblyOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::scalar::Real;
use crate::vec3::{mat3_mul_vec, Mat3, Vec3};

/// Accepted deviation of a direction from unit length.
pub const UNIT_TOL: f64 = 1e-12;

pub(crate) fn check_unit<T: Real>(d: &Vec3<T>) -> Result<()> {
    let norm = d.norm();
    if !((norm - T::one()).abs() <= T::tol(UNIT_TOL, 16.0)) {
        return Err(Error::NonUnitDirection {
            norm: norm.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn check_sigma<T: Real>(sigma: T) -> Result<T> {
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(invalid(
            "sigma",
            format!("density ratio must be positive, got {sigma}"),
        ));
    }
    Ok((sigma - T::one()) / (sigma + T::one()))
}

/// Piecewise-constant density `β` for one incidence direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedDensity<T> {
    pub values: Vec<T>,
    pub direction: Vec3<T>,
    pub sigma: T,
    /// `‖(½I - κT)β - κ(n·d̂)‖ / ‖κ(n·d̂)‖`.
    pub relative_residual: T,
}

impl<T: Real> ReducedDensity<T> {
    /// `|Σ β_j A_j| / Σ |β_j| A_j`, zero for a vanishing density.
    pub fn zero_mean_defect(&self, mesh: &SurfaceMesh<T>) -> T {
        let (mut s, mut abs) = (T::zero(), T::zero());
        for (b, a) in self.values.iter().zip(mesh.panel_areas()) {
            s += *b * *a;
            abs += b.abs() * *a;
        }
        if abs == T::zero() {
            T::zero()
        } else {
            s.abs() / abs
        }
    }

    /// `∫ ξ β dS`, the real part of `i p / |k|`.
    pub fn first_moment(&self, mesh: &SurfaceMesh<T>) -> Vec3<T> {
        mesh.panel_centroids()
            .iter()
            .zip(mesh.panel_areas())
            .zip(&self.values)
            .map(|((c, a), b)| *c * (*a * *b))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TensorSource {
    AnalyticSphere,
    Bem { mesh: String, panels: usize },
}

/// Real symmetric tensor `X` with `χ = X d̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizabilityTensor<T> {
    pub matrix: Mat3<T>,
    pub sigma: T,
    pub source: TensorSource,
    /// Accepted asymmetry `max |X_ab - X_ba|`: roundoff for the analytic
    /// sphere, `h² max(1, max|X|)` for boundary-element tensors.
    pub tolerance: T,
}

impl<T: Real> PolarizabilityTensor<T> {
    /// `X = 3(σ-1)/(σ+2) I` for a ball of any radius.
    pub fn analytic_sphere(sigma: T) -> Result<Self> {
        check_sigma(sigma)?;
        let x = T::lit(3.0) * (sigma - T::one()) / (sigma + T::lit(2.0));
        let z = T::zero();
        Ok(Self {
            matrix: [[x, z, z], [z, x, z], [z, z, x]],
            sigma,
            source: TensorSource::AnalyticSphere,
            tolerance: T::tol(1e-12, 16.0),
        })
    }

    /// Tensor from explicit entries (e.g. a stored result).
    pub fn from_matrix(matrix: Mat3<T>, sigma: T, source: TensorSource, tolerance: T) -> Self {
        Self {
            matrix,
            sigma,
            source,
            tolerance,
        }
    }

    pub fn symmetry_defect(&self) -> T {
        let m = &self.matrix;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_defect() <= self.tolerance
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn principal_values(&self) -> [T; 3] {
        let m = &self.matrix;
        let half = T::lit(0.5);
        let sym = DenseMatrix::from_fn(3, 3, |i, j| (m[i][j] + m[j][i]) * half);
        let e = symmetric_eigen(&sym);
        [e.values[0], e.values[1], e.values[2]]
    }

    pub fn frobenius_distance(&self, other: &Mat3<T>) -> T {
        self.matrix
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .fold(T::zero(), |s, (a, b)| s + (*a - *b) * (*a - *b))
            .sqrt()
    }

    /// Polarizability vector `χ = X d̂` for a unit incidence direction.
    pub fn chi_for_direction(&self, direction: Vec3<T>) -> Result<Vec3<T>> {
        check_unit(&direction)?;
        Ok(mat3_mul_vec(&self.matrix, &direction))
    }
}

/// Free-function form of [`PolarizabilityTensor::chi_for_direction`].
pub fn chi_for_direction<T: Real>(
    x: &PolarizabilityTensor<T>,
    direction: Vec3<T>,
) -> Result<Vec3<T>> {
    x.chi_for_direction(direction)
}

/// Assembled operator for one mesh, reusable across contrasts and
/// directions.
pub struct TransmissionSolver<'m, T> {
    mesh: &'m SurfaceMesh<T>,
    operator: DenseMatrix<T>,
}

impl<'m, T: Real> TransmissionSolver<'m, T> {
    pub fn new(mesh: &'m SurfaceMesh<T>) -> Result<Self> {
        Self::with_options(mesh, AssemblyOptions::default())
    }

    pub fn with_options(mesh: &'m SurfaceMesh<T>, opts: AssemblyOptions) -> Result<Self> {
        let operator = assemble_adjoint_double_layer_with(mesh, opts)?;
        Ok(Self { mesh, operator })
    }

    pub fn mesh(&self) -> &SurfaceMesh<T> {
        self.mesh
    }

    pub fn operator(&self) -> &DenseMatrix<T> {
        &self.operator
    }

    /// Solves for every direction with a single factorization.
    pub fn solve(&self, sigma: T, directions: &[Vec3<T>]) -> Result<Vec<ReducedDensity<T>>> {
        let kappa = check_sigma(sigma)?;
        for d in directions {
            check_unit(d)?;
        }
        let n = self.mesh.panel_count();
        let normals = self.mesh.panel_normals();
        let rhs: Vec<Vec<T>> = directions
            .iter()
            .map(|d| normals.iter().map(|nv| kappa * nv.dot(d)).collect())
            .collect();

        if kappa == T::zero() {
            return Ok(directions
                .iter()
                .map(|d| ReducedDensity {
                    values: vec![T::zero(); n],
                    direction: *d,
                    sigma,
                    relative_residual: T::zero(),
                })
                .collect());
        }

        let half = T::lit(0.5);
        let t = &self.operator;
        let system = DenseMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { half } else { T::zero() };
            diag - kappa * t.get(i, j)
        });
        let solutions = system.solve_columns(&rhs).ok_or(Error::SingularSystem {
            residual: f64::INFINITY,
        })?;

        let limit = T::tol(1e-10, 1e3);
        let mut out = Vec::with_capacity(directions.len());
        for ((beta, b), d) in solutions.into_iter().zip(&rhs).zip(directions) {
            let ab = system.mul_vec(&beta);
            let res = ab
                .iter()
                .zip(b)
                .fold(T::zero(), |s, (x, y)| s + (*x - *y) * (*x - *y))
                .sqrt();
            let bn = b.iter().fold(T::zero(), |s, y| s + *y * *y).sqrt();
            let rel = if bn > T::zero() { res / bn } else { res };
            if !(rel <= limit) {
                return Err(Error::SingularSystem {
                    residual: rel.to_f64().unwrap_or(f64::NAN),
                });
            }
            out.push(ReducedDensity {
                values: beta,
                direction: *d,
                sigma,
                relative_residual: rel,
            });
        }
        Ok(out)
    }

    /// Tensor from the three coordinate-axis densities.
    pub fn polarizability(&self, sigma: T) -> Result<PolarizabilityTensor<T>> {
        let axes = [Vec3::unit(0), Vec3::unit(1), Vec3::unit(2)];
        let densities = self.solve(sigma, &axes)?;
        let volume = self.mesh.enclosed_volume();
        let mut matrix = [[T::zero(); 3]; 3];
        for (b, density) in densities.iter().enumerate() {
            let moment = density.first_moment(self.mesh) / volume;
            for a in 0..3 {
                matrix[a][b] = moment[a];
            }
        }
        let h = self.mesh.max_panel_diameter();
        let scale = matrix
            .iter()
            .flatten()
            .fold(T::one(), |m, v| m.max(v.abs()));
        Ok(PolarizabilityTensor {
            matrix,
            sigma,
            source: TensorSource::Bem {
                mesh: self.mesh.label.clone(),
                panels: self.mesh.panel_count(),
            },
            tolerance: h * h * scale,
        })
    }
}

/// Density for one direction (assembles and factors from scratch).
pub fn solve_reduced_density<T: Real>(
    mesh: &SurfaceMesh<T>,
    sigma: T,
    direction: Vec3<T>,
) -> Result<ReducedDensity<T>> {
    Ok(TransmissionSolver::new(mesh)?
        .solve(sigma, &[direction])?
        .remove(0))
}

/// Boundary-element polarizability tensor of the mesh.
pub fn polarizability_tensor<T: Real>(
    mesh: &SurfaceMesh<T>,
    sigma: T,
) -> Result<PolarizabilityTensor<T>> {
    TransmissionSolver::new(mesh)?.polarizability(sigma)
}
