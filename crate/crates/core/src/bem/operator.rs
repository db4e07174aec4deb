//! Collocation matrix of the adjoint double-layer operator
//! `(T β)(ξ) = ∫ (ξ-η)·n_ξ / (4π|ξ-η|³) β(η) dS_η` for piecewise-constant
//! densities on flat panels, collocated at panel centroids.

use rayon::prelude::*;

use crate::bem::mesh::SurfaceMesh;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Dense storage bound on the number of panels.
pub const MAX_DENSE_PANELS: usize = 20_000;

/// Kernel `(ξ-η)·n_ξ / (4π|ξ-η|³)`.
#[inline]
pub fn adjoint_double_layer_kernel<T: Real>(
    target: Vec3<T>,
    normal: Vec3<T>,
    source: Vec3<T>,
) -> T {
    let r = target - source;
    let r2 = r.norm_squared();
    r.dot(&normal) / (T::lit(4.0) * T::PI() * r2 * r2.sqrt())
}

/// Off-diagonal quadrature control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    /// Source panels whose centroid lies within `near_factor` source-panel
    /// diameters of the collocation point are integrated on a refined grid.
    /// Zero disables near-field refinement (pure one-point rule).
    pub near_factor: f64,
    /// Midpoint-subdivision levels for near panels (`4^levels` points).
    pub near_levels: u32,
}

impl Default for AssemblyOptions {
    /// Plain centroid rule on every off-diagonal pair.
    fn default() -> Self {
        Self {
            near_factor: 0.0,
            near_levels: 0,
        }
    }
}

impl AssemblyOptions {
    pub fn one_point() -> Self {
        Self::default()
    }

    /// Refines source panels within two diameters on a 64-point grid.
    pub fn near_field() -> Self {
        Self {
            near_factor: 2.0,
            near_levels: 3,
        }
    }
}

/// Centroids of the `4^levels` congruent sub-triangles of `[a, b, c]`.
fn sub_centroids<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>, levels: u32, out: &mut Vec<Vec3<T>>) {
    if levels == 0 {
        out.push((a + b + c) / T::lit(3.0));
        return;
    }
    let h = T::lit(0.5);
    let ab = (a + b) * h;
    let bc = (b + c) * h;
    let ca = (c + a) * h;
    sub_centroids(a, ab, ca, levels - 1, out);
    sub_centroids(ab, b, bc, levels - 1, out);
    sub_centroids(ca, bc, c, levels - 1, out);
    sub_centroids(ab, bc, ca, levels - 1, out);
}

/// Assembles with [`AssemblyOptions::default`].
pub fn assemble_adjoint_double_layer<T: Real>(mesh: &SurfaceMesh<T>) -> Result<DenseMatrix<T>> {
    assemble_adjoint_double_layer_with(mesh, AssemblyOptions::default())
}

/// Row `i` holds `T_ij ≈ ∫_{panel j} K(c_i, η) dS_η`. Far pairs use the
/// centroid rule `A_j K(c_i, c_j)`. The diagonal is fixed by requiring
/// `Σ_i A_i T_ij = A_j / 2` for every column, the discrete form of
/// `∫_{∂Ω} K(ξ, η) dS_ξ = 1/2` for `η` on a smooth boundary.
pub fn assemble_adjoint_double_layer_with<T: Real>(
    mesh: &SurfaceMesh<T>,
    opts: AssemblyOptions,
) -> Result<DenseMatrix<T>> {
    let n = mesh.panel_count();
    if n > MAX_DENSE_PANELS {
        return Err(Error::MeshTooLarge {
            panels: n,
            limit: MAX_DENSE_PANELS,
        });
    }
    let areas = mesh.panel_areas();
    let centroids = mesh.panel_centroids();
    let normals = mesh.panel_normals();

    let near_factor = T::lit(opts.near_factor);
    let near: Vec<(T, Vec<Vec3<T>>)> = if opts.near_factor > 0.0 {
        (0..n)
            .map(|j| {
                let d = mesh.panel_diameter(j) * near_factor;
                let [a, b, c] = mesh.panel_vertices(j);
                let mut pts = Vec::with_capacity(1 << (2 * opts.near_levels));
                sub_centroids(a, b, c, opts.near_levels, &mut pts);
                (d * d, pts)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut data = vec![T::zero(); n * n];
    data.par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let (ci, ni) = (centroids[i], normals[i]);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let cj = centroids[j];
                row[j] = match near.get(j) {
                    Some((radius2, pts)) if (ci - cj).norm_squared() < *radius2 => {
                        let w = areas[j] / T::from_count(pts.len());
                        pts.iter().fold(T::zero(), |s, p| {
                            s + adjoint_double_layer_kernel(ci, ni, *p)
                        }) * w
                    }
                    _ => areas[j] * adjoint_double_layer_kernel(ci, ni, cj),
                };
            }
        });

    let half = T::lit(0.5);
    let mut column_sums = vec![T::zero(); n];
    for i in 0..n {
        let ai = areas[i];
        for (j, s) in column_sums.iter_mut().enumerate() {
            if j != i {
                *s += ai * data[i * n + j];
            }
        }
    }
    for j in 0..n {
        data[j * n + j] = half - column_sums[j] / areas[j];
    }
    Ok(DenseMatrix::from_raw(n, n, data))
}

/// `max_j |Σ_i A_i T_ij / A_j - 1/2|`.
pub fn column_calibration_defect<T: Real>(mesh: &SurfaceMesh<T>, t: &DenseMatrix<T>) -> T {
    let areas = mesh.panel_areas();
    let n = mesh.panel_count();
    let mut worst = T::zero();
    for j in 0..n {
        let s = (0..n).fold(T::zero(), |s, i| s + areas[i] * t.get(i, j));
        worst = worst.max((s / areas[j] - T::lit(0.5)).abs());
    }
    worst
}
