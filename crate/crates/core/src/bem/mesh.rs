//! Closed triangulated surfaces.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Highest icosphere refinement level accepted by [`icosphere`].
pub const MAX_SUBDIVISIONS: usize = 6;

/// Closed, consistently and outward oriented triangle mesh of the rescaled
/// inclusion boundary, with cached flat-panel geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceMesh<T> {
    pub label: String,
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    panel_areas: Vec<T>,
    panel_centroids: Vec<Vec3<T>>,
    panel_normals: Vec<Vec3<T>>,
    enclosed_volume: T,
}

/// Summary numbers reported alongside mesh-based results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub label: String,
    pub vertices: usize,
    pub panels: usize,
    pub total_area: f64,
    pub enclosed_volume: f64,
    pub max_panel_diameter: f64,
}

impl<T: Real> SurfaceMesh<T> {
    /// Validates the topology and orientation and computes panel geometry.
    ///
    /// With `auto_flip`, an inward-oriented but otherwise valid surface is
    /// reversed instead of rejected.
    pub fn new(
        label: impl Into<String>,
        vertices: Vec<Vec3<T>>,
        mut faces: Vec<[usize; 3]>,
        auto_flip: bool,
    ) -> Result<Self> {
        if faces.len() < 4 {
            return Err(Error::DegenerateMesh(format!(
                "a closed surface needs at least 4 faces, got {}",
                faces.len()
            )));
        }
        for (f, face) in faces.iter().enumerate() {
            if face.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::DegenerateMesh(format!(
                    "face {f} references a vertex beyond {}",
                    vertices.len()
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::DegenerateMesh(format!("face {f} repeats a vertex")));
            }
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateMesh("non-finite vertex coordinate".into()));
        }
        check_topology(&faces)?;

        let mut mesh = Self::from_parts(label.into(), vertices, faces.clone())?;
        if mesh.enclosed_volume < T::zero() {
            if !auto_flip {
                return Err(Error::InvertedOrientation {
                    volume: mesh.enclosed_volume.to_f64().unwrap_or(f64::NAN),
                });
            }
            for f in &mut faces {
                f.swap(1, 2);
            }
            mesh = Self::from_parts(mesh.label, mesh.vertices, faces)?;
        }
        if !(mesh.enclosed_volume > T::zero()) {
            return Err(Error::DegenerateMesh("enclosed volume is zero".into()));
        }
        Ok(mesh)
    }

    fn from_parts(label: String, vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let half = T::lit(0.5);
        let third = T::one() / T::lit(3.0);
        let mut panel_areas = Vec::with_capacity(faces.len());
        let mut panel_centroids = Vec::with_capacity(faces.len());
        let mut panel_normals = Vec::with_capacity(faces.len());
        for (f, &[a, b, c]) in faces.iter().enumerate() {
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let cross = (pb - pa).cross(&(pc - pa));
            let twice_area = cross.norm();
            if !(twice_area > T::zero()) {
                return Err(Error::DegenerateMesh(format!("face {f} has zero area")));
            }
            panel_areas.push(twice_area * half);
            panel_normals.push(cross / twice_area);
            panel_centroids.push((pa + pb + pc) * third);
        }
        let total_area: T = panel_areas.iter().fold(T::zero(), |s, a| s + *a);
        let closure: Vec3<T> = panel_normals
            .iter()
            .zip(&panel_areas)
            .map(|(n, a)| *n * *a)
            .sum();
        if closure.norm() > T::tol(1e-10, 1e3) * total_area {
            return Err(Error::DegenerateMesh(format!(
                "area-weighted normals do not cancel (|Σ A n| = {})",
                closure.norm()
            )));
        }
        let enclosed_volume = panel_centroids
            .iter()
            .zip(&panel_normals)
            .zip(&panel_areas)
            .fold(T::zero(), |s, ((c, n), a)| s + c.dot(n) * *a)
            * third;
        Ok(Self {
            label,
            vertices,
            faces,
            panel_areas,
            panel_centroids,
            panel_normals,
            enclosed_volume,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn panel_count(&self) -> usize {
        self.faces.len()
    }

    pub fn panel_areas(&self) -> &[T] {
        &self.panel_areas
    }

    pub fn panel_centroids(&self) -> &[Vec3<T>] {
        &self.panel_centroids
    }

    pub fn panel_normals(&self) -> &[Vec3<T>] {
        &self.panel_normals
    }

    /// `|Ω̂|`, the volume enclosed by the surface.
    pub fn enclosed_volume(&self) -> T {
        self.enclosed_volume
    }

    pub fn total_area(&self) -> T {
        self.panel_areas.iter().fold(T::zero(), |s, a| s + *a)
    }

    pub fn panel_vertices(&self, panel: usize) -> [Vec3<T>; 3] {
        self.faces[panel].map(|v| self.vertices[v])
    }

    pub fn panel_diameter(&self, panel: usize) -> T {
        let [a, b, c] = self.panel_vertices(panel);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    /// Largest panel edge, the `h` of convergence estimates.
    pub fn max_panel_diameter(&self) -> T {
        (0..self.panel_count()).fold(T::zero(), |m, p| m.max(self.panel_diameter(p)))
    }

    /// `|Σ_j A_j n_j|`; vanishes for closed surfaces.
    pub fn closure_defect(&self) -> T {
        self.panel_normals
            .iter()
            .zip(&self.panel_areas)
            .map(|(n, a)| *n * *a)
            .sum::<Vec3<T>>()
            .norm()
    }

    /// Stretches the mesh along the coordinate axes.
    pub fn scaled(&self, factors: Vec3<T>) -> Result<Self> {
        if factors.0.iter().any(|f| !(*f > T::zero())) {
            return Err(invalid("factors", "scale factors must be positive"));
        }
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vec3([v[0] * factors[0], v[1] * factors[1], v[2] * factors[2]]))
            .collect();
        Self::from_parts(
            format!(
                "{}*[{},{},{}]",
                self.label, factors[0], factors[1], factors[2]
            ),
            vertices,
            self.faces.clone(),
        )
    }

    /// Same surface with every face reversed. The result is inward oriented
    /// and therefore not a valid `SurfaceMesh` input; intended for writing
    /// test fixtures.
    pub fn reversed_faces(&self) -> Vec<[usize; 3]> {
        self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect()
    }

    pub fn stats(&self) -> MeshStats {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        MeshStats {
            label: self.label.clone(),
            vertices: self.vertices.len(),
            panels: self.faces.len(),
            total_area: f(self.total_area()),
            enclosed_volume: f(self.enclosed_volume),
            max_panel_diameter: f(self.max_panel_diameter()),
        }
    }
}

/// Every directed edge must appear once and its reverse exactly once.
fn check_topology(faces: &[[usize; 3]]) -> Result<()> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        for e in [(a, b), (b, c), (c, a)] {
            if directed.insert(e, f).is_some() {
                return Err(Error::InconsistentOrientation(e.0, e.1));
            }
        }
    }
    for &[a, b, c] in faces {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            if !directed.contains_key(&(v, u)) {
                return Err(Error::OpenSurface(u.min(v), u.max(v)));
            }
        }
    }
    Ok(())
}

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

/// Geodesic sphere: a regular icosahedron whose faces are split into four
/// `subdivisions` times, with new vertices projected onto the sphere.
pub fn icosphere<T: Real>(subdivisions: usize, radius: T) -> Result<SurfaceMesh<T>> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::SubdivisionTooLarge(subdivisions));
    }
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(invalid("radius", "must be positive"));
    }
    let phi = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
    let (o, z) = (T::one(), T::zero());
    let raw = [
        (-o, phi, z),
        (o, phi, z),
        (-o, -phi, z),
        (o, -phi, z),
        (z, -o, phi),
        (z, o, phi),
        (z, -o, -phi),
        (z, o, -phi),
        (phi, z, -o),
        (phi, z, o),
        (-phi, z, -o),
        (-phi, z, o),
    ];
    let project = |v: Vec3<T>| v / v.norm();
    let mut vertices: Vec<Vec3<T>> = raw
        .iter()
        .map(|&(x, y, z)| project(Vec3::new(x, y, z)))
        .collect();
    let mut faces = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(project((verts[a] + verts[b]) * T::lit(0.5)));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    SurfaceMesh::new(
        format!("icosphere(s={subdivisions},r={radius})"),
        vertices,
        faces,
        false,
    )
}

/// Axis-aligned ellipsoid obtained by stretching a unit icosphere.
pub fn ellipsoid<T: Real>(subdivisions: usize, semi_axes: Vec3<T>) -> Result<SurfaceMesh<T>> {
    let mut mesh = icosphere(subdivisions, T::one())?.scaled(semi_axes)?;
    mesh.label = format!(
        "ellipsoid(s={subdivisions},axes=[{},{},{}])",
        semi_axes[0], semi_axes[1], semi_axes[2]
    );
    Ok(mesh)
}
