//! The `exceptional`, `polarizability`, `dispersion` and `cluster` commands.
//! Each one turns a validated config into a [`JobOutput`] without touching
//! the disk, so the same code backs the binary and the tests.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use bloch_core::bem::{icosphere, load_mesh, MeshStats, PolarizabilityTensor, TransmissionSolver};
use bloch_core::cluster::{build_clusters, FieldGrid};
use bloch_core::dispersion::{
    assemble_mode_matrix, dispersion_scan, eigen_modes, frequencies_fixed_k,
    wavevectors_fixed_omega, DispersionResult, GeometryScale, ModeMatrix, ScanSetup,
};
use bloch_core::lattice::{find_exceptional_set, plane_distances, ExceptionalSet, LatticeSpec};
use bloch_core::Vec3;
use num_complex::Complex;
use serde_json::json;

use crate::config::{JobConfig, RegimeChoice, Shape};
use crate::output::{cell, JobOutput, Table};

/// Grid resolution per cell edge when a cluster job gives no grid.
pub const DEFAULT_GRID_POINTS: usize = 8;

/// Number of Bragg planes listed in an exceptional report.
const REPORTED_PLANES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Exceptional,
    Polarizability,
    Dispersion,
    Cluster,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exceptional => "exceptional",
            Command::Polarizability => "polarizability",
            Command::Dispersion => "dispersion",
            Command::Cluster => "cluster",
        }
    }
}

pub struct Job<'a> {
    pub config: &'a JobConfig,
    pub base_dir: &'a Path,
    pub force_bem: bool,
}

pub fn run(cmd: Command, job: &Job<'_>) -> anyhow::Result<JobOutput> {
    match cmd {
        Command::Exceptional => cmd_exceptional(job),
        Command::Polarizability => cmd_polarizability(job),
        Command::Dispersion => cmd_dispersion(job),
        Command::Cluster => cmd_cluster(job),
    }
}

fn exceptional_set(
    job: &Job<'_>,
    lattice: &LatticeSpec<f64>,
) -> anyhow::Result<ExceptionalSet<f64>> {
    let k = job.config.bloch_vector()?;
    find_exceptional_set(k, lattice, job.config.tolerances.exceptional).context("classifying k")
}

fn members_json(set: &ExceptionalSet<f64>) -> serde_json::Value {
    set.members
        .iter()
        .map(|m| json!({ "index": m.index, "vector": m.vector }))
        .collect()
}

pub fn cmd_exceptional(job: &Job<'_>) -> anyhow::Result<JobOutput> {
    let lattice = job.config.lattice_spec()?;
    let set = exceptional_set(job, &lattice)?;
    let reach = lattice
        .reciprocal
        .iter()
        .map(|b| b.norm())
        .fold(0.0, f64::max);
    let mut planes = plane_distances(set.k, &lattice, 2.0 * set.k.norm() + reach)?;
    planes.truncate(REPORTED_PLANES);

    let mut data = Table::new(["m1", "m2", "m3", "mx", "my", "mz"]);
    for m in &set.members {
        let mut row: Vec<String> = m.index.iter().map(|i| i.to_string()).collect();
        row.extend(m.vector.0.iter().map(|v| cell(*v)));
        data.push(row);
    }
    let summary = format!(
        "k = {:?}: order {} ({})\n",
        set.k.0,
        set.order(),
        set.indices()
            .iter()
            .map(|i| format!("{i:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(JobOutput {
        report: json!({
            "k": set.k,
            "tol": set.tol,
            "order": set.order(),
            "exceptional": set.is_exceptional(),
            "members": members_json(&set),
            "nearest_planes": planes,
        }),
        data: Some(data),
        fields: None,
        summary,
    })
}

/// Reference inclusion with its polarizability.
pub struct Inclusion {
    pub tensor: PolarizabilityTensor<f64>,
    pub omega_hat_volume: f64,
    pub method: &'static str,
    pub mesh: Option<MeshStats>,
}

pub fn resolve_inclusion(job: &Job<'_>, sigma: f64) -> anyhow::Result<Inclusion> {
    let geo = job.config.geometry()?;
    match geo.shape {
        Shape::Sphere if !job.force_bem => Ok(Inclusion {
            tensor: PolarizabilityTensor::analytic_sphere(sigma)?,
            omega_hat_volume: 4.0 * PI / 3.0,
            method: "analytic",
            mesh: None,
        }),
        Shape::Sphere => {
            let mesh = icosphere::<f64>(geo.subdivisions, 1.0).context("building icosphere")?;
            let tensor = TransmissionSolver::new(&mesh)?.polarizability(sigma)?;
            Ok(Inclusion {
                tensor,
                omega_hat_volume: 4.0 * PI / 3.0,
                method: "bem",
                mesh: Some(mesh.stats()),
            })
        }
        Shape::Mesh => {
            let path = geo.mesh_path(job.base_dir)?;
            let mesh = load_mesh::<f64>(&path, geo.auto_flip)
                .with_context(|| format!("loading mesh {}", path.display()))?;
            let tensor = TransmissionSolver::new(&mesh)?
                .polarizability(sigma)
                .with_context(|| format!("solving on {}", path.display()))?;
            Ok(Inclusion {
                tensor,
                omega_hat_volume: mesh.enclosed_volume(),
                method: "bem",
                mesh: Some(mesh.stats()),
            })
        }
    }
}

fn tensor_json(inc: &Inclusion) -> serde_json::Value {
    let x = &inc.tensor;
    json!({
        "method": inc.method,
        "sigma": x.sigma,
        "matrix": x.matrix,
        "principal_values": x.principal_values(),
        "symmetry_defect": x.symmetry_defect(),
        "tolerance": x.tolerance,
        "symmetric": x.is_symmetric(),
        "mesh": inc.mesh,
    })
}

pub fn cmd_polarizability(job: &Job<'_>) -> anyhow::Result<JobOutput> {
    let medium = job.config.medium_params()?;
    let sigma = medium.sigma();
    let inc = resolve_inclusion(job, sigma)?;
    let mut report = tensor_json(&inc);
    let mut summary = format!("sigma = {sigma}, method = {}\n", inc.method);
    for row in &inc.tensor.matrix {
        let _ = writeln!(
            summary,
            "  [{:>12.6} {:>12.6} {:>12.6}]",
            row[0], row[1], row[2]
        );
    }
    if job.config.geometry()?.shape == Shape::Sphere {
        let exact = PolarizabilityTensor::analytic_sphere(sigma)?;
        let rel = inc.tensor.frobenius_distance(&exact.matrix)
            / exact
                .frobenius_distance(&[[0.0; 3]; 3])
                .max(f64::MIN_POSITIVE);
        report["analytic_diagonal"] = json!(exact.matrix[0][0]);
        report["relative_error"] = json!(rel);
        let _ = writeln!(summary, "relative error vs analytic sphere: {rel:e}");
    }
    Ok(JobOutput {
        report,
        data: None,
        fields: None,
        summary,
    })
}

struct Prepared {
    lattice: LatticeSpec<f64>,
    medium: bloch_core::dispersion::MediumParams<f64>,
    inclusion: Inclusion,
    geo: GeometryScale<f64>,
}

fn prepare(job: &Job<'_>) -> anyhow::Result<Prepared> {
    let lattice = job.config.lattice_spec()?;
    let medium = job.config.medium_params()?;
    let inclusion = resolve_inclusion(job, medium.sigma())?;
    let geo = job
        .config
        .geometry()?
        .scale(inclusion.omega_hat_volume, lattice.cell_volume)?;
    Ok(Prepared {
        lattice,
        medium,
        inclusion,
        geo,
    })
}

fn fixed_point(
    job: &Job<'_>,
    p: &Prepared,
) -> anyhow::Result<(ExceptionalSet<f64>, ModeMatrix<f64>, DispersionResult<f64>)> {
    let set = exceptional_set(job, &p.lattice)?;
    let mm = assemble_mode_matrix(&set, &p.inclusion.tensor, &p.medium)?;
    let modes = eigen_modes(&mm);
    let res = match job.config.regime {
        RegimeChoice::FixedK => frequencies_fixed_k(&set, &modes, &p.medium, &p.geo)?,
        RegimeChoice::FixedOmega => wavevectors_fixed_omega(&set, &modes, &p.medium, &p.geo)?,
    };
    Ok((set, mm, res))
}

fn geometry_json(p: &Prepared) -> serde_json::Value {
    json!({
        "a": p.geo.a,
        "omega_hat_volume": p.geo.omega_hat_volume,
        "cell_volume": p.geo.cell_volume,
        "volume_fraction": p.geo.f,
        "forced": p.geo.forced,
    })
}

pub fn cmd_dispersion(job: &Job<'_>) -> anyhow::Result<JobOutput> {
    let p = prepare(job)?;
    if let Some(scan) = job.config.scan {
        if job.config.k.is_some() {
            bail!("give either `k` or `scan` for a dispersion job, not both");
        }
        return scan_job(job, &p, scan);
    }
    let (set, mm, res) = fixed_point(job, &p)?;
    let n = set.order();
    let mut columns: Vec<String> = ["mode", "lambda", "epsilon", "omega", "k_x", "k_y", "k_z"]
        .map(String::from)
        .to_vec();
    columns.extend((1..=n).map(|j| format!("mu_{j}")));
    let mut data = Table::new(columns);
    let mut summary = format!(
        "k = {:?}, order {}, regime {:?}, f = {}\n",
        set.k.0, n, res.regime, p.geo.f
    );
    for (s, m) in res.modes.iter().enumerate() {
        let mut row = vec![
            (s + 1).to_string(),
            cell(m.lambda),
            cell(m.epsilon),
            cell(m.omega),
        ];
        row.extend(m.wave_vector.0.iter().map(|v| cell(*v)));
        row.extend(m.coefficients.iter().map(|v| cell(*v)));
        data.push(row);
        let _ = writeln!(
            summary,
            "  mode {}: lambda = {:.9}, omega = {:.9}, |k| = {:.9}",
            s + 1,
            m.lambda,
            m.omega,
            m.wave_vector.norm()
        );
    }
    if res.degenerate {
        summary.push_str("  warning: eigenvalues are degenerate; modes are not uniquely defined\n");
    }
    let report = json!({
        "k": set.k,
        "order": n,
        "members": members_json(&set),
        "directions": mm.directions,
        "medium": {
            "sigma": p.medium.sigma(),
            "kappa": p.medium.kappa(),
            "g": p.medium.g(),
            "c_plus": p.medium.c_plus(),
        },
        "geometry": geometry_json(&p),
        "polarizability": tensor_json(&p.inclusion),
        "m0": mm.m0.to_rows(),
        "m0_asymmetry": mm.asymmetry,
        "form_matrix_scale": p.geo.cell_volume * set.k.norm_squared() * p.geo.f,
        "dispersion": res,
    });
    Ok(JobOutput {
        report,
        data: Some(data),
        fields: None,
        summary,
    })
}

fn scan_job(
    job: &Job<'_>,
    p: &Prepared,
    scan: crate::config::ScanConfig,
) -> anyhow::Result<JobOutput> {
    let setup = ScanSetup {
        medium: &p.medium,
        geo: &p.geo,
        lattice: &p.lattice,
        polarizability: &p.inclusion.tensor,
        tol: job.config.tolerances.exceptional,
    };
    let result = dispersion_scan(
        Vec3::from_f64(scan.direction),
        (scan.k_min, scan.k_max),
        scan.steps,
        setup,
    )
    .context("dispersion scan")?;
    let width = result.max_order();
    let mut columns = vec!["abs_k".to_string(), "order".to_string()];
    columns.extend((1..=width).map(|s| format!("omega_{s}")));
    let mut data = Table::new(columns);
    for row in &result.rows {
        let mut cells = vec![cell(row.abs_k), row.order.to_string()];
        cells.extend(row.omegas.iter().map(|w| cell(*w)));
        data.push(cells);
    }
    let marked: Vec<f64> = result
        .rows
        .iter()
        .filter(|r| r.exceptional)
        .map(|r| r.abs_k)
        .collect();
    let summary = format!(
        "{} samples on |k| in [{}, {}], exceptional at |k| = {:?}\n",
        result.rows.len(),
        scan.k_min,
        scan.k_max,
        marked
    );
    Ok(JobOutput {
        report: json!({
            "geometry": geometry_json(p),
            "polarizability": tensor_json(&p.inclusion),
            "scan": result,
        }),
        data: Some(data),
        fields: None,
        summary,
    })
}

pub fn cmd_cluster(job: &Job<'_>) -> anyhow::Result<JobOutput> {
    let p = prepare(job)?;
    let (set, _, res) = fixed_point(job, &p)?;
    let opts = job.config.cluster.clone();
    let mode = opts.as_ref().map_or(0, |c| c.mode);
    let [re, im] = opts.as_ref().map_or([1.0, 0.0], |c| c.amplitude);
    let grid = match opts.as_ref().and_then(|c| c.grid.clone()) {
        Some(g) => {
            if g.counts.contains(&0) {
                bail!("cluster.grid.counts must be at least 1 per axis");
            }
            FieldGrid {
                origin: Vec3::from_f64(g.origin),
                axes: g.axes.map(Vec3::from_f64),
                counts: g.counts,
            }
        }
        None => FieldGrid::over_cell(&p.lattice, DEFAULT_GRID_POINTS),
    };
    let clusters: Vec<_> = build_clusters(&res, &set)?
        .into_iter()
        .map(|c| c.with_amplitude(Complex::new(re, im)))
        .collect();
    let Some(chosen) = clusters.get(mode) else {
        bail!(
            "cluster.mode = {mode} but only {} modes exist",
            clusters.len()
        );
    };
    let points: Vec<Vec3<f64>> = grid.points().collect();
    let residuals: Vec<f64> = clusters
        .iter()
        .map(|c| c.bloch_residual(&p.lattice, &points))
        .collect();

    let mut fields = Table::new(["x", "y", "z", "re", "im"]);
    for (x, u) in points.iter().zip(chosen.evaluate(&points)) {
        let mut row: Vec<String> = x.0.iter().map(|v| cell(*v)).collect();
        row.push(cell(u.re));
        row.push(cell(u.im));
        fields.push(row);
    }
    let summary = format!(
        "{} clusters at k = {:?}; wrote mode {} on {} grid points (max Bloch residual {:e})\n",
        clusters.len(),
        set.k.0,
        mode,
        points.len(),
        residuals.iter().cloned().fold(0.0, f64::max)
    );
    Ok(JobOutput {
        report: json!({
            "k": set.k,
            "members": members_json(&set),
            "geometry": geometry_json(&p),
            "clusters": clusters,
            "bloch_residuals": residuals,
            "field_mode": mode,
            "grid": grid,
        }),
        data: None,
        fields: Some(fields),
        summary,
    })
}
