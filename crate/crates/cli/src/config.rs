//! JSON job description and its resolution into validated core inputs.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use bloch_core::dispersion::{GeometryScale, MediumParams};
use bloch_core::lattice::{reciprocal_basis, LatticeSpec, DEFAULT_EXCEPTIONAL_TOL};
use bloch_core::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub name: String,
    #[serde(default)]
    pub lattice: LatticeConfig,
    pub medium: Option<MediumConfig>,
    pub geometry: Option<GeometryConfig>,
    pub k: Option<[f64; 3]>,
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub regime: RegimeChoice,
    pub cluster: Option<ClusterConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// `"cubic"` for the cell `[-π, π]³`, or explicit edge vectors.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LatticeConfig {
    Named(String),
    Edges { edges: [[f64; 3]; 3] },
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig::Named("cubic".into())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Sphere,
    Mesh,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Inclusion scale; give either this or `volume_fraction`.
    pub a: Option<f64>,
    pub volume_fraction: Option<f64>,
    #[serde(default)]
    pub shape: Shape,
    /// Icosphere level used when a sphere is solved with the BEM.
    #[serde(default = "default_subdivisions")]
    pub subdivisions: usize,
    /// OFF file, relative paths resolved against the config's directory.
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub auto_flip: bool,
    /// Lifts the `f < 0.1` guard.
    #[serde(default)]
    pub force: bool,
}

fn default_subdivisions() -> usize {
    3
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub direction: [f64; 3],
    pub k_min: f64,
    pub k_max: f64,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeChoice {
    #[default]
    FixedK,
    FixedOmega,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    /// Mode written to `fields.csv`, counted in ascending `λ`.
    #[serde(default)]
    pub mode: usize,
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
    pub grid: Option<GridConfig>,
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin: [f64; 3],
    pub axes: [[f64; 3]; 3],
    pub counts: [usize; 3],
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_exceptional_tol")]
    pub exceptional: f64,
}

fn default_exceptional_tol() -> f64 {
    DEFAULT_EXCEPTIONAL_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exceptional: DEFAULT_EXCEPTIONAL_TOL,
        }
    }
}

/// A parsed config together with the raw bytes it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: JobConfig,
    pub raw: Vec<u8>,
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path) -> anyhow::Result<LoadedConfig> {
    let raw = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(raw, base_dir).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config(raw: Vec<u8>, base_dir: PathBuf) -> anyhow::Result<LoadedConfig> {
    let config: JobConfig = serde_json::from_slice(&raw).context("invalid job config")?;
    if config.name.is_empty()
        || !config
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        || config.name.starts_with('.')
    {
        bail!(
            "job name `{}` must be non-empty and use only [A-Za-z0-9._-]",
            config.name
        );
    }
    if !(config.tolerances.exceptional >= 0.0 && config.tolerances.exceptional < 0.5) {
        bail!("tolerances.exceptional must lie in [0, 0.5)");
    }
    Ok(LoadedConfig {
        config,
        raw,
        base_dir,
    })
}

impl JobConfig {
    pub fn lattice_spec(&self) -> anyhow::Result<LatticeSpec<f64>> {
        match &self.lattice {
            LatticeConfig::Named(n) if n == "cubic" => Ok(LatticeSpec::cubic()),
            LatticeConfig::Named(n) => {
                bail!("unknown lattice `{n}` (expected \"cubic\" or {{\"edges\": ...}})")
            }
            LatticeConfig::Edges { edges } => {
                let [a, b, c] = edges.map(Vec3::from_f64);
                reciprocal_basis(a, b, c).context("lattice edges")
            }
        }
    }

    pub fn bloch_vector(&self) -> anyhow::Result<Vec3<f64>> {
        let k = self
            .k
            .ok_or_else(|| anyhow!("config is missing the Bloch vector `k`"))?;
        let k = Vec3::from_f64(k);
        if !k.is_finite() {
            bail!("`k` must be finite");
        }
        Ok(k)
    }

    pub fn medium_params(&self) -> anyhow::Result<MediumParams<f64>> {
        let m = self
            .medium
            .ok_or_else(|| anyhow!("config is missing the `medium` block"))?;
        MediumParams::new(m.rho_plus, m.rho_minus, m.gamma_plus, m.gamma_minus).context("medium")
    }

    pub fn geometry(&self) -> anyhow::Result<&GeometryConfig> {
        self.geometry
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the `geometry` block"))
    }
}

impl GeometryConfig {
    pub fn mesh_path(&self, base_dir: &Path) -> anyhow::Result<PathBuf> {
        let p = self
            .mesh
            .as_ref()
            .ok_or_else(|| anyhow!("geometry.shape is \"mesh\" but geometry.mesh is not set"))?;
        Ok(if p.is_absolute() {
            p.clone()
        } else {
            base_dir.join(p)
        })
    }

    /// Scale and volume fraction for a reference inclusion of volume
    /// `omega_hat_volume`.
    pub fn scale(
        &self,
        omega_hat_volume: f64,
        cell_volume: f64,
    ) -> anyhow::Result<GeometryScale<f64>> {
        let a = match (self.a, self.volume_fraction) {
            (Some(a), None) => a,
            (None, Some(f)) => {
                if !(f >= 0.0) {
                    bail!("geometry.volume_fraction must be non-negative");
                }
                (f * cell_volume / omega_hat_volume).cbrt()
            }
            (Some(_), Some(_)) => bail!("give geometry.a or geometry.volume_fraction, not both"),
            (None, None) => bail!("geometry needs `a` or `volume_fraction`"),
        };
        let scale = if self.force {
            GeometryScale::new_forced(a, omega_hat_volume, cell_volume)
        } else {
            GeometryScale::new(a, omega_hat_volume, cell_volume)
        };
        scale.context("geometry")
    }
}
