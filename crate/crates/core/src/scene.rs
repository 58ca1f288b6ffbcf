//! JSON scene, material and light-list files.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envmap::{EstimateConfig, InverseTraceOptions, RlOptions, SATURATION_THRESHOLD};
use crate::equirect::{MapSize, DEFAULT_HEIGHT};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3};
use crate::image::EnvironmentMap;
use crate::lights::LightEstimate;
use crate::pfm::{probe_from_normals, read_env_map, read_pfm};
use crate::probe::{Material, Probe, RegionMaterial};

/// Current version of every JSON file format.
pub const FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides the default seed of random scenes.
pub const SEED_VAR: &str = "LUMIPROBE_SEED";

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Scene(format!("unsupported version {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Scene(e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn default_view() -> Direction {
    Direction::TOWARD_VIEWER
}

fn default_resolution() -> usize {
    128
}

fn default_height() -> usize {
    DEFAULT_HEIGHT
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub version: u32,
    pub environment: EnvironmentSource,
    pub probes: Vec<ProbeSpec>,
    #[serde(default = "default_view")]
    pub view: Direction,
    /// Probe image side in pixels.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Sensor clip level for the LDR composite; no clipping when absent.
    #[serde(default)]
    pub clip_level: Option<f64>,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub acceptance: Option<AcceptanceSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSource {
    /// PFM file, relative to the scene file.
    File(PathBuf),
    Procedural(ProceduralEnv),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProceduralEnv {
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default)]
    pub ambient: [f64; 3],
    #[serde(default)]
    pub blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub point_lights: Vec<PointLightSpec>,
    #[serde(default)]
    pub random_blobs: Option<RandomBlobs>,
}

/// Gaussian in angle around `direction`: `radiance · exp(-θ²/2σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub direction: Direction,
    pub sigma_deg: f64,
    pub radiance: [f64; 3],
}

/// Sets the single pixel containing `direction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointLightSpec {
    pub direction: Direction,
    pub radiance: [f64; 3],
}

/// White blobs at uniformly random directions within `max_angle_deg` of
/// `axis`, with peak radiance uniform in `[min_radiance, max_radiance]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBlobs {
    pub count: usize,
    pub sigma_deg: f64,
    pub min_radiance: f64,
    pub max_radiance: f64,
    #[serde(default = "default_view")]
    pub axis: Direction,
    #[serde(default = "RandomBlobs::full_sphere")]
    pub max_angle_deg: f64,
}

impl RandomBlobs {
    fn full_sphere() -> f64 {
        180.0
    }

    pub fn sample(&self, seed: u64) -> Result<Vec<BlobSpec>> {
        if !(self.min_radiance <= self.max_radiance) {
            return Err(Error::Scene("random blobs: min_radiance exceeds max_radiance".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cos_max = self.max_angle_deg.to_radians().cos();
        let (right, up) = crate::geometry::frame(self.axis);
        (0..self.count)
            .map(|_| {
                let z: f64 = rng.random_range(cos_max..=1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                let s = (1.0 - z * z).max(0.0).sqrt();
                let v = self.axis.vec() * z + right * (s * phi.cos()) + up * (s * phi.sin());
                let r = if self.max_radiance > self.min_radiance {
                    rng.random_range(self.min_radiance..self.max_radiance)
                } else {
                    self.min_radiance
                };
                Ok(BlobSpec {
                    direction: Direction::new(v)?,
                    sigma_deg: self.sigma_deg,
                    radiance: [r; 3],
                })
            })
            .collect()
    }
}

impl ProceduralEnv {
    pub fn build(&self, seed: u64) -> Result<EnvironmentMap> {
        let size = MapSize::from_height(self.height)?;
        let mut blobs = self.blobs.clone();
        if let Some(r) = &self.random_blobs {
            blobs.extend(r.sample(seed)?);
        }
        let mut env = EnvironmentMap::new(size);
        for p in &mut env.pixels {
            *p = self.ambient;
        }
        let dirs = size.center_directions();
        for b in &blobs {
            if !(b.sigma_deg > 0.0) {
                return Err(Error::Scene("blob width must be positive".into()));
            }
            let sigma = b.sigma_deg.to_radians();
            // Beyond 6σ the Gaussian is below 1.6e-8 of its peak.
            for k in size.pixels_near(b.direction, 6.0 * sigma) {
                let t = dirs[k].angle_to(b.direction);
                let g = (-t * t / (2.0 * sigma * sigma)).exp();
                for c in 0..3 {
                    env.pixels[k][c] += b.radiance[c] * g;
                }
            }
        }
        for l in &self.point_lights {
            let k = size.index_of(l.direction);
            for c in 0..3 {
                env.pixels[k][c] += l.radiance[c];
            }
        }
        EnvironmentMap::from_pixels(size, env.pixels)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeShape {
    #[default]
    Sphere,
    NormalMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default)]
    pub kind: ProbeShape,
    #[serde(default)]
    pub position: Vec3,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub material: Material,
    /// 3-channel PFM, zero outside the silhouette (normal-map probes).
    #[serde(default)]
    pub normals: Option<PathBuf>,
    /// 1-channel PFM of integer region ids.
    #[serde(default)]
    pub regions: Option<PathBuf>,
}

impl ProbeSpec {
    pub fn build(&self, resolution: usize, view: Direction, base: &Path) -> Result<Probe> {
        self.material.validate()?;
        let mut probe = match self.kind {
            ProbeShape::Sphere => Probe::sphere(resolution, self.position, self.radius, view)?,
            ProbeShape::NormalMap => {
                let path = self
                    .normals
                    .as_ref()
                    .ok_or_else(|| Error::Scene("normal-map probe without a normals file".into()))?;
                let normals = read_pfm(&resolve(base, path))?;
                probe_from_normals(&normals, None, self.position)?
            }
        };
        if let Some(r) = &self.regions {
            let ids = read_pfm(&resolve(base, r))?;
            let normals = crate::pfm::normals_to_pfm(&probe);
            probe = probe_from_normals(&normals, Some(&ids), self.position)?;
            probe.kind = match self.kind {
                ProbeShape::Sphere => crate::probe::ProbeKind::Sphere {
                    center: self.position,
                    radius: self.radius,
                },
                ProbeShape::NormalMap => crate::probe::ProbeKind::NormalMap,
            };
        }
        Ok(probe)
    }
}

/// Estimation settings carried by scene and material files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSpec {
    /// Defaults to the ground-truth map height, or 64 without one.
    pub map_height: Option<usize>,
    pub rl_iterations: usize,
    pub rl_tolerance: f64,
    pub neighbors: usize,
    pub coverage_factor: f64,
    pub recolor: bool,
    pub saturation_threshold: f64,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        let c = EstimateConfig::default();
        Self {
            map_height: None,
            rl_iterations: c.rl.iterations,
            rl_tolerance: c.rl.tolerance,
            neighbors: c.inverse.neighbors,
            coverage_factor: c.inverse.coverage_factor,
            recolor: true,
            saturation_threshold: SATURATION_THRESHOLD,
        }
    }
}

impl EstimateSpec {
    pub fn config(&self, view: Direction, fallback_height: usize) -> EstimateConfig {
        EstimateConfig {
            map_height: self.map_height.unwrap_or(fallback_height),
            view,
            inverse: InverseTraceOptions {
                neighbors: self.neighbors,
                coverage_factor: self.coverage_factor,
            },
            rl: RlOptions {
                iterations: self.rl_iterations,
                tolerance: self.rl_tolerance,
                ..RlOptions::default()
            },
            recolor: self.recolor,
            saturation_threshold: self.saturation_threshold,
        }
    }
}

/// Thresholds checked by the round-trip harness; absent entries are not
/// checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSpec {
    #[serde(default)]
    pub max_rmse_diffuse: Option<f64>,
    #[serde(default)]
    pub max_rmse_glossy: Option<f64>,
    #[serde(default)]
    pub min_coverage: Option<f64>,
    /// Bound on covered-region RMSE of the final map divided by the RMS of
    /// the ground truth over the same region.
    #[serde(default)]
    pub max_env_relative_rmse: Option<f64>,
    /// Require the deconvolved map to relight better than the traced one.
    #[serde(default)]
    pub require_deconvolution_gain: bool,
}

impl SceneDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = parse_json(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        if self.probes.is_empty() {
            return Err(Error::Scene("at least one probe is required".into()));
        }
        if self.resolution == 0 {
            return Err(Error::Scene("resolution must be positive".into()));
        }
        if let EnvironmentSource::Procedural(p) = &self.environment {
            if p.height == 0 {
                return Err(Error::Scene("environment height must be positive".into()));
            }
        }
        if let Some(c) = self.clip_level {
            if !(c > 0.0) {
                return Err(Error::Scene("clip level must be positive".into()));
            }
        }
        Ok(())
    }

    /// Seed for random scene content: `env_seed` (normally read from
    /// [`SEED_VAR`]) when set, else the file's own seed, else zero.
    pub fn seed(&self, env_seed: Option<u64>) -> u64 {
        env_seed.or(self.seed).unwrap_or(0)
    }

    /// Ground-truth map; `base` resolves relative paths.
    pub fn environment_map(&self, base: &Path, seed: u64) -> Result<EnvironmentMap> {
        match &self.environment {
            EnvironmentSource::File(p) => read_env_map(&resolve(base, p)),
            EnvironmentSource::Procedural(p) => p.build(seed),
        }
    }

    pub fn build_probes(&self, base: &Path) -> Result<Vec<Probe>> {
        self.probes
            .iter()
            .map(|p| p.build(self.resolution, self.view, base))
            .collect()
    }
}

/// Reads [`SEED_VAR`]; unset or unparsable values give `None`.
pub fn seed_from_env() -> Option<u64> {
    std::env::var(SEED_VAR).ok()?.trim().parse().ok()
}

/// Probe material file for the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub version: u32,
    #[serde(default = "MaterialFile::default_albedo")]
    pub albedo: [f64; 3],
    pub regions: Vec<RegionMaterial>,
    #[serde(default)]
    pub estimate: EstimateSpec,
}

impl MaterialFile {
    fn default_albedo() -> [f64; 3] {
        Material::default().albedo
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = parse_json(text)?;
        check_version(m.version)?;
        m.material().validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn material(&self) -> Material {
        Material {
            albedo: self.albedo,
            regions: self.regions.clone(),
        }
    }
}

/// Lights seen from one probe, or triangulated lights when `probe_position`
/// is absent and lights carry positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightList {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_position: Option<Vec3>,
    pub lights: Vec<LightEstimate>,
}

impl LightList {
    pub fn new(probe_position: Option<Vec3>, lights: Vec<LightEstimate>) -> Self {
        Self {
            version: FORMAT_VERSION,
            probe_position,
            lights,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let l: Self = parse_json(text)?;
        check_version(l.version)?;
        Ok(l)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("light list serializes")
    }

    /// Point lights placing each light's color and intensity at its
    /// direction, for rendering an estimated scene.
    pub fn point_lights(&self) -> Vec<PointLightSpec> {
        self.lights
            .iter()
            .map(|l| PointLightSpec {
                direction: l.direction,
                radiance: l.color.map(|c| c * l.intensity * 3.0),
            })
            .collect()
    }
}
