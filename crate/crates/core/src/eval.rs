//! Relighting error: how differently test objects look under an estimated
//! map versus the ground truth.

use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3};
use crate::image::{EnvironmentMap, Image};
use crate::metrics::rmse;
use crate::probe::{Material, Probe, RegionMaterial};
use crate::render::render_probe;

/// Objects rendered for the relighting comparison.
#[derive(Clone, Debug)]
pub struct RelightSpec {
    /// Geometry of both test objects; a sphere unless a normal map is given.
    pub probe: Probe,
    pub diffuse: Material,
    pub glossy: Material,
    pub view: Direction,
}

impl RelightSpec {
    pub fn spheres(resolution: usize) -> Result<Self> {
        Ok(Self {
            probe: Probe::sphere(resolution, Vec3::ZERO, 1.0, Direction::TOWARD_VIEWER)?,
            diffuse: Material {
                albedo: [1.0; 3],
                regions: vec![RegionMaterial::gray(0.0, 1.0)],
            },
            glossy: Material {
                albedo: [0.5; 3],
                regions: vec![RegionMaterial::gray(0.5, 50.0)],
            },
            view: Direction::TOWARD_VIEWER,
        })
    }

    pub fn with_probe(probe: Probe) -> Result<Self> {
        Ok(Self { probe, ..Self::spheres(1)? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelightError {
    pub rmse_diffuse: f64,
    pub rmse_glossy: f64,
    /// Covered fraction of the estimated map.
    pub coverage: f64,
}

fn normalized_pair(env: &EnvironmentMap, spec: &RelightSpec) -> Result<(Image, Image)> {
    let diffuse = render_probe(&spec.probe, &spec.diffuse, env, spec.view)?.composite;
    let glossy = render_probe(&spec.probe, &spec.glossy, env, spec.view)?.composite;
    let max = diffuse.pixels.iter().copied().fold(0.0, f64::max);
    let s = if max > 0.0 { 1.0 / max } else { 0.0 };
    let scale = |img: Image| Image {
        pixels: img.pixels.iter().map(|v| v * s).collect(),
        ..img
    };
    Ok((scale(diffuse), scale(glossy)))
}

/// Renders the diffuse and glossy test objects under both maps, each
/// restricted to the estimate's coverage. Each pair of renderings is scaled
/// by the reciprocal of its diffuse maximum before comparing.
pub fn relight_error(gt: &EnvironmentMap, est: &EnvironmentMap, spec: &RelightSpec) -> Result<RelightError> {
    if gt.size() != est.size() {
        return Err(Error::DimensionMismatch {
            expected: (gt.width(), gt.height()),
            found: (est.width(), est.height()),
        });
    }
    let coverage = est.coverage_fraction();
    if coverage == 0.0 {
        return Err(Error::domain("estimated map has no coverage"));
    }
    let (gd, gg) = normalized_pair(&gt.masked(&est.coverage), spec)?;
    let (ed, eg) = normalized_pair(&est.masked(&est.coverage), spec)?;
    let mask: Vec<bool> = spec.probe.normals.iter().map(Option::is_some).collect();
    Ok(RelightError {
        rmse_diffuse: rmse(&gd, &ed, Some(&mask))?,
        rmse_glossy: rmse(&gg, &eg, Some(&mask))?,
        coverage,
    })
}
