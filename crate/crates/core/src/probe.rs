//! Probe geometry and reflectance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{frame, Direction, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeKind {
    Sphere { center: Vec3, radius: f64 },
    NormalMap,
}

/// A reflective object seen by an orthographic camera.
///
/// Pixels outside the silhouette carry `None` for their normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub kind: ProbeKind,
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Option<Direction>>,
    pub regions: Vec<u16>,
    /// Scene-space location, used when triangulating lights.
    pub position: Vec3,
}

impl Probe {
    /// Orthographic image of a sphere seen along `-view` at
    /// `resolution × resolution` pixels, the silhouette filling the frame.
    pub fn sphere(resolution: usize, center: Vec3, radius: f64, view: Direction) -> Result<Self> {
        if resolution == 0 || !(radius > 0.0) {
            return Err(Error::domain("sphere probe needs a positive resolution and radius"));
        }
        let (right, up) = frame(view);
        let v = view.vec();
        let n = resolution;
        let mut normals = Vec::with_capacity(n * n);
        for j in 0..n {
            let b = 1.0 - (j as f64 + 0.5) / n as f64 * 2.0;
            for i in 0..n {
                let a = (i as f64 + 0.5) / n as f64 * 2.0 - 1.0;
                let r2 = a * a + b * b;
                normals.push(if r2 < 1.0 {
                    let w = (1.0 - r2).sqrt();
                    Some(Direction::new(right * a + up * b + v * w)?)
                } else {
                    None
                });
            }
        }
        Ok(Self {
            kind: ProbeKind::Sphere { center, radius },
            width: n,
            height: n,
            normals,
            regions: vec![0; n * n],
            position: center,
        })
    }

    pub fn from_normal_map(
        width: usize,
        height: usize,
        normals: Vec<Option<Direction>>,
        regions: Option<Vec<u16>>,
        position: Vec3,
    ) -> Result<Self> {
        if normals.len() != width * height {
            return Err(Error::domain("normal map size does not match its dimensions"));
        }
        let regions = regions.unwrap_or_else(|| vec![0; width * height]);
        if regions.len() != normals.len() {
            return Err(Error::domain("region map size does not match the normal map"));
        }
        Ok(Self {
            kind: ProbeKind::NormalMap,
            width,
            height,
            normals,
            regions,
            position,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn silhouette_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }

    pub fn with_position(mut self, position: Vec3) -> Self {
        self.position = position;
        self
    }

    /// Surface point of a sphere probe at pixel `idx`: `center + radius·n`.
    pub fn surface_point(&self, idx: usize) -> Option<Vec3> {
        match (self.kind, self.normals[idx]) {
            (ProbeKind::Sphere { center, radius }, Some(n)) => Some(center + n.vec() * radius),
            _ => None,
        }
    }

    /// Mean over silhouette pixels of the angle to the closest 4-neighbor
    /// normal.
    pub fn mean_normal_spacing(&self) -> f64 {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut total = 0.0;
        let mut count = 0usize;
        for j in 0..h {
            for i in 0..w {
                let Some(n) = self.normals[(j * w + i) as usize] else {
                    continue;
                };
                let best = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .filter_map(|(di, dj)| {
                        let (x, y) = (i + di, j + dj);
                        if x < 0 || y < 0 || x >= w || y >= h {
                            return None;
                        }
                        self.normals[(y * w + x) as usize].map(|m| n.angle_to(m))
                    })
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() {
                    total += best;
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

/// Specular parameters of one probe region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMaterial {
    /// Specular albedo per channel.
    pub ks: [f64; 3],
    /// Phong exponent.
    pub alpha: f64,
}

impl RegionMaterial {
    pub fn gray(ks: f64, alpha: f64) -> Self {
        Self { ks: [ks; 3], alpha }
    }

    pub fn mean_ks(&self) -> f64 {
        (self.ks[0] + self.ks[1] + self.ks[2]) / 3.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// Diffuse albedo per channel.
    pub albedo: [f64; 3],
    /// Indexed by the probe's region ids.
    pub regions: Vec<RegionMaterial>,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            albedo: [0.8, 0.6, 0.5],
            regions: vec![RegionMaterial::gray(0.3, 120.0)],
        }
    }
}

impl Material {
    pub fn uniform(albedo: [f64; 3], ks: f64, alpha: f64) -> Self {
        Self {
            albedo,
            regions: vec![RegionMaterial::gray(ks, alpha)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::domain("material needs at least one region"));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.albedo.iter().all(|&a| unit(a)) {
            return Err(Error::domain("diffuse albedo must lie in [0, 1]"));
        }
        for (k, r) in self.regions.iter().enumerate() {
            if !r.ks.iter().all(|&a| unit(a)) {
                return Err(Error::domain(format!("region {k}: specular albedo outside [0, 1]")));
            }
            if !(r.alpha > 0.0) || !r.alpha.is_finite() {
                return Err(Error::domain(format!("region {k}: roughness must be > 0")));
            }
        }
        Ok(())
    }

    pub fn region(&self, id: u16) -> Result<&RegionMaterial> {
        self.regions
            .get(id as usize)
            .ok_or_else(|| Error::domain(format!("region id {id} has no material entry")))
    }
}
