//! Equirectangular (latitude-longitude) parameterization of the sphere of
//! directions.
//!
//! Longitude spans `[-π, π)` from left to right and latitude `[π/2, -π/2]`
//! from top to bottom. The map center looks down the forward axis `-z`.
//! Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` in continuous pixel
//! coordinates, so its center sits at `(i + 0.5, j + 0.5)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3, UNIT_TOLERANCE};

/// Default environment map height; the width is always twice the height.
pub const DEFAULT_HEIGHT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MapSize {
    pub width: usize,
    pub height: usize,
}

/// Continuous pixel coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl MapSize {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::domain(format!(
                "equirectangular map must be 2h × h, got {width}×{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn from_height(height: usize) -> Result<Self> {
        Self::new(2 * height, height)
    }

    pub fn len(self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn index(self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn coords(self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn pixel_center(i: usize, j: usize) -> PixelCoord {
        PixelCoord {
            x: i as f64 + 0.5,
            y: j as f64 + 0.5,
        }
    }

    fn dlon(self) -> f64 {
        TAU / self.width as f64
    }

    fn dlat(self) -> f64 {
        PI / self.height as f64
    }

    /// Latitude of row `j`'s center.
    pub fn row_latitude(self, j: usize) -> f64 {
        FRAC_PI_2 - (j as f64 + 0.5) * self.dlat()
    }

    /// Exact solid angle of any pixel in row `j`.
    pub fn row_solid_angle(self, j: usize) -> f64 {
        let top = FRAC_PI_2 - j as f64 * self.dlat();
        let bottom = top - self.dlat();
        self.dlon() * (top.sin() - bottom.sin())
    }

    /// Per-pixel solid angles, row-major.
    pub fn solid_angles(self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.height {
            let w = self.row_solid_angle(j);
            out.extend(std::iter::repeat_n(w, self.width));
        }
        out
    }

    /// Unit direction through the center of pixel `idx`.
    pub fn center_direction(self, idx: usize) -> Direction {
        let (i, j) = self.coords(idx);
        lonlat_to_direction(
            -PI + (i as f64 + 0.5) * self.dlon(),
            self.row_latitude(j),
        )
    }

    /// Directions of every pixel center, row-major.
    pub fn center_directions(self) -> Vec<Direction> {
        (0..self.len()).map(|k| self.center_direction(k)).collect()
    }

    /// Pixel index containing `d`.
    pub fn index_of(self, d: Direction) -> usize {
        let p = direction_to_pixel_unchecked(d, self);
        let i = (p.x.floor() as usize).min(self.width - 1);
        let j = (p.y.floor() as usize).min(self.height - 1);
        self.index(i, j)
    }

    /// Angular radius bounding every point of a pixel around its center.
    pub fn pixel_half_diagonal(self) -> f64 {
        (0.25 * self.dlat() * self.dlat() + 0.25 * self.dlon() * self.dlon()).sqrt()
    }

    /// Indices of all pixels whose area may intersect the spherical cap of
    /// angular `radius` around `d`. A superset: callers filter as needed.
    pub fn pixels_near(self, d: Direction, radius: f64) -> Vec<usize> {
        let reach = radius + self.pixel_half_diagonal();
        if reach >= PI {
            return (0..self.len()).collect();
        }
        let lat_d = d.y().clamp(-1.0, 1.0).asin();
        let lon_d = d.x().atan2(-d.z());
        let cos_lat_d = lat_d.cos();
        let full_rows = reach >= FRAC_PI_2 || cos_lat_d <= reach.sin();
        let dphi = if full_rows {
            PI
        } else {
            (reach.sin() / cos_lat_d).min(1.0).asin()
        };

        let dlat = self.dlat();
        let dlon = self.dlon();
        let j_lo = (((FRAC_PI_2 - (lat_d + reach)) / dlat - 0.5).ceil().max(0.0)) as usize;
        let j_hi_f = (FRAC_PI_2 - (lat_d - reach)) / dlat - 0.5;
        if j_hi_f < 0.0 {
            return Vec::new();
        }
        let j_hi = (j_hi_f.floor() as usize).min(self.height - 1);

        let mut out = Vec::new();
        for j in j_lo..=j_hi {
            if 2.0 * dphi >= TAU - dlon {
                out.extend((0..self.width).map(|i| self.index(i, j)));
                continue;
            }
            let k_lo = ((lon_d - dphi + PI) / dlon - 0.5).ceil() as i64;
            let k_hi = ((lon_d + dphi + PI) / dlon - 0.5).floor() as i64;
            let w = self.width as i64;
            for k in k_lo..=k_hi {
                out.push(self.index(k.rem_euclid(w) as usize, j));
            }
        }
        out
    }

    /// Splits pixel `idx` into an `n × n` grid of sub-cells and yields each
    /// sub-cell's center direction and exact solid angle.
    pub fn subsamples(self, idx: usize, n: usize) -> impl Iterator<Item = (Direction, f64)> {
        let (i, j) = self.coords(idx);
        let dlon = self.dlon() / n as f64;
        let dlat = self.dlat() / n as f64;
        let lon0 = -PI + i as f64 * self.dlon();
        let top0 = FRAC_PI_2 - j as f64 * self.dlat();
        (0..n).flat_map(move |a| {
            let top = top0 - a as f64 * dlat;
            let bottom = top - dlat;
            let area = dlon * (top.sin() - bottom.sin());
            let lat = 0.5 * (top + bottom);
            (0..n).map(move |b| {
                let lon = lon0 + (b as f64 + 0.5) * dlon;
                (lonlat_to_direction(lon, lat), area)
            })
        })
    }

    /// Angular size of a pixel side at the equator.
    pub fn pixel_angle(self) -> f64 {
        self.dlat()
    }
}

pub(crate) fn lonlat_to_direction(lon: f64, lat: f64) -> Direction {
    let (sl, cl) = lat.sin_cos();
    let (sp, cp) = lon.sin_cos();
    Direction::new_unchecked(Vec3::new(cl * sp, sl, -cl * cp))
}

/// Direction through a continuous pixel coordinate.
pub fn pixel_to_direction(px: PixelCoord, size: MapSize) -> Result<Direction> {
    let (w, h) = (size.width as f64, size.height as f64);
    if !(px.x >= 0.0 && px.x <= w && px.y >= 0.0 && px.y <= h) {
        return Err(Error::domain(format!(
            "pixel ({}, {}) outside {}×{} map",
            px.x, px.y, size.width, size.height
        )));
    }
    let lon = -PI + px.x / w * TAU;
    let lat = FRAC_PI_2 - px.y / h * PI;
    Ok(lonlat_to_direction(lon, lat))
}

/// Continuous pixel coordinate of `d`; `x` lies in `[0, width)`.
pub fn direction_to_pixel(d: Direction, size: MapSize) -> Result<PixelCoord> {
    if (d.vec().norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::domain(format!("{:?} is not a unit vector", d.vec())));
    }
    Ok(direction_to_pixel_unchecked(d, size))
}

fn direction_to_pixel_unchecked(d: Direction, size: MapSize) -> PixelCoord {
    let lat = d.y().clamp(-1.0, 1.0).asin();
    let lon = d.x().atan2(-d.z());
    let w = size.width as f64;
    let mut x = (lon + PI) / TAU * w;
    if x >= w {
        x -= w;
    }
    PixelCoord {
        x: x.max(0.0),
        y: ((FRAC_PI_2 - lat) / PI * size.height as f64).clamp(0.0, size.height as f64),
    }
}
