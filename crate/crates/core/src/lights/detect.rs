use crate::equirect::MapSize;
use crate::geometry::{Direction, Vec3};
use crate::image::EnvironmentMap;

use super::LightEstimate;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_NMS_RADIUS_DEG: f64 = 10.0;

fn neighbors(size: MapSize, idx: usize) -> impl Iterator<Item = usize> {
    let (i, j) = size.coords(idx);
    let (w, h) = (size.width as isize, size.height as isize);
    (-1isize..=1)
        .flat_map(|dj| (-1isize..=1).map(move |di| (di, dj)))
        .filter(|&d| d != (0, 0))
        .filter_map(move |(di, dj)| {
            let y = j as isize + dj;
            if y < 0 || y >= h {
                return None;
            }
            let x = (i as isize + di).rem_euclid(w);
            Some(size.index(x as usize, y as usize))
        })
}

/// Local maxima of mean radiance above `threshold × max`, greedily
/// suppressed within `nms_radius` (radians), strongest first.
///
/// Plateaus are broken by pixel index; a pixel equal to all its neighbors is
/// not a maximum. Each light sits at the flux-weighted centroid of the
/// above-threshold pixels it suppresses.
pub fn detect_lights(env: &EnvironmentMap, nms_radius: f64, threshold: f64) -> Vec<LightEstimate> {
    let size = env.size();
    let lum: Vec<f64> = env
        .pixels
        .iter()
        .zip(&env.coverage)
        .map(|(p, &c)| if c { (p[0] + p[1] + p[2]) / 3.0 } else { 0.0 })
        .collect();
    let max = lum.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = threshold * max;
    let above = |k: usize| env.coverage[k] && lum[k] > 0.0 && lum[k] >= floor;

    let mut peaks: Vec<usize> = (0..size.len())
        .filter(|&k| above(k))
        .filter(|&k| {
            let mut strictly_above_one = false;
            for n in neighbors(size, k) {
                let wins = lum[k] > lum[n] || (lum[k] == lum[n] && k > n);
                if !wins {
                    return false;
                }
                strictly_above_one |= lum[k] > lum[n];
            }
            strictly_above_one
        })
        .collect();
    peaks.sort_by(|&a, &b| lum[b].total_cmp(&lum[a]).then(a.cmp(&b)));

    let dirs = size.center_directions();
    let cos_r = nms_radius.cos();
    let mut suppressed = vec![false; size.len()];
    let mut claimed = vec![false; size.len()];
    let mut lights = Vec::new();
    for &p in &peaks {
        if suppressed[p] {
            continue;
        }
        let center = dirs[p];
        let mut centroid = Vec3::ZERO;
        let mut rgb = [0.0; 3];
        let mut flux = 0.0;
        for k in size.pixels_near(center, nms_radius) {
            if dirs[k].dot(center) < cos_r {
                continue;
            }
            suppressed[k] = true;
            if !above(k) || claimed[k] {
                continue;
            }
            claimed[k] = true;
            let w = size.row_solid_angle(size.coords(k).1);
            centroid = centroid + dirs[k].vec() * (lum[k] * w);
            for c in 0..3 {
                rgb[c] += env.pixels[k][c] * w;
            }
            flux += lum[k] * w;
        }
        let Ok(direction) = Direction::new(centroid) else {
            continue;
        };
        let sum = rgb[0] + rgb[1] + rgb[2];
        lights.push(LightEstimate {
            direction,
            color: [rgb[0] / sum, rgb[1] / sum, rgb[2] / sum],
            intensity: flux,
            position: None,
            residual: None,
        });
    }
    lights.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    lights
}
