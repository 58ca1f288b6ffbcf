//! Forward model: a probe's diffuse and highlight layers under a known
//! environment map.
//!
//! Environment radiance is piecewise constant over pixels. Each layer is a
//! Riemann sum over environment pixels weighted by their exact solid angle;
//! the specular lobe is integrated on an `n × n` sub-grid per pixel with `n`
//! chosen from the lobe width, so very sharp lobes do not alias against the
//! map grid.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::equirect::MapSize;
use crate::error::{Error, Result};
use crate::geometry::{lobe_cutoff, phong_lobe, reflect, Direction};
use crate::image::{EnvironmentMap, Image};
use crate::probe::{Material, Probe};

/// Lobe values below this fraction of the peak are not integrated.
const RENDER_LOBE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LayerSet {
    pub composite: Image,
    pub diffuse: Image,
    pub highlight: Image,
    /// `(r, g)` chromaticity of the diffuse shading before albedo; `None`
    /// outside the silhouette or where the probe receives no diffuse light.
    pub shading_chromaticity: Vec<Option<[f64; 2]>>,
    pub normals: Vec<Option<Direction>>,
}

impl LayerSet {
    /// Shading chromaticity of pixel `idx` as an `(r, g, b)` triple.
    pub fn shading_rgb(&self, idx: usize) -> Option<[f64; 3]> {
        self.shading_chromaticity[idx].map(|[r, g]| [r, g, 1.0 - r - g])
    }
}

/// Sub-grid resolution needed to integrate a lobe of exponent `alpha`
/// across one environment pixel.
pub(crate) fn lobe_subdivisions(size: MapSize, alpha: f64) -> usize {
    let width = 1.0 / alpha.max(1.0).sqrt();
    ((2.0 * size.pixel_angle() / width).ceil() as usize).clamp(1, 48)
}

/// Radiance-weighted integral of `max(ω·axis, 0)^alpha` over the map.
pub(crate) fn integrate_lobe(
    env: &EnvironmentMap,
    axis: Direction,
    alpha: f64,
    subdiv: usize,
) -> [f64; 3] {
    let size = env.size();
    let cutoff = lobe_cutoff(alpha, RENDER_LOBE_FLOOR).min(PI / 2.0);
    let mut acc = [0.0; 3];
    for idx in size.pixels_near(axis, cutoff) {
        let e = env.pixels[idx];
        if e == [0.0; 3] {
            continue;
        }
        let mut w = 0.0;
        for (d, area) in size.subsamples(idx, subdiv) {
            w += phong_lobe(d.dot(axis), alpha) * area;
        }
        for c in 0..3 {
            acc[c] += e[c] * w;
        }
    }
    acc
}

pub fn render_probe(
    probe: &Probe,
    material: &Material,
    env: &EnvironmentMap,
    view: Direction,
) -> Result<LayerSet> {
    material.validate()?;
    if probe.silhouette_count() == 0 {
        return Err(Error::domain("probe has no surface normals"));
    }
    for (idx, n) in probe.normals.iter().enumerate() {
        if n.is_some() {
            material.region(probe.regions[idx])?;
        }
    }
    let size = env.size();

    // Non-black environment pixels, pre-multiplied by solid angle.
    let weights = size.solid_angles();
    let emitters: Vec<(Direction, [f64; 3])> = env
        .pixels
        .iter()
        .enumerate()
        .filter(|(_, p)| **p != [0.0; 3])
        .map(|(k, p)| {
            let w = weights[k];
            (size.center_direction(k), [p[0] * w, p[1] * w, p[2] * w])
        })
        .collect();

    let per_pixel: Vec<Option<([f64; 3], [f64; 3])>> = probe
        .normals
        .par_iter()
        .enumerate()
        .map(|(idx, n)| {
            let n = (*n)?;
            let region = material.region(probe.regions[idx]).expect("validated above");

            let mut shading = [0.0; 3];
            for (d, e) in &emitters {
                let c = d.dot(n);
                if c > 0.0 {
                    for k in 0..3 {
                        shading[k] += e[k] * c;
                    }
                }
            }
            for s in &mut shading {
                *s /= PI;
            }

            let lobe = if region.ks == [0.0; 3] {
                [0.0; 3]
            } else {
                let mirror = reflect(view, n);
                integrate_lobe(env, mirror, region.alpha, lobe_subdivisions(size, region.alpha))
            };
            let spec = [
                region.ks[0] * lobe[0],
                region.ks[1] * lobe[1],
                region.ks[2] * lobe[2],
            ];
            Some((shading, spec))
        })
        .collect();

    let (w, h) = (probe.width, probe.height);
    let mut diffuse = Image::rgb(w, h);
    let mut highlight = Image::rgb(w, h);
    let mut composite = Image::rgb(w, h);
    let mut chroma = vec![None; w * h];
    for (idx, px) in per_pixel.into_iter().enumerate() {
        let Some((shading, spec)) = px else { continue };
        let d = [
            material.albedo[0] * shading[0],
            material.albedo[1] * shading[1],
            material.albedo[2] * shading[2],
        ];
        diffuse.set_rgb(idx, d);
        highlight.set_rgb(idx, spec);
        composite.set_rgb(idx, [d[0] + spec[0], d[1] + spec[1], d[2] + spec[2]]);
        let sum = shading[0] + shading[1] + shading[2];
        if sum > 0.0 {
            chroma[idx] = Some([shading[0] / sum, shading[1] / sum]);
        }
    }

    Ok(LayerSet {
        composite,
        diffuse,
        highlight,
        shading_chromaticity: chroma,
        normals: probe.normals.clone(),
    })
}

/// Simulates sensor clipping: values are clamped to `clip_level` and then
/// divided by it. Clipped samples are flagged in the saturation mask.
pub fn clip_to_ldr(img: &Image, clip_level: f64) -> Result<Image> {
    if !(clip_level > 0.0) || !clip_level.is_finite() {
        return Err(Error::domain(format!("clip level must be > 0, got {clip_level}")));
    }
    let mut out = img.clone();
    for (v, m) in out.pixels.iter_mut().zip(out.saturation_mask.iter_mut()) {
        if *v > clip_level {
            *m = true;
            *v = 1.0;
        } else {
            *v /= clip_level;
        }
    }
    Ok(out)
}
