//! Environment map recovery from a probe's highlight layer: tracing,
//! deconvolution by the specular lobe, and highlight recoloring.

mod deconv;
mod kernel;
mod recolor;
mod trace;

pub use deconv::{rl_deconvolve, rl_deconvolve_with, BlurOperator, RlOptions};
pub use kernel::{kernel_weight, phong_kernel, KernelTap, PhongKernel, DEFAULT_CUTOFF_RATIO};
pub use recolor::{
    recolor_highlight, saturation_from_ldr, Recolored, ANCHOR_EPSILON, SATURATION_THRESHOLD,
};
pub use trace::{trace_forward, trace_inverse, InverseTraceOptions, KernelParamMap};

use crate::equirect::{MapSize, DEFAULT_HEIGHT};
use crate::error::{Error, Result};
use crate::geometry::{lobe_solid_angle, Direction};
use crate::image::{EnvironmentMap, Image};
use crate::probe::{Material, Probe};
use crate::render::LayerSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConfig {
    pub map_height: usize,
    pub view: Direction,
    pub inverse: InverseTraceOptions,
    pub rl: RlOptions,
    /// Recolor the highlight layer when shading chromaticity is available.
    pub recolor: bool,
    pub saturation_threshold: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            map_height: DEFAULT_HEIGHT,
            view: Direction::TOWARD_VIEWER,
            inverse: InverseTraceOptions::default(),
            rl: RlOptions::default(),
            recolor: true,
            saturation_threshold: SATURATION_THRESHOLD,
        }
    }
}

/// What the estimator consumes: a highlight layer aligned with a probe, and
/// optionally the diffuse shading chromaticity and per-sample saturation
/// flags needed for recoloring.
#[derive(Clone, Copy, Debug)]
pub struct EstimateInput<'a> {
    pub highlight: &'a Image,
    pub probe: &'a Probe,
    pub shading: Option<&'a [Option<[f64; 3]>]>,
    pub saturation: Option<&'a [bool]>,
}

impl<'a> EstimateInput<'a> {
    pub fn new(highlight: &'a Image, probe: &'a Probe) -> Self {
        Self {
            highlight,
            probe,
            shading: None,
            saturation: None,
        }
    }
}

/// Final map together with the intermediate stages.
#[derive(Clone, Debug)]
pub struct EnvEstimate {
    /// Highlight splatted along mirror directions (sparse).
    pub forward: EnvironmentMap,
    /// Inverse-warped map before deconvolution.
    pub traced: EnvironmentMap,
    pub deconvolved: EnvironmentMap,
    pub kernel_params: KernelParamMap,
    pub recolor_fallbacks: usize,
    pub rl_iterations: usize,
}

impl EnvEstimate {
    pub fn final_map(&self) -> &EnvironmentMap {
        &self.deconvolved
    }
}

/// Divides each probe pixel by its region's `k_s · ∫ lobe`, turning highlight
/// intensities into lobe-averaged radiance.
pub fn highlight_to_radiance(h: &Image, probe: &Probe, material: &Material) -> Result<Image> {
    let mut out = Image::rgb(h.width, h.height);
    for p in 0..h.pixel_count() {
        if probe.normals[p].is_none() {
            continue;
        }
        let m = material.region(probe.regions[p])?;
        let mass = lobe_solid_angle(m.alpha);
        let v = h.rgb_at(p);
        let mut r = [0.0; 3];
        for c in 0..3 {
            if m.ks[c] > 0.0 {
                r[c] = v[c] / (m.ks[c] * mass);
            }
        }
        out.set_rgb(p, r);
    }
    Ok(out)
}

/// Highlight layer to environment map: recolor, normalize by the lobe,
/// inverse-warp, deconvolve.
pub fn estimate_envmap(input: EstimateInput<'_>, material: &Material, config: &EstimateConfig) -> Result<EnvEstimate> {
    material.validate()?;
    let probe = input.probe;
    if input.highlight.dims() != (probe.width, probe.height) {
        return Err(Error::DimensionMismatch {
            expected: (probe.width, probe.height),
            found: input.highlight.dims(),
        });
    }
    let size = MapSize::from_height(config.map_height)?;

    let mut recolor_fallbacks = 0;
    let highlight = match (config.recolor, input.shading) {
        (true, Some(shading)) => {
            let none = vec![false; input.highlight.pixels.len()];
            let sat = input.saturation.unwrap_or(&none);
            let r = recolor_highlight(input.highlight, shading, sat)?;
            recolor_fallbacks = r.fallback_count();
            r.image
        }
        _ => input.highlight.clone(),
    };
    let radiance = highlight_to_radiance(&highlight, probe, material)?;

    let forward = trace_forward(&radiance, probe, config.view, size)?;
    let (traced, kernel_params) = trace_inverse(&radiance, probe, material, config.view, size, config.inverse)?;
    let (deconvolved, rl_iterations) = rl_deconvolve_with(&traced, &kernel_params, &config.rl)?;

    Ok(EnvEstimate {
        forward,
        traced,
        deconvolved,
        kernel_params,
        recolor_fallbacks,
        rl_iterations,
    })
}

/// Convenience wrapper estimating from a rendered [`LayerSet`].
pub fn estimate_from_layers(
    layers: &LayerSet,
    probe: &Probe,
    material: &Material,
    config: &EstimateConfig,
) -> Result<EnvEstimate> {
    let shading: Vec<Option<[f64; 3]>> = (0..layers.highlight.pixel_count()).map(|p| layers.shading_rgb(p)).collect();
    let saturation = layers.highlight.saturation_mask.clone();
    let input = EstimateInput {
        highlight: &layers.highlight,
        probe,
        shading: Some(&shading),
        saturation: Some(&saturation),
    };
    estimate_envmap(input, material, config)
}
