//! Spatially varying Phong blur kernels on the environment sphere.

use crate::equirect::MapSize;
use crate::error::{Error, Result};
use crate::geometry::{lobe_cutoff, phong_lobe, Direction};

use super::trace::KernelParamMap;

/// Default fraction of the lobe peak at which kernels are truncated.
pub const DEFAULT_CUTOFF_RATIO: f64 = 1e-3;

/// Unnormalized kernel value `k_s (L_y·L_x)^α`, clamped at zero.
pub fn kernel_weight(x: Direction, y: Direction, ks: f64, alpha: f64) -> f64 {
    ks * phong_lobe(x.dot(y), alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelTap {
    pub index: usize,
    /// `k_s (L_y·L_x)^α`.
    pub lobe: f64,
    /// `lobe` times the solid angle of pixel `index`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhongKernel {
    pub center: usize,
    pub cutoff: f64,
    pub taps: Vec<KernelTap>,
    /// Tap weights rescaled to sum to one, aligned with `taps`.
    pub normalized: Vec<f64>,
}

/// Kernel centered on environment pixel `x`, truncated at angle `cutoff`.
/// With `cutoff = None` the kernel stops where the lobe drops to
/// [`DEFAULT_CUTOFF_RATIO`] of its peak.
pub fn phong_kernel(
    x: usize,
    params: &KernelParamMap,
    size: MapSize,
    cutoff: Option<f64>,
) -> Result<PhongKernel> {
    if params.size() != size {
        return Err(Error::domain("kernel parameters do not match the map size"));
    }
    if x >= size.len() || !params.is_covered(x) {
        return Err(Error::domain(format!("environment pixel {x} is not covered")));
    }
    let alpha = params.alpha[x];
    let ks = params.ks[x];
    let cutoff = cutoff.unwrap_or_else(|| lobe_cutoff(alpha, DEFAULT_CUTOFF_RATIO));
    let cos_cut = cutoff.cos();
    let lx = size.center_direction(x);

    let mut taps = Vec::new();
    let mut shape = Vec::new();
    for y in size.pixels_near(lx, cutoff) {
        let ly = size.center_direction(y);
        let c = lx.dot(ly);
        if y != x && c < cos_cut {
            continue;
        }
        let s = phong_lobe(c, alpha) * size.row_solid_angle(size.coords(y).1);
        let lobe = kernel_weight(lx, ly, ks, alpha);
        taps.push(KernelTap {
            index: y,
            lobe,
            weight: lobe * size.row_solid_angle(size.coords(y).1),
        });
        shape.push(s);
    }
    // Normalize the k_s-free shape so zero-albedo regions still get a kernel.
    let total: f64 = shape.iter().sum();
    let normalized = shape.iter().map(|s| s / total).collect();
    Ok(PhongKernel {
        center: x,
        cutoff,
        taps,
        normalized,
    })
}
