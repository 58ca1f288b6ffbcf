//! Restoring the color of clipped highlights from the diffuse shading
//! chromaticity.

use crate::error::{Error, Result};
use crate::image::Image;

/// Fraction of the clip level at or above which a channel counts as
/// saturated.
pub const SATURATION_THRESHOLD: f64 = 0.98;

/// Shading chromaticity below which a channel cannot anchor the rescale.
pub const ANCHOR_EPSILON: f64 = 1e-6;

/// Per-sample saturation flags of an LDR image (values relative to the clip
/// level): flagged by the clip mask or at least `threshold`.
pub fn saturation_from_ldr(ldr: &Image, threshold: f64) -> Vec<bool> {
    ldr.pixels
        .iter()
        .zip(&ldr.saturation_mask)
        .map(|(&v, &m)| m || v >= threshold)
        .collect()
}

#[derive(Clone, Debug)]
pub struct Recolored {
    pub image: Image,
    /// Pixels with highlight energy passed through unchanged because no
    /// usable anchor channel existed.
    pub fallback: Vec<bool>,
}

impl Recolored {
    pub fn fallback_count(&self) -> usize {
        self.fallback.iter().filter(|&&f| f).count()
    }
}

/// Channel the rescale is solved from: blue when it is unsaturated, else
/// green, else red, and blue again when all three are clipped.
fn anchor(saturated: [bool; 3]) -> usize {
    [2, 1, 0].into_iter().find(|&c| !saturated[c]).unwrap_or(2)
}

/// Rescales each highlight pixel so its color follows the shading
/// chromaticity `c_d`, keeping the anchor channel's value.
///
/// `saturation` holds one flag per sample of `h` (see
/// [`saturation_from_ldr`]).
pub fn recolor_highlight(h: &Image, shading: &[Option<[f64; 3]>], saturation: &[bool]) -> Result<Recolored> {
    if h.channels != 3 {
        return Err(Error::domain("recoloring needs a 3-channel highlight layer"));
    }
    if shading.len() != h.pixel_count() || saturation.len() != h.pixels.len() {
        return Err(Error::domain("shading or saturation size does not match the highlight layer"));
    }
    let mut image = h.clone();
    let mut fallback = vec![false; h.pixel_count()];
    for p in 0..h.pixel_count() {
        let v = h.rgb_at(p);
        if v == [0.0; 3] {
            continue;
        }
        let sat = [saturation[3 * p], saturation[3 * p + 1], saturation[3 * p + 2]];
        let a = anchor(sat);
        let Some(cd) = shading[p].filter(|cd| cd[a] >= ANCHOR_EPSILON) else {
            fallback[p] = true;
            continue;
        };
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = if c == a { v[a] } else { v[a] * (cd[c] / cd[a]) };
        }
        image.set_rgb(p, out);
    }
    Ok(Recolored { image, fallback })
}
