//! Image error and similarity metrics.

use crate::error::{Error, Result};
use crate::image::Image;

/// SSIM window side.
pub const SSIM_WINDOW: usize = 8;

/// Root mean square of per-channel differences over the pixels where `mask`
/// is set (all pixels when `None`). Values are compared in whatever scale the
/// images carry; multiply by 255 for 8-bit-style numbers.
pub fn rmse(a: &Image, b: &Image, mask: Option<&[bool]>) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if let Some(m) = mask {
        if m.len() != a.pixel_count() {
            return Err(Error::domain("mask size does not match the images"));
        }
    }
    let ch = a.channels;
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in 0..a.pixel_count() {
        if mask.is_some_and(|m| !m[p]) {
            continue;
        }
        for c in 0..ch {
            let d = a.pixels[p * ch + c] - b.pixels[p * ch + c];
            sum += d * d;
        }
        n += ch;
    }
    if n == 0 {
        return Err(Error::domain("rmse over an empty mask"));
    }
    Ok((sum / n as f64).sqrt())
}

/// Summed-area table with a zero guard row and column.
struct Integral {
    w: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { w, data }
    }

    fn window(&self, x: usize, y: usize, n: usize) -> f64 {
        let s = self.w + 1;
        self.data[(y + n) * s + x + n] - self.data[y * s + x + n] - self.data[(y + n) * s + x] + self.data[y * s + x]
    }
}

/// Mean SSIM over all `8 × 8` windows (stride 1, uniform weights, population
/// statistics) with `C₁ = (0.01 L)²`, `C₂ = (0.03 L)²`. Color images are
/// compared on Rec. 601 luma.
pub fn ssim(a: &Image, b: &Image, dynamic_range: f64) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::domain(format!("SSIM needs at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels")));
    }
    let la = a.luminance();
    let lb = b.luminance();
    let sa = Integral::new(w, h, |k| la[k]);
    let sb = Integral::new(w, h, |k| lb[k]);
    let saa = Integral::new(w, h, |k| la[k] * la[k]);
    let sbb = Integral::new(w, h, |k| lb[k] * lb[k]);
    let sab = Integral::new(w, h, |k| la[k] * lb[k]);
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - SSIM_WINDOW {
        for x in 0..=w - SSIM_WINDOW {
            let ma = sa.window(x, y, SSIM_WINDOW) / n;
            let mb = sb.window(x, y, SSIM_WINDOW) / n;
            let va = saa.window(x, y, SSIM_WINDOW) / n - ma * ma;
            let vb = sbb.window(x, y, SSIM_WINDOW) / n - mb * mb;
            let cov = sab.window(x, y, SSIM_WINDOW) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}
