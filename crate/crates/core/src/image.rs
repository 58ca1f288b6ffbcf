use crate::equirect::MapSize;
use crate::error::{Error, Result};

/// Linear-light raster with 1 or 3 interleaved channels.
///
/// `saturation_mask` has one flag per sample and marks values that were
/// clipped when the image was produced by [`crate::render::clip_to_ldr`].
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
    pub saturation_mask: Vec<bool>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::domain(format!("images have 1 or 3 channels, got {channels}")));
        }
        let n = width * height * channels;
        Ok(Self {
            width,
            height,
            channels,
            pixels: vec![0.0; n],
            saturation_mask: vec![false; n],
        })
    }

    pub fn from_pixels(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        let mut img = Self::new(width, height, channels)?;
        if pixels.len() != img.pixels.len() {
            return Err(Error::domain(format!(
                "{} samples for a {width}×{height}×{channels} image",
                pixels.len()
            )));
        }
        img.pixels = pixels;
        Ok(img)
    }

    pub fn rgb(width: usize, height: usize) -> Self {
        Self::new(width, height, 3).expect("3 channels")
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, idx: usize, c: usize) -> f64 {
        self.pixels[idx * self.channels + c]
    }

    pub fn set(&mut self, idx: usize, c: usize, v: f64) {
        self.pixels[idx * self.channels + c] = v;
    }

    /// RGB triple of pixel `idx`; single-channel images are replicated.
    pub fn rgb_at(&self, idx: usize) -> [f64; 3] {
        if self.channels == 3 {
            let k = idx * 3;
            [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
        } else {
            let v = self.pixels[idx];
            [v, v, v]
        }
    }

    pub fn set_rgb(&mut self, idx: usize, v: [f64; 3]) {
        debug_assert_eq!(self.channels, 3);
        self.pixels[idx * 3..idx * 3 + 3].copy_from_slice(&v);
    }

    /// True if any channel of pixel `idx` is flagged saturated.
    pub fn is_saturated(&self, idx: usize) -> bool {
        let k = idx * self.channels;
        self.saturation_mask[k..k + self.channels].iter().any(|&s| s)
    }

    pub fn saturated_channels(&self, idx: usize) -> [bool; 3] {
        if self.channels == 3 {
            let k = idx * 3;
            [
                self.saturation_mask[k],
                self.saturation_mask[k + 1],
                self.saturation_mask[k + 2],
            ]
        } else {
            [self.saturation_mask[idx]; 3]
        }
    }

    /// Rec. 601 luma, or the single channel as-is.
    pub fn luminance(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.pixels.clone();
        }
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    pub fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() || self.channels != other.channels {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }
}

/// Equirectangular HDR radiance map with a per-pixel coverage flag.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentMap {
    size: MapSize,
    pub pixels: Vec<[f64; 3]>,
    pub coverage: Vec<bool>,
}

impl EnvironmentMap {
    /// Black map with full coverage.
    pub fn new(size: MapSize) -> Self {
        Self {
            size,
            pixels: vec![[0.0; 3]; size.len()],
            coverage: vec![true; size.len()],
        }
    }

    /// Black map with empty coverage, the starting point for traced maps.
    pub fn uncovered(size: MapSize) -> Self {
        Self {
            size,
            pixels: vec![[0.0; 3]; size.len()],
            coverage: vec![false; size.len()],
        }
    }

    pub fn from_pixels(size: MapSize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != size.len() {
            return Err(Error::domain("pixel count does not match map size"));
        }
        if pixels.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("radiance must be finite and non-negative"));
        }
        Ok(Self {
            size,
            pixels,
            coverage: vec![true; size.len()],
        })
    }

    pub fn size(&self) -> MapSize {
        self.size
    }

    pub fn width(&self) -> usize {
        self.size.width
    }

    pub fn height(&self) -> usize {
        self.size.height
    }

    pub fn coverage_fraction(&self) -> f64 {
        self.coverage.iter().filter(|&&c| c).count() as f64 / self.coverage.len() as f64
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pixels {
            for v in p.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Copy with radiance zeroed wherever `mask` is unset.
    pub fn masked(&self, mask: &[bool]) -> Self {
        let mut out = self.clone();
        for (p, &m) in out.pixels.iter_mut().zip(mask) {
            if !m {
                *p = [0.0; 3];
            }
        }
        out
    }

    pub fn max_channel_value(&self) -> f64 {
        self.pixels.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Flattens into an interleaved RGB [`Image`], dropping coverage.
    pub fn to_image(&self) -> Image {
        let mut img = Image::rgb(self.width(), self.height());
        for (k, p) in self.pixels.iter().enumerate() {
            img.set_rgb(k, *p);
        }
        img
    }

    pub fn from_image(img: &Image) -> Result<Self> {
        let size = MapSize::new(img.width, img.height)?;
        let pixels = (0..img.pixel_count()).map(|k| img.rgb_at(k)).collect();
        Self::from_pixels(size, pixels)
    }
}
