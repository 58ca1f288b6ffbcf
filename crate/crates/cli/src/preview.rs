//! Tone-mapped 8-bit previews. Display only: nothing reads them back.

use std::path::Path;

use image::{ImageBuffer, Rgb};
use lumiprobe::{EnvironmentMap, Image};

/// Percentile of the linear samples that maps to white.
const WHITE_PERCENTILE: f64 = 0.99;
const GAMMA: f64 = 2.2;

fn white_point(samples: &[f64]) -> f64 {
    let mut lit: Vec<f64> = samples.iter().copied().filter(|v| *v > 0.0 && v.is_finite()).collect();
    if lit.is_empty() {
        return 1.0;
    }
    lit.sort_by(f64::total_cmp);
    let k = ((lit.len() - 1) as f64 * WHITE_PERCENTILE).round() as usize;
    lit[k]
}

pub fn write_png(path: &Path, img: &Image) -> Result<(), image::ImageError> {
    let white = white_point(&img.pixels);
    let out = ImageBuffer::from_fn(img.width as u32, img.height as u32, |x, y| {
        let rgb = img.rgb_at(y as usize * img.width + x as usize);
        Rgb(rgb.map(|v| ((v / white).clamp(0.0, 1.0).powf(1.0 / GAMMA) * 255.0).round() as u8))
    });
    out.save(path)
}

pub fn write_env_png(path: &Path, env: &EnvironmentMap) -> Result<(), image::ImageError> {
    write_png(path, &env.masked(&env.coverage).to_image())
}
