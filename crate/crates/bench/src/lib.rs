//! Shared fixtures for the pipeline benchmarks.

use lumiprobe::envmap::{highlight_to_radiance, trace_inverse, InverseTraceOptions};
use lumiprobe::{ChromaStack, Direction, EnvironmentMap, Image, KernelParamMap, MapSize, Material, Probe, Vec3};

pub const VIEW: Direction = Direction::TOWARD_VIEWER;

/// Three soft colored lights over a dim ambient floor.
pub fn blob_env(height: usize) -> EnvironmentMap {
    let size = MapSize::from_height(height).expect("valid height");
    let blobs = [
        ([0.3, 0.4, 1.0], [4.0, 3.0, 2.0]),
        ([-0.5, 0.2, 1.0], [2.0, 3.0, 5.0]),
        ([0.1, -0.6, 0.8], [3.0, 3.0, 3.0]),
    ];
    let sigma = 8f64.to_radians();
    let mut env = EnvironmentMap::new(size);
    for (k, p) in env.pixels.iter_mut().enumerate() {
        let d = size.center_direction(k);
        *p = [0.05; 3];
        for (dir, rgb) in &blobs {
            let c = Direction::from_xyz(dir[0], dir[1], dir[2]).expect("nonzero");
            let w = (-c.angle_to(d).powi(2) / (2.0 * sigma * sigma)).exp();
            for ch in 0..3 {
                p[ch] += w * rgb[ch];
            }
        }
    }
    env
}

pub fn sphere(resolution: usize) -> Probe {
    Probe::sphere(resolution, Vec3::ZERO, 1.0, VIEW).expect("valid sphere")
}

pub fn material() -> Material {
    Material::uniform([0.6, 0.5, 0.4], 0.3, 200.0)
}

/// Four random-looking rank-two chromaticity rows of `cols` pixels.
pub fn chroma_stack(cols: usize) -> ChromaStack {
    let mut data = Vec::with_capacity(4 * 2 * cols);
    for r in 0..4 {
        for c in 0..cols {
            let t = (c as f64 * 0.37 + r as f64 * 1.3).sin();
            data.push(0.3 + 0.05 * t);
            data.push(0.35 - 0.04 * t * (r as f64 + 1.0) / 4.0);
        }
    }
    ChromaStack::new(4, 2 * cols, data).expect("consistent shape")
}

/// A traced map and its kernel parameters, ready for deconvolution.
pub fn traced(height: usize, resolution: usize) -> (EnvironmentMap, KernelParamMap) {
    let env = blob_env(height);
    let probe = sphere(resolution);
    let material = material();
    let layers = lumiprobe::render_probe(&probe, &material, &env, VIEW).expect("render");
    let radiance: Image = highlight_to_radiance(&layers.highlight, &probe, &material).expect("radiance");
    trace_inverse(&radiance, &probe, &material, VIEW, env.size(), InverseTraceOptions::default()).expect("trace")
}
