//! Tracing a probe's highlight layer out to the environment.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::equirect::MapSize;
use crate::error::{Error, Result};
use crate::geometry::{reflect, Direction, Vec3};
use crate::image::{EnvironmentMap, Image};
use crate::probe::{Material, Probe};

/// Per-pixel Phong parameters of the environment-space blur kernel.
///
/// Pixels without coverage carry `None` as their region.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParamMap {
    size: MapSize,
    pub alpha: Vec<f64>,
    pub ks: Vec<f64>,
    pub region: Vec<Option<u16>>,
}

impl KernelParamMap {
    pub fn empty(size: MapSize) -> Self {
        Self {
            size,
            alpha: vec![0.0; size.len()],
            ks: vec![0.0; size.len()],
            region: vec![None; size.len()],
        }
    }

    /// Same `(alpha, ks)` at every pixel where `coverage` is set.
    pub fn uniform(size: MapSize, alpha: f64, ks: f64, coverage: &[bool]) -> Self {
        let mut out = Self::empty(size);
        for (k, &c) in coverage.iter().enumerate() {
            if c {
                out.alpha[k] = alpha;
                out.ks[k] = ks;
                out.region[k] = Some(0);
            }
        }
        out
    }

    pub fn size(&self) -> MapSize {
        self.size
    }

    pub fn is_covered(&self, idx: usize) -> bool {
        self.region[idx].is_some()
    }

    pub fn coverage(&self) -> Vec<bool> {
        self.region.iter().map(Option::is_some).collect()
    }
}

fn check_aligned(highlight: &Image, probe: &Probe) -> Result<()> {
    if highlight.dims() != (probe.width, probe.height) {
        return Err(Error::DimensionMismatch {
            expected: (probe.width, probe.height),
            found: highlight.dims(),
        });
    }
    Ok(())
}

/// Splats every probe pixel's highlight at its mirror direction. Pixels hit
/// several times hold the average; untouched pixels stay uncovered.
pub fn trace_forward(
    highlight: &Image,
    probe: &Probe,
    view: Direction,
    size: MapSize,
) -> Result<EnvironmentMap> {
    check_aligned(highlight, probe)?;
    let mut sum = vec![[0.0; 3]; size.len()];
    let mut count = vec![0u32; size.len()];
    for (p, n) in probe.normals.iter().enumerate() {
        let Some(n) = n else { continue };
        let k = size.index_of(reflect(view, *n));
        let v = highlight.rgb_at(p);
        for c in 0..3 {
            sum[k][c] += v[c];
        }
        count[k] += 1;
    }
    let mut env = EnvironmentMap::uncovered(size);
    for k in 0..size.len() {
        if count[k] > 0 {
            let inv = 1.0 / count[k] as f64;
            env.pixels[k] = [sum[k][0] * inv, sum[k][1] * inv, sum[k][2] * inv];
            env.coverage[k] = true;
        }
    }
    Ok(env)
}

/// Uniform grid over the cube `[-1, 1]³` bucketing the probe's normals.
struct NormalIndex {
    cell: f64,
    buckets: HashMap<(i32, i32, i32), Vec<(usize, Vec3)>>,
}

impl NormalIndex {
    fn new(normals: impl Iterator<Item = (usize, Direction)>, cell: f64) -> Self {
        let mut buckets: HashMap<_, Vec<_>> = HashMap::new();
        let idx = Self { cell, buckets: HashMap::new() };
        for (p, n) in normals {
            buckets.entry(idx.key(n.vec())).or_default().push((p, n.vec()));
        }
        Self { buckets, ..idx }
    }

    fn key(&self, v: Vec3) -> (i32, i32, i32) {
        let f = |x: f64| ((x + 1.0) / self.cell).floor() as i32;
        (f(v.x), f(v.y), f(v.z))
    }

    /// Up to `k` nearest normals by chord distance, nearest first. Gives up
    /// (returning what it has) once the search radius passes `give_up` with
    /// nothing found inside it.
    fn nearest(&self, q: Vec3, k: usize, give_up: f64) -> Vec<(f64, usize)> {
        let (ci, cj, ck) = self.key(q);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let max_shell = (2.0 / self.cell).ceil() as i32 + 1;
        for r in 0..=max_shell {
            for di in -r..=r {
                for dj in -r..=r {
                    for dk in -r..=r {
                        if di.abs().max(dj.abs()).max(dk.abs()) != r {
                            continue;
                        }
                        if let Some(bucket) = self.buckets.get(&(ci + di, cj + dj, ck + dk)) {
                            found.extend(bucket.iter().map(|(p, n)| ((*n - q).norm(), *p)));
                        }
                    }
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            found.truncate(k);
            // Points in unvisited shells are at least r·cell away.
            let reach = r as f64 * self.cell;
            if found.len() == k && found[k - 1].0 <= reach {
                break;
            }
            if reach > give_up && found.first().is_none_or(|f| f.0 > give_up) {
                break;
            }
        }
        found
    }
}

fn chord_to_angle(c: f64) -> f64 {
    2.0 * (0.5 * c).min(1.0).asin()
}

/// Parameters of inverse warping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseTraceOptions {
    /// Number of nearest probe normals blended per environment pixel.
    pub neighbors: usize,
    /// Coverage radius as a multiple of the probe's mean normal spacing.
    pub coverage_factor: f64,
}

impl Default for InverseTraceOptions {
    fn default() -> Self {
        Self {
            neighbors: 4,
            coverage_factor: 2.0,
        }
    }
}

/// Pulls a highlight value into every environment pixel from the probe
/// normals nearest to the normal that would reflect the viewer into it.
///
/// Values are blended with inverse-angular-distance weights. A pixel is
/// covered when its required normal faces the viewer and the nearest probe
/// normal lies within `coverage_factor` mean spacings of it. The kernel
/// parameters come from the region of that nearest normal.
pub fn trace_inverse(
    highlight: &Image,
    probe: &Probe,
    material: &Material,
    view: Direction,
    size: MapSize,
    options: InverseTraceOptions,
) -> Result<(EnvironmentMap, KernelParamMap)> {
    check_aligned(highlight, probe)?;
    if options.neighbors == 0 {
        return Err(Error::domain("inverse tracing needs at least one neighbor"));
    }
    if probe.silhouette_count() == 0 {
        return Err(Error::domain("probe silhouette is empty"));
    }
    let spacing = probe.mean_normal_spacing();
    // A single normal has no spacing; accept only its exact direction then.
    let threshold = options.coverage_factor * spacing;
    let index = NormalIndex::new(
        probe
            .normals
            .iter()
            .enumerate()
            .filter_map(|(p, n)| n.map(|n| (p, n))),
        threshold.max(1e-3),
    );
    let chord_threshold = 2.0 * (0.5 * threshold).sin();

    let results: Vec<Option<([f64; 3], u16)>> = (0..size.len())
        .into_par_iter()
        .map(|k| {
            let d = size.center_direction(k);
            let sum = d.vec() + view.vec();
            if sum.norm() < 1e-9 {
                return None;
            }
            let np = Direction::new(sum).ok()?;
            if np.dot(view) <= 0.0 {
                return None;
            }
            let near = index.nearest(np.vec(), options.neighbors, chord_threshold);
            let &(c0, p0) = near.first()?;
            if c0 > chord_threshold + 1e-12 {
                return None;
            }
            let region = probe.regions[p0];
            let a0 = chord_to_angle(c0);
            if a0 < 1e-12 {
                return Some((highlight.rgb_at(p0), region));
            }
            let mut acc = [0.0; 3];
            let mut wsum = 0.0;
            for &(c, p) in &near {
                let w = 1.0 / chord_to_angle(c);
                let v = highlight.rgb_at(p);
                for ch in 0..3 {
                    acc[ch] += w * v[ch];
                }
                wsum += w;
            }
            Some(([acc[0] / wsum, acc[1] / wsum, acc[2] / wsum], region))
        })
        .collect();

    let mut env = EnvironmentMap::uncovered(size);
    let mut params = KernelParamMap::empty(size);
    for (k, r) in results.into_iter().enumerate() {
        if let Some((v, region)) = r {
            let m = material.region(region)?;
            env.pixels[k] = v;
            env.coverage[k] = true;
            params.alpha[k] = m.alpha;
            params.ks[k] = m.mean_ks();
            params.region[k] = Some(region);
        }
    }
    Ok((env, params))
}
