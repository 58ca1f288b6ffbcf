//! Richardson–Lucy deconvolution on the sphere with spatially varying,
//! normalized Phong kernels.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::EnvironmentMap;

use super::kernel::{phong_kernel, DEFAULT_CUTOFF_RATIO};
use super::trace::KernelParamMap;
use crate::geometry::lobe_cutoff;

/// Guards the ratio `observed / predicted`.
const RATIO_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RlOptions {
    pub iterations: usize,
    /// Early stop once `Σ|Δ| / Σ|x|` of an update falls below this.
    pub tolerance: f64,
    pub cutoff_ratio: f64,
}

impl Default for RlOptions {
    fn default() -> Self {
        Self {
            iterations: 30,
            tolerance: 1e-4,
            cutoff_ratio: DEFAULT_CUTOFF_RATIO,
        }
    }
}

/// Sparse blur operator `A` restricted to covered pixels; row `x` holds the
/// normalized kernel of `x` over covered pixels `y`.
#[derive(Clone, Debug)]
pub struct BlurOperator {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    col_sums: Vec<f64>,
}

impl BlurOperator {
    pub fn new(params: &KernelParamMap, cutoff_ratio: f64) -> Result<Self> {
        let size = params.size();
        let covered = params.coverage();
        let rows: Vec<Vec<(usize, f64)>> = (0..size.len())
            .into_par_iter()
            .map(|x| {
                if !covered[x] {
                    return Ok(Vec::new());
                }
                let cutoff = lobe_cutoff(params.alpha[x], cutoff_ratio);
                let k = phong_kernel(x, params, size, Some(cutoff))?;
                let mut row: Vec<(usize, f64)> = k
                    .taps
                    .iter()
                    .zip(&k.normalized)
                    .filter(|(t, _)| covered[t.index])
                    .map(|(t, &w)| (t.index, w))
                    .collect();
                let total: f64 = row.iter().map(|r| r.1).sum();
                if total <= 0.0 {
                    return Err(Error::domain(format!("kernel at pixel {x} has no covered support")));
                }
                for r in &mut row {
                    r.1 /= total;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut cols = vec![Vec::new(); size.len()];
        for (x, row) in rows.iter().enumerate() {
            for &(y, w) in row {
                cols[y].push((x, w));
            }
        }
        let col_sums = cols.iter().map(|c| c.iter().map(|e| e.1).sum()).collect();
        Ok(Self { rows, cols, col_sums })
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|row| row.iter().map(|&(y, w)| w * x[y]).sum())
            .collect()
    }

    fn backward(&self, r: &[f64]) -> Vec<f64> {
        self.cols
            .par_iter()
            .map(|col| col.iter().map(|&(x, w)| w * r[x]).sum())
            .collect()
    }

    /// Blurs a map with the normalized kernels; uncovered pixels come out
    /// zero.
    pub fn apply(&self, map: &EnvironmentMap) -> EnvironmentMap {
        let mut out = map.clone();
        for c in 0..3 {
            let chan: Vec<f64> = map.pixels.iter().map(|p| p[c]).collect();
            for (p, v) in out.pixels.iter_mut().zip(self.forward(&chan)) {
                p[c] = v;
            }
        }
        out
    }

    /// Runs up to `options.iterations` multiplicative updates per channel.
    /// Returns the estimate and the number of iterations performed.
    pub fn deconvolve(&self, blurred: &EnvironmentMap, options: &RlOptions) -> (EnvironmentMap, usize) {
        let mut out = blurred.masked(&blurred.coverage);
        let mut done = 0;
        let n = out.pixels.len();
        let mut chans: Vec<Vec<f64>> = (0..3)
            .map(|c| out.pixels.iter().map(|p| p[c].max(0.0)).collect())
            .collect();
        let observed = chans.clone();
        for it in 0..options.iterations {
            let mut change = 0.0;
            let mut mass = 0.0;
            for (est, obs) in chans.iter_mut().zip(&observed) {
                let pred = self.forward(est);
                let ratio: Vec<f64> = obs
                    .iter()
                    .zip(&pred)
                    .map(|(&o, &p)| if o <= 0.0 { 0.0 } else { o / p.max(RATIO_EPSILON) })
                    .collect();
                let back = self.backward(&ratio);
                for y in 0..n {
                    if self.col_sums[y] <= 0.0 {
                        continue;
                    }
                    let next = est[y] * back[y] / self.col_sums[y];
                    change += (next - est[y]).abs();
                    mass += est[y].abs();
                    est[y] = next;
                }
            }
            done = it + 1;
            if mass > 0.0 && change / mass < options.tolerance {
                break;
            }
        }
        for (k, p) in out.pixels.iter_mut().enumerate() {
            for c in 0..3 {
                p[c] = chans[c][k];
            }
        }
        (out, done)
    }
}

/// Richardson–Lucy deconvolution of a traced map with default options and
/// the given iteration count. Iteration 0 returns the input.
pub fn rl_deconvolve(
    blurred: &EnvironmentMap,
    params: &KernelParamMap,
    iterations: usize,
) -> Result<EnvironmentMap> {
    let options = RlOptions {
        iterations,
        ..RlOptions::default()
    };
    rl_deconvolve_with(blurred, params, &options).map(|(m, _)| m)
}

pub fn rl_deconvolve_with(
    blurred: &EnvironmentMap,
    params: &KernelParamMap,
    options: &RlOptions,
) -> Result<(EnvironmentMap, usize)> {
    if blurred.size() != params.size() {
        return Err(Error::domain("kernel parameters do not match the map size"));
    }
    if options.iterations == 0 {
        return Ok((blurred.clone(), 0));
    }
    let op = BlurOperator::new(params, options.cutoff_ratio)?;
    Ok(op.deconvolve(blurred, options))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equirect::MapSize;

    fn covered_map(size: MapSize, value: f64) -> (EnvironmentMap, KernelParamMap) {
        let mut env = EnvironmentMap::uncovered(size);
        for k in 0..size.len() {
            let (_, j) = size.coords(k);
            if (4..size.height - 4).contains(&j) {
                env.coverage[k] = true;
                env.pixels[k] = [value, 2.0 * value, 0.5 * value];
            }
        }
        let params = KernelParamMap::uniform(size, 60.0, 0.3, &env.coverage);
        (env, params)
    }

    #[test]
    fn uniform_map_is_a_fixed_point() {
        let size = MapSize::from_height(16).unwrap();
        let (env, params) = covered_map(size, 0.8);
        let op = BlurOperator::new(&params, DEFAULT_CUTOFF_RATIO).unwrap();
        let opts = RlOptions {
            iterations: 5,
            tolerance: 0.0,
            ..Default::default()
        };
        let (out, n) = op.deconvolve(&env, &opts);
        assert_eq!(n, 5);
        for (a, b) in out.pixels.iter().zip(&env.pixels) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let size = MapSize::from_height(8).unwrap();
        let (mut env, params) = covered_map(size, 0.2);
        env.pixels[3] = [7.0, 0.0, 1.0];
        assert_eq!(rl_deconvolve(&env, &params, 0).unwrap(), env);
    }

    #[test]
    fn iterates_stay_non_negative_and_uncovered_stays_dark() {
        let size = MapSize::from_height(16).unwrap();
        let (mut env, params) = covered_map(size, 0.0);
        for k in 0..size.len() {
            if env.coverage[k] {
                env.pixels[k] = [((k * 37) % 11) as f64, ((k * 7) % 5) as f64, 0.0];
            }
        }
        for it in [1, 3, 10] {
            let out = rl_deconvolve(&env, &params, it).unwrap();
            assert!(out.pixels.iter().flatten().all(|&v| v >= 0.0 && v.is_finite()));
            for k in 0..size.len() {
                if !env.coverage[k] {
                    assert_eq!(out.pixels[k], [0.0; 3]);
                    assert!(!out.coverage[k]);
                }
            }
        }
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let a = MapSize::from_height(8).unwrap();
        let b = MapSize::from_height(16).unwrap();
        let env = EnvironmentMap::new(a);
        let params = KernelParamMap::empty(b);
        assert!(rl_deconvolve(&env, &params, 3).is_err());
    }
}
