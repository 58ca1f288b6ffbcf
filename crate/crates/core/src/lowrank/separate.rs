//! Highlight separation by direct minimization of the low-rank loss.
//!
//! Each highlight pixel is modelled as `h · c` with a scalar `h ≥ 0` and the
//! batch's illumination color `c`, so the diffuse residual of image `k` is
//! `I_k − h_k c`. The batch must already be color-aligned: all images share
//! the same illuminant chromaticity. Projected gradient descent on `h` starts
//! from zero and keeps `0 ≤ h c ≤ I_k` at every iterate. White shared by
//! all images at a pixel is indistinguishable from diffuse light and is left
//! in the diffuse layer.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;

use super::{sigma2_loss, ChromaStack, CHROMA_EPSILON};

/// Accepted iterations in a row that may increase the loss before the run
/// is declared divergent.
const DIVERGENCE_STREAK: usize = 10;

/// `σ₂/σ₁` below which the stack counts as exactly rank one.
const RANK_ONE_FLOOR: f64 = 1e-10;

/// Loss increase, relative to the initial loss, tolerated when removing the
/// highlight shared by all images of a pixel.
const SHARED_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SeparationProblem {
    /// Aligned 3-channel composites of the same object, with saturation
    /// masks from clipping.
    pub batch: Vec<Image>,
    /// Pixels allowed to participate in the loss; `None` means all.
    pub mask: Option<Vec<bool>>,
    /// Illuminant color shared by the batch, also the highlight color.
    pub highlight_color: [f64; 3],
    /// Initial step of every backtracking line search.
    pub step_size: f64,
    pub iteration_budget: usize,
    /// Stop once the relative loss decrease of an accepted step falls below
    /// this.
    pub tolerance: f64,
    pub chroma_epsilon: f64,
}

impl SeparationProblem {
    pub fn new(batch: Vec<Image>) -> Self {
        Self {
            batch,
            mask: None,
            highlight_color: [1.0; 3],
            step_size: 64.0,
            iteration_budget: 2000,
            tolerance: 1e-10,
            chroma_epsilon: CHROMA_EPSILON,
        }
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .batch
            .first()
            .ok_or_else(|| Error::domain("empty separation batch"))?;
        if self.batch.len() < 2 {
            return Err(Error::domain("separation needs at least two images"));
        }
        for img in &self.batch {
            first.ensure_same_dims(img)?;
            if img.channels != 3 {
                return Err(Error::domain("separation needs 3-channel images"));
            }
        }
        if let Some(mask) = &self.mask {
            if mask.len() != first.pixel_count() {
                return Err(Error::domain("mask size does not match the batch"));
            }
            if !mask.iter().any(|&m| m) {
                return Err(Error::domain("separation mask is empty"));
            }
        }
        if self.highlight_color.iter().any(|&c| !(c >= 0.0)) || self.highlight_color.iter().sum::<f64>() <= 0.0 {
            return Err(Error::domain("highlight color must be non-negative and non-zero"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::domain("step size must be positive"));
        }
        Ok(())
    }
}

/// One accepted optimizer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub loss: f64,
    pub step: f64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "iteration={} loss={:e} step={:e}", self.iteration, self.loss, self.step)
    }
}

#[derive(Clone, Debug)]
pub struct SeparationResult {
    pub highlights: Vec<Image>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Pixels left out of the loss because a channel was saturated in some
    /// image of the batch; their highlight stays zero.
    pub saturated_excluded: Vec<bool>,
    /// Accepted steps taken at a repeated singular value.
    pub subgradient_steps: usize,
}

struct Workspace<'a> {
    problem: &'a SeparationProblem,
    kept: Vec<usize>,
    /// Upper bound of `h` per image and kept pixel.
    upper: Vec<Vec<f64>>,
}

impl Workspace<'_> {
    fn stack(&self, h: &[Vec<f64>]) -> Result<ChromaStack> {
        let c = self.problem.highlight_color;
        let n = self.kept.len();
        let mut data = Vec::with_capacity(h.len() * 2 * n);
        for (img, hk) in self.problem.batch.iter().zip(h) {
            for (&p, &hv) in self.kept.iter().zip(hk) {
                let [r, g, b] = img.rgb_at(p);
                let d = [r - hv * c[0], g - hv * c[1], b - hv * c[2]];
                let s = d[0] + d[1] + d[2];
                data.push(d[0] / s);
                data.push(d[1] / s);
            }
        }
        ChromaStack::new(h.len(), 2 * n, data)
    }

    /// Loss, gradient in `h`, subgradient flag and whether the stack is
    /// numerically rank one.
    fn loss_and_gradient(&self, h: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>, bool, bool)> {
        let d = self.stack(h)?;
        let out = sigma2_loss(&d)?;
        let c = self.problem.highlight_color;
        let csum = c[0] + c[1] + c[2];
        let cols = d.cols();
        let grad = h
            .iter()
            .enumerate()
            .map(|(k, hk)| {
                let img = &self.problem.batch[k];
                let g_row = &out.gradient[k * cols..(k + 1) * cols];
                self.kept
                    .iter()
                    .zip(hk)
                    .enumerate()
                    .map(|(col, (&p, &hv))| {
                        let [r, g, b] = img.rgb_at(p);
                        let s = r + g + b - hv * csum;
                        let cr = d.get(k, 2 * col);
                        let cg = d.get(k, 2 * col + 1);
                        let dr = -(c[0] - cr * csum) / s;
                        let dg = -(c[1] - cg * csum) / s;
                        g_row[2 * col] * dr + g_row[2 * col + 1] * dg
                    })
                    .collect()
            })
            .collect();
        let rank_one = out.loss <= RANK_ONE_FLOOR * out.singular_values[0];
        Ok((out.loss, grad, out.subgradient, rank_one))
    }

    fn loss(&self, h: &[Vec<f64>]) -> Result<f64> {
        Ok(sigma2_loss(&self.stack(h)?)?.loss)
    }
}

/// Recovers one highlight layer per batch image.
pub fn separate_highlights(problem: &SeparationProblem) -> Result<SeparationResult> {
    problem.validate()?;
    let eps = problem.chroma_epsilon;
    let (_, kept) = ChromaStack::from_images(&problem.batch, eps, problem.mask.as_deref())?;
    let first = &problem.batch[0];
    let saturated_excluded: Vec<bool> = (0..first.pixel_count())
        .map(|p| problem.batch.iter().any(|img| img.is_saturated(p)))
        .collect();

    let c = problem.highlight_color;
    let csum: f64 = c.iter().sum();
    let upper: Vec<Vec<f64>> = problem
        .batch
        .iter()
        .map(|img| {
            kept.iter()
                .map(|&p| {
                    let v = img.rgb_at(p);
                    let mut hi = (v[0] + v[1] + v[2] - eps) / csum;
                    for ch in 0..3 {
                        if c[ch] > 0.0 {
                            hi = hi.min(v[ch] / c[ch]);
                        }
                    }
                    hi.max(0.0)
                })
                .collect()
        })
        .collect();
    let ws = Workspace { problem, kept, upper };

    let mut h: Vec<Vec<f64>> = ws.upper.iter().map(|u| vec![0.0; u.len()]).collect();
    let (mut loss, mut grad, mut degenerate, mut rank_one) = ws.loss_and_gradient(&h)?;
    let initial_loss = loss;
    let mut trace = vec![TraceRecord {
        iteration: 0,
        loss,
        step: 0.0,
    }];
    let mut subgradient_steps = 0;
    let mut increases = 0;
    let min_step = problem.step_size * f64::powi(0.5, 40);
    let mut iterations = 0;

    while iterations < problem.iteration_budget && !rank_one {
        let mut step = problem.step_size;
        let accepted = loop {
            let candidate: Vec<Vec<f64>> = h
                .iter()
                .zip(&grad)
                .zip(&ws.upper)
                .map(|((hk, gk), uk)| {
                    hk.iter()
                        .zip(gk)
                        .zip(uk)
                        .map(|((&hv, &gv), &u)| (hv - step * gv).clamp(0.0, u))
                        .collect()
                })
                .collect();
            let cand_loss = ws.loss(&candidate)?;
            if !cand_loss.is_finite() {
                return Err(Error::Convergence { trace });
            }
            if cand_loss < loss {
                break Some((candidate, cand_loss));
            }
            step *= 0.5;
            if step < min_step {
                break None;
            }
        };
        let Some((next, next_loss)) = accepted else {
            break;
        };
        iterations += 1;
        if degenerate {
            subgradient_steps += 1;
        }
        if next_loss > loss {
            increases += 1;
            if increases >= DIVERGENCE_STREAK {
                return Err(Error::Convergence { trace });
            }
        } else {
            increases = 0;
        }
        let rel = (loss - next_loss) / loss.max(f64::MIN_POSITIVE);
        h = next;
        loss = next_loss;
        trace.push(TraceRecord {
            iteration: iterations,
            loss,
            step,
        });
        if rel < problem.tolerance {
            break;
        }
        (_, grad, degenerate, rank_one) = ws.loss_and_gradient(&h)?;
    }

    // A highlight common to every image of a pixel leaves all diffuse
    // chromaticities equal, so the loss cannot see it. Keep the least such
    // highlight unless removing the shared part costs loss.
    let canonical: Vec<Vec<f64>> = {
        let n = ws.kept.len();
        let floor: Vec<f64> = (0..n).map(|j| h.iter().map(|hk| hk[j]).fold(f64::INFINITY, f64::min)).collect();
        h.iter().map(|hk| hk.iter().zip(&floor).map(|(v, f)| v - f).collect()).collect()
    };
    let canonical_loss = ws.loss(&canonical)?;
    if canonical_loss <= loss + SHARED_SLACK * initial_loss {
        h = canonical;
        loss = canonical_loss;
    }

    let highlights = problem
        .batch
        .iter()
        .zip(&h)
        .map(|(img, hk)| {
            let mut out = Image::rgb(img.width, img.height);
            for (&p, &hv) in ws.kept.iter().zip(hk) {
                out.set_rgb(p, [hv * c[0], hv * c[1], hv * c[2]]);
            }
            out
        })
        .collect();

    Ok(SeparationResult {
        highlights,
        initial_loss,
        final_loss: loss,
        iterations,
        trace,
        saturated_excluded,
        subgradient_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(width: usize, px: &[[f64; 3]]) -> Image {
        Image::from_pixels(width, px.len() / width, 3, px.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn consistent_batch_stays_at_zero() {
        let albedo = [[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4], [0.6, 0.2, 0.2]];
        let batch: Vec<Image> = [1.0, 0.5, 0.8, 0.3]
            .iter()
            .map(|s| {
                let px: Vec<[f64; 3]> = albedo.iter().map(|a| [a[0] * s, a[1] * s, a[2] * s]).collect();
                flat(2, &px)
            })
            .collect();
        let out = separate_highlights(&SeparationProblem::new(batch)).unwrap();
        assert!(out.final_loss <= out.initial_loss);
        assert!((out.final_loss - out.initial_loss).abs() < 1e-6);
        for h in &out.highlights {
            assert!(h.pixels.iter().all(|&v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn removes_a_white_highlight() {
        let albedo = [[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4], [0.6, 0.2, 0.2]];
        let truth = [0.0, 0.2, 0.0, 0.0];
        let batch: Vec<Image> = (0..4)
            .map(|k| {
                let px: Vec<[f64; 3]> = albedo
                    .iter()
                    .enumerate()
                    .map(|(p, a)| {
                        let h = if p == k { truth[1] } else { 0.0 };
                        [a[0] + h, a[1] + h, a[2] + h]
                    })
                    .collect();
                flat(2, &px)
            })
            .collect();
        let out = separate_highlights(&SeparationProblem::new(batch.clone())).unwrap();
        assert!(out.final_loss < 1e-3 * out.initial_loss, "{} -> {}", out.initial_loss, out.final_loss);
        for (k, h) in out.highlights.iter().enumerate() {
            for p in 0..4 {
                let want = if p == k { 0.2 } else { 0.0 };
                assert!((h.get(p, 0) - want).abs() < 1e-3, "image {k} pixel {p}: {}", h.get(p, 0));
                for c in 0..3 {
                    assert!(h.get(p, c) >= 0.0 && h.get(p, c) <= batch[k].get(p, c));
                }
            }
        }
        // Accepted steps never increase the loss.
        assert!(out.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
    }

    #[test]
    fn saturated_pixels_are_excluded() {
        let mut batch: Vec<Image> = (0..4).map(|_| flat(2, &[[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.4, 0.4, 0.2], [0.1, 0.1, 0.1]])).collect();
        batch[1].saturation_mask[0] = true;
        let out = separate_highlights(&SeparationProblem::new(batch)).unwrap();
        assert!(out.saturated_excluded[0]);
        assert!(!out.saturated_excluded[1]);
        assert_eq!(out.highlights[1].rgb_at(0), [0.0; 3]);
    }

    #[test]
    fn invalid_problems_rejected() {
        let img = flat(1, &[[0.5, 0.3, 0.2], [0.1, 0.2, 0.3]]);
        assert!(separate_highlights(&SeparationProblem::new(vec![img.clone()])).is_err());
        let mut p = SeparationProblem::new(vec![img.clone(), img.clone()]);
        p.mask = Some(vec![false, false]);
        assert!(separate_highlights(&p).is_err());
        let other = flat(2, &[[0.5, 0.3, 0.2], [0.1, 0.2, 0.3]]);
        assert!(separate_highlights(&SeparationProblem::new(vec![img, other])).is_err());
    }

    #[test]
    fn trace_lines_are_key_value() {
        let r = TraceRecord {
            iteration: 3,
            loss: 0.5,
            step: 2.0,
        };
        assert_eq!(r.to_string(), "iteration=3 loss=5e-1 step=2e0");
    }
}
