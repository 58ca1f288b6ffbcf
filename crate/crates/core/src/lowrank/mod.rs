//! Diffuse chromaticity, the stacked chromaticity matrix and its
//! second-singular-value loss.
//!
//! Diffuse layers of one object under different illuminants share their
//! chromaticity up to a global per-image scale, so the matrix whose rows are
//! the flattened `(r, g)` maps has rank one. Its second singular value `σ₂`
//! measures the departure from that ideal, and `∂σ₂/∂D = u₂ v₂ᵀ`.

mod separate;

pub use separate::{separate_highlights, SeparationProblem, SeparationResult, TraceRecord};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::image::Image;

/// Channel-sum floor below which chromaticity is undefined.
pub const CHROMA_EPSILON: f64 = 1e-4;

/// Relative singular-value gap under which `σ₂` is not differentiable.
pub const DEGENERATE_GAP: f64 = 1e-8;

/// Per-pixel `(r, g)` chromaticity; `None` marks pixels whose channel sum is
/// below the floor.
pub fn chromaticity(img: &Image, eps: f64) -> Result<Vec<Option<[f64; 2]>>> {
    if img.channels != 3 {
        return Err(Error::domain("chromaticity needs a 3-channel image"));
    }
    Ok(img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let s = p[0] + p[1] + p[2];
            (s >= eps).then(|| [p[0] / s, p[1] / s])
        })
        .collect())
}

/// Row-major `m × P` matrix whose rows are flattened chromaticity maps,
/// `(r, g)` interleaved per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChromaStack {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ChromaStack {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows < 2 || cols < rows || data.len() != rows * cols {
            return Err(Error::domain(format!(
                "chroma stack must be m × P with 2 ≤ m ≤ P, got {rows} × {cols} ({} entries)",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks the chromaticity maps of `images`, keeping only pixels that are
    /// valid in every image, unsaturated in every image and inside `mask`.
    /// Returns the stack and the kept pixel indices.
    pub fn from_images(images: &[Image], eps: f64, mask: Option<&[bool]>) -> Result<(Self, Vec<usize>)> {
        let first = images.first().ok_or_else(|| Error::domain("no images to stack"))?;
        let maps = images
            .iter()
            .map(|img| {
                first.ensure_same_dims(img)?;
                chromaticity(img, eps)
            })
            .collect::<Result<Vec<_>>>()?;
        let kept: Vec<usize> = (0..first.pixel_count())
            .filter(|&p| mask.is_none_or(|m| m[p]))
            .filter(|&p| maps.iter().all(|m| m[p].is_some()))
            .filter(|&p| images.iter().all(|img| !img.is_saturated(p)))
            .collect();
        let mut data = Vec::with_capacity(images.len() * kept.len() * 2);
        for m in &maps {
            for &p in &kept {
                data.extend_from_slice(&m[p].expect("filtered"));
            }
        }
        Ok((Self::new(images.len(), 2 * kept.len(), data)?, kept))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Outcome of [`sigma2_loss`].
#[derive(Clone, Debug)]
pub struct LowRankLoss {
    /// `σ₂`, the loss value.
    pub loss: f64,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// `∂σ₂/∂D`, laid out like the stack.
    pub gradient: Vec<f64>,
    /// Set when `σ₂` is repeated (gap to a neighbour below
    /// [`DEGENERATE_GAP`]); the gradient is then one subgradient element.
    pub subgradient: bool,
}

/// Second singular value of `d` and its gradient.
///
/// The left singular vectors come from the eigendecomposition of the small
/// Gram matrix `D Dᵀ`; each singular value is then `‖Dᵀ uᵢ‖` and
/// `vᵢ = Dᵀ uᵢ / σᵢ`, which keeps tiny singular values accurate.
pub fn sigma2_loss(d: &ChromaStack) -> Result<LowRankLoss> {
    if d.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("chroma stack contains NaN or Inf"));
    }
    let (m, p) = (d.rows, d.cols);
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for k in i..m {
            let s: f64 = d.row(i).iter().zip(d.row(k)).map(|(a, b)| a * b).sum();
            gram[(i, k)] = s;
            gram[(k, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let project = |u: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; p];
        for (i, &ui) in u.iter().enumerate() {
            for (wj, dj) in w.iter_mut().zip(d.row(i)) {
                *wj += ui * dj;
            }
        }
        w
    };

    let left: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    let mut projected: Vec<Vec<f64>> = left.iter().map(|u| project(u)).collect();
    let mut sigma: Vec<f64> = projected
        .iter()
        .map(|w| w.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    // Projections reorder only under rounding; keep σ descending.
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let left: Vec<Vec<f64>> = idx.iter().map(|&k| left[k].clone()).collect();
    projected = idx.iter().map(|&k| std::mem::take(&mut projected[k])).collect();
    sigma = idx.iter().map(|&k| sigma[k]).collect();

    let s1 = sigma[0];
    let s2 = sigma[1];
    let s3 = sigma.get(2).copied();
    let gap_tol = DEGENERATE_GAP * s1.max(f64::MIN_POSITIVE);
    let subgradient = s1 - s2 < gap_tol || s3.is_some_and(|s3| s2 - s3 < gap_tol);

    let mut gradient = vec![0.0; m * p];
    if s2 > 0.0 {
        let u2 = &left[1];
        let v2 = &projected[1];
        for i in 0..m {
            let row = &mut gradient[i * p..(i + 1) * p];
            for (g, &vj) in row.iter_mut().zip(v2) {
                *g = u2[i] * vj / s2;
            }
        }
    }

    Ok(LowRankLoss {
        loss: s2,
        singular_values: sigma,
        gradient,
        subgradient,
    })
}
