use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3};

use super::matching::{LightMatching, ProbeLights};
use super::LightEstimate;

/// Smallest eigenvalue of the normal equations below which the rays are
/// considered parallel.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangulation {
    pub position: Vec3,
    /// RMS point-to-ray distance.
    pub residual: f64,
}

fn projector(d: Direction) -> Matrix3<f64> {
    let v = Vector3::new(d.x(), d.y(), d.z());
    Matrix3::identity() - v * v.transpose()
}

/// Least-squares point closest to all rays, from the 3×3 normal equations
/// `Σ(I − ddᵀ) x = Σ(I − ddᵀ) o`.
pub fn triangulate(rays: &[Ray]) -> Result<Triangulation> {
    if rays.len() < 2 {
        return Err(Error::domain("triangulation needs at least two rays"));
    }
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for r in rays {
        let p = projector(r.direction);
        a += p;
        b += p * Vector3::new(r.origin.x, r.origin.y, r.origin.z);
    }
    let min_eig = SymmetricEigen::new(a).eigenvalues.min();
    if min_eig < DEGENERATE_EIGENVALUE {
        return Err(Error::DegenerateGeometry(format!(
            "rays are nearly parallel (smallest eigenvalue {min_eig:e})"
        )));
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DegenerateGeometry("singular normal equations".into()))?;
    let position = Vec3::new(x[0], x[1], x[2]);
    let sq: f64 = rays
        .iter()
        .map(|r| {
            let off = position - r.origin;
            let along = off.dot(r.direction.vec());
            let perp = off - r.direction.vec() * along;
            perp.dot(perp)
        })
        .sum();
    Ok(Triangulation {
        position,
        residual: (sq / rays.len() as f64).sqrt(),
    })
}

/// Locates every matched light seen by at least two probes. The returned
/// estimates take direction, color and intensity from the first probe that
/// saw the light.
pub fn triangulate_matches(probes: &[ProbeLights], matching: &LightMatching) -> Result<Vec<LightEstimate>> {
    let mut out = Vec::new();
    for c in &matching.correspondences {
        let rays: Vec<Ray> = c
            .members
            .iter()
            .enumerate()
            .filter_map(|(q, m)| {
                m.map(|l| Ray {
                    origin: probes[q].position,
                    direction: probes[q].lights[l].direction,
                })
            })
            .collect();
        if rays.len() < 2 {
            continue;
        }
        let t = triangulate(&rays)?;
        let (q, l) = c
            .members
            .iter()
            .enumerate()
            .find_map(|(q, m)| m.map(|l| (q, l)))
            .expect("at least two members");
        let mut est = probes[q].lights[l].clone();
        est.position = Some(t.position);
        est.residual = Some(t.residual);
        out.push(est);
    }
    Ok(out)
}
