//! Correspondence of lights detected by several probes.
//!
//! Lights are first matched by chromaticity. When one probe sees several
//! lights of the same color, every pairing between the first two probes is
//! triangulated and scored by the angular error of the resulting points as
//! seen from the third probe; the lowest-error pairing wins.

use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3};

use super::triangulate::{triangulate, Ray};
use super::LightEstimate;

pub const DEFAULT_COLOR_TOLERANCE: f64 = 0.05;

/// Lights detected in one probe's environment map, with the probe's
/// scene-space position.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeLights {
    pub position: Vec3,
    pub lights: Vec<LightEstimate>,
}

/// One physical light: the index of its detection in each probe, if seen.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    pub color: [f64; 3],
    pub members: Vec<Option<usize>>,
}

/// A candidate pairing of same-colored lights between probes 0 and 1, with
/// its total angular error (radians) on probe 2.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingScore {
    pub pairs: Vec<(usize, usize)>,
    pub error: f64,
    pub chosen: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightMatching {
    pub correspondences: Vec<Correspondence>,
    /// Every pairing scored while resolving same-color groups.
    pub pairings: Vec<PairingScore>,
}

/// Euclidean distance between the `(r, g)` chromaticities of two colors.
pub fn chroma_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// All injective assignments of `k` items into `slots`, in lexicographic
/// order.
fn injections(k: usize, slots: &[usize]) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &s) in slots.iter().enumerate() {
        let rest: Vec<usize> = slots.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
        for mut tail in injections(k - 1, &rest) {
            tail.insert(0, s);
            out.push(tail);
        }
    }
    out
}

pub fn match_lights(probes: &[ProbeLights], color_tol: f64) -> Result<LightMatching> {
    if probes.len() < 2 {
        return Err(Error::domain("light matching needs at least two probes"));
    }
    let reference = &probes[0].lights;

    // Color groups of the reference probe.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, l) in reference.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| chroma_distance(reference[g[0]].color, l.color) <= color_tol)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    let mut used: Vec<Vec<bool>> = probes.iter().map(|p| vec![false; p.lights.len()]).collect();
    let mut correspondences = Vec::new();
    let mut pairings = Vec::new();

    for group in groups {
        let color = reference[group[0]].color;
        let candidates: Vec<Vec<usize>> = probes
            .iter()
            .enumerate()
            .map(|(q, p)| {
                let mut c: Vec<usize> = (0..p.lights.len())
                    .filter(|&l| !used[q][l] && chroma_distance(p.lights[l].color, color) <= color_tol)
                    .collect();
                c.sort_by(|&a, &b| {
                    chroma_distance(p.lights[a].color, color).total_cmp(&chroma_distance(p.lights[b].color, color))
                });
                c
            })
            .collect();

        let ambiguous = group.len() > 1 && candidates[1..].iter().any(|c| c.len() > 1);
        if !ambiguous {
            for &i in &group {
                let mut members = vec![None; probes.len()];
                members[0] = Some(i);
                for q in 1..probes.len() {
                    if let Some(&l) = candidates[q].iter().find(|&&l| !used[q][l]) {
                        members[q] = Some(l);
                        used[q][l] = true;
                    }
                }
                used[0][i] = true;
                correspondences.push(Correspondence { color, members });
            }
            continue;
        }

        let k = group.len().min(candidates[1].len());
        let options = injections(k, &candidates[1]);
        if probes.len() < 3 {
            return Err(Error::Ambiguity {
                candidates: options
                    .iter()
                    .map(|o| group.iter().copied().zip(o.iter().copied()).collect())
                    .collect(),
            });
        }

        let third = &probes[2];
        let score = |assign: &[usize]| -> (f64, Vec<Option<Vec3>>) {
            let mut total = 0.0;
            let mut points = Vec::new();
            for (&i, &j) in group.iter().zip(assign) {
                let rays = [
                    Ray {
                        origin: probes[0].position,
                        direction: reference[i].direction,
                    },
                    Ray {
                        origin: probes[1].position,
                        direction: probes[1].lights[j].direction,
                    },
                ];
                let Ok(t) = triangulate(&rays) else {
                    return (f64::INFINITY, Vec::new());
                };
                let Ok(seen) = Direction::new(t.position - third.position) else {
                    return (f64::INFINITY, Vec::new());
                };
                let err = candidates[2]
                    .iter()
                    .map(|&l| third.lights[l].direction.angle_to(seen))
                    .fold(f64::INFINITY, f64::min);
                total += err;
                points.push(Some(t.position));
            }
            (total, points)
        };

        let scored: Vec<(f64, Vec<Option<Vec3>>)> = options.iter().map(|o| score(o)).collect();
        let best = (0..options.len())
            .min_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0))
            .expect("at least one pairing");
        for (o, (err, _)) in options.iter().zip(&scored) {
            pairings.push(PairingScore {
                pairs: group.iter().copied().zip(o.iter().copied()).collect(),
                error: *err,
                chosen: false,
            });
        }
        let offset = pairings.len() - options.len();
        pairings[offset + best].chosen = true;

        let assign = &options[best];
        let points = &scored[best].1;
        for (slot, &i) in group.iter().enumerate() {
            let mut members = vec![None; probes.len()];
            members[0] = Some(i);
            used[0][i] = true;
            if slot < assign.len() {
                members[1] = Some(assign[slot]);
                used[1][assign[slot]] = true;
            }
            let point = points.get(slot).copied().flatten();
            for q in 2..probes.len() {
                let pick = match point.and_then(|x| Direction::new(x - probes[q].position).ok()) {
                    Some(seen) => candidates[q]
                        .iter()
                        .filter(|&&l| !used[q][l])
                        .min_by(|&&a, &&b| {
                            probes[q].lights[a]
                                .direction
                                .angle_to(seen)
                                .total_cmp(&probes[q].lights[b].direction.angle_to(seen))
                        })
                        .copied(),
                    None => None,
                };
                if let Some(l) = pick {
                    members[q] = Some(l);
                    used[q][l] = true;
                }
            }
            correspondences.push(Correspondence { color, members });
        }
    }

    Ok(LightMatching {
        correspondences,
        pairings,
    })
}
