//! Point lights from environment maps and their 3D positions from several
//! probes.

mod detect;
mod matching;
mod triangulate;

pub use detect::{detect_lights, DEFAULT_NMS_RADIUS_DEG, DEFAULT_THRESHOLD};
pub use matching::{
    chroma_distance, match_lights, Correspondence, LightMatching, PairingScore, ProbeLights, DEFAULT_COLOR_TOLERANCE,
};
pub use triangulate::{triangulate, triangulate_matches, Ray, Triangulation, DEGENERATE_EIGENVALUE};

use serde::{Deserialize, Serialize};

use crate::geometry::{Direction, Vec3};

/// A light seen from one probe, optionally located in 3D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightEstimate {
    pub direction: Direction,
    /// RGB chromaticity, summing to one.
    pub color: [f64; 3],
    /// Radiant flux of the detected cluster, `Σ mean(rgb) · ΔΩ`.
    pub intensity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec3>,
    /// RMS ray distance of the triangulated position, scene units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}
