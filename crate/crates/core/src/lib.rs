//! Recovering lighting environment maps from specular highlights on a probe
//! of known geometry: a sphere or an arbitrary normal map.
//!
//! The pipeline separates the highlight layer with a low-rank chromaticity
//! objective ([`lowrank`]), traces it out to an equirectangular map and
//! deconvolves the specular lobe ([`envmap`]), and locates point lights from
//! several probes ([`lights`]). [`render`] is the forward model used to
//! synthesize inputs and to score estimates by relighting ([`eval`]).

pub mod envmap;
pub mod equirect;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod lights;
pub mod lowrank;
pub mod metrics;
pub mod pfm;
pub mod probe;
pub mod render;
pub mod scene;

pub use envmap::{estimate_envmap, estimate_from_layers, EnvEstimate, EstimateConfig, EstimateInput, KernelParamMap};
pub use equirect::{direction_to_pixel, pixel_to_direction, MapSize, PixelCoord};
pub use error::{Error, Result};
pub use eval::{relight_error, RelightError, RelightSpec};
pub use geometry::{phong_specular, reflect, Direction, Vec3};
pub use image::{EnvironmentMap, Image};
pub use lights::LightEstimate;
pub use lowrank::{separate_highlights, sigma2_loss, ChromaStack, LowRankLoss, SeparationProblem, SeparationResult};
pub use metrics::{rmse, ssim};
pub use probe::{Material, Probe, ProbeKind, RegionMaterial};
pub use render::{clip_to_ldr, render_probe, LayerSet};
pub use scene::SceneDescription;
