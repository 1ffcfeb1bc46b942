//! Heatmap decoders.
//!
//! Six interchangeable ways of turning a heatmap back into a continuous
//! position, all reporting heatmap-pixel `(u, v)`:
//!
//! | kind     | input        | method                                            |
//! |----------|--------------|---------------------------------------------------|
//! | `onehot` | heatmap      | argmax cell                                       |
//! | `twohot` | heatmap      | argmax shifted a quarter pixel toward its best neighbour |
//! | `taylor` | heatmap      | second-order refinement of the log-heatmap        |
//! | `lsq`    | anchors      | linearised trilateration, normal equations        |
//! | `igno`   | anchors      | Gauss-Newton on the squared-range residuals       |
//! | `pppsc`  | heatmap+dmap | exhaustive sub-pixel grid around the argmax       |
//!
//! The multilateration decoders share one objective, [`prm_objective`]:
//! the sum over anchors of `((x - u)² + (y - v)² - d²)²`.

mod baseline;
mod grid;
mod multilat;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anchors::{select_anchors, AnchorSet, DEFAULT_K};
use crate::codec::{distance_transform, Heatmap, Landmark};
use crate::error::{config, Error, Result};

pub use baseline::{decode_onehot, decode_taylor, decode_twohot, TWOHOT_SHIFT};
pub use grid::{
    decode_pppsc, objective_eval, objective_eval_counted, objective_eval_parallel, CandidateGrid, ErrorMatrix,
};
pub use multilat::{decode_igno, decode_least_squares, prm_objective, prm_residual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Onehot,
    Twohot,
    Taylor,
    Lsq,
    Igno,
    Pppsc,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 6] = [
        DecoderKind::Onehot,
        DecoderKind::Twohot,
        DecoderKind::Taylor,
        DecoderKind::Lsq,
        DecoderKind::Igno,
        DecoderKind::Pppsc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Onehot => "onehot",
            DecoderKind::Twohot => "twohot",
            DecoderKind::Taylor => "taylor",
            DecoderKind::Lsq => "lsq",
            DecoderKind::Igno => "igno",
            DecoderKind::Pppsc => "pppsc",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                config(format!(
                    "unknown decoder '{s}' (expected one of onehot, twohot, taylor, lsq, igno, pppsc)"
                ))
            })
    }
}

/// Decoder hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Anchor count.
    pub k: usize,
    /// Candidate samples per heatmap pixel per axis.
    pub tau: u32,
    /// Half-extent of the candidate window around the argmax, heatmap px.
    pub window: f64,
    /// Gauss-Newton iteration cap.
    pub max_iter: usize,
    /// Gauss-Newton stops once the update norm drops below this.
    pub conv_tol: f64,
    /// Gaussian std used by the distance transform.
    pub sigma: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            tau: 10,
            window: 1.0,
            max_iter: 20,
            conv_tol: 1e-8,
            sigma: 2.0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(config("k must be >= 1"));
        }
        if self.tau < 1 {
            return Err(config("tau must be >= 1"));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(config(format!("window must be positive, got {}", self.window)));
        }
        if self.max_iter < 1 {
            return Err(config("max_iter must be >= 1"));
        }
        if !(self.conv_tol > 0.0 && self.conv_tol.is_finite()) {
            return Err(config(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// A decoded position in heatmap pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodedLandmark {
    pub u: f64,
    pub v: f64,
    /// Final multilateration objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Gauss-Newton steps taken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Whether Gauss-Newton met its tolerance before the cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    pub decoder: DecoderKind,
    /// Set when a solver hit a singular system and returned a fallback.
    #[serde(default, skip_serializing_if = "is_false")]
    pub degenerate: bool,
}

impl DecodedLandmark {
    pub(crate) fn at(u: f64, v: f64, decoder: DecoderKind) -> Self {
        Self {
            u,
            v,
            objective: None,
            iterations: None,
            converged: None,
            decoder,
            degenerate: false,
        }
    }

    /// Scales back to input-image pixels.
    pub fn to_landmark(&self, lambda: f64) -> Landmark {
        Landmark::new(self.u * lambda, self.v * lambda)
    }
}

/// Runs the full heatmap-to-coordinate pipeline for one decoder. Anchor
/// decoders build the distance map and anchor set first; Gauss-Newton starts
/// from the argmax.
pub fn decode(kind: DecoderKind, heatmap: &Heatmap, cfg: &DecodeConfig) -> Result<DecodedLandmark> {
    match kind {
        DecoderKind::Onehot => decode_onehot(heatmap),
        DecoderKind::Twohot => decode_twohot(heatmap),
        DecoderKind::Taylor => decode_taylor(heatmap, cfg.sigma),
        DecoderKind::Lsq => decode_least_squares(&anchors_for(heatmap, cfg)?),
        DecoderKind::Igno => {
            let init = decode_onehot(heatmap)?;
            decode_igno(&anchors_for(heatmap, cfg)?, cfg, &init)
        }
        DecoderKind::Pppsc => {
            let dmap = distance_transform(heatmap, cfg.sigma)?;
            decode_pppsc(heatmap, &dmap, cfg)
        }
    }
}

fn anchors_for(heatmap: &Heatmap, cfg: &DecodeConfig) -> Result<AnchorSet> {
    cfg.validate()?;
    // all-zero maps have no meaningful anchors
    decode_onehot(heatmap)?;
    let dmap = distance_transform(heatmap, cfg.sigma)?;
    select_anchors(heatmap, &dmap, cfg.k.min(heatmap.len()))
}
