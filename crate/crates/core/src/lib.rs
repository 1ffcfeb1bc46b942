//! Sub-pixel landmark decoding from Gaussian heatmaps by pseudo-range
//! multilateration.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`codec`] renders landmarks as peak-normalised Gaussians and inverts
//!    them into per-cell pseudo-ranges, `D = sqrt(-2σ² ln H)`.
//! 2. [`anchors`] takes the K strongest cells as stations.
//! 3. [`decoders`] solves for the position: closed-form least squares,
//!    Gauss-Newton, or an exhaustive sub-pixel candidate grid scored in one
//!    pass, alongside the one-hot, two-hot and Taylor baselines.
//! 4. [`metrics`] and [`bench`] score the results (NME, heatmap losses,
//!    throughput) over corpora built by [`synth`].
//!
//! ```
//! use prm_decode::codec::{encode_unbiased, EncodingConfig, Landmark};
//! use prm_decode::decoders::{decode, DecodeConfig, DecoderKind};
//!
//! let cfg = EncodingConfig::new(8, 2.0, 8, 8);
//! let map = encode_unbiased(&Landmark::new(10.37, 22.81), &cfg).unwrap();
//! let hit = decode(DecoderKind::Pppsc, &map, &DecodeConfig::default()).unwrap();
//! assert!((hit.u - 1.29625).abs() <= 0.05 && (hit.v - 2.85125).abs() <= 0.05);
//! ```

pub mod anchors;
pub mod bench;
pub mod codec;
pub mod decoders;
mod error;
pub mod metrics;
pub mod synth;

pub use error::{Error, Result};
