//! Detection of multiple global reflection-symmetry axes.
//!
//! The pipeline runs in four stages:
//!
//! 1. **Features** – multi-scale Morlet wavelet responses sampled on a regular
//!    grid, each point carrying an edge magnitude, an edge direction and a
//!    local orientation histogram ([`features`]).
//! 2. **Voting** – every same-scale feature pair is triangulated into the
//!    perpendicular bisector of its segment, a candidate axis `(theta, rho)`
//!    weighted by magnitude, mirror and texture agreement ([`voting`]).
//! 3. **Density** – candidates are smoothed by a weighted product of a
//!    Gaussian kernel over `rho` and a von Mises–Fisher kernel over the
//!    doubled angle `2 theta` on a regular grid ([`density`]).
//! 4. **Peaks** – non-maximal suppression extracts axis hypotheses; the
//!    supporting pairs of each peak give the axis its spatial extent
//!    ([`peaks`]).
//!
//! Detections are scored against ground truth with [`evaluation`].
//!
//! ```
//! use symdetect::{detect, GrayImage, PipelineConfig};
//!
//! // A small image, mirrored about its vertical midline.
//! let (w, h) = (128, 128);
//! let mut px = vec![0.0; w * h];
//! let mut state = 7u64;
//! for y in 0..h {
//!     for x in 0..w / 2 {
//!         state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
//!         let v = (state >> 11) as f64 / (1u64 << 53) as f64;
//!         px[y * w + x] = v;
//!         px[y * w + (w - 1 - x)] = v;
//!     }
//! }
//! let image = GrayImage::new(w, h, px).unwrap();
//! let mut config = PipelineConfig::default();
//! config.features.num_scales = 3;
//! let axes = detect(&image, &config).unwrap();
//! // The strongest axis is the vertical line x = 64.
//! let best = &axes[0];
//! assert!((best.endpoints[0][0] - 64.0).abs() < 1.0);
//! assert!((best.endpoints[1][0] - 64.0).abs() < 1.0);
//! ```

pub mod config;
pub mod density;
mod error;
pub mod evaluation;
pub mod features;
pub mod hull;
pub mod image;
pub mod io;
pub mod peaks;
pub mod pipeline;
pub mod special;
pub mod synthetic;
pub mod voting;

pub use crate::config::PipelineConfig;
pub use crate::density::{DensityGrid, GridSpec, KernelParams};
pub use crate::error::{Error, Result};
pub use crate::evaluation::{GtAxis, MatchReport, PrCurve, Segment};
pub use crate::features::{FeaturePoint, FilterBankConfig};
pub use crate::image::GrayImage;
pub use crate::peaks::{Peak, SymmetryAxis};
pub use crate::pipeline::{detect, run, Detection, PipelineOutput};
pub use crate::voting::{AxisCandidate, CandidateSet};

// The guide under `book/` is compiled as doc-tests so its snippets stay in
// sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/voting.md")]
    mod voting {}
    #[doc = include_str!("../../../book/src/density.md")]
    mod density {}
    #[doc = include_str!("../../../book/src/peaks.md")]
    mod peaks {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
