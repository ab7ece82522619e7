//! Joint refinement of lossily compressed stereo depth maps.
//!
//! Two rectified views of one scene are block-DCT quantized independently.
//! The decoder treats them as two descriptions of the same geometry and
//! alternates between warping one view onto the other and projecting the
//! result back onto that view's quantization bins.
//!
//! Module map:
//!
//! - [`codec`]: 8×8 orthonormal DCT, uniform quantizer, bin constraints and
//!   the `QDM1` description container.
//! - [`geometry`]: pinhole back-projection and re-projection.
//! - [`warp`]: forward warping, edge-adaptive interpolation, bilateral filter.
//! - [`pocs`]: the alternating-projection driver.
//! - [`metrics`]: PSNR, the averaged two-view score and error maps.
//! - [`scene`], [`pgm`], [`config`], [`pipeline`]: the end-to-end pipeline
//!   used by the `depthpocs` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod codec;
pub mod config;
pub mod error;
pub mod geometry;
pub mod map;
pub mod metrics;
pub mod pgm;
pub mod pipeline;
pub mod pocs;
pub mod scene;
pub mod warp;

pub use error::{Error, Result};
pub use map::DepthMap;
