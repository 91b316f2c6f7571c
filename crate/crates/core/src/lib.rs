//! Camera lens distortion self-calibration from straight lines.
//!
//! Edgels are extracted once from the input image(s). A candidate correction
//! is scored by moving every edgel through the correction map, histogramming
//! the corrected normal orientations, and taking the entropy of that
//! histogram: straight lines concentrate into a few bins, curved ones smear.
//! Monte-Carlo restarted downhill simplex searches for the lowest entropy, and
//! the winning parameters drive an inverse-mapped bicubic resampling of the
//! image.
//!
//! Modules, in pipeline order:
//!
//! - [`edgels`]: gradients, stick tensor voting, saliency, stratified subsampling
//! - [`model`]: the anisotropic Harris correction map and its Jacobian
//! - [`hough`]: orientation histogram and entropy
//! - [`optim`]: scaled parameters, downhill simplex, Monte-Carlo restarts
//! - [`warp`]: corrected image generation
//! - [`synth`]: synthetic scenes and recovery studies

pub mod edgels;
pub mod error;
pub mod hough;
pub mod model;
pub mod optim;
pub mod raster;
pub mod synth;
pub mod warp;

pub use edgels::{extract_edgels, ExtractionConfig};
pub use error::{Error, Result};
pub use hough::{entropy, hough_1d, OrientationHistogram};
pub use model::{correct_point, invert_point, jacobian, transform_edgel, DistortionParams, Edgel};
pub use optim::{mcdh_calibrate, Calibration, ImageDims, ModelMode, OptimConfig};
pub use raster::GrayImage;
pub use warp::undistort_image;
