//! Batch pipeline around `edgeflow-core`: grayscale image IO, noise and
//! PSNR, `key = value` configs, run manifests, and the `restore`, `verify`,
//! `sweep` and `converge` commands behind the `edgeflow` binary.

pub mod commands;
pub mod config;
pub mod convert;
pub mod error;
pub mod image;
pub mod manifest;
pub mod noise;
pub mod pipeline;

pub use config::Config;
pub use error::{AppError, AppResult};
pub use image::{load_image, save_image, ImageBuffer};
pub use manifest::RunManifest;
