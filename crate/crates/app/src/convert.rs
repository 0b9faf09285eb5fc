//! Images to grid fields and back.
//!
//! Pixel `(x, y)` becomes interior node `(x, y)`; the Dirichlet ring sits
//! one pixel outside the image. Intensities are divided by `maxval`.

use edgeflow_core::{GridSpec, ScalarField};

use crate::error::{AppError, AppResult};
use crate::image::ImageBuffer;

/// How the image meets the homogeneous Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    /// `u = p / maxval`; the zero boundary darkens the frame.
    Raw,
    /// `u = p / maxval - l`, `l` the mean of the outermost pixel ring.
    Lift,
}

impl std::str::FromStr for FieldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" => Ok(FieldMode::Raw),
            "lift" => Ok(FieldMode::Lift),
            _ => Err(format!("expected raw or lift, got `{s}`")),
        }
    }
}

/// What [`field_to_image`] needs to undo [`image_to_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lift {
    pub mode: FieldMode,
    /// Added back before rescaling, in units of `maxval`.
    pub offset: f64,
    pub maxval: u16,
}

fn frame_mean(img: &ImageBuffer) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                sum += img.get(x, y) as f64;
                count += 1;
            }
        }
    }
    sum / count as f64
}

pub fn image_to_field(img: &ImageBuffer, spec: GridSpec, mode: FieldMode) -> AppResult<(ScalarField, Lift)> {
    if img.width() != spec.nx() || img.height() != spec.ny() {
        return Err(AppError::Validation(format!(
            "dimension mismatch: image is {}x{}, grid has {}x{} interior nodes",
            img.width(),
            img.height(),
            spec.nx(),
            spec.ny()
        )));
    }
    let m = img.maxval() as f64;
    let offset = match mode {
        FieldMode::Raw => 0.0,
        FieldMode::Lift => frame_mean(img) / m,
    };
    let values = img.pixels().iter().map(|&p| p as f64 / m - offset).collect();
    Ok((ScalarField::from_values(spec, values)?, Lift { mode, offset, maxval: img.maxval() }))
}

/// Inverse of [`image_to_field`], rounded and clamped to `0..=maxval`.
pub fn field_to_image(u: &ScalarField, lift: &Lift) -> AppResult<ImageBuffer> {
    let m = lift.maxval as f64;
    let pixels = u
        .values()
        .iter()
        .map(|&s| {
            let p = ((s + lift.offset) * m).round();
            if p.is_nan() {
                0
            } else {
                p.clamp(0.0, m) as u16
            }
        })
        .collect();
    Ok(ImageBuffer::new(u.spec().nx(), u.spec().ny(), lift.maxval, pixels)?)
}

/// Nearest-neighbour resampling to `width x height`.
pub fn resample_nearest(img: &ImageBuffer, width: usize, height: usize) -> AppResult<ImageBuffer> {
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = ((y as f64 + 0.5) * img.height() as f64 / height as f64) as usize;
        for x in 0..width {
            let sx = ((x as f64 + 0.5) * img.width() as f64 / width as f64) as usize;
            pixels.push(img.get(sx.min(img.width() - 1), sy.min(img.height() - 1)));
        }
    }
    Ok(ImageBuffer::new(width, height, img.maxval(), pixels)?)
}
