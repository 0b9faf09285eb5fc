//! Additive noise, PSNR, and the synthetic test image.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{AppError, AppResult};
use crate::image::ImageBuffer;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Adds `N(0, sigma^2)` (intensity units) per pixel in raster order, then rounds and clamps.
pub fn add_gaussian_noise(img: &ImageBuffer, sigma: f64, seed: u64) -> AppResult<ImageBuffer> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(AppError::Validation(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| AppError::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = img.maxval() as f64;
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| (p as f64 + normal.sample(&mut rng)).round().clamp(0.0, m) as u16)
        .collect();
    Ok(ImageBuffer::new(img.width(), img.height(), img.maxval(), pixels)?)
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> AppResult<f64> {
    if (a.width(), a.height(), a.maxval()) != (b.width(), b.height(), b.maxval()) {
        return Err(AppError::Validation(format!(
            "psnr needs equal shapes and depths: {}x{}/{} vs {}x{}/{}",
            a.width(),
            a.height(),
            a.maxval(),
            b.width(),
            b.height(),
            b.maxval()
        )));
    }
    let sum: f64 = a.pixels().iter().zip(b.pixels()).map(|(&p, &q)| (p as f64 - q as f64).powi(2)).sum();
    Ok(sum / a.pixels().len() as f64)
}

/// `10 log10(maxval^2 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(clean: &ImageBuffer, test: &ImageBuffer) -> AppResult<f64> {
    let e = mse(clean, test)?;
    if e == 0.0 {
        return Ok(PSNR_CAP);
    }
    let m = clean.maxval() as f64;
    Ok((10.0 * (m * m / e).log10()).min(PSNR_CAP))
}

/// 8-bit `size x size` test card: a bright square, a disc and a dark
/// triangle on a mid-dark background.
pub fn synthetic_shapes(size: usize) -> AppResult<ImageBuffer> {
    let s = size as f64;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (px, py) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
            let mut v = 60u16;
            if (0.15..0.45).contains(&px) && (0.15..0.45).contains(&py) {
                v = 200;
            }
            if (px - 0.68).hypot(py - 0.32) < 0.17 {
                v = 150;
            }
            // apex (0.5, 0.55), base from (0.25, 0.88) to (0.8, 0.88)
            let inside = py < 0.88 && py > 0.55 && {
                let f = (py - 0.55) / 0.33;
                px > 0.5 - 0.25 * f && px < 0.5 + 0.3 * f
            };
            if inside {
                v = 15;
            }
            pixels.push(v);
        }
    }
    Ok(ImageBuffer::new(size, size, 255, pixels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_identity_and_seed_is_reproducible() {
        let img = synthetic_shapes(32).unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 3).unwrap(), img);
        let a = add_gaussian_noise(&img, 15.0, 3).unwrap();
        assert_eq!(a, add_gaussian_noise(&img, 15.0, 3).unwrap());
        assert_ne!(a, add_gaussian_noise(&img, 15.0, 4).unwrap());
    }

    #[test]
    fn empirical_sigma_matches() {
        let img = ImageBuffer::filled(256, 256, 255, 128).unwrap();
        let noisy = add_gaussian_noise(&img, 10.0, 11).unwrap();
        let d: Vec<f64> = noisy.pixels().iter().map(|&p| p as f64 - 128.0).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((sd - 10.0).abs() < 0.5, "{sd}");
    }

    #[test]
    fn psnr_closed_forms() {
        let a = ImageBuffer::filled(8, 8, 255, 100).unwrap();
        let b = ImageBuffer::filled(8, 8, 255, 110).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        let expected = 20.0 * (255.0f64 / 10.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 28.13).abs() < 0.01);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        assert!(psnr(&a, &ImageBuffer::filled(8, 7, 255, 0).unwrap()).is_err());
    }

    #[test]
    fn synthetic_image_has_four_levels() {
        let img = synthetic_shapes(64).unwrap();
        let mut levels: Vec<u16> = img.pixels().to_vec();
        levels.sort_unstable();
        levels.dedup();
        assert_eq!(levels, vec![15, 60, 150, 200]);
        assert_eq!(img.get(0, 0), 60);
    }
}
