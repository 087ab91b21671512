//! Salt-and-pepper corruption.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::XorShift64Star;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    probability: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(probability: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::InvalidConfig(format!(
                "noise probability {probability} outside [0, 1]"
            )));
        }
        Ok(Self { probability, seed })
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Replaces each pixel, with probability `p`, by 0 or 255 with equal odds.
///
/// Pixels are visited row-major and each consumes exactly two draws from a
/// [`XorShift64Star`] stream seeded with `spec.seed`: a uniform in `[0, 1)`
/// compared against `p`, then a coin whose top bit picks salt (255) or
/// pepper (0). The coin is drawn even for untouched pixels.
pub fn add_salt_pepper(img: &Image, spec: &NoiseSpec) -> Image {
    let mut rng = XorShift64Star::new(spec.seed);
    img.map(|v| {
        let replace = rng.chance(spec.probability);
        let salt = rng.next_bool();
        match (replace, salt) {
            (false, _) => v,
            (true, true) => 255,
            (true, false) => 0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> Image {
        Image::from_fn(64, 48, |x, y| (x * 2 + y) as u8 + 20)
    }

    #[test]
    fn probability_zero_is_identity() {
        let img = gradient();
        assert_eq!(add_salt_pepper(&img, &NoiseSpec::new(0.0, 5).unwrap()), img);
    }

    #[test]
    fn probability_one_saturates_everything() {
        let out = add_salt_pepper(&gradient(), &NoiseSpec::new(1.0, 5).unwrap());
        assert!(out.pixels().iter().all(|&v| v == 0 || v == 255));
        let salt = out.pixels().iter().filter(|&&v| v == 255).count();
        let n = out.len();
        assert!(salt > n / 3 && salt < 2 * n / 3);
    }

    #[test]
    fn invalid_probability() {
        assert!(NoiseSpec::new(-0.1, 0).is_err());
        assert!(NoiseSpec::new(1.5, 0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn seeds_differ() {
        let img = gradient();
        let a = add_salt_pepper(&img, &NoiseSpec::new(0.3, 1).unwrap());
        let b = add_salt_pepper(&img, &NoiseSpec::new(0.3, 2).unwrap());
        assert_ne!(a, b);
    }
}
