//! 8-bit grayscale image value type and the pixelwise arithmetic the
//! measures are built from.
//!
//! Pixels are stored row-major with the origin at the top-left corner.

use crate::error::{Error, Result};

/// Number of representable intensities.
pub const LEVELS: usize = 256;

/// An owned 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    /// Wraps a row-major pixel buffer.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width.checked_mul(height).ok_or_else(|| {
            Error::InvalidImage(format!("{width}x{height} overflows the address space"))
        })?;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} image needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A constant image.
    ///
    /// # Panics
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// # Panics
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    /// Always false; images have positive dimensions.
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub(crate) fn same_shape(&self, other: &Image) -> Result<()> {
        if self.dimensions() == other.dimensions() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    /// Applies `f` to corresponding pixel pairs.
    pub fn zip_map(&self, other: &Image, f: impl Fn(u8, u8) -> u8) -> Result<Image> {
        self.same_shape(other)?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Image {
            width: self.width,
            height: self.height,
            pixels,
        })
    }

    pub fn map(&self, mut f: impl FnMut(u8) -> u8) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pixelwise minimum (infimum in the image lattice).
    pub fn inf(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, u8::min)
    }

    /// Pixelwise maximum (supremum in the image lattice).
    pub fn sup(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, u8::max)
    }

    /// Complement `255 - v`.
    pub fn invert(&self) -> Image {
        self.map(|v| 255 - v)
    }

    /// True when every pixel of `self` is `<=` the matching pixel of `other`.
    pub fn le(&self, other: &Image) -> bool {
        self.dimensions() == other.dimensions()
            && self.pixels.iter().zip(&other.pixels).all(|(a, b)| a <= b)
    }

    pub fn is_zero(&self) -> bool {
        self.pixels.iter().all(|&v| v == 0)
    }
}

/// Intensity histogram with one bin per grey level.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Histogram {
    counts: [u64; LEVELS],
}

impl Histogram {
    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn get(&self, level: u8) -> u64 {
        self.counts[level as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Running sum: entry `k` counts pixels with value `<= k`.
    pub fn cumulative(&self) -> [u64; LEVELS] {
        let mut out = [0u64; LEVELS];
        let mut acc = 0u64;
        for (dst, &c) in out.iter_mut().zip(&self.counts) {
            acc += c;
            *dst = acc;
        }
        out
    }
}

/// Pixelwise `|a - b|`.
pub fn abs_diff(a: &Image, b: &Image) -> Result<Image> {
    a.zip_map(b, |x, y| x.abs_diff(y))
}

pub fn histogram(img: &Image) -> Histogram {
    let mut counts = [0u64; LEVELS];
    for &v in img.pixels() {
        counts[v as usize] += 1;
    }
    Histogram { counts }
}

/// Sum of all grey levels.
pub fn volume(img: &Image) -> u64 {
    img.pixels().iter().map(|&v| u64::from(v)).sum()
}
