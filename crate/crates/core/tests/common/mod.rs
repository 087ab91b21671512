//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's morphology or measure code.

#![allow(dead_code)]

use morphsi::{Image, Shape};

/// SplitMix64, used only to generate test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn byte(&mut self) -> u8 {
        self.next_u64() as u8
    }
}

/// Alternates between white noise, blocky piecewise-constant images and
/// sparse impulses so that lattice properties are exercised on structure.
pub fn random_image(rng: &mut TestRng, width: usize, height: usize) -> Image {
    match rng.below(3) {
        0 => Image::from_fn(width, height, |_, _| rng.byte()),
        1 => {
            let bw = 1 + rng.below(4) as usize;
            let bh = 1 + rng.below(4) as usize;
            let cols = width.div_ceil(bw);
            let blocks: Vec<u8> = (0..cols * height.div_ceil(bh))
                .map(|_| rng.byte())
                .collect();
            Image::from_fn(width, height, |x, y| blocks[(y / bh) * cols + x / bw])
        }
        _ => {
            let base = rng.byte() / 2 + 64;
            Image::from_fn(width, height, |_, _| match rng.below(10) {
                0 => 255,
                1 => 0,
                _ => base,
            })
        }
    }
}

pub fn in_element(shape: Shape, r: isize, dx: isize, dy: isize) -> bool {
    match shape {
        Shape::Square => dx.abs() <= r && dy.abs() <= r,
        Shape::Disk => dx * dx + dy * dy <= r * r,
        Shape::Cross => dx.abs() + dy.abs() <= r,
    }
}

fn brute_extremum(img: &Image, shape: Shape, r: usize, take_min: bool) -> Image {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let r = r as isize;
    Image::from_fn(img.width(), img.height(), |x, y| {
        let mut acc: Option<u8> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                if !in_element(shape, r, dx, dy) {
                    continue;
                }
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                let v = img.get(sx as usize, sy as usize);
                acc = Some(match acc {
                    None => v,
                    Some(a) if take_min => a.min(v),
                    Some(a) => a.max(v),
                });
            }
        }
        acc.expect("origin is always in the element")
    })
}

pub fn brute_erode(img: &Image, shape: Shape, r: usize) -> Image {
    brute_extremum(img, shape, r, true)
}

pub fn brute_dilate(img: &Image, shape: Shape, r: usize) -> Image {
    brute_extremum(img, shape, r, false)
}

pub fn brute_open(img: &Image, shape: Shape, r: usize) -> Image {
    brute_dilate(&brute_erode(img, shape, r), shape, r)
}

pub fn brute_close(img: &Image, shape: Shape, r: usize) -> Image {
    brute_erode(&brute_dilate(img, shape, r), shape, r)
}

pub fn brute_hist(img: &Image) -> Vec<u64> {
    let mut h = vec![0u64; 256];
    for y in 0..img.height() {
        for x in 0..img.width() {
            h[img.get(x, y) as usize] += 1;
        }
    }
    h
}

pub fn brute_absdiff(a: &Image, b: &Image) -> Image {
    Image::from_fn(a.width(), a.height(), |x, y| {
        (i32::from(a.get(x, y)) - i32::from(b.get(x, y))).unsigned_abs() as u8
    })
}

/// `M*` by explicit loops over `(r, k)` using only the brute-force helpers.
pub fn brute_mstar(
    n: &Image,
    ft: &Image,
    other: &Image,
    r_max: usize,
    shape: Shape,
    elementwise: bool,
) -> u128 {
    let own = brute_absdiff(n, ft);
    let cross = brute_absdiff(ft, other);
    let mut total: u128 = 0;
    for r in 0..=r_max {
        let ha = brute_hist(&brute_open(&own, shape, r));
        let hb = brute_hist(&brute_open(&cross, shape, r));
        if elementwise {
            for k in 0..256u128 {
                total += (k * ha[k as usize] as u128) * (k * hb[k as usize] as u128);
            }
        } else {
            let mut sa: u128 = 0;
            let mut sb: u128 = 0;
            for k in 0..256u128 {
                sa += k * ha[k as usize] as u128;
                sb += k * hb[k as usize] as u128;
            }
            total += sa * sb;
        }
    }
    total
}

pub fn load_test_image() -> Image {
    let bytes = std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/camera256.pgm"
    ))
    .expect("shipped test image");
    morphsi::pgm::load_pgm(&bytes).expect("valid PGM")
}
