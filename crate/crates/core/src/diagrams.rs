//! Granulometries and size/intensity diagrams.
//!
//! A size/intensity diagram stacks the histogram of an image filtered at
//! every element size `r = 0..=r_max` (row `r`, column `k` in memory).
//! Row 0 is the unfiltered image. The cumulative form replaces each
//! histogram by its running sum over intensities.
//!
//! When rendered, the roles flip to match the usual figure layout: columns
//! are sizes and rows are intensities, origin top-left.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::{histogram, Image, LEVELS};
use crate::morphology::{close, open, Shape, StructuringElement};

/// Default number of filtering steps after the original image.
pub const DEFAULT_R_MAX: usize = 15;

/// Which size-increasing family the diagram is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Granulometry {
    #[default]
    Opening,
    Closing,
}

/// `open(img, r)` (or `close`) for `r = 0..=r_max`; element 0 is `img`.
pub fn filtered_sequence(
    img: &Image,
    r_max: usize,
    shape: Shape,
    family: Granulometry,
) -> Vec<Image> {
    (0..=r_max)
        .map(|r| {
            let se = StructuringElement::new(shape, r);
            match family {
                Granulometry::Opening => open(img, se),
                Granulometry::Closing => close(img, se),
            }
        })
        .collect()
}

pub fn opening_sequence(img: &Image, r_max: usize, shape: Shape) -> Vec<Image> {
    filtered_sequence(img, r_max, shape, Granulometry::Opening)
}

/// `(r_max + 1) x 256` matrix of histogram counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiDiagram {
    rows: Vec<[u64; LEVELS]>,
    cumulative: bool,
    source_pixel_count: u64,
}

impl SiDiagram {
    /// Builds a diagram from raw rows, checking the row invariants.
    pub fn from_rows(
        rows: Vec<[u64; LEVELS]>,
        cumulative: bool,
        source_pixel_count: u64,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidImage("diagram needs at least one row".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            let ok = if cumulative {
                row.windows(2).all(|w| w[0] <= w[1]) && row[LEVELS - 1] == source_pixel_count
            } else {
                row.iter().sum::<u64>() == source_pixel_count
            };
            if !ok {
                return Err(Error::InvalidImage(format!(
                    "diagram row {r} is inconsistent with pixel count {source_pixel_count}"
                )));
            }
        }
        Ok(Self {
            rows,
            cumulative,
            source_pixel_count,
        })
    }

    pub fn r_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn is_cumulative(&self) -> bool {
        self.cumulative
    }

    pub fn source_pixel_count(&self) -> u64 {
        self.source_pixel_count
    }

    pub fn get(&self, r: usize, k: usize) -> u64 {
        self.rows[r][k]
    }

    pub fn row(&self, r: usize) -> &[u64; LEVELS] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[[u64; LEVELS]] {
        &self.rows
    }

    /// The cumulative form of this diagram (a clone when already cumulative).
    pub fn to_cumulative(&self) -> SiDiagram {
        if self.cumulative {
            return self.clone();
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc = 0;
                row.map(|c| {
                    acc += c;
                    acc
                })
            })
            .collect();
        SiDiagram {
            rows,
            cumulative: true,
            source_pixel_count: self.source_pixel_count,
        }
    }
}

/// Size/intensity diagram over a granulometry of `img`.
pub fn si_diagram_with(
    img: &Image,
    r_max: usize,
    shape: Shape,
    cumulative: bool,
    family: Granulometry,
) -> SiDiagram {
    let rows = filtered_sequence(img, r_max, shape, family)
        .iter()
        .map(|f| {
            let h = histogram(f);
            if cumulative {
                h.cumulative()
            } else {
                *h.counts()
            }
        })
        .collect();
    SiDiagram {
        rows,
        cumulative,
        source_pixel_count: img.len() as u64,
    }
}

/// Size/intensity diagram over the opening granulometry.
pub fn si_diagram(img: &Image, r_max: usize, shape: Shape, cumulative: bool) -> SiDiagram {
    si_diagram_with(img, r_max, shape, cumulative, Granulometry::Opening)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub x_scale: usize,
    pub y_scale: usize,
    pub value_scale: u64,
    /// Show only the first `r_crop` sizes.
    pub r_crop: Option<usize>,
    /// Show only the first `k_crop` intensities.
    pub k_crop: Option<usize>,
}

impl Default for RenderOptions {
    /// 5x wider, 2x taller, counts multiplied by 50.
    fn default() -> Self {
        Self {
            x_scale: 5,
            y_scale: 2,
            value_scale: 50,
            r_crop: None,
            k_crop: None,
        }
    }
}

/// Renders the diagram as an image: column block `r`, row block `k`, each
/// cell `min(255, count * value_scale)`.
pub fn render_si(d: &SiDiagram, opts: &RenderOptions) -> Result<Image> {
    if opts.x_scale == 0 || opts.y_scale == 0 || opts.value_scale == 0 {
        return Err(Error::InvalidRender("scales must be at least 1".into()));
    }
    let cols_available = d.rows.len();
    let cols = opts.r_crop.unwrap_or(cols_available);
    let rows = opts.k_crop.unwrap_or(LEVELS);
    if cols == 0 || cols > cols_available {
        return Err(Error::InvalidRender(format!(
            "size crop {cols} outside 1..={cols_available}"
        )));
    }
    if rows == 0 || rows > LEVELS {
        return Err(Error::InvalidRender(format!(
            "intensity crop {rows} outside 1..={LEVELS}"
        )));
    }

    let width = cols * opts.x_scale;
    let height = rows * opts.y_scale;
    let img = Image::from_fn(width, height, |x, y| {
        let count = d.rows[x / opts.x_scale][y / opts.y_scale];
        count.saturating_mul(opts.value_scale).min(255) as u8
    });
    Ok(img)
}

/// CSV dump: a `# cumulative=...` comment, the `r,k,count` header, then one
/// line per cell with `k` varying fastest.
pub fn export_csv(d: &SiDiagram) -> Vec<u8> {
    let mut out = String::with_capacity(d.rows.len() * LEVELS * 10);
    let _ = writeln!(out, "# cumulative={}", d.cumulative);
    out.push_str("r,k,count\n");
    for (r, row) in d.rows.iter().enumerate() {
        for (k, count) in row.iter().enumerate() {
            let _ = writeln!(out, "{r},{k},{count}");
        }
    }
    out.into_bytes()
}
