//! Reference-free noise measures on difference images.
//!
//! `M` weights every grey level of a difference image by its frequency,
//! `M = sum_k k * H(k)`, which is just the image volume. Evaluated over the
//! opening granulometry it becomes a per-size family.
//!
//! `M*` scores one filter output `FT` against the noisy input `N` and a
//! second candidate's output. With
//!
//! ```text
//! A_r(k) = k * H_r(k) of |N - FT|        B_r(k) = k * H_r(k) of |FT1 - FT2|
//! ```
//!
//! where `H_r` is the histogram after an opening of size `r`, there are two
//! ways to aggregate:
//!
//! * [`Aggregation::ElementwiseVolume`]: `sum_r sum_k A_r(k) * B_r(k)`. The
//!   weighted non-cumulative diagrams are multiplied cell by cell and the
//!   volume of the product is taken.
//! * [`Aggregation::PerRScalarProduct`]: `sum_r (sum_k A_r(k)) * (sum_k B_r(k))`,
//!   the literal product of the two per-size `M` values.
//!
//! The two disagree in general. Elementwise is the default.
//!
//! Everything is integer arithmetic. `M` fits in `u64` for any image that
//! fits in memory; `M*` is accumulated in `u128`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagrams::opening_sequence;
use crate::error::{Error, Result};
use crate::image::{abs_diff, histogram, Image, LEVELS};
use crate::morphology::Shape;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    ElementwiseVolume,
    PerRScalarProduct,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::ElementwiseVolume => "elementwise_volume",
            Aggregation::PerRScalarProduct => "per_r_scalar_product",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elementwise_volume" | "elementwise" | "volume" => Ok(Aggregation::ElementwiseVolume),
            "per_r_scalar_product" | "scalar" | "per_r" => Ok(Aggregation::PerRScalarProduct),
            other => Err(Error::InvalidConfig(format!(
                "unknown aggregation '{other}' (expected elementwise_volume or per_r_scalar_product)"
            ))),
        }
    }
}

/// Intensity-weighted non-cumulative diagram: `cells[r][k] = k * H_r(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedDiagram {
    rows: Vec<[u64; LEVELS]>,
}

impl WeightedDiagram {
    pub fn new(diff: &Image, r_max: usize, shape: Shape) -> Self {
        let rows = opening_sequence(diff, r_max, shape)
            .iter()
            .map(|img| {
                let counts = histogram(img);
                let mut row = [0u64; LEVELS];
                for (k, (dst, &c)) in row.iter_mut().zip(counts.counts()).enumerate() {
                    *dst = k as u64 * c;
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[[u64; LEVELS]] {
        &self.rows
    }

    /// Per-size `M` values (row sums).
    pub fn m_family(&self) -> Vec<u64> {
        self.rows.iter().map(|row| row.iter().sum()).collect()
    }

    /// Combines with the cross-term diagram. Both must have the same `r_max`.
    pub fn combine(&self, cross: &WeightedDiagram, aggregation: Aggregation) -> u128 {
        debug_assert_eq!(self.rows.len(), cross.rows.len());
        self.rows
            .iter()
            .zip(&cross.rows)
            .map(|(a, b)| match aggregation {
                Aggregation::ElementwiseVolume => a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| u128::from(x) * u128::from(y))
                    .sum::<u128>(),
                Aggregation::PerRScalarProduct => {
                    u128::from(a.iter().sum::<u64>()) * u128::from(b.iter().sum::<u64>())
                }
            })
            .sum()
    }
}

/// `sum_k k * H(k)` of a difference image.
pub fn measure_m(diff: &Image) -> u64 {
    histogram(diff)
        .counts()
        .iter()
        .enumerate()
        .map(|(k, &c)| k as u64 * c)
        .sum()
}

/// `measure_m(open(diff, r))` for `r = 0..=r_max`.
pub fn measure_m_family(diff: &Image, r_max: usize, shape: Shape) -> Vec<u64> {
    opening_sequence(diff, r_max, shape)
        .iter()
        .map(measure_m)
        .collect()
}

/// Relative measure of `ft_out` given the noisy input and the other
/// candidate's output. Lower is better.
pub fn measure_mstar(
    noisy: &Image,
    ft_out: &Image,
    other_out: &Image,
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
) -> Result<u128> {
    let own = WeightedDiagram::new(&abs_diff(noisy, ft_out)?, r_max, shape);
    let cross = WeightedDiagram::new(&abs_diff(ft_out, other_out)?, r_max, shape);
    Ok(own.combine(&cross, aggregation))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub m_scalar: u64,
    pub m_per_r: Vec<u64>,
    pub mstar: u128,
    pub aggregation: Aggregation,
}

/// `M` family of `|noisy - ft_out|` together with `M*` against `other_out`.
pub fn measure_report(
    noisy: &Image,
    ft_out: &Image,
    other_out: &Image,
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
) -> Result<MeasureReport> {
    let own = WeightedDiagram::new(&abs_diff(noisy, ft_out)?, r_max, shape);
    let cross = WeightedDiagram::new(&abs_diff(ft_out, other_out)?, r_max, shape);
    let m_per_r = own.m_family();
    Ok(MeasureReport {
        m_scalar: m_per_r[0],
        mstar: own.combine(&cross, aggregation),
        m_per_r,
        aggregation,
    })
}
