//! Grayscale mathematical morphology with size/intensity diagrams and a
//! reference-free way to compare two noise filters.
//!
//! The pieces, bottom up:
//!
//! * [`image`] and [`pgm`]: 8-bit images, histograms, PGM files.
//! * [`morphology`]: flat erosion, dilation, opening, closing, alternating
//!   sequential filters and the morphological centre.
//! * [`diagrams`]: opening granulometries and size/intensity diagrams.
//! * [`measures`]: the `M` and `M*` noise measures.
//! * [`noise`]: reproducible salt-and-pepper corruption.
//! * [`selection`]: run two filters on one noisy image and pick the one
//!   with the lower `M*`.
//! * [`optimizer`]: genetic search over filter sequences using `M*` as the
//!   objective.

pub mod diagrams;
pub mod error;
pub mod image;
pub mod measures;
pub mod morphology;
pub mod noise;
pub mod optimizer;
pub mod pgm;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use image::{abs_diff, histogram, volume, Histogram, Image};
pub use morphology::{FilterKind, FilterSpec, MorphOp, Shape, StructuringElement};
