//! Flat grayscale morphology.
//!
//! Every operator takes its minimum or maximum over the structuring-element
//! offsets that fall inside the image; there is no padding value. With a
//! symmetric element this keeps erosion and dilation adjoint, so opening and
//! closing stay idempotent and the usual lattice identities hold exactly at
//! the borders too.
//!
//! Each element is decomposed into horizontal runs, one per row offset `dy`,
//! of half-width `w(dy)`. Rows are swept with the van Herk/Gil-Werman
//! recurrence (three comparisons per pixel regardless of the run length),
//! and the runs are then combined vertically. Squares have a constant
//! half-width and get a second separable pass instead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Chebyshev ball: offsets with `max(|dx|, |dy|) <= r`.
    #[default]
    Square,
    /// Euclidean ball: offsets with `dx^2 + dy^2 <= r^2`.
    Disk,
    /// Manhattan ball: offsets with `|dx| + |dy| <= r`.
    Cross,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Square, Shape::Disk, Shape::Cross];

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Disk => "disk",
            Shape::Cross => "cross",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Shape::Square),
            "disk" => Ok(Shape::Disk),
            "cross" => Ok(Shape::Cross),
            other => Err(Error::InvalidSpec(format!(
                "unknown structuring element shape '{other}' (expected square, disk or cross)"
            ))),
        }
    }
}

/// A flat, centred, symmetric structuring element. Size 0 is the single
/// origin pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StructuringElement {
    pub shape: Shape,
    pub size: usize,
}

impl StructuringElement {
    pub fn new(shape: Shape, size: usize) -> Self {
        Self { shape, size }
    }

    pub fn square(size: usize) -> Self {
        Self::new(Shape::Square, size)
    }

    /// Half-width of the horizontal run at row offset `dy` (`|dy| <= size`).
    fn half_width(&self, dy: usize) -> usize {
        let r = self.size;
        debug_assert!(dy <= r);
        match self.shape {
            Shape::Square => r,
            Shape::Cross => r - dy,
            Shape::Disk => isqrt(r * r - dy * dy),
        }
    }

    /// Every `(dx, dy)` offset covered by the element.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.size as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            let w = self.half_width(dy.unsigned_abs()) as isize;
            for dx in -w..=w {
                out.push((dx, dy));
            }
        }
        out
    }
}

fn isqrt(n: usize) -> usize {
    let mut x = (n as f64).sqrt() as usize;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

impl Extremum {
    /// Neutral element; padding with it is the same as clipping the window.
    fn identity(self) -> u8 {
        match self {
            Extremum::Min => u8::MAX,
            Extremum::Max => u8::MIN,
        }
    }

    #[inline]
    fn pick(self, a: u8, b: u8) -> u8 {
        match self {
            Extremum::Min => a.min(b),
            Extremum::Max => a.max(b),
        }
    }
}

/// Scratch buffers for the van Herk/Gil-Werman sweep.
struct Sweep {
    padded: Vec<u8>,
    prefix: Vec<u8>,
    suffix: Vec<u8>,
}

impl Sweep {
    fn new() -> Self {
        Self {
            padded: Vec::new(),
            prefix: Vec::new(),
            suffix: Vec::new(),
        }
    }

    /// `dst[i] = ext(src[i - radius ..= i + radius])`, clipped to `src`.
    fn run(&mut self, ext: Extremum, src: &[u8], radius: usize, dst: &mut [u8]) {
        let n = src.len();
        debug_assert_eq!(dst.len(), n);
        if radius == 0 {
            dst.copy_from_slice(src);
            return;
        }
        let window = 2 * radius + 1;
        let id = ext.identity();
        let len = n + 2 * radius;

        self.padded.clear();
        self.padded.resize(radius, id);
        self.padded.extend_from_slice(src);
        self.padded.resize(len, id);
        self.prefix.resize(len, id);
        self.suffix.resize(len, id);

        for start in (0..len).step_by(window) {
            let end = (start + window).min(len);
            let mut acc = id;
            for i in start..end {
                acc = ext.pick(acc, self.padded[i]);
                self.prefix[i] = acc;
            }
            acc = id;
            for i in (start..end).rev() {
                acc = ext.pick(acc, self.padded[i]);
                self.suffix[i] = acc;
            }
        }

        for (i, out) in dst.iter_mut().enumerate() {
            *out = ext.pick(self.suffix[i], self.prefix[i + window - 1]);
        }
    }
}

/// Horizontal pass: every row swept with the given half-width.
fn sweep_rows(ext: Extremum, img: &Image, radius: usize, sweep: &mut Sweep) -> Vec<u8> {
    let (w, h) = img.dimensions();
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        sweep.run(ext, img.row(y), radius, &mut out[y * w..(y + 1) * w]);
    }
    out
}

fn flat_extremum(ext: Extremum, img: &Image, se: StructuringElement) -> Image {
    let (w, h) = img.dimensions();
    let r = se.size;
    if r == 0 {
        return img.clone();
    }
    let mut sweep = Sweep::new();

    if se.shape == Shape::Square {
        let rows = sweep_rows(ext, img, r, &mut sweep);
        let mut out = vec![0u8; w * h];
        let mut column = vec![0u8; h];
        let mut swept = vec![0u8; h];
        for x in 0..w {
            for y in 0..h {
                column[y] = rows[y * w + x];
            }
            sweep.run(ext, &column, r, &mut swept);
            for y in 0..h {
                out[y * w + x] = swept[y];
            }
        }
        return Image::new(w, h, out).expect("dimensions preserved");
    }

    // One horizontal pass per distinct run half-width.
    let mut passes: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut pass_of_dy = Vec::with_capacity(r + 1);
    for dy in 0..=r {
        let hw = se.half_width(dy);
        let idx = match passes.iter().position(|(k, _)| *k == hw) {
            Some(i) => i,
            None => {
                passes.push((hw, sweep_rows(ext, img, hw, &mut sweep)));
                passes.len() - 1
            }
        };
        pass_of_dy.push(idx);
    }

    let mut out = passes[pass_of_dy[0]].1.clone();
    for (dy, &idx) in pass_of_dy.iter().enumerate().skip(1) {
        let pass = &passes[idx].1;
        if dy >= h {
            break;
        }
        for y in 0..h {
            let row = &mut out[y * w..(y + 1) * w];
            if y >= dy {
                let src = &pass[(y - dy) * w..(y - dy + 1) * w];
                row.iter_mut()
                    .zip(src)
                    .for_each(|(o, &s)| *o = ext.pick(*o, s));
            }
            if y + dy < h {
                let src = &pass[(y + dy) * w..(y + dy + 1) * w];
                row.iter_mut()
                    .zip(src)
                    .for_each(|(o, &s)| *o = ext.pick(*o, s));
            }
        }
    }
    Image::new(w, h, out).expect("dimensions preserved")
}

/// Minimum over the in-bounds element offsets around each pixel.
pub fn erode(img: &Image, se: StructuringElement) -> Image {
    flat_extremum(Extremum::Min, img, se)
}

/// Maximum over the in-bounds element offsets around each pixel.
pub fn dilate(img: &Image, se: StructuringElement) -> Image {
    flat_extremum(Extremum::Max, img, se)
}

pub fn open(img: &Image, se: StructuringElement) -> Image {
    dilate(&erode(img, se), se)
}

pub fn close(img: &Image, se: StructuringElement) -> Image {
    erode(&dilate(img, se), se)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsfVariant {
    /// Each stage is an opening followed by a closing.
    OpenFirst,
    /// Each stage is a closing followed by an opening.
    CloseFirst,
}

/// Alternating sequential filter with stages of size `1..=n`, smallest first.
pub fn asf(img: &Image, variant: AsfVariant, n: usize, shape: Shape) -> Image {
    let mut out = img.clone();
    for i in 1..=n {
        let se = StructuringElement::new(shape, i);
        out = match variant {
            AsfVariant::OpenFirst => close(&open(&out, se), se),
            AsfVariant::CloseFirst => open(&close(&out, se), se),
        };
    }
    out
}

/// Morphological centre of `img` with respect to the two ASF variants of
/// size `n`: `min(max(img, min(p1, p2)), max(p1, p2))`.
pub fn center(img: &Image, n: usize, shape: Shape) -> Image {
    let p1 = asf(img, AsfVariant::OpenFirst, n, shape);
    let p2 = asf(img, AsfVariant::CloseFirst, n, shape);
    let lo = p1.inf(&p2).expect("same shape");
    let hi = p1.sup(&p2).expect("same shape");
    img.sup(&lo).and_then(|v| v.inf(&hi)).expect("same shape")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Open,
    Close,
}

impl MorphOp {
    pub fn apply(self, img: &Image, se: StructuringElement) -> Image {
        match self {
            MorphOp::Open => open(img, se),
            MorphOp::Close => close(img, se),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MorphOp::Open => "open",
            MorphOp::Close => "close",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    AsfOpenFirst(usize),
    AsfCloseFirst(usize),
    Center(usize),
    /// Openings/closings applied left to right.
    Sequence(Vec<(MorphOp, usize)>),
}

/// A filter pipeline together with the element shape it uses throughout.
///
/// The textual form is `center:N`, `asf-oc:N` (opening first),
/// `asf-co:N` (closing first) or `seq:open@1,close@2,...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub shape: Shape,
}

impl FilterSpec {
    pub fn new(kind: FilterKind, shape: Shape) -> Self {
        Self { kind, shape }
    }

    pub fn center(n: usize, shape: Shape) -> Self {
        Self::new(FilterKind::Center(n), shape)
    }

    pub fn sequence(ops: Vec<(MorphOp, usize)>, shape: Shape) -> Self {
        Self::new(FilterKind::Sequence(ops), shape)
    }

    /// Parses the textual form with an explicit shape.
    pub fn parse(text: &str, shape: Shape) -> Result<Self> {
        let kind: FilterKind = text.parse()?;
        let spec = Self::new(kind, shape);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            FilterKind::AsfOpenFirst(0) | FilterKind::AsfCloseFirst(0) | FilterKind::Center(0) => {
                Err(Error::InvalidSpec("filter size must be at least 1".into()))
            }
            FilterKind::Sequence(ops) if ops.is_empty() => {
                Err(Error::InvalidSpec("operation sequence is empty".into()))
            }
            FilterKind::Sequence(ops) if ops.iter().any(|&(_, s)| s == 0) => Err(
                Error::InvalidSpec("sequence operation sizes must be at least 1".into()),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterKind::AsfOpenFirst(n) => write!(f, "asf-oc:{n}"),
            FilterKind::AsfCloseFirst(n) => write!(f, "asf-co:{n}"),
            FilterKind::Center(n) => write!(f, "center:{n}"),
            FilterKind::Sequence(ops) => {
                f.write_str("seq:")?;
                for (i, (op, size)) in ops.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}@{size}", op.as_str())?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

fn parse_size(text: &str, context: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("bad size '{text}' in '{context}'")))
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("'{s}' has no ':' separator")))?;
        match head.trim() {
            "center" => Ok(FilterKind::Center(parse_size(tail, s)?)),
            "asf-oc" => Ok(FilterKind::AsfOpenFirst(parse_size(tail, s)?)),
            "asf-co" => Ok(FilterKind::AsfCloseFirst(parse_size(tail, s)?)),
            "seq" => {
                let mut ops = Vec::new();
                for item in tail.split(',').filter(|t| !t.trim().is_empty()) {
                    let (op, size) = item.split_once('@').ok_or_else(|| {
                        Error::InvalidSpec(format!("'{item}' should look like open@N"))
                    })?;
                    let op = match op.trim() {
                        "open" => MorphOp::Open,
                        "close" => MorphOp::Close,
                        other => {
                            return Err(Error::InvalidSpec(format!("unknown operation '{other}'")))
                        }
                    };
                    ops.push((op, parse_size(size, s)?));
                }
                Ok(FilterKind::Sequence(ops))
            }
            other => Err(Error::InvalidSpec(format!(
                "unknown filter kind '{other}' (expected center, asf-oc, asf-co or seq)"
            ))),
        }
    }
}

pub fn apply_filter(img: &Image, spec: &FilterSpec) -> Result<Image> {
    spec.validate()?;
    let shape = spec.shape;
    Ok(match &spec.kind {
        FilterKind::AsfOpenFirst(n) => asf(img, AsfVariant::OpenFirst, *n, shape),
        FilterKind::AsfCloseFirst(n) => asf(img, AsfVariant::CloseFirst, *n, shape),
        FilterKind::Center(n) => center(img, *n, shape),
        FilterKind::Sequence(ops) => ops.iter().fold(img.clone(), |acc, &(op, size)| {
            op.apply(&acc, StructuringElement::new(shape, size))
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| ((x * 37 + y * 91) % 256) as u8)
    }

    #[test]
    fn element_offsets() {
        assert_eq!(StructuringElement::square(0).offsets(), vec![(0, 0)]);
        assert_eq!(StructuringElement::square(1).offsets().len(), 9);
        assert_eq!(StructuringElement::new(Shape::Cross, 1).offsets().len(), 5);
        assert_eq!(StructuringElement::new(Shape::Cross, 2).offsets().len(), 13);
        // Row half-widths 3, 2, 2, 0 for |dy| = 0..=3.
        assert_eq!(StructuringElement::new(Shape::Disk, 3).offsets().len(), 29);
        assert_eq!(StructuringElement::new(Shape::Cross, 3).offsets().len(), 25);
        assert_eq!(StructuringElement::new(Shape::Disk, 1).offsets().len(), 5);
    }

    #[test]
    fn isqrt_exact() {
        for n in 0..2000 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
    }

    #[test]
    fn size_zero_is_identity() {
        let img = ramp(7, 5);
        for shape in Shape::ALL {
            let se = StructuringElement::new(shape, 0);
            assert_eq!(erode(&img, se), img);
            assert_eq!(dilate(&img, se), img);
            assert_eq!(open(&img, se), img);
            assert_eq!(close(&img, se), img);
        }
    }

    #[test]
    fn constants_are_fixed() {
        let img = Image::filled(6, 4, 113);
        for shape in Shape::ALL {
            for r in 0..4 {
                let se = StructuringElement::new(shape, r);
                assert_eq!(erode(&img, se), img);
                assert_eq!(dilate(&img, se), img);
            }
            assert_eq!(asf(&img, AsfVariant::OpenFirst, 3, shape), img);
            assert_eq!(center(&img, 2, shape), img);
        }
    }

    #[test]
    fn bright_point_dilates_to_plus() {
        let mut img = Image::filled(5, 5, 0);
        img.set(2, 2, 255);
        let out = dilate(&img, StructuringElement::new(Shape::Cross, 1));
        let expected = Image::from_fn(5, 5, |x, y| {
            let d = (x as isize - 2).abs() + (y as isize - 2).abs();
            if d <= 1 {
                255
            } else {
                0
            }
        });
        assert_eq!(out, expected);
    }

    #[test]
    fn window_larger_than_image() {
        let img = ramp(3, 2);
        let min = *img.pixels().iter().min().unwrap();
        let out = erode(&img, StructuringElement::square(10));
        assert!(out.pixels().iter().all(|&v| v == min));
        let out = erode(&img, StructuringElement::new(Shape::Disk, 10));
        assert!(out.pixels().iter().all(|&v| v == min));
    }

    #[test]
    fn asf_single_stage_unrolled() {
        let img = ramp(9, 8);
        let se = StructuringElement::square(1);
        assert_eq!(
            asf(&img, AsfVariant::OpenFirst, 1, Shape::Square),
            close(&open(&img, se), se)
        );
        assert_eq!(
            asf(&img, AsfVariant::CloseFirst, 1, Shape::Square),
            open(&close(&img, se), se)
        );
    }

    #[test]
    fn centre_clamps_between_primitives() {
        let (p1, p2) = (10u8, 20u8);
        let rule = |f: u8| f.max(p1.min(p2)).min(p1.max(p2));
        assert_eq!(rule(15), 15);
        assert_eq!(rule(5), 10);
        assert_eq!(rule(25), 20);
    }

    #[test]
    fn spec_text_round_trip() {
        for text in [
            "center:2",
            "asf-oc:3",
            "asf-co:1",
            "seq:open@1,close@2,open@4",
        ] {
            let spec = FilterSpec::parse(text, Shape::Square).unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn spec_text_errors() {
        for bad in [
            "center",
            "center:x",
            "blur:3",
            "seq:",
            "seq:open",
            "seq:erode@1",
            "center:0",
            "seq:open@0",
        ] {
            assert!(FilterSpec::parse(bad, Shape::Square).is_err(), "{bad}");
        }
    }

    #[test]
    fn invalid_spec_is_rejected_by_apply() {
        let img = ramp(4, 4);
        assert!(apply_filter(&img, &FilterSpec::sequence(vec![], Shape::Square)).is_err());
        assert!(apply_filter(&img, &FilterSpec::center(0, Shape::Square)).is_err());
    }

    #[test]
    fn single_open_sequence() {
        let img = ramp(8, 8);
        let spec = FilterSpec::parse("seq:open@1", Shape::Disk).unwrap();
        assert_eq!(
            apply_filter(&img, &spec).unwrap(),
            open(&img, StructuringElement::new(Shape::Disk, 1))
        );
    }
}
