//! Choosing between two filters without a clean reference.
//!
//! Both candidates run on the same noisy image `N`. Each is scored by `M*`
//! against `N` and the other candidate's output; the lower score wins. The
//! cross term `|FT1 - FT2|` is shared, so it is computed once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{abs_diff, Image};
use crate::measures::{Aggregation, WeightedDiagram};
use crate::morphology::{apply_filter, FilterKind, FilterSpec, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
    Tie,
}

impl Winner {
    fn from_scores(a: u128, b: u128) -> Self {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Winner::First,
            std::cmp::Ordering::Greater => Winner::Second,
            std::cmp::Ordering::Equal => Winner::Tie,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Winner::First => Winner::Second,
            Winner::Second => Winner::First,
            Winner::Tie => Winner::Tie,
        }
    }
}

impl Serialize for Winner {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Winner::First => s.serialize_u8(1),
            Winner::Second => s.serialize_u8(2),
            Winner::Tie => s.serialize_str("tie"),
        }
    }
}

impl<'de> Deserialize<'de> for Winner {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(u8),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(1) => Ok(Winner::First),
            Raw::Index(2) => Ok(Winner::Second),
            Raw::Text(t) if t == "tie" => Ok(Winner::Tie),
            _ => Err(serde::de::Error::custom("winner must be 1, 2 or \"tie\"")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionReport {
    pub candidate_specs: [FilterSpec; 2],
    pub mstar_values: [u128; 2],
    pub winner: Winner,
    /// Per-size `M` of `|N - FT1|`.
    pub m_family_n_ft1: Vec<u64>,
    /// Per-size `M` of `|N - FT2|`.
    pub m_family_n_ft2: Vec<u64>,
    /// Per-size `M` of `|FT1 - FT2|`.
    pub m_family_cross: Vec<u64>,
    pub r_max: usize,
    pub shape: Shape,
    pub aggregation: Aggregation,
    /// Set when a candidate reproduced `N` exactly, which forces its `M*` to 0.
    pub degenerate: bool,
}

/// Filter outputs and difference images behind a report.
#[derive(Clone, Debug)]
pub struct SelectionImages {
    pub ft1: Image,
    pub ft2: Image,
    pub diff_n_ft1: Image,
    pub diff_n_ft2: Image,
    pub diff_cross: Image,
}

/// Runs both candidates and scores them.
pub fn select_filter(
    noisy: &Image,
    spec1: &FilterSpec,
    spec2: &FilterSpec,
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
) -> Result<SelectionReport> {
    select_filter_with_images(noisy, spec1, spec2, r_max, shape, aggregation).map(|(rep, _)| rep)
}

pub fn select_filter_with_images(
    noisy: &Image,
    spec1: &FilterSpec,
    spec2: &FilterSpec,
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
) -> Result<(SelectionReport, SelectionImages)> {
    let (ft1, ft2) = std::thread::scope(|s| {
        let h = s.spawn(|| apply_filter(noisy, spec2));
        let a = apply_filter(noisy, spec1);
        (a, h.join().expect("filter thread panicked"))
    });
    let (ft1, ft2) = (ft1?, ft2?);
    let images = SelectionImages {
        diff_n_ft1: abs_diff(noisy, &ft1)?,
        diff_n_ft2: abs_diff(noisy, &ft2)?,
        diff_cross: abs_diff(&ft1, &ft2)?,
        ft1,
        ft2,
    };
    let report = score(
        &images,
        [spec1.clone(), spec2.clone()],
        r_max,
        shape,
        aggregation,
    );
    Ok((report, images))
}

fn score(
    images: &SelectionImages,
    candidate_specs: [FilterSpec; 2],
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
) -> SelectionReport {
    let own1 = WeightedDiagram::new(&images.diff_n_ft1, r_max, shape);
    let own2 = WeightedDiagram::new(&images.diff_n_ft2, r_max, shape);
    let cross = WeightedDiagram::new(&images.diff_cross, r_max, shape);
    let mstar_values = [
        own1.combine(&cross, aggregation),
        own2.combine(&cross, aggregation),
    ];
    SelectionReport {
        candidate_specs,
        winner: Winner::from_scores(mstar_values[0], mstar_values[1]),
        mstar_values,
        m_family_n_ft1: own1.m_family(),
        m_family_n_ft2: own2.m_family(),
        m_family_cross: cross.m_family(),
        r_max,
        shape,
        aggregation,
        degenerate: images.diff_n_ft1.is_zero() || images.diff_n_ft2.is_zero(),
    }
}

#[derive(Serialize, Deserialize)]
struct CandidateWire {
    filter: String,
    shape: Shape,
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    candidate_specs: [CandidateWire; 2],
    mstar_values: [u128; 2],
    winner: Winner,
    m_family_n_ft1: Vec<u64>,
    m_family_n_ft2: Vec<u64>,
    m_family_cross: Vec<u64>,
    r_max: usize,
    shape: Shape,
    aggregation: Aggregation,
    degenerate: bool,
}

fn candidate_wire(spec: &FilterSpec) -> CandidateWire {
    CandidateWire {
        filter: spec.to_string(),
        shape: spec.shape,
    }
}

/// Pretty-printed JSON with a fixed key order.
pub fn report_to_json(rep: &SelectionReport) -> Vec<u8> {
    let wire = ReportWire {
        candidate_specs: [
            candidate_wire(&rep.candidate_specs[0]),
            candidate_wire(&rep.candidate_specs[1]),
        ],
        mstar_values: rep.mstar_values,
        winner: rep.winner,
        m_family_n_ft1: rep.m_family_n_ft1.clone(),
        m_family_n_ft2: rep.m_family_n_ft2.clone(),
        m_family_cross: rep.m_family_cross.clone(),
        r_max: rep.r_max,
        shape: rep.shape,
        aggregation: rep.aggregation,
        degenerate: rep.degenerate,
    };
    let mut out = serde_json::to_vec_pretty(&wire).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn report_from_json(bytes: &[u8]) -> Result<SelectionReport> {
    let wire: ReportWire = serde_json::from_slice(bytes)
        .map_err(|e| Error::InvalidConfig(format!("bad report: {e}")))?;
    let spec = |c: CandidateWire| -> Result<FilterSpec> {
        let kind: FilterKind = c.filter.parse()?;
        Ok(FilterSpec::new(kind, c.shape))
    };
    let [c1, c2] = wire.candidate_specs;
    Ok(SelectionReport {
        candidate_specs: [spec(c1)?, spec(c2)?],
        mstar_values: wire.mstar_values,
        winner: wire.winner,
        m_family_n_ft1: wire.m_family_n_ft1,
        m_family_n_ft2: wire.m_family_n_ft2,
        m_family_cross: wire.m_family_cross,
        r_max: wire.r_max,
        shape: wire.shape,
        aggregation: wire.aggregation,
        degenerate: wire.degenerate,
    })
}
