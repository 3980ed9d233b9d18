//! Sensitivity-analysis tasks on top of the region tests: per-coefficient
//! bounds with tightness metrics, and test-label certification.

use crate::data_io::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::regions::{segment_bounds, sphere_bounds, BoundInterval, SegmentRegion, SphereRegion};

/// A region test target: either the sphere alone or the full segment.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Sphere(&'a SphereRegion),
    Segment(&'a SegmentRegion),
}

impl<'a> Region<'a> {
    pub fn dim(&self) -> usize {
        match self {
            Region::Sphere(s) => s.q.len(),
            Region::Segment(seg) => seg.sphere.q.len(),
        }
    }

    /// Bound eta^T w_1^* for a sparse eta without densifying it.
    pub fn bound_sparse(&self, eta: &Instance) -> BoundInterval {
        match self {
            Region::Sphere(s) => sphere_bounds(eta.dot(&s.q), eta.norm(), s.r),
            Region::Segment(seg) => segment_bounds(
                eta.dot(&seg.sphere.q),
                eta.dot(&seg.plane.n),
                eta.norm(),
                seg.sphere.r,
                seg.psi,
            ),
        }
    }

    pub fn bound_dense(&self, eta: &[f64]) -> BoundInterval {
        match self {
            Region::Sphere(s) => crate::regions::sphere_test(s, eta),
            Region::Segment(seg) => crate::regions::segment_test(seg, eta),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientBounds {
    pub per_coordinate: Vec<BoundInterval>,
    pub tightness_per_coord: Vec<f64>,
    pub mean_tightness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTag {
    CertifiedPositive,
    CertifiedNegative,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct LabelDecision {
    pub tag: LabelTag,
    pub interval: BoundInterval,
}

#[derive(Debug, Clone)]
pub struct LabelSensitivityReport {
    pub decisions: Vec<LabelDecision>,
    pub n_diff: usize,
    pub n_test: usize,
    pub error_ratio: f64,
}

/// Bounds on every coordinate of w_1^* (eta = e_j), exploiting
/// ||e_j|| = 1 and t = n_j.
pub fn coefficient_sensitivity(region: Region<'_>, d: usize) -> Result<CoefficientBounds> {
    if d != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: d,
        });
    }
    let per_coordinate: Vec<BoundInterval> = match region {
        Region::Sphere(s) => s
            .q
            .iter()
            .map(|&qj| sphere_bounds(qj, 1.0, s.r))
            .collect(),
        Region::Segment(seg) => seg
            .sphere
            .q
            .iter()
            .zip(&seg.plane.n)
            .map(|(&qj, &nj)| segment_bounds(qj, nj, 1.0, seg.sphere.r, seg.psi))
            .collect(),
    };
    let tightness_per_coord: Vec<f64> = per_coordinate.iter().map(|iv| iv.width().abs()).collect();
    let mean_tightness = tightness_per_coord.iter().sum::<f64>() / d as f64;
    Ok(CoefficientBounds {
        per_coordinate,
        tightness_per_coord,
        mean_tightness,
    })
}

/// Lower bound >= 0 certifies +1 (checked first; an interval [0,0]
/// certifies +1), upper bound <= 0 certifies -1, anything straddling 0
/// is Unknown.
pub fn decide_label(interval: BoundInterval) -> LabelTag {
    if interval.lower >= 0.0 {
        LabelTag::CertifiedPositive
    } else if interval.upper <= 0.0 {
        LabelTag::CertifiedNegative
    } else {
        LabelTag::Unknown
    }
}

/// Certify the updated classifier's label for every test instance.
pub fn label_sensitivity(region: Region<'_>, test: &Dataset) -> Result<LabelSensitivityReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if test.dim > region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: test.dim,
        });
    }
    let decisions: Vec<LabelDecision> = test
        .instances
        .iter()
        .map(|x| {
            let interval = region.bound_sparse(x);
            LabelDecision {
                tag: decide_label(interval),
                interval,
            }
        })
        .collect();
    let n_diff = decisions
        .iter()
        .filter(|d| d.tag == LabelTag::Unknown)
        .count();
    let n_test = decisions.len();
    Ok(LabelSensitivityReport {
        n_diff,
        n_test,
        error_ratio: n_diff as f64 / n_test as f64,
        decisions,
    })
}

/// Fraction of Certified decisions that match the oracle labels; Unknown
/// decisions are excluded from the denominator. None when nothing was
/// certified.
pub fn certified_agreement(report: &LabelSensitivityReport, oracle_labels: &[i8]) -> Option<f64> {
    assert_eq!(report.decisions.len(), oracle_labels.len());
    let mut certified = 0usize;
    let mut agree = 0usize;
    for (d, &y) in report.decisions.iter().zip(oracle_labels) {
        let predicted = match d.tag {
            LabelTag::CertifiedPositive => 1i8,
            LabelTag::CertifiedNegative => -1i8,
            LabelTag::Unknown => continue,
        };
        certified += 1;
        if predicted == y {
            agree += 1;
        }
    }
    if certified == 0 {
        None
    } else {
        Some(agree as f64 / certified as f64)
    }
}
