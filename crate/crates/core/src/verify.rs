//! Reference sets and quality metrics.
//!
//! Each benchmark's invariant set has a dense sample here, either analytic
//! (singleton, interval, segment, disk) or simulated (attractor trajectory).
//! Quality of an approximation is the exact Hausdorff distance against that
//! sample, split into its two one-sided parts: `d_forward` is the coverage
//! defect (reference points missed by the cloud), `d_backward` the
//! spurious-point defect (cloud points off the reference).

use std::collections::BTreeMap;

use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::knn::KdTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    PointSingleton,
    IntervalGrid,
    SegmentGrid,
    DiskSample,
    TrajectorySample,
}

impl ReferenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceKind::PointSingleton => "point_singleton",
            ReferenceKind::IntervalGrid => "interval_grid",
            ReferenceKind::SegmentGrid => "segment_grid",
            ReferenceKind::DiskSample => "disk_sample",
            ReferenceKind::TrajectorySample => "trajectory_sample",
        }
    }
}

/// A dense discretization of a known (or simulated) invariant set.
#[derive(Clone, Debug)]
pub struct ReferenceSet {
    pub kind: ReferenceKind,
    pub sample: PointCloud,
    /// Generator parameters, for manifests.
    pub meta: BTreeMap<String, f64>,
}

/// The reference `{x*}` for maps whose maximal invariant set is one point.
pub fn point_singleton(point: Vec<f64>) -> Result<ReferenceSet> {
    let sample = PointCloud::new(point.len().max(1), point)?;
    Ok(ReferenceSet {
        kind: ReferenceKind::PointSingleton,
        sample,
        meta: BTreeMap::new(),
    })
}

/// `n` equally spaced points on `[a, b]`, endpoints included.
pub fn interval_grid(a: f64, b: f64, n: usize) -> Result<ReferenceSet> {
    if a >= b || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("interval_grid: need finite a < b"));
    }
    if n < 2 {
        return Err(Error::invalid("interval_grid: need n ≥ 2"));
    }
    let step = (b - a) / (n - 1) as f64;
    let data: Vec<f64> = (0..n).map(|i| a + i as f64 * step).collect();
    Ok(ReferenceSet {
        kind: ReferenceKind::IntervalGrid,
        sample: PointCloud::new(1, data)?,
        meta: BTreeMap::from([
            ("a".to_string(), a),
            ("b".to_string(), b),
            ("n".to_string(), n as f64),
        ]),
    })
}

/// `n` equally spaced points on the planar segment `[-1, 1] × {0}`.
pub fn segment_grid(n: usize) -> Result<ReferenceSet> {
    if n < 2 {
        return Err(Error::invalid("segment_grid: need n ≥ 2"));
    }
    let step = 2.0 / (n - 1) as f64;
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        data.push(-1.0 + i as f64 * step);
        data.push(0.0);
    }
    Ok(ReferenceSet {
        kind: ReferenceKind::SegmentGrid,
        sample: PointCloud::new(2, data)?,
        meta: BTreeMap::from([("n".to_string(), n as f64)]),
    })
}

/// Quasi-uniform sunflower (golden-angle) sample of the closed disk of the
/// given radius, centered at the origin.
pub fn disk_sample(radius: f64, n: usize) -> Result<ReferenceSet> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::invalid("disk_sample: radius must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("disk_sample: need n ≥ 1"));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut data = Vec::with_capacity(2 * n);
    for k in 0..n {
        let r = radius * (((k as f64) + 0.5) / n as f64).sqrt();
        let t = golden_angle * k as f64;
        data.push(r * t.cos());
        data.push(r * t.sin());
    }
    Ok(ReferenceSet {
        kind: ReferenceKind::DiskSample,
        sample: PointCloud::new(2, data)?,
        meta: BTreeMap::from([
            ("radius".to_string(), radius),
            ("n".to_string(), n as f64),
        ]),
    })
}

/// Attractor sample by forward simulation: iterate `start` for `transient`
/// steps, then record the next `samples` iterates. Errors if the orbit
/// leaves ±1e6 in any coordinate (diverged; not an attractor basin point).
pub fn trajectory_sample(
    map: &MapSystem,
    start: &[f64],
    transient: usize,
    samples: usize,
) -> Result<ReferenceSet> {
    if start.len() != map.dim() {
        return Err(Error::dim(format!(
            "trajectory start has dimension {}, map has {}",
            start.len(),
            map.dim()
        )));
    }
    if samples == 0 {
        return Err(Error::invalid("trajectory_sample: need samples ≥ 1"));
    }
    let d = map.dim();
    let mut x = start.to_vec();
    let mut next = vec![0.0; d];
    let step = |x: &mut Vec<f64>, next: &mut Vec<f64>| -> Result<()> {
        map.eval_into(x, next);
        if next.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::invalid(
                "trajectory_sample: orbit diverged; pick a start in the basin",
            ));
        }
        std::mem::swap(x, next);
        Ok(())
    };
    for _ in 0..transient {
        step(&mut x, &mut next)?;
    }
    let mut data = Vec::with_capacity(samples * d);
    for _ in 0..samples {
        step(&mut x, &mut next)?;
        data.extend_from_slice(&x);
    }
    Ok(ReferenceSet {
        kind: ReferenceKind::TrajectorySample,
        sample: PointCloud::new(d, data)?,
        meta: BTreeMap::from([
            ("transient".to_string(), transient as f64),
            ("samples".to_string(), samples as f64),
        ]),
    })
}

/// One-sided and symmetric Hausdorff distances of a cloud against a
/// reference sample.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct QualityReport {
    /// `max(d_forward, d_backward)`, the exact Hausdorff distance.
    pub d_h: f64,
    /// Coverage defect: worst distance from a reference point to the cloud.
    pub d_forward: f64,
    /// Spurious-point defect: worst distance from a cloud point to the
    /// reference.
    pub d_backward: f64,
}

pub fn report_quality(x: &PointCloud, reference: &ReferenceSet) -> Result<QualityReport> {
    let sample = &reference.sample;
    if x.dim() != sample.dim() {
        return Err(Error::dim(format!(
            "cloud has dimension {}, reference has {}",
            x.dim(),
            sample.dim()
        )));
    }
    let tree_x = KdTree::build(x);
    let tree_ref = KdTree::build(sample);
    let mut fwd: f64 = 0.0;
    for p in sample.iter() {
        fwd = fwd.max(tree_x.query(p, 1)?[0].1);
    }
    let mut bwd: f64 = 0.0;
    for p in x.iter() {
        bwd = bwd.max(tree_ref.query(p, 1)?[0].1);
    }
    let (d_forward, d_backward) = (fwd.sqrt(), bwd.sqrt());
    Ok(QualityReport {
        d_h: d_forward.max(d_backward),
        d_forward,
        d_backward,
    })
}
