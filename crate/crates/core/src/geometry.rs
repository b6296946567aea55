//! Point clouds, axis-aligned boxes, and the two set distances: the exact
//! Hausdorff distance (verification only) and the modified Hausdorff distance
//! that the energy functional is built on.
//!
//! Both distances here are computed by direct pairwise scans. They double as
//! the independent reference for the kd-tree-backed paths in `knn`, `energy`
//! and `verify`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An ordered finite set of points in R^d.
///
/// Ordering is significant: indices identify points in assignment arrays and
/// in the optimization variable. Set-distance values are invariant under
/// permutations; duplicated points are allowed and treated with multiplicity
/// where means are involved.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from flat row-major coordinates (`n * dim` values).
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point cloud dimension must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "coordinate buffer length {} is not a positive multiple of dim {}",
                data.len(),
                dim
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("point cloud contains non-finite coordinates"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::dim("points have inconsistent dimensions"));
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Flat row-major coordinate buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Writes the cloud as CSV: header `x0,...,x{d-1}`, one point per row,
    /// 17 significant digits so values round-trip exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in 0..self.dim {
            if a > 0 {
                write!(w, ",")?;
            }
            write!(w, "x{a}")?;
        }
        writeln!(w)?;
        for p in self.iter() {
            for (a, v) in p.iter().enumerate() {
                if a > 0 {
                    write!(w, ",")?;
                }
                write!(w, "{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse {
                path: path.into(),
                message: "empty file".into(),
            })?
            .map_err(|e| Error::io(path, e))?;
        let dim = header.split(',').count();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim {
                return Err(Error::Parse {
                    path: path.into(),
                    message: format!("row {} has {} fields, expected {}", lineno + 2, fields.len(), dim),
                });
            }
            for f in fields {
                let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                    path: path.into(),
                    message: format!("row {}: `{}` is not a number", lineno + 2, f),
                })?;
                data.push(v);
            }
        }
        PointCloud::new(dim, data)
    }
}

/// An axis-aligned box with positive volume; the compact region the maximal
/// invariant set is taken within.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::dim(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "box axis {i}: lower {lo} must be strictly below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-half, half]^dim`.
    pub fn centered_cube(dim: usize, half: f64) -> Self {
        Self {
            lower: vec![-half; dim],
            upper: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }
}

/// Squared Euclidean distance between two points of equal dimension.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::dim(format!("operands have dimensions {a} and {b}")));
    }
    Ok(())
}

/// Squared distance from point `y` to the cloud, with the index of the
/// nearest point. Ties resolve to the smallest index.
pub fn point_to_set_sq(y: &[f64], cloud: &PointCloud) -> Result<(f64, usize)> {
    check_same_dim(y.len(), cloud.dim())?;
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (i, p) in cloud.iter().enumerate() {
        let d = dist_sq(y, p);
        if d < best {
            best = d;
            best_idx = i;
        }
    }
    Ok((best, best_idx))
}

/// Mean of squared nearest-neighbor distances from every point of `from` to
/// the cloud `to`; one side of the modified Hausdorff distance.
fn mean_min_sq(from: &PointCloud, to: &PointCloud) -> f64 {
    let total: f64 = from
        .iter()
        .map(|y| {
            let mut best = f64::INFINITY;
            for p in to.iter() {
                let d = dist_sq(y, p);
                if d < best {
                    best = d;
                }
            }
            best
        })
        .sum();
    total / from.len() as f64
}

/// The modified Hausdorff distance: the symmetrized mean of squared
/// nearest-neighbor distances. Smooth enough for quasi-Newton minimization,
/// and still a metric on finite sets.
pub fn modified_hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_same_dim(x.dim(), y.dim())?;
    Ok(0.5 * (mean_min_sq(x, y) + mean_min_sq(y, x)))
}

fn sup_min_dist(from: &PointCloud, to: &PointCloud) -> f64 {
    let mut worst: f64 = 0.0;
    for y in from.iter() {
        let mut best = f64::INFINITY;
        for p in to.iter() {
            let d = dist_sq(y, p);
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst.sqrt()
}

/// The exact (unsquared) Hausdorff distance, used to measure approximation
/// quality against reference sets.
pub fn hausdorff_exact(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_same_dim(x.dim(), y.dim())?;
    Ok(sup_min_dist(x, y).max(sup_min_dist(y, x)))
}
