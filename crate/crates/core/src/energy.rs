//! The variational objective: mean squared nearest-neighbor mismatch between
//! a cloud and its image, optionally augmented with a Lennard-Jones term that
//! spreads points evenly.
//!
//! Both directions of the mismatch carry their own nearest-neighbor
//! assignment, frozen while differentiating; the gradient below is the exact
//! gradient of the locally active smooth piece. Assignments and neighbor sets
//! are recomputed from scratch on every evaluation.

use crate::dynamics::{add_jac_t_vec, MapSystem};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::knn::KdTree;
use crate::par;

/// Pair distances are floored here before entering the potential, so exactly
/// coincident points cost a large finite energy instead of producing NaN.
pub const LJ_CORE_CLAMP: f64 = 1e-12;

/// Lennard-Jones augmentation parameters. `delta` is the initial well radius;
/// during optimization the radius travels as the trailing variable.
#[derive(Clone, Debug, PartialEq)]
pub struct LJParams {
    pub p: u32,
    pub m: usize,
    pub mu: f64,
    pub delta: f64,
}

impl LJParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p < 1 {
            return Err(Error::invalid("lj: exponent p must be ≥ 1"));
        }
        if self.m < 1 || self.m + 1 > n {
            return Err(Error::invalid(format!(
                "lj: neighbor count m = {} out of range 1..={} for n = {n}",
                self.m,
                n.saturating_sub(1)
            )));
        }
        if self.mu < 0.0 || !self.mu.is_finite() {
            return Err(Error::invalid("lj: weight mu must be finite and ≥ 0"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("lj: delta must be finite"));
        }
        Ok(())
    }
}

/// One evaluation of the objective at a cloud.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub value: f64,
    /// Length `n·d`, plus a trailing radius slot when LJ is active.
    pub grad: Vec<f64>,
    /// `assign_fwd[i]`: index of the image point nearest to `x_i`.
    pub assign_fwd: Vec<usize>,
    /// `assign_bwd[i]`: index of the cloud point nearest to `f(x_i)`.
    pub assign_bwd: Vec<usize>,
    /// The weighted Lennard-Jones part of `value` (0 when inactive).
    pub lj_value: f64,
}

/// `V_δ(r) = (δ/r)^{2p} - 2(δ/r)^p + 1`, with `r` floored at
/// [`LJ_CORE_CLAMP`]. Zero at `r = δ`, +∞ as `r → 0⁺`, →1 as `r → ∞`.
pub fn lj_potential(r: f64, delta: f64, p: u32) -> Result<f64> {
    let r = clamp_r(r)?;
    check_lj_args(delta, p)?;
    Ok(lj_terms(r, delta, p).0)
}

/// `(∂V/∂r, ∂V/∂δ)` of [`lj_potential`], same clamping.
pub fn lj_derivs(r: f64, delta: f64, p: u32) -> Result<(f64, f64)> {
    let r = clamp_r(r)?;
    check_lj_args(delta, p)?;
    let (_, dr, dd) = lj_terms(r, delta, p);
    Ok((dr, dd))
}

fn clamp_r(r: f64) -> Result<f64> {
    if r < 0.0 || r.is_nan() {
        return Err(Error::invalid(format!("lj: distance r = {r} must be ≥ 0")));
    }
    Ok(r.max(LJ_CORE_CLAMP))
}

fn check_lj_args(delta: f64, p: u32) -> Result<()> {
    if p < 1 {
        return Err(Error::invalid("lj: exponent p must be ≥ 1"));
    }
    if !delta.is_finite() {
        return Err(Error::invalid("lj: delta must be finite"));
    }
    Ok(())
}

// (V, ∂V/∂r, ∂V/∂δ) at clamped r > 0. Written in terms of t = δ/r and
// u = t^p so the δ-derivative stays exact at δ = 0 (t^{p-1} with 0^0 = 1).
#[inline]
fn lj_terms(r: f64, delta: f64, p: u32) -> (f64, f64, f64) {
    let t = delta / r;
    let u = t.powi(p as i32);
    let v = (u - 1.0) * (u - 1.0);
    let p = f64::from(p);
    let dv_dr = -2.0 * p * u * (u - 1.0) / r;
    let dv_dd = 2.0 * p * t.powi(p as i32 - 1) * (u - 1.0) / r;
    (v, dv_dr, dv_dd)
}

/// Mean squared nearest-neighbor mismatch between `x` and `f(x)`, with the
/// frozen-assignment gradient. Assignments come from one tree over the image
/// cloud (forward) and one over `x` (backward).
pub fn energy(x: &PointCloud, map: &MapSystem) -> Result<EnergyReport> {
    check_dims(x, map)?;
    eval_impl(map, x.len(), x.as_flat(), None)
}

/// The augmented objective: [`energy`] plus the μ-weighted mean potential
/// over each point's `m` nearest neighbors (self excluded, sets frozen per
/// evaluation, not symmetrized). The gradient gains a trailing ∂/∂δ slot.
pub fn augmented(x: &PointCloud, lj: &LJParams, map: &MapSystem) -> Result<EnergyReport> {
    check_dims(x, map)?;
    lj.validate(x.len())?;
    eval_impl(map, x.len(), x.as_flat(), Some((lj, lj.delta)))
}

fn check_dims(x: &PointCloud, map: &MapSystem) -> Result<()> {
    if x.dim() != map.dim() {
        return Err(Error::dim(format!(
            "cloud has dimension {}, map {} has {}",
            x.dim(),
            map.name(),
            map.dim()
        )));
    }
    Ok(())
}

fn eval_impl(
    map: &MapSystem,
    n: usize,
    x: &[f64],
    lj: Option<(&LJParams, f64)>,
) -> Result<EnergyReport> {
    let d = map.dim();
    debug_assert_eq!(x.len(), n * d);
    let nf = n as f64;

    let images: Vec<f64> = par::map_indexed(n, |i| {
        let mut out = vec![0.0; d];
        map.eval_into(&x[i * d..(i + 1) * d], &mut out);
        out
    })
    .concat();
    if images.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("map produced a non-finite image point"));
    }

    let tree_img = KdTree::from_flat(d, images.clone());
    let tree_x = KdTree::from_flat(d, x.to_vec());

    // nearest image to each point, nearest point to each image
    let fwd: Vec<(usize, f64)> = par::map_indexed(n, |i| {
        tree_img.query(&x[i * d..(i + 1) * d], 1).expect("valid query")[0]
    });
    let bwd: Vec<(usize, f64)> = par::map_indexed(n, |i| {
        tree_x
            .query(&images[i * d..(i + 1) * d], 1)
            .expect("valid query")[0]
    });

    // accumulate exactly like the brute-force set distance so the two agree
    // bit for bit on tie-free inputs
    let sum_fwd: f64 = fwd.iter().map(|p| p.1).sum();
    let sum_bwd: f64 = bwd.iter().map(|p| p.1).sum();
    let base_value = 0.5 * (sum_fwd / nf + sum_bwd / nf);

    let assign_fwd: Vec<usize> = fwd.iter().map(|&(j, _)| j).collect();
    let assign_bwd: Vec<usize> = bwd.iter().map(|&(k, _)| k).collect();

    // pull[m] collects the residuals of every point assigned to slot m; the
    // scatter runs in index order so results do not depend on thread count
    let mut fwd_pull = vec![0.0; n * d];
    for i in 0..n {
        let m = assign_fwd[i];
        for c in 0..d {
            fwd_pull[m * d + c] += x[i * d + c] - images[m * d + c];
        }
    }
    let mut bwd_pull = vec![0.0; n * d];
    for i in 0..n {
        let m = assign_bwd[i];
        for c in 0..d {
            bwd_pull[m * d + c] += images[i * d + c] - x[m * d + c];
        }
    }

    let point_grads: Vec<Vec<f64>> = par::map_indexed(n, |m| {
        let xm = &x[m * d..(m + 1) * d];
        let mut g = vec![0.0; d];
        for c in 0..d {
            g[c] = xm[c] - images[assign_fwd[m] * d + c];
        }
        let mut w = vec![0.0; d];
        for c in 0..d {
            w[c] = (images[m * d + c] - x[assign_bwd[m] * d + c]) - fwd_pull[m * d + c];
        }
        let jac = map.jacobian(xm);
        add_jac_t_vec(d, &jac, &w, &mut g);
        for c in 0..d {
            g[c] = (g[c] - bwd_pull[m * d + c]) / nf;
        }
        g
    });

    let n_vars = n * d + usize::from(lj.is_some());
    let mut grad = vec![0.0; n_vars];
    for (m, g) in point_grads.iter().enumerate() {
        grad[m * d..(m + 1) * d].copy_from_slice(g);
    }

    let mut lj_value = 0.0;
    if let Some((params, delta)) = lj {
        if params.mu > 0.0 {
            let (m, p, mu) = (params.m, params.p, params.mu);
            let scale = mu / (nf * m as f64);
            // m nearest neighbors of each point, self dropped; under heavy
            // duplication the self entry may fall outside the top m+1, in
            // which case the first m survivors are still the correct set
            let nbrs: Vec<Vec<usize>> = par::map_indexed(n, |i| {
                let found = tree_x
                    .query(&x[i * d..(i + 1) * d], m + 1)
                    .expect("valid query");
                let mut list = Vec::with_capacity(m);
                for (j, _) in found {
                    if j != i && list.len() < m {
                        list.push(j);
                    }
                }
                list
            });

            let mut raw = 0.0;
            let mut g_delta = 0.0;
            let mut diff = vec![0.0; d];
            for i in 0..n {
                for &j in &nbrs[i] {
                    let mut r2 = 0.0;
                    for c in 0..d {
                        diff[c] = x[i * d + c] - x[j * d + c];
                        r2 += diff[c] * diff[c];
                    }
                    let r = r2.sqrt().max(LJ_CORE_CLAMP);
                    let (v, dv_dr, dv_dd) = lj_terms(r, delta, p);
                    raw += v;
                    g_delta += dv_dd;
                    let coef = scale * dv_dr / r;
                    for c in 0..d {
                        grad[i * d + c] += coef * diff[c];
                        grad[j * d + c] -= coef * diff[c];
                    }
                }
            }
            lj_value = scale * raw;
            grad[n * d] = scale * g_delta;
        }
    }

    Ok(EnergyReport {
        value: base_value + lj_value,
        grad,
        assign_fwd,
        assign_bwd,
        lj_value,
    })
}

/// Smallest squared-distance margin by which any nearest-neighbor decision in
/// an evaluation at `x` is made: the gap between the two closest candidates
/// of every forward/backward assignment and, with `lj_m` set, every neighbor
///-set boundary. Small gaps mean the objective is near a kink; gradient
/// checks resample such configurations.
pub fn min_assignment_gap(x: &PointCloud, map: &MapSystem, lj_m: Option<usize>) -> Result<f64> {
    check_dims(x, map)?;
    let (n, d) = (x.len(), x.dim());
    let images: Vec<f64> = (0..n).map(|i| map.eval(x.point(i))).collect::<Vec<_>>().concat();
    if images.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("map produced a non-finite image point"));
    }
    let tree_img = KdTree::from_flat(d, images.clone());
    let tree_x = KdTree::from_flat(d, x.as_flat().to_vec());

    let mut gap = f64::INFINITY;
    if n >= 2 {
        for i in 0..n {
            let f = tree_img.query(x.point(i), 2)?;
            gap = gap.min(f[1].1 - f[0].1);
            let b = tree_x.query(&images[i * d..(i + 1) * d], 2)?;
            gap = gap.min(b[1].1 - b[0].1);
        }
    }
    if let Some(m) = lj_m {
        if m + 2 <= n {
            for i in 0..n {
                let found = tree_x.query(x.point(i), m + 2)?;
                let kept: Vec<f64> = found
                    .iter()
                    .filter(|&&(j, _)| j != i)
                    .map(|&(_, dd)| dd)
                    .collect();
                // boundary between the m-th kept neighbor and the next one out
                if kept.len() > m {
                    gap = gap.min(kept[m] - kept[m - 1]);
                }
            }
        }
    }
    Ok(gap)
}

/// Flat-vector objective adapter for the optimizer: variables are the `n·d`
/// coordinates, plus the radius δ as a trailing slot when LJ is active.
/// Non-finite trial points (or points whose images overflow) evaluate to +∞
/// so the line search backs off instead of corrupting the tree.
pub struct CloudObjective<'a> {
    map: &'a MapSystem,
    n: usize,
    lj: Option<LJParams>,
}

impl<'a> CloudObjective<'a> {
    pub fn new(map: &'a MapSystem, n: usize, lj: Option<LJParams>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("objective needs at least one point"));
        }
        if let Some(l) = &lj {
            l.validate(n)?;
        }
        Ok(Self { map, n, lj })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn has_lj(&self) -> bool {
        self.lj.is_some()
    }

    pub fn n_vars(&self) -> usize {
        self.n * self.map.dim() + usize::from(self.lj.is_some())
    }

    /// Packs a cloud (and initial δ) into a flat variable vector.
    pub fn pack(&self, x: &PointCloud, delta: Option<f64>) -> Result<Vec<f64>> {
        check_dims(x, self.map)?;
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "cloud has {} points, objective expects {}",
                x.len(),
                self.n
            )));
        }
        let mut z = x.as_flat().to_vec();
        match (&self.lj, delta) {
            (Some(_), Some(dl)) => z.push(dl),
            (Some(l), None) => z.push(l.delta),
            (None, None) => {}
            (None, Some(_)) => {
                return Err(Error::invalid("delta given but LJ is inactive"));
            }
        }
        Ok(z)
    }

    /// Splits a flat variable vector back into a cloud and optional δ.
    pub fn unpack(&self, z: &[f64]) -> Result<(PointCloud, Option<f64>)> {
        let nd = self.n * self.map.dim();
        if z.len() != self.n_vars() {
            return Err(Error::dim(format!(
                "variable vector has length {}, expected {}",
                z.len(),
                self.n_vars()
            )));
        }
        let cloud = PointCloud::new(self.map.dim(), z[..nd].to_vec())?;
        Ok((cloud, self.lj.as_ref().map(|_| z[nd])))
    }

    /// Value and gradient at a flat variable vector.
    pub fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(z.len(), self.n_vars(), "variable vector length");
        if z.iter().any(|v| !v.is_finite()) {
            return (f64::INFINITY, vec![0.0; z.len()]);
        }
        let nd = self.n * self.map.dim();
        let res = match &self.lj {
            Some(l) => eval_impl(self.map, self.n, &z[..nd], Some((l, z[nd]))),
            None => eval_impl(self.map, self.n, z, None),
        };
        match res {
            Ok(r) => (r.value, r.grad),
            Err(_) => (f64::INFINITY, vec![0.0; z.len()]),
        }
    }

    /// Full report at a flat variable vector, for metrics emission.
    pub fn report(&self, z: &[f64]) -> Result<EnergyReport> {
        if z.len() != self.n_vars() {
            return Err(Error::dim("variable vector length mismatch".to_string()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite variables"));
        }
        let nd = self.n * self.map.dim();
        match &self.lj {
            Some(l) => eval_impl(self.map, self.n, &z[..nd], Some((l, z[nd]))),
            None => eval_impl(self.map, self.n, z, None),
        }
    }
}
