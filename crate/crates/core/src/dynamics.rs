//! Benchmark maps with analytic Jacobians.
//!
//! A `MapSystem` bundles the map, its Jacobian, and a domain box used for
//! sampling initial clouds. Jacobians are exact, not differenced; the test
//! suite checks each one against central finite differences.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::AxisBox;

type EvalFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Discrete-time map `f: R^d -> R^d` with analytic Jacobian.
#[derive(Clone)]
pub struct MapSystem {
    name: String,
    dim: usize,
    params: BTreeMap<String, f64>,
    domain: AxisBox,
    eval_fn: EvalFn,
    jac_fn: EvalFn,
}

impl fmt::Debug for MapSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// Continuous-time field `v: R^d -> R^d`, consumed by [`euler_step`].
#[derive(Clone)]
pub struct VectorField {
    pub dim: usize,
    pub eval_fn: EvalFn,
    pub jac_fn: EvalFn,
}

impl MapSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        params: BTreeMap<String, f64>,
        domain: AxisBox,
        eval_fn: EvalFn,
        jac_fn: EvalFn,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("map dimension must be positive"));
        }
        if domain.dim() != dim {
            return Err(Error::dim(format!(
                "domain box has dimension {}, map has {dim}",
                domain.dim()
            )));
        }
        Ok(Self {
            name: name.into(),
            dim,
            params,
            domain,
            eval_fn,
            jac_fn,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    /// Replaces the default sampling domain.
    pub fn with_domain(mut self, domain: AxisBox) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(Error::dim(format!(
                "domain box has dimension {}, map has {}",
                domain.dim(),
                self.dim
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Writes `f(x)` into `out`. Both slices must have length `dim`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.eval_fn)(x, out);
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Writes the Jacobian `Df(x)` into `out` in row-major order
    /// (`out[r * dim + c] = d f_r / d x_c`).
    #[inline]
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim * self.dim);
        (self.jac_fn)(x, out);
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.jacobian_into(x, &mut out);
        out
    }
}

/// Applies the transpose Jacobian: `out += Df(x)^T w`, with `jac` row-major.
#[inline]
pub(crate) fn add_jac_t_vec(dim: usize, jac: &[f64], w: &[f64], out: &mut [f64]) {
    for r in 0..dim {
        let wr = w[r];
        for c in 0..dim {
            out[c] += jac[r * dim + c] * wr;
        }
    }
}

fn params1(k: &str, v: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([(k.to_string(), v)])
}

/// `f(x) = a x` on `[-1, 1]`. The origin attracts for `|a| < 1`, repels for
/// `|a| > 1`; either way `{0}` is the largest bounded invariant set.
pub fn linear_1d(a: f64) -> Result<MapSystem> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::invalid("linear_1d: a must be finite and nonzero"));
    }
    MapSystem::new(
        "linear_1d",
        1,
        params1("a", a),
        AxisBox::new(vec![-1.0], vec![1.0])?,
        Arc::new(move |x, out| out[0] = a * x[0]),
        Arc::new(move |_, out| out[0] = a),
    )
}

/// `f(x) = x + a x (1 - x)` on `[-1, 2]`: fixed points 0 and 1, so the
/// maximal invariant set contains the whole connecting segment `[0, 1]`.
pub fn connecting_1d(a: f64) -> Result<MapSystem> {
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::invalid("connecting_1d: a must be finite and positive"));
    }
    MapSystem::new(
        "connecting_1d",
        1,
        params1("a", a),
        AxisBox::new(vec![-1.0], vec![2.0])?,
        Arc::new(move |x, out| out[0] = x[0] + a * x[0] * (1.0 - x[0])),
        Arc::new(move |x, out| out[0] = 1.0 + a * (1.0 - 2.0 * x[0])),
    )
}

/// `f(x, y) = (1.5 x^3 - 0.5 x, 10 y)`: three fixed points on the x-axis at
/// `x ∈ {-1, 0, 1}`, strong expansion in `y`, invariant segment `[-1, 1] × {0}`.
pub fn connecting_2d() -> Result<MapSystem> {
    MapSystem::new(
        "connecting_2d",
        2,
        BTreeMap::new(),
        AxisBox::centered_cube(2, 2.0),
        Arc::new(|x, out| {
            out[0] = 1.5 * x[0] * x[0] * x[0] - 0.5 * x[0];
            out[1] = 10.0 * x[1];
        }),
        Arc::new(|x, out| {
            out[0] = 4.5 * x[0] * x[0] - 0.5;
            out[1] = 0.0;
            out[2] = 0.0;
            out[3] = 10.0;
        }),
    )
}

/// One explicit Euler step `f(x) = x + h v(x)` of the field `v`.
pub fn euler_step(name: impl Into<String>, v: VectorField, h: f64) -> Result<MapSystem> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::invalid("euler_step: h must be finite and positive"));
    }
    let dim = v.dim;
    let ve = v.eval_fn.clone();
    let vj = v.jac_fn;
    MapSystem::new(
        name,
        dim,
        params1("h", h),
        AxisBox::centered_cube(dim, 2.0),
        Arc::new(move |x, out| {
            ve(x, out);
            for i in 0..dim {
                out[i] = x[i] + h * out[i];
            }
        }),
        Arc::new(move |x, out| {
            vj(x, out);
            for v in out[..dim * dim].iter_mut() {
                *v *= h;
            }
            for i in 0..dim {
                out[i * dim + i] += 1.0;
            }
        }),
    )
}

/// Planar field `v(x, y) = (-y + a x (x² + y² - 1), x + a y (x² + y² - 1))`:
/// rotation plus a radial term that vanishes on the unit circle, which the
/// field leaves invariant (repelling for `a > 0`).
pub fn disk_field(a: f64) -> VectorField {
    VectorField {
        dim: 2,
        eval_fn: Arc::new(move |x, out| {
            let r = x[0] * x[0] + x[1] * x[1] - 1.0;
            out[0] = -x[1] + a * x[0] * r;
            out[1] = x[0] + a * x[1] * r;
        }),
        jac_fn: Arc::new(move |x, out| {
            let (p, q) = (x[0], x[1]);
            out[0] = a * (3.0 * p * p + q * q - 1.0);
            out[1] = -1.0 + 2.0 * a * p * q;
            out[2] = 1.0 + 2.0 * a * p * q;
            out[3] = a * (p * p + 3.0 * q * q - 1.0);
        }),
    }
}

/// Euler discretization of [`disk_field`] with step `h`. Its maximal
/// invariant set inside the square is the closed disk of radius
/// [`disk_invariant_radius`]`(a, h)`, slightly inside the unit disk.
pub fn disk_map(a: f64, h: f64) -> Result<MapSystem> {
    let mut sys = euler_step("disk_euler", disk_field(a), h)?;
    sys.params.insert("a".to_string(), a);
    Ok(sys)
}

/// Radius of the circle the Euler-discretized disk field maps onto itself.
///
/// On a centered circle of radius r the step moves `(r cos t, r sin t)` to a
/// point of squared radius `r²(1 + h a u)² + r² h²` with `u = r² - 1`; setting
/// that equal to `r²` gives `a² h u² + 2 a u + h = 0`, solved for the root
/// that keeps `u` near zero.
pub fn disk_invariant_radius(a: f64, h: f64) -> f64 {
    let (qa, qb, qc) = (a * a * h, 2.0 * a, h);
    let disc = qb * qb - 4.0 * qa * qc;
    debug_assert!(disc >= 0.0, "step too coarse: no invariant circle");
    // stable quadratic: avoid cancellation in the small root
    let big = -(qb + qb.signum() * disc.sqrt()) / 2.0;
    let u1 = big / qa;
    let u2 = qc / big;
    let u = if u1.abs() < u2.abs() { u1 } else { u2 };
    (1.0 + u).sqrt()
}

/// Hénon-type map `f(x, y) = (1 - a x² + y/3, 3 b x)` on `[-2, 2]²`, the
/// classical attractor rescaled so both coordinates span a comparable range.
pub fn henon(a: f64, b: f64) -> Result<MapSystem> {
    MapSystem::new(
        "henon",
        2,
        BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]),
        AxisBox::centered_cube(2, 2.0),
        Arc::new(move |x, out| {
            out[0] = 1.0 - a * x[0] * x[0] + x[1] / 3.0;
            out[1] = 3.0 * b * x[0];
        }),
        Arc::new(move |x, out| {
            out[0] = -2.0 * a * x[0];
            out[1] = 1.0 / 3.0;
            out[2] = 3.0 * b;
            out[3] = 0.0;
        }),
    )
}

/// Three-dimensional Hénon-type map `f(x, y, z) = (y, z, a + b x + c y - z²)`
/// on `[-2, 2]³`.
pub fn henon_3d(a: f64, b: f64, c: f64) -> Result<MapSystem> {
    MapSystem::new(
        "henon_3d",
        3,
        BTreeMap::from([
            ("a".to_string(), a),
            ("b".to_string(), b),
            ("c".to_string(), c),
        ]),
        AxisBox::centered_cube(3, 2.0),
        Arc::new(move |x, out| {
            out[0] = x[1];
            out[1] = x[2];
            out[2] = a + b * x[0] + c * x[1] - x[2] * x[2];
        }),
        Arc::new(move |x, out| {
            out.fill(0.0);
            out[1] = 1.0;
            out[5] = 1.0;
            out[6] = b;
            out[7] = c;
            out[8] = -2.0 * x[2];
        }),
    )
}

fn take_param(kind: &str, params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::invalid(format!("map {kind}: missing parameter `{key}`")))
}

fn check_keys(kind: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::invalid(format!(
                "map {kind}: unknown parameter `{k}` (expected {allowed:?})"
            )));
        }
    }
    Ok(())
}

/// Instantiates a benchmark map by its registry name.
pub fn from_name(kind: &str, params: &BTreeMap<String, f64>) -> Result<MapSystem> {
    match kind {
        "linear_1d" => {
            check_keys(kind, params, &["a"])?;
            linear_1d(take_param(kind, params, "a")?)
        }
        "connecting_1d" => {
            check_keys(kind, params, &["a"])?;
            connecting_1d(take_param(kind, params, "a")?)
        }
        "connecting_2d" => {
            check_keys(kind, params, &[])?;
            connecting_2d()
        }
        "disk_euler" => {
            check_keys(kind, params, &["a", "h"])?;
            disk_map(take_param(kind, params, "a")?, take_param(kind, params, "h")?)
        }
        "henon" => {
            check_keys(kind, params, &["a", "b"])?;
            henon(take_param(kind, params, "a")?, take_param(kind, params, "b")?)
        }
        "henon_3d" => {
            check_keys(kind, params, &["a", "b", "c"])?;
            henon_3d(
                take_param(kind, params, "a")?,
                take_param(kind, params, "b")?,
                take_param(kind, params, "c")?,
            )
        }
        other => Err(Error::invalid(format!("unknown map kind `{other}`"))),
    }
}
