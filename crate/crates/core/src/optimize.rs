//! Limited-memory BFGS with a strong Wolfe line search.
//!
//! The objective is a plain callback returning value and gradient, so the
//! optimizer never learns about clouds or maps. One iteration is one accepted
//! step; line-search trials are not counted. The objective may return +∞ for
//! trial points it refuses to evaluate; the line search treats those as
//! ordinary Armijo failures and backs off.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OptimOptions {
    /// Terminate once the gradient infinity norm drops below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    /// Record a variable snapshot every this many iterations; 0 = final only.
    pub snapshot_every: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 500,
            memory: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            snapshot_every: 0,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grad_tol <= 0.0 || self.grad_tol.is_nan() {
            return Err(Error::invalid("optim: grad_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("optim: max_iters must be positive"));
        }
        if self.memory == 0 {
            return Err(Error::invalid("optim: memory must be positive"));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::invalid("optim: need 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    MaxIters,
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::MaxIters => "max_iters",
            Termination::LineSearchFailure => "line_search_failure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub value: f64,
    pub grad_inf: f64,
    pub snapshot: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct OptimRun {
    pub final_x: Vec<f64>,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

// two-loop recursion; H0 = γI with γ from the most recent pair
fn lbfgs_direction(g: &[f64], pairs: &[Pair]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; pairs.len()];
    for (i, p) in pairs.iter().enumerate().rev() {
        let a = p.rho * dot(&p.s, &q);
        alphas[i] = a;
        for (qj, yj) in q.iter_mut().zip(&p.y) {
            *qj -= a * yj;
        }
    }
    if let Some(last) = pairs.last() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
    }
    for (i, p) in pairs.iter().enumerate() {
        let b = p.rho * dot(&p.y, &q);
        for (qj, sj) in q.iter_mut().zip(&p.s) {
            *qj += (alphas[i] - b) * sj;
        }
    }
    for qj in q.iter_mut() {
        *qj = -*qj;
    }
    q
}

struct LsResult {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
}

const LS_MAX_BRACKET: usize = 30;
const LS_MAX_ZOOM: usize = 40;
const LS_ALPHA_MAX: f64 = 1e12;

// strong Wolfe search along d from x (bracket then bisection zoom);
// None when no acceptable step exists within the trial budget
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    obj: &mut F,
    x: &[f64],
    d: &[f64],
    f0: f64,
    dphi0: f64,
    alpha_init: f64,
    c1: f64,
    c2: f64,
) -> Option<LsResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    debug_assert!(dphi0 < 0.0);
    let probe = |obj: &mut F, alpha: f64| {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g) = obj(&trial);
        let dphi = dot(&g, d);
        (f, g, dphi)
    };
    let armijo = |alpha: f64, f: f64| f <= f0 + c1 * alpha * dphi0;
    let curvature = |dphi: f64| dphi.abs() <= -c2 * dphi0;

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = alpha_init;
    let mut bracket = None;
    for i in 0..LS_MAX_BRACKET {
        let (f, g, dphi) = probe(obj, alpha);
        if !f.is_finite() || !armijo(alpha, f) || (i > 0 && f >= f_prev) {
            bracket = Some((alpha_prev, f_prev, alpha));
            break;
        }
        if curvature(dphi) {
            return Some(LsResult {
                alpha,
                value: f,
                grad: g,
            });
        }
        if dphi >= 0.0 {
            bracket = Some((alpha, f, alpha_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = f;
        alpha *= 2.0;
        if alpha > LS_ALPHA_MAX {
            return None;
        }
    }
    let (mut lo, mut f_lo, mut hi) = bracket?;

    for _ in 0..LS_MAX_ZOOM {
        let alpha = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-16 * lo.abs().max(1.0) {
            return None; // interval collapsed, likely a kink
        }
        let (f, g, dphi) = probe(obj, alpha);
        if !f.is_finite() || !armijo(alpha, f) || f >= f_lo {
            hi = alpha;
        } else {
            if curvature(dphi) {
                return Some(LsResult {
                    alpha,
                    value: f,
                    grad: g,
                });
            }
            if dphi * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = alpha;
            f_lo = f;
        }
    }
    None
}

/// Minimizes `obj` from `x0`. `obj` must return a finite value and a gradient
/// of matching length at `x0` itself; afterwards +∞ values are tolerated as
/// rejections of a trial point.
pub fn minimize<F>(mut obj: F, x0: &[f64], opts: &OptimOptions) -> Result<OptimRun>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    opts.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("optim: empty variable vector"));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj(&x);
    if !f.is_finite() || g.len() != n || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "optim: objective must return a finite value and gradient at the start point",
        ));
    }

    let mut trace = Vec::new();
    let snap = |iter: usize, x: &[f64]| {
        (opts.snapshot_every > 0 && iter.is_multiple_of(opts.snapshot_every)).then(|| x.to_vec())
    };
    trace.push(TraceRow {
        iter: 0,
        value: f,
        grad_inf: inf_norm(&g),
        snapshot: snap(0, &x),
    });

    let mut pairs: Vec<Pair> = Vec::new();
    let mut iterations = 0;
    let mut termination = if inf_norm(&g) < opts.grad_tol {
        Some(Termination::GradTol)
    } else {
        None
    };

    while termination.is_none() {
        let mut d = lbfgs_direction(&g, &pairs);
        let mut dphi0 = dot(&g, &d);
        let mut restarted = pairs.is_empty();
        if dphi0 >= 0.0 || dphi0.is_nan() {
            // degenerate curvature model; fall back to steepest descent
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
            restarted = true;
        }
        let alpha_init = if pairs.is_empty() {
            (1.0 / dot(&d, &d).sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut found = wolfe_search(&mut obj, &x, &d, f, dphi0, alpha_init, opts.wolfe_c1, opts.wolfe_c2);
        if found.is_none() && !restarted {
            // one steepest-descent restart before giving up
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &d);
            let a0 = (1.0 / dot(&d, &d).sqrt()).min(1.0);
            found = wolfe_search(&mut obj, &x, &d, f, dphi0, a0, opts.wolfe_c1, opts.wolfe_c2);
        }
        let Some(ls) = found else {
            termination = Some(Termination::LineSearchFailure);
            break;
        };

        let s: Vec<f64> = d.iter().map(|di| ls.alpha * di).collect();
        let y: Vec<f64> = ls.grad.iter().zip(&g).map(|(gn, go)| gn - go).collect();
        let sy = dot(&s, &y);
        let s_norm = dot(&s, &s).sqrt();
        let y_norm = dot(&y, &y).sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            pairs.push(Pair {
                s: s.clone(),
                y,
                rho: 1.0 / sy,
            });
            if pairs.len() > opts.memory {
                pairs.remove(0);
            }
        }

        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        f = ls.value;
        g = ls.grad;
        iterations += 1;
        trace.push(TraceRow {
            iter: iterations,
            value: f,
            grad_inf: inf_norm(&g),
            snapshot: snap(iterations, &x),
        });

        if inf_norm(&g) < opts.grad_tol {
            termination = Some(Termination::GradTol);
        } else if iterations >= opts.max_iters {
            termination = Some(Termination::MaxIters);
        }
    }

    Ok(OptimRun {
        final_value: f,
        final_grad_norm: inf_norm(&g),
        final_x: x,
        iterations,
        termination: termination.unwrap(),
        trace,
    })
}
