//! Log map by shooting, and the Karcher mean built on it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::curve::{DiscreteCurve, TangentField};
use crate::error::{Result, ShapeError};
use crate::metrics::{metric_eval, MetricSpec};

use super::bvp::{path_straighten, StraightenOptions};
use super::exp::{exp_map, integrable};

#[derive(Debug, Clone, PartialEq)]
pub struct LogOptions {
    /// Target for the grid L² residual `‖exp_c₀(u) − c₁‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed RK4 steps per shot.
    pub steps: usize,
    /// Starting velocity. Defaults to the first leg of the straightened path.
    pub init: Option<TangentField>,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 60,
            steps: 40,
            init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogResult {
    pub velocity: TangentField,
    pub residual: f64,
    pub iterations: usize,
}

fn flatten(f: &[[f64; 3]], dim: usize) -> DVector<f64> {
    DVector::from_iterator(f.len() * dim, f.iter().flat_map(|p| p[..dim].to_vec()))
}

fn unflatten(x: &DVector<f64>, dim: usize) -> TangentField {
    TangentField::new(
        x.as_slice()
            .chunks(dim)
            .map(|v| {
                let mut p = [0.0; 3];
                p[..dim].copy_from_slice(v);
                p
            })
            .collect(),
    )
}

/// Shooting residual `√w (exp_c₀(u) − c₁)`, flattened.
struct Shot<'a> {
    spec: &'a MetricSpec,
    c0: &'a DiscreteCurve,
    c1: &'a DiscreteCurve,
    steps: usize,
    sqrt_w: Vec<f64>,
}

impl Shot<'_> {
    fn residual(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        let dim = self.c0.dim();
        let end = exp_map(self.spec, self.c0, &unflatten(u, dim), self.steps).ok()?;
        let r = end.difference(self.c1);
        let mut x = flatten(&r.values, dim);
        for (i, v) in x.iter_mut().enumerate() {
            *v *= self.sqrt_w[i / dim];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    /// Forward-difference Jacobian, one shot per column.
    fn jacobian(&self, u: &DVector<f64>, r: &DVector<f64>) -> Option<DMatrix<f64>> {
        let h = 1e-6 * u.amax().max(self.c0.length() / (2.0 * std::f64::consts::PI));
        let cols: Vec<Option<DVector<f64>>> = (0..u.len())
            .into_par_iter()
            .map(|j| {
                let mut v = u.clone();
                v[j] += h;
                self.residual(&v).map(|rv| (rv - r) / h)
            })
            .collect();
        let cols: Option<Vec<_>> = cols.into_iter().collect();
        Some(DMatrix::from_columns(&cols?))
    }
}

/// Initial velocity of the straightened path from `c₀` to `c₁`.
fn straightened_velocity(spec: &MetricSpec, c0: &DiscreteCurve, c1: &DiscreteCurve) -> Result<TangentField> {
    let opts = StraightenOptions {
        steps: 16,
        max_iter: 300,
        tol: 1e-5,
        ..Default::default()
    };
    let path = path_straighten(spec, c0, c1, &opts)?.path;
    Ok(path.curves[1].difference(c0).scaled(opts.steps as f64))
}

/// `log_c₀(c₁)`: the initial velocity `u` with `exp_c₀(u) = c₁`.
///
/// Gauss–Newton on the shooting residual. The Jacobian starts at the
/// identity (`exp_c(u) = c + u + O(|u|²)`) and is kept current by Broyden
/// updates; it is recomputed by finite differences whenever a step fails
/// to reduce the residual.
pub fn log_map(spec: &MetricSpec, c0: &DiscreteCurve, c1: &DiscreteCurve, opts: &LogOptions) -> Result<LogResult> {
    integrable(spec)?;
    c0.check_same_grid(c1)?;
    c0.require_regular()?;
    c1.require_regular()?;
    let grid = c0.grid();
    let dim = c0.dim();
    let shot = Shot {
        spec,
        c0,
        c1,
        steps: opts.steps,
        sqrt_w: grid.weights().iter().map(|w| w.sqrt()).collect(),
    };
    if c1.difference(c0).grid_norm(&grid) <= opts.tol {
        return Ok(LogResult {
            velocity: TangentField::zeros(c0.len()),
            residual: c1.difference(c0).grid_norm(&grid),
            iterations: 0,
        });
    }
    let init = match &opts.init {
        Some(u) => u.clone(),
        None => straightened_velocity(spec, c0, c1)?,
    };
    let mut u = flatten(&init.values, dim);
    let mut r = shot
        .residual(&u)
        .ok_or(ShapeError::NonFinite("shooting from the initial velocity"))?;
    let m = u.len();
    let mut jac = DMatrix::<f64>::identity(m, m);
    for (i, mut col) in jac.column_iter_mut().enumerate() {
        col *= shot.sqrt_w[i / dim];
    }
    let mut fresh = false;

    for iter in 0..opts.max_iter {
        let res = r.norm();
        if res <= opts.tol {
            return Ok(LogResult {
                velocity: unflatten(&u, dim),
                residual: res,
                iterations: iter,
            });
        }
        let Some(delta) = jac.clone().lu().solve(&(-&r)) else {
            return Err(ShapeError::NoConvergence {
                what: "log map",
                iterations: iter,
                residual: res,
            });
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..8 {
            let s = &delta * step;
            let trial = &u + &s;
            if let Some(rt) = shot.residual(&trial) {
                // Broyden: make the model exact along the step just taken.
                let ss = s.dot(&s);
                if ss > 0.0 {
                    let y = &rt - &r - &jac * &s;
                    jac += y * s.transpose() / ss;
                }
                if rt.norm() < res {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((un, rn)) => {
                u = un;
                r = rn;
                fresh = false;
            }
            None if !fresh => {
                jac = shot.jacobian(&u, &r).ok_or(ShapeError::NonFinite("shooting Jacobian"))?;
                fresh = true;
            }
            None => {
                return Err(ShapeError::NoConvergence {
                    what: "log map",
                    iterations: iter,
                    residual: res,
                })
            }
        }
    }
    let res = r.norm();
    if res <= opts.tol {
        return Ok(LogResult {
            velocity: unflatten(&u, dim),
            residual: res,
            iterations: opts.max_iter,
        });
    }
    Err(ShapeError::NoConvergence {
        what: "log map",
        iterations: opts.max_iter,
        residual: res,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KarcherOptions {
    pub max_iter: usize,
    /// Stop when the metric norm of the mean log falls below this.
    pub tol: f64,
    pub log: LogOptions,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: 1e-4,
            log: LogOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KarcherResult {
    pub mean: DiscreteCurve,
    /// `Σ d(c, cᵢ)²` at every accepted iterate, starting with the initial guess.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Logs from `c` to every curve, with `Σ G_c(uᵢ, uᵢ)`.
fn logs_at(
    spec: &MetricSpec,
    c: &DiscreteCurve,
    curves: &[DiscreteCurve],
    opts: &LogOptions,
) -> Result<(Vec<TangentField>, f64)> {
    let logs: Result<Vec<TangentField>> = curves
        .par_iter()
        .map(|ci| log_map(spec, c, ci, opts).map(|r| r.velocity))
        .collect();
    let logs = logs?;
    let mut total = 0.0;
    for u in &logs {
        total += metric_eval(spec, c, u, u)?;
    }
    Ok((logs, total))
}

/// Minimizer of `Σ d(c, cᵢ)²`, by the iteration `c ← exp_c(α · mean log)`
/// started from the pointwise average. The step `α` starts at 1 and is
/// halved whenever the sum of squared distances would increase.
pub fn karcher_mean(spec: &MetricSpec, curves: &[DiscreteCurve], opts: &KarcherOptions) -> Result<KarcherResult> {
    let first = curves
        .first()
        .ok_or_else(|| ShapeError::InvalidInput("Karcher mean of an empty set".into()))?;
    for c in curves {
        first.check_same_grid(c)?;
    }
    let k = curves.len() as f64;
    let avg: Vec<[f64; 3]> = (0..first.len())
        .map(|i| {
            let mut p = [0.0; 3];
            for c in curves {
                for (a, b) in p.iter_mut().zip(c.points()[i]) {
                    *a += b / k;
                }
            }
            p
        })
        .collect();
    let mut mean = DiscreteCurve::new(avg, first.dim(), first.topology())?;
    let (mut logs, mut total) = logs_at(spec, &mean, curves, &opts.log)?;
    let mut history = vec![total];

    for iter in 0..opts.max_iter {
        let mut v = TangentField::zeros(mean.len());
        for u in &logs {
            v = v.plus(&u.scaled(1.0 / k));
        }
        let vnorm = metric_eval(spec, &mean, &v, &v)?.max(0.0).sqrt();
        if vnorm < opts.tol {
            return Ok(KarcherResult {
                mean,
                history,
                converged: true,
                iterations: iter,
            });
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..10 {
            let trial = exp_map(spec, &mean, &v.scaled(alpha), opts.log.steps)
                .and_then(|c| logs_at(spec, &c, curves, &opts.log).map(|(l, t)| (c, l, t)));
            if let Ok((c, l, t)) = trial {
                if t <= total {
                    accepted = Some((c, l, t));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((c, l, t)) = accepted else {
            return Ok(KarcherResult {
                mean,
                history,
                converged: false,
                iterations: iter,
            });
        };
        mean = c;
        logs = l;
        total = t;
        history.push(total);
    }
    Ok(KarcherResult {
        mean,
        history,
        converged: false,
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;

    fn circle(n: usize, r: f64) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| [r * t.cos(), r * t.sin(), 0.0]).unwrap()
    }

    #[test]
    fn log_of_self_is_zero() {
        let spec: MetricSpec = "sobolev:1,0,1".parse().unwrap();
        let c = circle(32, 1.0);
        let r = log_map(&spec, &c, &c, &LogOptions::default()).unwrap();
        assert!(r.velocity.values.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn round_trip_between_circles() {
        let spec: MetricSpec = "sobolev:1,0,1".parse().unwrap();
        let (c0, c1) = (circle(32, 1.0), circle(32, 1.5));
        let r = log_map(&spec, &c0, &c1, &LogOptions::default()).unwrap();
        let back = exp_map(&spec, &c0, &r.velocity, 40).unwrap();
        assert!(back.difference(&c1).grid_norm(&c0.grid()) < 1e-6);
    }

    #[test]
    fn mean_of_duplicates() {
        let spec = MetricSpec::L2;
        let c = DiscreteCurve::from_fn(32, 2, Topology::Closed, |t| [2.0 * t.cos(), t.sin(), 0.0]).unwrap();
        let r = karcher_mean(&spec, &[c.clone(), c.clone()], &KarcherOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.mean.difference(&c).grid_norm(&c.grid()) < 1e-12);
    }
}
