//! Square root velocity transform and the elastic metric family.
//!
//! `q = c′/√|c′|` maps the elastic metric with weights `(a, b) = (1, ½)` to
//! the flat `L²(dθ)` metric. Open curves modulo translation are an open set
//! in q-space, so geodesics are straight lines there. Closed curves must also
//! satisfy `∫ q|q| dθ = 0`, which [`project_closed`] enforces.

use nalgebra::{DMatrix, DVector};

use crate::curve::{arc_calculus, DiscreteCurve, TangentField};
use crate::error::{Result, ShapeError};
use crate::grid::{dot, norm, scale, sub, Grid, Topology, Vec3};
use crate::path::PathOfCurves;

#[derive(Debug, Clone, PartialEq)]
pub struct SrvCurve {
    pub q: Vec<Vec3>,
    pub basepoint: Vec3,
    pub dim: usize,
    pub topology: Topology,
}

impl SrvCurve {
    pub fn grid(&self) -> Grid {
        Grid::new(self.q.len(), self.topology)
    }

    /// `L²(dθ)` norm of `q`; its square is the length of the curve.
    pub fn l2_norm(&self) -> f64 {
        l2_distance(&self.grid(), &self.q, &vec![[0.0; 3]; self.q.len()])
    }

    fn with_q(&self, q: Vec<Vec3>) -> Self {
        Self { q, ..self.clone() }
    }
}

/// Weights of the elastic metric
/// `∫ a²⟨D_s h^⊥, D_s k^⊥⟩ + b²⟨D_s h, v⟩⟨D_s k, v⟩ ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticCoefficients {
    a: f64,
    b: f64,
}

impl ElasticCoefficients {
    pub const SRV: Self = Self { a: 1.0, b: 0.5 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(ShapeError::InvalidInput(format!("elastic weights must be positive, got a={a}, b={b}")))
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

pub(crate) fn l2_distance(grid: &Grid, a: &[Vec3], b: &[Vec3]) -> f64 {
    grid.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| {
            let d = sub(*x, *y);
            w * dot(d, d)
        })
        .sum::<f64>()
        .sqrt()
}

pub fn srvt(c: &DiscreteCurve) -> Result<SrvCurve> {
    c.require_regular()?;
    Ok(srvt_unchecked(c))
}

pub(crate) fn srvt_unchecked(c: &DiscreteCurve) -> SrvCurve {
    let q = c
        .velocity()
        .into_iter()
        .map(|v| {
            let s = norm(v);
            if s > 0.0 {
                scale(v, 1.0 / s.sqrt())
            } else {
                [0.0; 3]
            }
        })
        .collect();
    SrvCurve {
        q,
        basepoint: c.points()[0],
        dim: c.dim(),
        topology: c.topology(),
    }
}

fn q_abs_q(q: &[Vec3]) -> Vec<Vec3> {
    q.iter().map(|v| scale(*v, norm(*v))).collect()
}

/// `c(θ) = basepoint + ∫₀^θ q|q| dσ`.
pub fn srvt_inverse(q: &SrvCurve) -> Result<DiscreteCurve> {
    if let Some(i) = q.q.iter().position(|v| norm(*v) == 0.0) {
        return Err(ShapeError::InvalidInput(format!("SRV vanishes at sample {i}")));
    }
    srvt_inverse_unchecked(q)
}

pub(crate) fn srvt_inverse_unchecked(q: &SrvCurve) -> Result<DiscreteCurve> {
    let grid = q.grid();
    let integral = grid.cumulative_integral(&q_abs_q(&q.q));
    let points = integral
        .into_iter()
        .map(|p| [p[0] + q.basepoint[0], p[1] + q.basepoint[1], p[2] + q.basepoint[2]])
        .collect();
    DiscreteCurve::new(points, q.dim, q.topology)
}

/// `∫ q|q| dθ`, the end-to-start gap of the reconstructed curve.
pub fn closure_defect(q: &SrvCurve) -> Vec3 {
    q.grid().total_integral(&q_abs_q(&q.q))
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    /// Absolute tolerance on `|closure_defect|`; `None` selects `1e−9·√ℓ`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: 100 }
    }
}

pub fn default_closure_tol(q: &SrvCurve) -> f64 {
    let len = q.l2_norm().powi(2);
    1e-9 * len.sqrt().max(1e-12)
}

/// Closest closed SRV to `q` to first order in `L²(dθ)`.
///
/// Damped Newton on `d` multipliers: each step moves `q` along the span of
/// the constraint gradients `bᵢ = |q|eᵢ + qᵢ q/|q|`.
pub fn project_closed(q: &SrvCurve, opts: ProjectionOptions) -> Result<SrvCurve> {
    let tol = opts.tol.unwrap_or_else(|| default_closure_tol(q));
    let grid = Grid::new(q.q.len(), Topology::Closed);
    let w = grid.weights();
    let dim = q.dim;
    let defect = |v: &[Vec3]| grid.total_integral(&q_abs_q(v));
    let mut cur = q.q.clone();
    let mut f = defect(&cur);
    let mut residual = norm(f);
    for _ in 0..opts.max_iter {
        if residual < tol {
            if cur.iter().any(|v| norm(*v) == 0.0) {
                return Err(ShapeError::InvalidInput("projected SRV vanishes".into()));
            }
            return Ok(q.with_q(cur));
        }
        let basis: Vec<Vec<Vec3>> = (0..dim)
            .map(|i| {
                cur.iter()
                    .map(|v| {
                        let s = norm(*v);
                        if s == 0.0 {
                            return [0.0; 3];
                        }
                        let mut b = scale(*v, v[i] / s);
                        b[i] += s;
                        b
                    })
                    .collect()
            })
            .collect();
        let gram = DMatrix::from_fn(dim, dim, |i, j| {
            basis[i]
                .iter()
                .zip(&basis[j])
                .zip(&w)
                .map(|((a, b), wk)| wk * dot(*a, *b))
                .sum()
        });
        let rhs = DVector::from_fn(dim, |i, _| f[i]);
        let Some(beta) = gram.lu().solve(&rhs) else {
            break;
        };
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-6 {
            let trial: Vec<Vec3> = cur
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let mut out = *v;
                    for i in 0..dim {
                        for c in 0..3 {
                            out[c] -= step * beta[i] * basis[i][k][c];
                        }
                    }
                    out
                })
                .collect();
            let ft = defect(&trial);
            if norm(ft) < residual {
                cur = trial;
                f = ft;
                residual = norm(ft);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual < tol && cur.iter().all(|v| norm(*v) > 0.0) {
        return Ok(q.with_q(cur));
    }
    Err(ShapeError::NoConvergence {
        what: "closure projection",
        iterations: opts.max_iter,
        residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SrvGeodesicOptions {
    pub steps: usize,
    /// Projected path-energy descent sweeps applied after the pointwise
    /// projection (closed curves only).
    pub refine_iters: usize,
    /// Regularity threshold for the singularity scan; `None` uses the
    /// default threshold of the start curve.
    pub eps: Option<f64>,
}

impl Default for SrvGeodesicOptions {
    fn default() -> Self {
        Self {
            steps: 32,
            refine_iters: 0,
            eps: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SrvGeodesic {
    pub path: PathOfCurves,
    /// Length in the SRV metric, `Σ ‖q_{k+1} − q_k‖_{L²}`.
    pub length: f64,
    /// Samples `(t, θ)` where an intermediate curve fails to be regular.
    pub singularities: Vec<(f64, f64)>,
}

/// Geodesic in the SRV metric: the straight line in q-space for open curves,
/// its pointwise closure projection for closed curves.
pub fn srv_geodesic(c0: &DiscreteCurve, c1: &DiscreteCurve, opts: SrvGeodesicOptions) -> Result<SrvGeodesic> {
    c0.check_same_grid(c1)?;
    let q0 = srvt(c0)?;
    let q1 = srvt(c1)?;
    let steps = opts.steps.max(1);
    let grid = q0.grid();
    let mut qs: Vec<SrvCurve> = (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let q = q0
                .q
                .iter()
                .zip(&q1.q)
                .map(|(a, b)| lerp(*a, *b, t))
                .collect();
            SrvCurve {
                q,
                basepoint: lerp(q0.basepoint, q1.basepoint, t),
                ..q0.clone()
            }
        })
        .collect();
    if c0.topology() == Topology::Closed {
        for q in qs.iter_mut().take(steps).skip(1) {
            if norm(closure_defect(q)) > default_closure_tol(q) {
                *q = project_closed(q, ProjectionOptions::default())?;
            }
        }
        refine_closed_path(&mut qs, opts.refine_iters)?;
    }
    let length = path_length(&grid, &qs);
    let curves = qs
        .iter()
        .map(srvt_inverse_unchecked)
        .collect::<Result<Vec<_>>>()?;
    let path = PathOfCurves::uniform(curves)?;
    let eps = opts.eps.unwrap_or_else(|| c0.default_regularity_eps());
    let singularities = singularity_scan(&path, eps);
    Ok(SrvGeodesic {
        path,
        length,
        singularities,
    })
}

fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn path_length(grid: &Grid, qs: &[SrvCurve]) -> f64 {
    qs.windows(2).map(|w| l2_distance(grid, &w[0].q, &w[1].q)).sum()
}

fn path_energy(grid: &Grid, qs: &[SrvCurve]) -> f64 {
    let steps = (qs.len() - 1) as f64;
    qs.windows(2)
        .map(|w| l2_distance(grid, &w[0].q, &w[1].q).powi(2))
        .sum::<f64>()
        * steps
}

/// Projected gradient descent on the discrete path energy with fixed ends.
fn refine_closed_path(qs: &mut [SrvCurve], iters: usize) -> Result<()> {
    if qs.len() < 3 {
        return Ok(());
    }
    let grid = qs[0].grid();
    let mut energy = path_energy(&grid, qs);
    let mut step = 0.5;
    for _ in 0..iters {
        let mut trial = qs.to_vec();
        for k in 1..qs.len() - 1 {
            let moved: Vec<Vec3> = (0..qs[k].q.len())
                .map(|i| {
                    let (a, b, c) = (qs[k - 1].q[i], qs[k].q[i], qs[k + 1].q[i]);
                    let mut out = b;
                    for d in 0..3 {
                        out[d] += 0.5 * step * (a[d] - 2.0 * b[d] + c[d]);
                    }
                    out
                })
                .collect();
            trial[k] = project_closed(&qs[k].with_q(moved), ProjectionOptions::default())?;
        }
        let e = path_energy(&grid, &trial);
        if e < energy {
            energy = e;
            qs.clone_from_slice(&trial);
        } else {
            step *= 0.5;
            if step < 1e-4 {
                break;
            }
        }
    }
    Ok(())
}

/// SRV distance: `‖q₀ − q₁‖_{L²}` for open curves, the projected geodesic
/// length for closed ones.
pub fn srv_distance(c0: &DiscreteCurve, c1: &DiscreteCurve) -> Result<f64> {
    c0.check_same_grid(c1)?;
    match c0.topology() {
        Topology::Open => {
            let q0 = srvt(c0)?;
            let q1 = srvt(c1)?;
            Ok(l2_distance(&q0.grid(), &q0.q, &q1.q))
        }
        Topology::Closed => Ok(srv_geodesic(c0, c1, SrvGeodesicOptions::default())?.length),
    }
}

pub fn elastic_metric(
    c: &DiscreteCurve,
    h: &TangentField,
    k: &TangentField,
    coeff: ElasticCoefficients,
) -> Result<f64> {
    let arc = arc_calculus(c)?;
    let grid = c.grid();
    let dh = ds_first(&grid, &arc.speed, &h.values);
    let dk = ds_first(&grid, &arc.speed, &k.values);
    let (a2, b2) = (coeff.a * coeff.a, coeff.b * coeff.b);
    let integrand: Vec<f64> = (0..c.len())
        .map(|i| {
            let v = arc.unit_tangent[i];
            let (th, tk) = (dot(dh[i], v), dot(dk[i], v));
            let nh = sub(dh[i], scale(v, th));
            let nk = sub(dk[i], scale(v, tk));
            (a2 * dot(nh, nk) + b2 * th * tk) * arc.speed[i]
        })
        .collect();
    Ok(grid.integrate(&integrand))
}

fn ds_first(grid: &Grid, speed: &[f64], h: &[Vec3]) -> Vec<Vec3> {
    grid.derivative(h)
        .into_iter()
        .zip(speed)
        .map(|(v, s)| scale(v, 1.0 / s))
        .collect()
}

/// Samples `(t, θ)` of a path where `|c′| ≤ ε`.
pub fn singularity_scan(path: &PathOfCurves, eps: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (c, t) in path.curves.iter().zip(&path.times) {
        let grid = c.grid();
        for (i, s) in c.speeds().into_iter().enumerate() {
            if s <= eps {
                out.push((*t, grid.theta(i)));
            }
        }
    }
    out
}
