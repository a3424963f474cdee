//! Boundary value problem by path straightening.
//!
//! A path `c₀ = γ₀, γ₁, …, γ_T = c₁` has discrete energy
//! `E = T Σₖ G_{mₖ}(δₖ, δₖ)` with `δₖ = γₖ₊₁ − γₖ` and midpoint curves
//! `mₖ = (γₖ + γₖ₊₁)/2`, and length `Σₖ √G_{mₖ}(δₖ, δₖ)`. The interior
//! curves are optimized by L-BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::curve::DiscreteCurve;
use crate::error::{Result, ShapeError};
use rustfft::num_complex::Complex64;

use crate::grid::{fourier_multiply, signed_index, Grid, Vec3};
use crate::metrics::{MetricAt, MetricSpec};
use crate::path::PathOfCurves;
use crate::reparam::{apply_reparam, dp_match, MatchOptions, MatchResult, Reparametrization};

#[derive(Debug, Clone, PartialEq)]
pub struct StraightenOptions {
    /// Number of time steps `T`.
    pub steps: usize,
    pub max_iter: usize,
    /// Stop once the energy gradient has shrunk by this factor, or the
    /// energy has dropped by less than this fraction over the last
    /// [`STALL_WINDOW`] iterations.
    pub tol: f64,
    pub memory: usize,
}

impl Default for StraightenOptions {
    fn default() -> Self {
        Self {
            steps: 32,
            max_iter: 1000,
            tol: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StraightenResult {
    pub path: PathOfCurves,
    pub converged: bool,
    /// Energy after every accepted iteration, starting with the initial
    /// path.
    pub energy_history: Vec<f64>,
    pub energy: f64,
    pub length: f64,
    /// Euclidean norm of the energy gradient at the returned path.
    pub residual: f64,
}

pub const STALL_WINDOW: usize = 10;

/// Discrete path energy as a function of the stacked interior points.
struct PathEnergy<'a> {
    spec: &'a MetricSpec,
    grid: Grid,
    dim: usize,
    first: Vec<Vec3>,
    last: Vec<Vec3>,
    steps: usize,
    /// Midpoint curves slower than this make the energy infinite.
    speed_floor: f64,
}

impl PathEnergy<'_> {
    fn n(&self) -> usize {
        self.grid.n
    }

    fn unpack(&self, x: &[f64]) -> Vec<Vec<Vec3>> {
        let (n, d) = (self.n(), self.dim);
        let mut curves = Vec::with_capacity(self.steps + 1);
        curves.push(self.first.clone());
        for k in 0..self.steps - 1 {
            let off = k * n * d;
            curves.push(
                (0..n)
                    .map(|i| {
                        let mut p = [0.0; 3];
                        p[..d].copy_from_slice(&x[off + i * d..off + (i + 1) * d]);
                        p
                    })
                    .collect(),
            );
        }
        curves.push(self.last.clone());
        curves
    }

    fn pack(&self, curves: &[Vec<Vec3>]) -> Vec<f64> {
        curves[1..self.steps]
            .iter()
            .flat_map(|c| c.iter().flat_map(|p| p[..self.dim].to_vec()))
            .collect()
    }

    /// `(E, L, ∂E/∂x)`; `None` when a midpoint curve degenerates.
    fn eval(&self, x: &[f64], with_grad: bool) -> Option<(f64, f64, Vec<f64>)> {
        let curves = self.unpack(x);
        let t = self.steps;
        let n = self.n();
        let mut energy = 0.0;
        let mut length = 0.0;
        let mut grads = vec![vec![[0.0; 3]; n]; t + 1];
        for k in 0..t {
            let (a, b) = (&curves[k], &curves[k + 1]);
            let mid: Vec<Vec3> = a
                .iter()
                .zip(b)
                .map(|(p, q)| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])])
                .collect();
            let delta: Vec<Vec3> = a.iter().zip(b).map(|(p, q)| [q[0] - p[0], q[1] - p[1], q[2] - p[2]]).collect();
            let at = MetricAt::from_points(self.spec, self.grid, self.dim, mid);
            if at.speeds().iter().any(|s| !(*s > self.speed_floor)) {
                return None;
            }
            let (g, gu, gc) = at.grads(&delta, with_grad);
            if !g.is_finite() {
                return None;
            }
            energy += t as f64 * g;
            length += g.max(0.0).sqrt();
            if with_grad {
                for i in 0..n {
                    for c in 0..3 {
                        let half = 0.5 * gc[i][c];
                        grads[k][i][c] += t as f64 * (half - gu[i][c]);
                        grads[k + 1][i][c] += t as f64 * (half + gu[i][c]);
                    }
                }
            }
        }
        let grad = if with_grad { self.pack(&grads) } else { Vec::new() };
        Some((energy, length, grad))
    }
}

/// Relative weight of Fourier mode `k` in the metric at a constant-speed
/// curve with speed `speed`.
fn mode_weight(spec: &MetricSpec, k: f64, speed: f64) -> f64 {
    let x = k / speed;
    match spec {
        MetricSpec::L2 | MetricSpec::AlmostLocal(_) => 1.0,
        MetricSpec::Sobolev(c) => c
            .as_slice()
            .iter()
            .enumerate()
            .map(|(j, a)| a * x.powi(2 * j as i32))
            .sum(),
        MetricSpec::Elastic(c) => 0.5 * (c.a().powi(2) + c.b().powi(2)) * (k.max(1.0) / speed).powi(2),
    }
}

/// Approximate inverse Hessian of the path energy, applied curve by curve:
/// on closed grids the inverse of the metric's constant-speed Fourier
/// symbol, the identity otherwise.
struct Preconditioner {
    symbol: Option<Vec<f64>>,
    n: usize,
    dim: usize,
}

impl Preconditioner {
    fn new(spec: &MetricSpec, grid: Grid, dim: usize, speed: f64) -> Self {
        let symbol = (grid.topology == crate::grid::Topology::Closed).then(|| {
            (0..grid.n)
                .map(|j| 1.0 / mode_weight(spec, signed_index(j, grid.n).unsigned_abs() as f64, speed))
                .collect()
        });
        Self { symbol, n: grid.n, dim }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let Some(symbol) = &self.symbol else {
            return x.to_vec();
        };
        let (n, d) = (self.n, self.dim);
        let mut out = Vec::with_capacity(x.len());
        for chunk in x.chunks(n * d) {
            let f: Vec<Vec3> = (0..n)
                .map(|i| {
                    let mut p = [0.0; 3];
                    p[..d].copy_from_slice(&chunk[i * d..(i + 1) * d]);
                    p
                })
                .collect();
            let g = fourier_multiply(&f, |k, n| {
                let j = if k >= 0 { k as usize } else { (n as i64 + k) as usize };
                Complex64::new(symbol[j], 0.0)
            });
            out.extend(g.iter().flat_map(|p| p[..d].to_vec()));
        }
        out
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes the discrete path energy between `c₀` and `c₁`, starting from
/// the straight line.
pub fn path_straighten(
    spec: &MetricSpec,
    c0: &DiscreteCurve,
    c1: &DiscreteCurve,
    opts: &StraightenOptions,
) -> Result<StraightenResult> {
    c0.check_same_grid(c1)?;
    c0.require_regular()?;
    c1.require_regular()?;
    if opts.steps < 2 {
        return Err(ShapeError::InvalidInput("path straightening needs T ≥ 2".into()));
    }
    let initial = PathOfCurves::linear(c0, c1, opts.steps)?;
    let scale = 0.5 * (c0.length() + c1.length()) / (2.0 * std::f64::consts::PI);
    let problem = PathEnergy {
        spec,
        grid: c0.grid(),
        dim: c0.dim(),
        first: c0.points().to_vec(),
        last: c1.points().to_vec(),
        steps: opts.steps,
        speed_floor: 1e-3 * c0.default_regularity_eps().min(c1.default_regularity_eps()),
    };
    let curves: Vec<Vec<Vec3>> = initial.curves.iter().map(|c| c.points().to_vec()).collect();
    let mut x = problem.pack(&curves);
    let (mut f, mut len, mut g) = problem
        .eval(&x, true)
        .ok_or(ShapeError::NonFinite("straight path between the curves is not regular"))?;
    let g0 = norm_inf(&g);
    let precond = Preconditioner::new(spec, c0.grid(), c0.dim(), scale);
    let mut history = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = g0 <= f64::MIN_POSITIVE || f == 0.0;
    let mut iter = 0;
    while !converged && iter < opts.max_iter {
        iter += 1;
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dotv(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        d = precond.apply(&d);
        if let Some((s, y, _)) = memory.back() {
            let gamma = dotv(s, y) / dotv(y, &precond.apply(y));
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            // first step moves points by at most 1% of the curve scale
            let m = norm_inf(&d).max(f64::MIN_POSITIVE);
            d.iter_mut().for_each(|v| *v *= 0.01 * scale / m);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dotv(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dotv(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = precond.apply(&g);
            let m = norm_inf(&d).max(f64::MIN_POSITIVE);
            d.iter_mut().for_each(|v| *v *= -0.01 * scale / m);
            slope = dotv(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if let Some((fn_, ln, gn)) = problem.eval(&xn, true) {
                if fn_ <= f + 1e-4 * step * slope {
                    accepted = Some((xn, fn_, ln, gn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, ln, gn)) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotv(&s, &y);
        if sy > 1e-12 * dotv(&s, &s).sqrt() * dotv(&y, &y).sqrt() {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        len = ln;
        g = gn;
        history.push(f);
        let stalled = history.len() > STALL_WINDOW
            && history[history.len() - 1 - STALL_WINDOW] - f <= opts.tol * f.abs();
        if norm_inf(&g) <= opts.tol * g0 || stalled {
            converged = true;
        }
    }
    let curves = problem
        .unpack(&x)
        .into_iter()
        .map(|p| c0.with_points(p))
        .collect();
    Ok(StraightenResult {
        path: PathOfCurves::uniform(curves)?,
        converged,
        energy_history: history,
        energy: f,
        length: len,
        residual: dotv(&g, &g).sqrt(),
    })
}

/// Length of the straightened path between `c₀` and `c₁`.
pub fn geodesic_distance(spec: &MetricSpec, c0: &DiscreteCurve, c1: &DiscreteCurve) -> Result<f64> {
    geodesic_distance_with(spec, c0, c1, &StraightenOptions::default())
}

pub fn geodesic_distance_with(
    spec: &MetricSpec,
    c0: &DiscreteCurve,
    c1: &DiscreteCurve,
    opts: &StraightenOptions,
) -> Result<f64> {
    Ok(path_straighten(spec, c0, c1, opts)?.length)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDistanceOptions {
    pub straighten: StraightenOptions,
    pub matching: MatchOptions,
    /// Alternations of matching and straightening.
    pub max_rounds: usize,
    /// Stop alternating once a round improves the distance by less than
    /// this fraction.
    pub tol: f64,
}

impl Default for ShapeDistanceOptions {
    fn default() -> Self {
        Self {
            straighten: StraightenOptions::default(),
            matching: MatchOptions::default(),
            max_rounds: 3,
            tol: 1e-3,
        }
    }
}

/// Smallest slope kept when a matched `φ` is turned into a diffeomorphism.
const MIN_SLOPE: f64 = 0.05;

/// Blends `φ` with the shift `θ ↦ θ + φ(0)` until every discrete slope is at
/// least [`MIN_SLOPE`], so that `c ∘ φ` is defined.
fn make_diffeomorphic(phi: &Reparametrization) -> Result<Reparametrization> {
    let grid = phi.grid();
    let h = grid.spacing();
    let v = phi.values();
    let n = v.len();
    let offset = match phi.topology() {
        crate::grid::Topology::Open => 0.0,
        crate::grid::Topology::Closed => v[0],
    };
    let cells = match phi.topology() {
        crate::grid::Topology::Open => n - 1,
        crate::grid::Topology::Closed => n,
    };
    let slope = (0..cells)
        .map(|i| {
            let next = if i + 1 == n { v[0] + 2.0 * std::f64::consts::PI } else { v[i + 1] };
            (next - v[i]) / h
        })
        .fold(f64::INFINITY, f64::min);
    let lambda = if slope >= MIN_SLOPE { 0.0 } else { (MIN_SLOPE - slope) / (1.0 - slope) };
    let values = grid
        .thetas()
        .into_iter()
        .zip(v)
        .map(|(t, p)| (1.0 - lambda) * p + lambda * (t + offset))
        .collect();
    Reparametrization::new(values, phi.topology())
}

/// Distance between the shapes of `c₀` and `c₁`.
///
/// Alternates elastic matching of `c₁` to `c₀` (the square root velocity
/// cost stands in for the metric) with path straightening, and never
/// returns more than the parametrized distance.
pub fn shape_distance(spec: &MetricSpec, c0: &DiscreteCurve, c1: &DiscreteCurve) -> Result<(f64, MatchResult)> {
    shape_distance_with(spec, c0, c1, &ShapeDistanceOptions::default())
}

pub fn shape_distance_with(
    spec: &MetricSpec,
    c0: &DiscreteCurve,
    c1: &DiscreteCurve,
    opts: &ShapeDistanceOptions,
) -> Result<(f64, MatchResult)> {
    c0.check_same_grid(c1)?;
    let mut best = geodesic_distance_with(spec, c0, c1, &opts.straighten)?;
    let first = dp_match(c0, c1, &opts.matching)?;
    let mut current = c1.clone();
    let mut result = first.clone();
    for round in 0..opts.max_rounds {
        let m = if round == 0 { first.clone() } else { dp_match(c0, &current, &opts.matching)? };
        let phi = make_diffeomorphic(&m.phi)?;
        let candidate = apply_reparam(&current, &phi)?;
        let d = match geodesic_distance_with(spec, c0, &candidate, &opts.straighten) {
            Ok(d) => d,
            Err(ShapeError::NonFinite(_)) | Err(ShapeError::Irregular { .. }) => break,
            Err(e) => return Err(e),
        };
        if round == 0 {
            result = m;
        }
        if d < best * (1.0 - opts.tol) {
            best = d;
            current = candidate;
        } else {
            best = best.min(d);
            break;
        }
    }
    Ok((best, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;

    #[test]
    fn identical_curves_have_zero_energy() {
        let c = DiscreteCurve::from_fn(32, 2, Topology::Closed, |t| [t.cos(), 0.5 * t.sin(), 0.0]).unwrap();
        let r = path_straighten(&"sobolev:1,0,1".parse().unwrap(), &c, &c, &StraightenOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.length, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c0 = DiscreteCurve::from_fn(16, 2, Topology::Closed, |t| [t.cos(), t.sin(), 0.0]).unwrap();
        let spec: MetricSpec = "sobolev:1,0.3,0.2".parse().unwrap();
        let problem = PathEnergy {
            spec: &spec,
            grid: c0.grid(),
            dim: 2,
            first: c0.points().to_vec(),
            last: c0.scaled(2.0).translated([0.3, 0.1, 0.0]).points().to_vec(),
            steps: 4,
            speed_floor: 1e-9,
        };
        let x: Vec<f64> = (0..3 * 16 * 2)
            .map(|i| 1.0 + 0.3 * (i as f64 * 0.37).sin() + if i % 2 == 0 { 0.2 } else { -0.1 })
            .collect();
        let curves: Vec<Vec<Vec3>> = (0..=4)
            .map(|k| {
                c0.points()
                    .iter()
                    .map(|p| [p[0] * (1.0 + 0.25 * k as f64), p[1] * (1.0 + 0.25 * k as f64), 0.0])
                    .collect()
            })
            .collect();
        let mut x0 = problem.pack(&curves);
        for (a, b) in x0.iter_mut().zip(&x) {
            *a += 0.01 * b;
        }
        let (_, _, g) = problem.eval(&x0, true).unwrap();
        for idx in [0usize, 7, 40, 95] {
            let h = 1e-6;
            let mut xp = x0.clone();
            xp[idx] += h;
            let mut xm = x0.clone();
            xm[idx] -= h;
            let fd = (problem.eval(&xp, false).unwrap().0 - problem.eval(&xm, false).unwrap().0) / (2.0 * h);
            assert!((fd - g[idx]).abs() < 1e-5 * (1.0 + fd.abs()), "{idx}: {fd} vs {}", g[idx]);
        }
    }
}
