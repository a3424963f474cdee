//! Reparametrizations and elastic matching.
//!
//! Matching minimizes `∫ |q₀ − √φ′ q₁∘φ|² dθ` over monotone `φ` by dynamic
//! programming on a `K × K` node lattice. Edges are lattice steps `(p, q)`
//! with `φ′ = q/p` on the step. Besides the coprime slopes the lattice has a
//! flat step `(1, 0)`, where a piece of `c₀` is matched to a single point of
//! `c₁` (`√φ′ = 0`), and a vertical step `(0, 1)`, where `φ` jumps over a
//! piece of `c₁`. Both cost the squared norm of the unmatched piece, which
//! is the limit of the integral as `φ′ → 0` or `φ′ → ∞`. Every edge cost is
//! written symmetrically as `Δ∫₀¹ |√p q₀(θ(τ)) − √q q₁(φ(τ))|² dτ`, so
//! swapping the curves transposes the lattice.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::DiscreteCurve;
use crate::error::{Result, ShapeError};
use crate::grid::{dot, CubicSpline, Grid, Topology, TrigInterpolant, Vec3};
use crate::srv::srvt_unchecked;

const TWO_PI: f64 = 2.0 * PI;

/// Sampled `φ` on a uniform grid of the parameter domain.
///
/// Open: `φ(0) = 0`, `φ(2π) = 2π`. Closed: `φ(θ + 2π) = φ(θ) + 2π`, with an
/// arbitrary offset `φ(0)`. Values need only be nondecreasing so that the
/// degenerate limits of matching can be represented.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reparametrization {
    values: Vec<f64>,
    topology: Topology,
}

impl Reparametrization {
    pub fn new(values: Vec<f64>, topology: Topology) -> Result<Self> {
        let n = values.len();
        if n < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(ShapeError::InvalidInput("reparametrization needs ≥ 2 finite values".into()));
        }
        let tol = 1e-9 * TWO_PI;
        if values.windows(2).any(|w| w[1] < w[0] - tol) {
            return Err(ShapeError::InvalidInput("reparametrization must be nondecreasing".into()));
        }
        match topology {
            Topology::Open => {
                if values[0].abs() > tol || (values[n - 1] - TWO_PI).abs() > tol {
                    return Err(ShapeError::InvalidInput("open reparametrization must fix 0 and 2π".into()));
                }
            }
            Topology::Closed => {
                if values[n - 1] - values[0] > TWO_PI + tol {
                    return Err(ShapeError::InvalidInput("closed reparametrization wraps more than once".into()));
                }
            }
        }
        Ok(Self { values, topology })
    }

    pub fn identity(n: usize, topology: Topology) -> Self {
        Self {
            values: Grid::new(n, topology).thetas(),
            topology,
        }
    }

    pub fn from_fn(n: usize, topology: Topology, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(Grid::new(n, topology).thetas().into_iter().map(f).collect(), topology)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.values.len(), self.topology)
    }

    pub fn is_strictly_monotone(&self) -> bool {
        let n = self.values.len();
        let inner = self.values.windows(2).all(|w| w[1] > w[0]);
        match self.topology {
            Topology::Open => inner,
            Topology::Closed => inner && self.values[0] + TWO_PI > self.values[n - 1],
        }
    }

    /// Piecewise linear evaluation, extended periodically (closed) or
    /// clamped (open).
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let h = self.grid().spacing();
        match self.topology {
            Topology::Open => {
                let x = (theta / h).clamp(0.0, (n - 1) as f64);
                let i = (x.floor() as usize).min(n - 2);
                let f = x - i as f64;
                self.values[i] + f * (self.values[i + 1] - self.values[i])
            }
            Topology::Closed => {
                let x = theta / h;
                let k = x.floor();
                let f = x - k;
                let k = k as i64;
                let m = k.div_euclid(n as i64);
                let r = k.rem_euclid(n as i64) as usize;
                let lo = self.values[r] + TWO_PI * m as f64;
                let hi = if r + 1 == n {
                    self.values[0] + TWO_PI * (m + 1) as f64
                } else {
                    self.values[r + 1] + TWO_PI * m as f64
                };
                lo + f * (hi - lo)
            }
        }
    }

    /// Samples of this map on a uniform grid of `m` points.
    pub fn resampled(&self, m: usize) -> Self {
        let values = Grid::new(m, self.topology).thetas().into_iter().map(|t| self.eval(t)).collect();
        Self {
            values,
            topology: self.topology,
        }
    }
}

/// `c ∘ φ` sampled on the grid of `c`.
pub fn apply_reparam(c: &DiscreteCurve, phi: &Reparametrization) -> Result<DiscreteCurve> {
    if phi.topology() != c.topology() {
        return Err(ShapeError::GridMismatch("curve and reparametrization topologies differ".into()));
    }
    if !phi.is_strictly_monotone() {
        return Err(ShapeError::InvalidInput("reparametrization is not strictly monotone".into()));
    }
    let phi = if phi.len() == c.len() { phi.clone() } else { phi.resampled(c.len()) };
    let points: Vec<Vec3> = match c.topology() {
        Topology::Closed => {
            let interp = TrigInterpolant::new(c.points());
            phi.values().iter().map(|&t| interp.eval(t)).collect()
        }
        Topology::Open => {
            let spline = CubicSpline::new(c.points());
            phi.values().iter().map(|&t| spline.eval(t.clamp(0.0, TWO_PI))).collect()
        }
    };
    DiscreteCurve::new(points, c.dim(), c.topology())
}

/// `argmin_{s ≥ 0} |q₀ − s q₁|²`.
pub fn pointwise_optimal_scale(q0: Vec3, q1: Vec3) -> Result<f64> {
    let n2 = dot(q1, q1);
    if !(n2 > 0.0) {
        return Err(ShapeError::InvalidInput("q1 must be nonzero".into()));
    }
    Ok(dot(q0, q1).max(0.0) / n2)
}

/// Which curve loses a piece in a degenerate stretch of a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseSide {
    /// A piece of `c₀` is matched to one point of `c₁` (`φ′ ≈ 0`).
    First,
    /// `φ` jumps over a piece of `c₁`.
    Second,
}

/// Grid cells `start..end` of the collapsing curve. Closed-curve indices
/// may run past the grid size and are to be read modulo it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseInterval {
    pub side: CollapseSide,
    pub start: usize,
    pub end: usize,
    /// Parameter length of the interval.
    pub mass: f64,
}

/// Maximal runs of cells where the discrete slope of `φ` is below `eps`.
pub fn collapse_report(phi: &Reparametrization, eps: f64) -> Vec<CollapseInterval> {
    let n = phi.len();
    let h = phi.grid().spacing();
    let v = phi.values();
    let cells = match phi.topology() {
        Topology::Open => n - 1,
        Topology::Closed => n,
    };
    let slope = |i: usize| {
        let next = if i + 1 == n { v[0] + TWO_PI } else { v[i + 1] };
        (next - v[i]) / h
    };
    let flat: Vec<bool> = (0..cells).map(|i| slope(i) < eps).collect();
    let mut out = runs(&flat, CollapseSide::First, h);
    if phi.topology() == Topology::Closed && out.len() > 1 && flat[0] && flat[cells - 1] {
        let first = out.remove(0);
        let last = out.last_mut().unwrap();
        last.end = cells + first.end;
        last.mass += first.mass;
    }
    out
}

fn runs(mask: &[bool], side: CollapseSide, h: f64) -> Vec<CollapseInterval> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let start = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            out.push(CollapseInterval {
                side,
                start,
                end: i,
                mass: (i - start) as f64 * h,
            });
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    /// `φ` on the grid of `c₀`, so that `c₁∘φ` is aligned with `c₀`.
    pub phi: Reparametrization,
    pub distance: f64,
    pub collapse_intervals: Vec<CollapseInterval>,
    /// `φ(0)` for closed curves, 0 for open ones.
    pub seed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOptions {
    /// Lattice size in cells; defaults to one cell per sample of `c₀`.
    pub k: Option<usize>,
    /// Number of equally spaced starting offsets for closed curves, tried
    /// on each curve in turn; defaults to `k`.
    pub seeds: Option<usize>,
    /// Scan every 16th offset first, then the neighbourhood of the best one.
    pub coarse_to_fine: bool,
    pub eps_collapse: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            k: None,
            seeds: None,
            coarse_to_fine: false,
            eps_collapse: 0.05,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Flat and vertical steps followed by coprime `(p, q)` with entries ≤ `max`.
fn lattice_moves(max: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(1, 0), (0, 1)];
    for p in 1..=max {
        for q in 1..=max {
            if gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

const ONE_SIDED_SLOPES: usize = 5;
const JOINT_SLOPES: usize = 7;

/// SRV samples of both curves on `k + 1` lattice nodes and the edge costs
/// between them.
struct Lattice {
    k: usize,
    periodic: bool,
    moves: Vec<(usize, usize)>,
    cost: Vec<f64>,
}

impl Lattice {
    fn cols(&self) -> usize {
        if self.periodic {
            self.k
        } else {
            self.k + 1
        }
    }

    fn edge(&self, i: usize, j: usize, m: usize) -> f64 {
        self.cost[(i * self.cols() + j) * self.moves.len() + m]
    }

    fn build(c0: &DiscreteCurve, c1: &DiscreteCurve, k: usize, max_slope: usize) -> Self {
        let periodic = c0.topology() == Topology::Closed;
        // Both SRVs stay on their own sample grids, linear in between, so
        // edge costs do not depend on `k` and refining the lattice can only
        // lower the optimum.
        let nodes = |c: &DiscreteCurve| {
            let mut q = srvt_unchecked(c).q;
            if periodic {
                q.push(q[0]);
            }
            Polyline { cells: q.len() - 1, q }
        };
        let (a, b) = (nodes(c0), nodes(c1));
        let moves = lattice_moves(max_slope);
        let h = TWO_PI / k as f64;
        let cols = if periodic { k } else { k + 1 };
        let nm = moves.len();
        let rows = if periodic { k } else { k + 1 };
        let cost: Vec<f64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|i| {
                let (a, b, moves) = (&a, &b, &moves);
                (0..cols).flat_map(move |j| {
                    moves.iter().map(move |&(p, q)| {
                        let fits = periodic || (i + p <= k && j + q <= k);
                        if fits {
                            h * edge_integral(a, b, (i, j), (p, q), k)
                        } else {
                            f64::INFINITY
                        }
                    })
                })
            })
            .collect();
        debug_assert_eq!(cost.len(), rows * cols * nm);
        Self {
            k,
            periodic,
            moves,
            cost,
        }
    }

    /// Cheapest lattice path from `start` to `start + (k, k)`, as unwrapped
    /// node coordinates. Ties go to the earlier move, so results are
    /// reproducible.
    fn solve(&self, start: Start) -> (f64, Vec<(usize, usize)>) {
        let k = self.k;
        let w = k + 1;
        let (i0, j0) = start;
        let mut d = vec![f64::INFINITY; w * w];
        let mut back = vec![u8::MAX; w * w];
        d[0] = 0.0;
        for i in 0..=k {
            for j in 0..=k {
                if i == 0 && j == 0 {
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut arg = u8::MAX;
                for (m, &(p, q)) in self.moves.iter().enumerate() {
                    if p > i || q > j {
                        continue;
                    }
                    let (pi, pj) = (i - p, j - q);
                    let prev = d[pi * w + pj];
                    if !prev.is_finite() {
                        continue;
                    }
                    let cand = prev + self.edge((i0 + pi) % self.rows(), (j0 + pj) % self.cols(), m);
                    if cand < best {
                        best = cand;
                        arg = m as u8;
                    }
                }
                d[i * w + j] = best;
                back[i * w + j] = arg;
            }
        }
        let mut path = vec![(i0 + k, j0 + k)];
        let (mut i, mut j) = (k, k);
        while (i, j) != (0, 0) {
            let (p, q) = self.moves[back[i * w + j] as usize];
            i -= p;
            j -= q;
            path.push((i0 + i, j0 + j));
        }
        path.reverse();
        (d[w * w - 1].max(0.0), path)
    }

    fn rows(&self) -> usize {
        if self.periodic {
            self.k
        } else {
            self.k + 1
        }
    }

    /// Starting nodes: `(0, 0)` for open curves. Closed curves start on
    /// node 0 of either curve and an offset node of the other, so swapping
    /// the curves swaps the candidate set.
    fn starts(&self, count: Option<usize>) -> Vec<Start> {
        if !self.periodic {
            return vec![(0, 0)];
        }
        let count = count.unwrap_or(self.k).clamp(1, self.k);
        let offsets = (0..count).map(|s| s * self.k / count);
        let mut out: Vec<Start> = offsets.clone().map(|s| (0, s)).collect();
        out.extend(offsets.filter(|&s| s > 0).map(|s| (s, 0)));
        out
    }

    /// Best `(cost, path)` over the given starts; ties go to the earlier
    /// start.
    fn best(&self, starts: &[Start]) -> (f64, Vec<(usize, usize)>) {
        let results: Vec<_> = starts.par_iter().map(|&s| self.solve(s)).collect();
        results
            .into_iter()
            .reduce(|a, b| if b.0 < a.0 { b } else { a })
            .expect("at least one start")
    }

    fn search(&self, opts: &MatchOptions) -> (f64, Vec<(usize, usize)>) {
        let starts = self.starts(opts.seeds);
        if !(self.periodic && opts.coarse_to_fine && starts.len() > 64) {
            return self.best(&starts);
        }
        // Scan every 16th offset on each curve, then the neighbourhood of
        // the best one.
        let stride = 16;
        let coarse: Vec<Start> = starts.iter().copied().filter(|&(i, j)| (i + j) % stride == 0).collect();
        let (_, path) = self.best(&coarse);
        let best = path[0];
        let k = self.k as i64;
        let fine: Vec<Start> = starts
            .iter()
            .copied()
            .filter(|&(i, j)| {
                let (a, b) = ((i + j) as i64, (best.0 + best.1) as i64);
                let gap = (a - b).rem_euclid(k);
                (i == 0) == (best.0 == 0) && gap.min(k - gap) <= stride as i64
            })
            .collect();
        self.best(&fine)
    }
}

type Start = (usize, usize);

/// SRV samples with `cells` equal cells over the domain, linear between
/// samples; closed curves repeat the first sample at the end.
struct Polyline {
    q: Vec<Vec3>,
    cells: usize,
}

impl Polyline {
    /// Value at lattice coordinate `x` of a `k`-cell lattice, wrapping
    /// periodically past the end.
    fn at(&self, x: f64, k: usize) -> Vec3 {
        let mut y = x * self.cells as f64 / k as f64;
        if y > self.cells as f64 {
            y -= self.cells as f64;
        }
        let c = (y.floor() as usize).min(self.cells - 1);
        let f = y - c as f64;
        let (lo, hi) = (self.q[c], self.q[c + 1]);
        [lo[0] + f * (hi[0] - lo[0]), lo[1] + f * (hi[1] - lo[1]), lo[2] + f * (hi[2] - lo[2])]
    }

    /// Fractions `τ ∈ (0, 1)` of the lattice step `x → x + p` that land on
    /// a sample.
    fn breaks(&self, x: usize, p: usize, k: usize, out: &mut Vec<f64>) {
        if p == 0 {
            return;
        }
        let r = self.cells as f64 / k as f64;
        let (lo, hi) = (x as f64 * r, (x + p) as f64 * r);
        let mut m = lo.floor() + 1.0;
        while m < hi {
            out.push((m / r - x as f64) / p as f64);
            m += 1.0;
        }
    }
}

/// `∫₀¹ |√p a(i + pτ) − √q b(j + qτ)|² dτ`. The integrand is quadratic
/// between the merged sample breakpoints, so Simpson's rule on each piece
/// is exact.
fn edge_integral(a: &Polyline, b: &Polyline, (i, j): (usize, usize), (p, q): (usize, usize), k: usize) -> f64 {
    let (sp, sq) = ((p as f64).sqrt(), (q as f64).sqrt());
    let f = |t: f64| {
        let x = a.at(i as f64 + p as f64 * t, k);
        let y = b.at(j as f64 + q as f64 * t, k);
        let d = [sp * x[0] - sq * y[0], sp * x[1] - sq * y[1], sp * x[2] - sq * y[2]];
        dot(d, d)
    };
    let mut breaks = vec![0.0, 1.0];
    a.breaks(i, p, k, &mut breaks);
    b.breaks(j, q, k, &mut breaks);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    breaks
        .windows(2)
        .map(|w| (w[1] - w[0]) / 6.0 * (f(w[0]) + 4.0 * f(0.5 * (w[0] + w[1])) + f(w[1])))
        .sum()
}

fn prepare(c0: &DiscreteCurve, c1: &DiscreteCurve, opts: &MatchOptions) -> Result<usize> {
    if c0.topology() != c1.topology() {
        return Err(ShapeError::GridMismatch("cannot match open and closed curves".into()));
    }
    c0.require_regular()?;
    c1.require_regular()?;
    let default = match c0.topology() {
        Topology::Closed => c0.len(),
        Topology::Open => c0.len() - 1,
    };
    let k = opts.k.unwrap_or(default);
    if k < 4 {
        return Err(ShapeError::InvalidInput(format!("lattice size {k} too small")));
    }
    Ok(k)
}

/// Samples of `φ` on the lattice columns: the lowest row reached in each
/// column, i.e. `φ` is left-continuous at jumps. Closed maps are shifted by
/// whole periods so that `φ(0) ∈ [0, 2π)`.
fn phi_from_path(path: &[(usize, usize)], k: usize, topology: Topology) -> Vec<f64> {
    let h = TWO_PI / k as f64;
    let i0 = path[0].0;
    let mut lowest = vec![f64::INFINITY; k + 1];
    let mut visit = |i: usize, j: f64| {
        let (col, wraps) = match topology {
            Topology::Open => (i, 0),
            Topology::Closed if i < i0 + k => (i % k, i / k),
            Topology::Closed => return,
        };
        lowest[col] = lowest[col].min(j * h - wraps as f64 * TWO_PI);
    };
    for w in path.windows(2) {
        let ((i, j), (i1, j1)) = (w[0], w[1]);
        // Columns inside a diagonal step lie on its straight line.
        for r in 0..(i1 - i).max(1) {
            visit(i + r, j as f64 + r as f64 * (j1 - j) as f64 / (i1 - i).max(1) as f64);
        }
    }
    let &(i, j) = path.last().expect("nonempty path");
    visit(i, j as f64);
    match topology {
        Topology::Open => lowest[k] = TWO_PI,
        Topology::Closed => {
            lowest.pop();
            let shift = (lowest[0] / TWO_PI).floor() * TWO_PI;
            lowest.iter_mut().for_each(|v| *v -= shift);
        }
    }
    lowest
}

fn path_collapses(path: &[(usize, usize)], k: usize, eps: f64) -> Vec<CollapseInterval> {
    let h = TWO_PI / k as f64;
    let (i0, j0) = path[0];
    let mut first = vec![false; k];
    let mut second = vec![false; k];
    for w in path.windows(2) {
        let (p, q) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if (q as f64) < eps * p as f64 {
            first[w[0].0 - i0..w[1].0 - i0].iter_mut().for_each(|x| *x = true);
        }
        if (p as f64) < eps * q as f64 {
            second[w[0].1 - j0..w[1].1 - j0].iter_mut().for_each(|x| *x = true);
        }
    }
    let shift = |offset: usize| {
        move |mut c: CollapseInterval| {
            c.start += offset;
            c.end += offset;
            c
        }
    };
    let mut out: Vec<CollapseInterval> = runs(&first, CollapseSide::First, h).into_iter().map(shift(i0)).collect();
    out.extend(runs(&second, CollapseSide::Second, h).into_iter().map(shift(j0)));
    out
}

/// Elastic matching of `c₁` to `c₀`: approximately minimizes
/// `‖q₀ − √φ′ q₁∘φ‖` over monotone `φ`, searching over starting offsets
/// when the curves are closed.
pub fn dp_match(c0: &DiscreteCurve, c1: &DiscreteCurve, opts: &MatchOptions) -> Result<MatchResult> {
    let k = prepare(c0, c1, opts)?;
    let lattice = Lattice::build(c0, c1, k, ONE_SIDED_SLOPES);
    let (cost, path) = lattice.search(opts);
    let topology = c0.topology();
    let values = phi_from_path(&path, k, topology);
    let seed = match topology {
        Topology::Open => 0.0,
        Topology::Closed => values[0],
    };
    let phi = Reparametrization { values, topology };
    let phi = if phi.len() == c0.len() { phi } else { phi.resampled(c0.len()) };
    Ok(MatchResult {
        phi,
        distance: cost.sqrt(),
        collapse_intervals: path_collapses(&path, k, opts.eps_collapse),
        seed,
    })
}

/// [`dp_match`] for closed curves with `seeds` starting offsets.
pub fn match_closed(c0: &DiscreteCurve, c1: &DiscreteCurve, seeds: usize) -> Result<MatchResult> {
    if c0.topology() != Topology::Closed {
        return Err(ShapeError::InvalidInput("match_closed needs closed curves".into()));
    }
    dp_match(
        c0,
        c1,
        &MatchOptions {
            seeds: Some(seeds),
            ..MatchOptions::default()
        },
    )
}

/// Result of matching with both curves reparametrized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointMatch {
    pub phi0: Reparametrization,
    pub phi1: Reparametrization,
    pub distance: f64,
    /// `φ₁(0) − φ₀(0)`.
    pub seed: f64,
}

/// Matching with both curves reparametrized over a common parameter `τ`:
/// either curve may wait while the other advances, so neither map jumps.
/// The slope set contains that of [`dp_match`], so the distance is never
/// larger.
pub fn joint_match(c0: &DiscreteCurve, c1: &DiscreteCurve, opts: &MatchOptions) -> Result<JointMatch> {
    let k = prepare(c0, c1, opts)?;
    let lattice = Lattice::build(c0, c1, k, JOINT_SLOPES);
    let (cost, path) = lattice.search(opts);
    let h = TWO_PI / k as f64;
    let (i0, j0) = path[0];
    // τ advances by half a cell per lattice unit of either curve.
    let tau: Vec<f64> = path.iter().map(|&(i, j)| 0.5 * h * (i - i0 + j - j0) as f64).collect();
    let n = c0.len();
    let topology = c0.topology();
    let sample = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        Grid::new(n, topology)
            .thetas()
            .into_iter()
            .map(|t| {
                let r = tau.partition_point(|&x| x <= t).clamp(1, tau.len() - 1);
                let (t0, t1) = (tau[r - 1], tau[r]);
                let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                f(r - 1) + s * (f(r) - f(r - 1))
            })
            .collect()
    };
    let phi0 = sample(&|r| path[r].0 as f64 * h);
    let phi1 = sample(&|r| path[r].1 as f64 * h);
    Ok(JointMatch {
        phi0: Reparametrization::new(phi0, topology)?,
        phi1: Reparametrization::new(phi1, topology)?,
        distance: cost.sqrt(),
        seed: (j0 as f64 - i0 as f64) * h,
    })
}
