//! Sampled regular curves and arc-length calculus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShapeError};
use crate::grid::{cross, dot, norm, scale, CubicSpline, Grid, Topology, TrigInterpolant, Vec3};

pub const MIN_SAMPLES: usize = 8;

/// Relative factor of the default regularity threshold `ε = factor · ℓ/(2π)`.
pub const REGULARITY_FACTOR: f64 = 1e-6;

/// A curve sampled on the uniform grid of its topology.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<Vec3>,
    dim: usize,
    topology: Topology,
}

/// A vector field along a curve, sampled on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    pub values: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcData {
    pub speed: Vec<f64>,
    pub unit_tangent: Vec<Vec3>,
    pub curvature: Vec<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub ok: bool,
    pub min_speed: f64,
    pub threshold: f64,
    pub offending: Vec<usize>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<Vec3>, dim: usize, topology: Topology) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(ShapeError::InvalidInput(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points.len() < MIN_SAMPLES {
            return Err(ShapeError::InvalidInput(format!(
                "{} samples, need at least {MIN_SAMPLES}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ShapeError::NonFinite("curve points"));
        }
        let mut points = points;
        if dim == 2 {
            for p in points.iter_mut() {
                p[2] = 0.0;
            }
        }
        Ok(Self { points, dim, topology })
    }

    pub fn from_planar(points: &[[f64; 2]], topology: Topology) -> Result<Self> {
        Self::new(points.iter().map(|p| [p[0], p[1], 0.0]).collect(), 2, topology)
    }

    /// Samples `f` on the uniform grid of `n` points.
    pub fn from_fn(n: usize, dim: usize, topology: Topology, f: impl Fn(f64) -> Vec3) -> Result<Self> {
        let grid = Grid::new(n.max(2), topology);
        Self::new(grid.thetas().into_iter().map(f).collect(), dim, topology)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.points.len(), self.topology)
    }

    /// Same grid, dimension and topology.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.dim == other.dim && self.topology == other.topology
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(ShapeError::GridMismatch(format!(
                "({}, d={}, {:?}) vs ({}, d={}, {:?})",
                self.len(),
                self.dim,
                self.topology,
                other.len(),
                other.dim,
                other.topology
            )))
        }
    }

    pub(crate) fn with_points(&self, points: Vec<Vec3>) -> Self {
        debug_assert_eq!(points.len(), self.points.len());
        Self {
            points,
            dim: self.dim,
            topology: self.topology,
        }
    }

    /// `c + h`
    pub fn displaced(&self, h: &TangentField) -> Self {
        self.with_points(
            self.points
                .iter()
                .zip(&h.values)
                .map(|(p, v)| [p[0] + v[0], p[1] + v[1], p[2] + v[2]])
                .collect(),
        )
    }

    /// `c − other` as a field on this grid.
    pub fn difference(&self, other: &Self) -> TangentField {
        TangentField {
            values: self
                .points
                .iter()
                .zip(&other.points)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        }
    }

    /// θ-derivative `c′` on the grid.
    pub fn velocity(&self) -> Vec<Vec3> {
        self.grid().derivative(&self.points)
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.velocity().into_iter().map(norm).collect()
    }

    /// Length by quadrature of `|c′|`, without a regularity check.
    pub fn length(&self) -> f64 {
        self.grid().integrate(&self.speeds())
    }

    /// Default scale-aware regularity threshold.
    pub fn default_regularity_eps(&self) -> f64 {
        (REGULARITY_FACTOR * self.length() / (2.0 * PI)).max(self.roundoff_speed())
    }

    /// Speeds below this are indistinguishable from rounding noise in the
    /// coordinates, whatever the length of the curve.
    fn roundoff_speed(&self) -> f64 {
        let scale = self.points.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()));
        64.0 * f64::EPSILON * self.points.len() as f64 * scale
    }

    pub fn require_regular(&self) -> Result<Vec<f64>> {
        let speeds = self.speeds();
        let eps = (REGULARITY_FACTOR * self.grid().integrate(&speeds) / (2.0 * PI)).max(self.roundoff_speed());
        let report = report_from_speeds(&speeds, eps);
        if report.ok {
            Ok(speeds)
        } else {
            Err(ShapeError::Irregular {
                min_speed: report.min_speed,
                count: report.offending.len(),
                threshold: eps,
            })
        }
    }

    pub fn translated(&self, t: Vec3) -> Self {
        self.with_points(self.points.iter().map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]]).collect())
    }

    /// Applies `x ↦ Rx + t` with a row-major rotation matrix.
    pub fn rigid_motion(&self, rot: &[[f64; 3]; 3], t: Vec3) -> Self {
        self.with_points(self.points.iter().map(|p| add_t(rotate(rot, *p), t)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.with_points(self.points.iter().map(|p| scale(*p, s)).collect())
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }
}

fn add_t(a: Vec3, t: Vec3) -> Vec3 {
    [a[0] + t[0], a[1] + t[1], a[2] + t[2]]
}

pub fn rotate(rot: &[[f64; 3]; 3], p: Vec3) -> Vec3 {
    [dot(rot[0], p), dot(rot[1], p), dot(rot[2], p)]
}

/// Planar rotation by `angle` embedded in 3-space.
pub fn rotation_2d(angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

impl TangentField {
    pub fn new(values: Vec<Vec3>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![[0.0; 3]; n] }
    }

    pub fn from_fn(curve: &DiscreteCurve, f: impl Fn(f64) -> Vec3) -> Self {
        Self {
            values: curve.grid().thetas().into_iter().map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| scale(*v, s)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
        }
    }

    pub fn rotated(&self, rot: &[[f64; 3]; 3]) -> Self {
        Self {
            values: self.values.iter().map(|v| rotate(rot, *v)).collect(),
        }
    }

    /// `sqrt(Σ wᵢ |hᵢ|²)` with the grid quadrature weights.
    pub fn grid_norm(&self, grid: &Grid) -> f64 {
        grid.weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * dot(*v, *v))
            .sum::<f64>()
            .sqrt()
    }
}

fn report_from_speeds(speeds: &[f64], eps: f64) -> RegularityReport {
    let offending: Vec<usize> = speeds
        .iter()
        .enumerate()
        .filter(|(_, s)| !(**s > eps))
        .map(|(i, _)| i)
        .collect();
    RegularityReport {
        ok: offending.is_empty(),
        min_speed: speeds.iter().cloned().fold(f64::INFINITY, f64::min),
        threshold: eps,
        offending,
    }
}

/// Reports every sample where `|c′| ≤ ε`.
pub fn validate_regular(c: &DiscreteCurve, eps: f64) -> RegularityReport {
    report_from_speeds(&c.speeds(), eps)
}

/// Resamples onto `m` uniform samples: trigonometric interpolation for
/// closed curves, a natural cubic spline for open ones.
pub fn resample(c: &DiscreteCurve, m: usize) -> Result<DiscreteCurve> {
    if m < MIN_SAMPLES {
        return Err(ShapeError::InvalidInput(format!("{m} samples, need at least {MIN_SAMPLES}")));
    }
    c.require_regular()?;
    Ok(resample_unchecked(c, m))
}

pub(crate) fn resample_unchecked(c: &DiscreteCurve, m: usize) -> DiscreteCurve {
    if m == c.len() {
        return c.clone();
    }
    let points = resample_values(c.points(), c.topology(), m);
    DiscreteCurve {
        points,
        dim: c.dim,
        topology: c.topology,
    }
}

pub(crate) fn resample_values(values: &[Vec3], topology: Topology, m: usize) -> Vec<Vec3> {
    match topology {
        Topology::Closed => TrigInterpolant::new(values).resample(m),
        Topology::Open => {
            let spline = CubicSpline::new(values);
            Grid::new(m, Topology::Open)
                .thetas()
                .into_iter()
                .map(|t| spline.eval(t))
                .collect()
        }
    }
}

/// Speed, unit tangent, curvature and length of a regular curve.
///
/// Planar curvature is signed, `det(c′, c″)/|c′|³`; space curves report
/// `|c′ × c″|/|c′|³`.
pub fn arc_calculus(c: &DiscreteCurve) -> Result<ArcData> {
    let speed = c.require_regular()?;
    let grid = c.grid();
    let d1 = grid.derivative(c.points());
    let d2 = grid.derivative(&d1);
    let unit_tangent = d1.iter().zip(&speed).map(|(v, s)| scale(*v, 1.0 / s)).collect();
    let curvature = d1
        .iter()
        .zip(&d2)
        .zip(&speed)
        .map(|((a, b), s)| {
            let k = cross(*a, *b);
            let num = if c.dim() == 2 { k[2] } else { norm(k) };
            num / (s * s * s)
        })
        .collect();
    let length = grid.integrate(&speed);
    Ok(ArcData {
        speed,
        unit_tangent,
        curvature,
        length,
    })
}

/// `D_sʲ h`, iterating `D_s h = h′/|c′|`.
pub fn ds_derivative(c: &DiscreteCurve, h: &TangentField, order: usize) -> Result<TangentField> {
    let speed = c.require_regular()?;
    Ok(TangentField {
        values: ds_iterate(&c.grid(), &speed, &h.values, order),
    })
}

pub(crate) fn ds_iterate(grid: &Grid, speed: &[f64], h: &[Vec3], order: usize) -> Vec<Vec3> {
    let mut cur = h.to_vec();
    for _ in 0..order {
        cur = grid
            .derivative(&cur)
            .into_iter()
            .zip(speed)
            .map(|(v, s)| scale(v, 1.0 / s))
            .collect();
    }
    cur
}

/// `∫ f ds = ∫ f |c′| dθ` by the grid quadrature.
pub fn integrate_ds(c: &DiscreteCurve, f: &[f64]) -> Result<f64> {
    let speed = c.require_regular()?;
    if f.len() != speed.len() {
        return Err(ShapeError::GridMismatch(format!("{} values for {} samples", f.len(), speed.len())));
    }
    let weighted: Vec<f64> = f.iter().zip(&speed).map(|(a, b)| a * b).collect();
    Ok(c.grid().integrate(&weighted))
}
