//! Reparametrization invariant metrics on the space of curves and path
//! functionals built from them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::curve::{arc_calculus, ds_iterate, DiscreteCurve, TangentField};
use crate::error::{Result, ShapeError};
use crate::grid::{cross, dot, norm, scale, sub, Grid, Topology, Vec3};
use crate::path::PathOfCurves;
use crate::srv::ElasticCoefficients;

/// Order-zero metrics `∫ Φ(ℓ, κ)⟨h, k⟩ ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlmostLocalKind {
    /// `Φ = ℓ^p`, a conformal rescaling of L².
    Conformal { power: f64 },
    /// `Φ = 1 + Aκ²`
    CurvatureWeighted { a: f64 },
    /// `Φ = ℓ⁻³ + κ²ℓ`
    ScaleInvariant,
}

impl AlmostLocalKind {
    fn weight(&self, length: f64, kappa: f64) -> f64 {
        match *self {
            Self::Conformal { power } => length.powf(power),
            Self::CurvatureWeighted { a } => 1.0 + a * kappa * kappa,
            Self::ScaleInvariant => length.powi(-3) + kappa * kappa * length,
        }
    }
}

/// Coefficients `a₀..aₙ` of `Σ aⱼ ∫⟨D_sʲh, D_sʲk⟩ ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevCoefficients(Vec<f64>);

impl SobolevCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let Some(&last) = coeffs.last() else {
            return Err(ShapeError::InvalidInput("empty Sobolev coefficient list".into()));
        };
        if coeffs.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(ShapeError::InvalidInput(format!("Sobolev coefficients must be ≥ 0: {coeffs:?}")));
        }
        if last <= 0.0 {
            return Err(ShapeError::InvalidInput("highest Sobolev coefficient must be > 0".into()));
        }
        Ok(Self(coeffs))
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `a₀ = 0`: constant fields are in the kernel and the metric lives on
    /// curves modulo translation.
    pub fn is_degenerate(&self) -> bool {
        self.0[0] == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    L2,
    AlmostLocal(AlmostLocalKind),
    Elastic(ElasticCoefficients),
    Sobolev(SobolevCoefficients),
}

impl MetricSpec {
    pub fn sobolev(coeffs: &[f64]) -> Result<Self> {
        Ok(Self::Sobolev(SobolevCoefficients::new(coeffs.to_vec())?))
    }

    /// Constant fields have zero norm.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Elastic(_) => true,
            Self::Sobolev(s) => s.is_degenerate(),
            _ => false,
        }
    }

    /// L² and Sobolev metrics, which the geodesic integrator supports, as
    /// Sobolev coefficients.
    pub fn as_sobolev(&self) -> Option<SobolevCoefficients> {
        match self {
            Self::L2 => Some(SobolevCoefficients(vec![1.0])),
            Self::Sobolev(s) => Some(s.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::L2 => write!(f, "l2"),
            Self::AlmostLocal(AlmostLocalKind::Conformal { power }) => write!(f, "almost:conf:p={power}"),
            Self::AlmostLocal(AlmostLocalKind::CurvatureWeighted { a }) => write!(f, "almost:curv:A={a}"),
            Self::AlmostLocal(AlmostLocalKind::ScaleInvariant) => write!(f, "almost:scaleinv"),
            Self::Elastic(c) => write!(f, "elastic:a={},b={}", c.a(), c.b()),
            Self::Sobolev(s) => {
                let parts: Vec<String> = s.0.iter().map(|a| a.to_string()).collect();
                write!(f, "sobolev:{}", parts.join(","))
            }
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ShapeError::InvalidInput(format!("not a number: {s:?}")))
}

fn keyed(s: &str, key: &str) -> Result<f64> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ShapeError::InvalidInput(format!("expected {key}=<value>, got {s:?}")))?;
    if k.trim() != key {
        return Err(ShapeError::InvalidInput(format!("expected key {key}, got {k:?}")));
    }
    parse_num(v)
}

impl FromStr for MetricSpec {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || ShapeError::InvalidInput(format!("unknown metric {s:?}"));
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "l2" if rest.is_empty() => Ok(Self::L2),
            "almost" => {
                let (kind, arg) = rest.split_once(':').unwrap_or((rest, ""));
                let kind = match kind {
                    "scaleinv" if arg.is_empty() => AlmostLocalKind::ScaleInvariant,
                    "curv" => {
                        let a = keyed(arg, "A")?;
                        if !(a > 0.0) {
                            return Err(ShapeError::InvalidInput("curvature weight A must be > 0".into()));
                        }
                        AlmostLocalKind::CurvatureWeighted { a }
                    }
                    "conf" => AlmostLocalKind::Conformal { power: keyed(arg, "p")? },
                    _ => return Err(bad()),
                };
                Ok(Self::AlmostLocal(kind))
            }
            "elastic" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(Self::Elastic(ElasticCoefficients::new(keyed(a, "a")?, keyed(b, "b")?)?))
            }
            "sobolev" => {
                let coeffs = rest.split(',').map(parse_num).collect::<Result<Vec<_>>>()?;
                Ok(Self::Sobolev(SobolevCoefficients::new(coeffs)?))
            }
            _ => Err(bad()),
        }
    }
}

/// A metric frozen at one curve: the geometric quantities `G_c` needs,
/// computed once.
pub(crate) struct MetricAt<'a> {
    spec: &'a MetricSpec,
    grid: Grid,
    dim: usize,
    points: Vec<Vec3>,
    /// `c′`
    e: Vec<Vec3>,
    /// `|c′|`
    s: Vec<f64>,
    w: Vec<f64>,
    /// `Φ(ℓ, κ)` per sample for almost-local metrics.
    phi: Vec<f64>,
}

impl<'a> MetricAt<'a> {
    pub(crate) fn new(spec: &'a MetricSpec, c: &DiscreteCurve) -> Self {
        Self::from_points(spec, c.grid(), c.dim(), c.points().to_vec())
    }

    pub(crate) fn from_points(spec: &'a MetricSpec, grid: Grid, dim: usize, points: Vec<Vec3>) -> Self {
        let e = grid.derivative(&points);
        let s: Vec<f64> = e.iter().map(|v| norm(*v)).collect();
        let w = grid.weights();
        let phi = match spec {
            MetricSpec::AlmostLocal(kind) => {
                let length: f64 = w.iter().zip(&s).map(|(a, b)| a * b).sum();
                let e2 = grid.derivative(&e);
                e.iter()
                    .zip(&e2)
                    .zip(&s)
                    .map(|((a, b), sp)| {
                        let k = cross(*a, *b);
                        let num = if dim == 2 { k[2] } else { norm(k) };
                        kind.weight(length, num / (sp * sp * sp))
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Self {
            spec,
            grid,
            dim,
            points,
            e,
            s,
            w,
            phi,
        }
    }

    pub(crate) fn speeds(&self) -> &[f64] {
        &self.s
    }

    fn ds_chain(&self, u: &[Vec3], order: usize) -> Vec<Vec<Vec3>> {
        let mut out = Vec::with_capacity(order + 1);
        out.push(u.to_vec());
        for _ in 0..order {
            let next = self
                .grid
                .derivative(out.last().unwrap())
                .into_iter()
                .zip(&self.s)
                .map(|(v, sp)| scale(v, 1.0 / sp))
                .collect();
            out.push(next);
        }
        out
    }

    /// `G_c(h, k)`
    pub(crate) fn inner(&self, h: &[Vec3], k: &[Vec3]) -> f64 {
        let n = h.len();
        match self.spec {
            MetricSpec::L2 => (0..n).map(|i| self.w[i] * self.s[i] * dot(h[i], k[i])).sum(),
            MetricSpec::AlmostLocal(_) => (0..n)
                .map(|i| self.w[i] * self.s[i] * self.phi[i] * dot(h[i], k[i]))
                .sum(),
            MetricSpec::Sobolev(coeffs) => {
                let hs = self.ds_chain(h, coeffs.order());
                let ks = self.ds_chain(k, coeffs.order());
                coeffs
                    .as_slice()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(j, a)| {
                        a * (0..n)
                            .map(|i| self.w[i] * self.s[i] * dot(hs[j][i], ks[j][i]))
                            .sum::<f64>()
                    })
                    .sum()
            }
            MetricSpec::Elastic(coeff) => {
                let dh = self.grid.derivative(h);
                let dk = self.grid.derivative(k);
                let (a2, b2) = (coeff.a().powi(2), coeff.b().powi(2));
                (0..n)
                    .map(|i| {
                        let s = self.s[i];
                        let v = scale(self.e[i], 1.0 / s);
                        let zh = scale(dh[i], 1.0 / s);
                        let zk = scale(dk[i], 1.0 / s);
                        let (th, tk) = (dot(zh, v), dot(zk, v));
                        let nh = sub(zh, scale(v, th));
                        let nk = sub(zk, scale(v, tk));
                        self.w[i] * s * (a2 * dot(nh, nk) + b2 * th * tk)
                    })
                    .sum()
            }
        }
    }

    /// `∂G_c(u,u)/∂u`, i.e. twice the discrete inertia operator applied to `u`.
    pub(crate) fn grad_u(&self, u: &[Vec3]) -> Vec<Vec3> {
        self.grads(u, false).1
    }

    /// `(G_c(u,u), ∂/∂u, ∂/∂c)` of the discrete quadratic form.
    pub(crate) fn grads(&self, u: &[Vec3], with_c: bool) -> (f64, Vec<Vec3>, Vec<Vec3>) {
        let n = u.len();
        match self.spec {
            MetricSpec::L2 | MetricSpec::Sobolev(_) => {
                let coeffs = self.spec.as_sobolev().unwrap();
                let a = coeffs.as_slice();
                let order = coeffs.order();
                let z = self.ds_chain(u, order);
                let mut value = 0.0;
                let mut zbar: Vec<Vec<Vec3>> = Vec::with_capacity(order + 1);
                let mut sbar = vec![0.0; n];
                for (j, zj) in z.iter().enumerate() {
                    let mut bar = vec![[0.0; 3]; n];
                    if a[j] != 0.0 {
                        for i in 0..n {
                            let sq = dot(zj[i], zj[i]);
                            value += a[j] * self.w[i] * self.s[i] * sq;
                            sbar[i] += a[j] * self.w[i] * sq;
                            bar[i] = scale(zj[i], 2.0 * a[j] * self.w[i] * self.s[i]);
                        }
                    }
                    zbar.push(bar);
                }
                for j in (1..=order).rev() {
                    let ybar: Vec<Vec3> = (0..n).map(|i| scale(zbar[j][i], 1.0 / self.s[i])).collect();
                    for i in 0..n {
                        sbar[i] -= dot(zbar[j][i], z[j][i]) / self.s[i];
                    }
                    let back = self.grid.derivative_transpose(&ybar);
                    for i in 0..n {
                        for c in 0..3 {
                            zbar[j - 1][i][c] += back[i][c];
                        }
                    }
                }
                let gu = zbar.swap_remove(0);
                let gc = if with_c {
                    let pull: Vec<Vec3> = (0..n).map(|i| scale(self.e[i], sbar[i] / self.s[i])).collect();
                    self.grid.derivative_transpose(&pull)
                } else {
                    Vec::new()
                };
                (value, gu, gc)
            }
            MetricSpec::Elastic(coeff) => {
                let (a2, b2) = (coeff.a().powi(2), coeff.b().powi(2));
                let y = self.grid.derivative(u);
                let mut value = 0.0;
                let mut ybar = vec![[0.0; 3]; n];
                let mut ebar = vec![[0.0; 3]; n];
                for i in 0..n {
                    let (s, e, yi, w) = (self.s[i], self.e[i], y[i], self.w[i]);
                    let ye = dot(yi, e);
                    let y2 = dot(yi, yi);
                    let s3 = s * s * s;
                    value += w * (a2 * y2 / s + (b2 - a2) * ye * ye / s3);
                    for c in 0..3 {
                        ybar[i][c] = w * (2.0 * a2 * yi[c] / s + 2.0 * (b2 - a2) * ye * e[c] / s3);
                        ebar[i][c] = w
                            * (-a2 * y2 * e[c] / s3
                                + (b2 - a2) * (2.0 * ye * yi[c] / s3 - 3.0 * ye * ye * e[c] / (s3 * s * s)));
                    }
                }
                let gu = self.grid.derivative_transpose(&ybar);
                let gc = if with_c {
                    self.grid.derivative_transpose(&ebar)
                } else {
                    Vec::new()
                };
                (value, gu, gc)
            }
            MetricSpec::AlmostLocal(_) => {
                let value = self.inner(u, u);
                let gu = (0..n)
                    .map(|i| scale(u[i], 2.0 * self.w[i] * self.s[i] * self.phi[i]))
                    .collect();
                let gc = if with_c { self.grad_c_fd(u) } else { Vec::new() };
                (value, gu, gc)
            }
        }
    }

    /// Central finite differences of `c ↦ G_c(u,u)`.
    fn grad_c_fd(&self, u: &[Vec3]) -> Vec<Vec3> {
        let n = u.len();
        let length: f64 = self.w.iter().zip(&self.s).map(|(a, b)| a * b).sum();
        let delta = 1e-6 * (length / (2.0 * PI)).max(1e-12);
        let mut out = vec![[0.0; 3]; n];
        let mut pts = self.points.clone();
        for i in 0..n {
            for c in 0..self.dim {
                let orig = pts[i][c];
                pts[i][c] = orig + delta;
                let plus = MetricAt::from_points(self.spec, self.grid, self.dim, pts.clone()).inner(u, u);
                pts[i][c] = orig - delta;
                let minus = MetricAt::from_points(self.spec, self.grid, self.dim, pts.clone()).inner(u, u);
                pts[i][c] = orig;
                out[i][c] = (plus - minus) / (2.0 * delta);
            }
        }
        out
    }
}

fn check_field(c: &DiscreteCurve, h: &TangentField) -> Result<()> {
    if h.len() != c.len() {
        return Err(ShapeError::GridMismatch(format!("field has {} samples, curve {}", h.len(), c.len())));
    }
    Ok(())
}

/// `G_c(h, k)` for any supported metric.
pub fn metric_eval(spec: &MetricSpec, c: &DiscreteCurve, h: &TangentField, k: &TangentField) -> Result<f64> {
    c.require_regular()?;
    check_field(c, h)?;
    check_field(c, k)?;
    Ok(MetricAt::new(spec, c).inner(&h.values, &k.values))
}

/// True when `h` lies in the kernel of a degenerate metric, i.e. `h` is a
/// constant field and the spec vanishes on constants.
pub fn in_degenerate_kernel(spec: &MetricSpec, h: &TangentField) -> bool {
    if !spec.is_degenerate() || h.is_empty() {
        return false;
    }
    let h0 = h.values[0];
    let scale = h.values.iter().map(|v| norm(*v)).fold(0.0, f64::max).max(1e-300);
    h.values.iter().all(|v| norm(sub(*v, h0)) <= 1e-12 * scale)
}

/// `L_c h = Σ (−1)ʲ aⱼ D_s^{2j} h`, so that `∫⟨L_c h, k⟩ ds` reproduces the
/// Sobolev metric.
pub fn apply_operator_l(c: &DiscreteCurve, coeffs: &SobolevCoefficients, h: &TangentField) -> Result<TangentField> {
    let speed = c.require_regular()?;
    check_field(c, h)?;
    let grid = c.grid();
    let mut out = vec![[0.0; 3]; h.len()];
    let mut cur = h.values.clone();
    for (j, a) in coeffs.as_slice().iter().enumerate() {
        if j > 0 {
            cur = ds_iterate(&grid, &speed, &cur, 2);
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for (o, v) in out.iter_mut().zip(&cur) {
            for d in 0..3 {
                o[d] += sign * a * v[d];
            }
        }
    }
    Ok(TangentField { values: out })
}

/// Splits `h` into its normal part and its tangential coefficient `⟨h, v⟩`.
pub fn normal_projection(c: &DiscreteCurve, h: &TangentField) -> Result<(TangentField, Vec<f64>)> {
    let arc = arc_calculus(c)?;
    check_field(c, h)?;
    let mut normal = Vec::with_capacity(h.len());
    let mut tangential = Vec::with_capacity(h.len());
    for (hv, v) in h.values.iter().zip(&arc.unit_tangent) {
        let t = dot(*hv, *v);
        normal.push(sub(*hv, scale(*v, t)));
        tangential.push(t);
    }
    Ok((TangentField { values: normal }, tangential))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityMode {
    Full,
    /// Only the part of the velocity normal to the curve is measured.
    NormalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionals {
    pub energy: f64,
    pub length: f64,
}

/// Energy `∫ G(γ_t, γ_t) dt` and length `∫ √G(γ_t, γ_t) dt` of a path, with
/// central-difference velocities (one-sided at the ends) and trapezoidal
/// weights in time.
pub fn path_functionals(spec: &MetricSpec, path: &PathOfCurves, mode: VelocityMode) -> Result<PathFunctionals> {
    let m = path.curves.len();
    if m < 2 {
        return Err(ShapeError::InvalidInput("path needs at least two curves".into()));
    }
    let t = &path.times;
    let mut energy = 0.0;
    let mut length = 0.0;
    for k in 0..m {
        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
        let dt = t[hi] - t[lo];
        let vel = path.curves[hi].difference(&path.curves[lo]).scaled(1.0 / dt);
        let c = &path.curves[k];
        let vel = match mode {
            VelocityMode::Full => vel,
            VelocityMode::NormalOnly => normal_projection(c, &vel)?.0,
        };
        let g = metric_eval(spec, c, &vel, &vel)?.max(0.0);
        // Trapezoid weight: half the span of the neighbouring intervals.
        let weight = 0.5 * dt;
        energy += weight * g;
        length += weight * g.sqrt();
    }
    Ok(PathFunctionals { energy, length })
}

/// Samples used for a sawtooth path with `teeth` teeth.
pub fn sawtooth_samples(teeth: usize) -> usize {
    (256 * teeth).max(256)
}

/// Corner rounding of the tooth profile. The rounded corners move normally
/// at full speed, so their width has to shrink as teeth are added.
fn tooth_rounding(teeth: usize) -> f64 {
    0.05 * (4.0 / teeth as f64).powf(1.5)
}

/// Rounded triangle wave with period 2π, minimum 0 at `x = 0` and maximum 1
/// at `x = π`.
fn tooth(x: f64, rounding: f64) -> f64 {
    let r = 1.0 - rounding;
    let lo = r.acos();
    let hi = (-r).acos();
    (((r * x.cos()).acos()) - lo) / (hi - lo)
}

/// Short path between concentric circles built from sawtooth curves.
///
/// For `t ∈ [0, ½]` teeth of height `r₁ − r₀` grow out of the inner circle;
/// for `t ∈ [½, 1]` the valleys rise until the outer circle is reached. The
/// steep flanks carry most of the motion tangentially, so the normal part of
/// the velocity shrinks as the number of teeth grows.
pub fn sawtooth_path(r0: f64, r1: f64, teeth: usize, steps: usize) -> Result<PathOfCurves> {
    if !(r1 > r0 && r0 > 0.0) {
        return Err(ShapeError::InvalidInput(format!("need r1 > r0 > 0, got r0={r0}, r1={r1}")));
    }
    if teeth == 0 || steps == 0 {
        return Err(ShapeError::InvalidInput("teeth and steps must be ≥ 1".into()));
    }
    let n = sawtooth_samples(teeth);
    let height = r1 - r0;
    let rounding = tooth_rounding(teeth);
    let curves = (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            DiscreteCurve::from_fn(n, 2, Topology::Closed, |theta| {
                let p = tooth(teeth as f64 * theta, rounding);
                let r = if t <= 0.5 {
                    r0 + height * 2.0 * t * p
                } else {
                    let sigma = 2.0 * t - 1.0;
                    r0 + height * (sigma + (1.0 - sigma) * p)
                };
                [r * theta.cos(), r * theta.sin(), 0.0]
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PathOfCurves::uniform(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, r: f64) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| [r * t.cos(), r * t.sin(), 0.0]).unwrap()
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["l2", "almost:curv:A=1", "almost:scaleinv", "almost:conf:p=-1", "elastic:a=1,b=0.5", "sobolev:1,0,1"] {
            let spec: MetricSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        for bad in ["", "l3", "sobolev:", "sobolev:1,-1", "sobolev:1,0", "elastic:a=0,b=1", "almost:curv:A=0", "almost:foo"] {
            assert!(bad.parse::<MetricSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn closed_form_values_on_unit_circle() {
        let c = circle(64, 1.0);
        let e1 = TangentField::from_fn(&c, |_| [1.0, 0.0, 0.0]);
        let v = |s: &str| metric_eval(&s.parse().unwrap(), &c, &e1, &e1).unwrap();
        assert!((v("l2") - 2.0 * PI).abs() < 1e-12);
        assert!((v("almost:curv:A=1") - 4.0 * PI).abs() < 1e-10);
        let l = 2.0 * PI;
        assert!((v("almost:scaleinv") - (l.powi(-3) + l) * l).abs() < 1e-10);
        assert!((v("almost:conf:p=-1") - 1.0).abs() < 1e-12);

        let h = TangentField::from_fn(&c, |t| [(2.0 * t).cos(), 0.0, 0.0]);
        let g = metric_eval(&"sobolev:1,0,1".parse().unwrap(), &c, &h, &h).unwrap();
        assert!((g - 17.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn operator_l_on_circle() {
        let c = circle(64, 1.0);
        let h = TangentField::from_fn(&c, |t| [(3.0 * t).cos(), 0.0, 0.0]);
        let id = apply_operator_l(&c, &SobolevCoefficients::new(vec![1.0]).unwrap(), &h).unwrap();
        assert_eq!(id, h);
        let l = apply_operator_l(&c, &SobolevCoefficients::new(vec![1.0, 1.0]).unwrap(), &h).unwrap();
        for (a, b) in l.values.iter().zip(&h.values) {
            assert!((a[0] - 10.0 * b[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_projection_examples() {
        let c = circle(64, 1.0);
        let e1 = TangentField::from_fn(&c, |_| [1.0, 0.0, 0.0]);
        let (n, t) = normal_projection(&c, &e1).unwrap();
        for (i, th) in c.grid().thetas().into_iter().enumerate() {
            let e = [th.cos().powi(2), th.sin() * th.cos(), 0.0];
            assert!(norm(sub(n.values[i], e)) < 1e-12);
            assert!((t[i] + th.sin()).abs() < 1e-12);
        }
        let radial = TangentField::from_fn(&c, |t| [t.cos(), t.sin(), 0.0]);
        let (n, _) = normal_projection(&c, &radial).unwrap();
        assert!(n.values.iter().zip(&radial.values).all(|(a, b)| norm(sub(*a, *b)) < 1e-12));
        let tangent = TangentField::from_fn(&c, |t| [-t.sin(), t.cos(), 0.0]);
        let (n, _) = normal_projection(&c, &tangent).unwrap();
        assert!(n.values.iter().all(|v| norm(*v) < 1e-12));
    }

    #[test]
    fn degenerate_kernel_detection() {
        let c = circle(16, 1.0);
        let k = TangentField::from_fn(&c, |_| [0.5, 1.0, 0.0]);
        assert!(in_degenerate_kernel(&"sobolev:0,1".parse().unwrap(), &k));
        assert!(!in_degenerate_kernel(&"sobolev:1,1".parse().unwrap(), &k));
        let g = metric_eval(&"sobolev:0,1".parse().unwrap(), &c, &k, &k).unwrap();
        assert!(g.abs() < 1e-20);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let c = DiscreteCurve::from_fn(24, 2, Topology::Closed, |t| {
            [1.5 * t.cos() + 0.2 * (2.0 * t).sin(), t.sin() + 0.1 * (3.0 * t).cos(), 0.0]
        })
        .unwrap();
        let u: Vec<Vec3> = c.grid().thetas().iter().map(|t| [t.sin() * 0.3, (2.0 * t).cos(), 0.0]).collect();
        for s in ["l2", "sobolev:1,0.5,0.2", "elastic:a=1,b=0.5", "elastic:a=0.7,b=1.3", "almost:curv:A=0.5"] {
            let spec: MetricSpec = s.parse().unwrap();
            let at = MetricAt::new(&spec, &c);
            let (g0, gu, gc) = at.grads(&u, true);
            assert!((g0 - at.inner(&u, &u)).abs() < 1e-10 * g0.abs().max(1.0));
            let d = 1e-6;
            for (i, comp) in [(0usize, 0usize), (5, 1), (17, 0)] {
                let mut up = u.clone();
                up[i][comp] += d;
                let mut um = u.clone();
                um[i][comp] -= d;
                let fd = (at.inner(&up, &up) - at.inner(&um, &um)) / (2.0 * d);
                assert!((fd - gu[i][comp]).abs() < 1e-6 * (1.0 + fd.abs()), "{s} du");
                let mut pp = c.points().to_vec();
                pp[i][comp] += d;
                let mut pm = c.points().to_vec();
                pm[i][comp] -= d;
                let gp = MetricAt::from_points(&spec, c.grid(), 2, pp).inner(&u, &u);
                let gm = MetricAt::from_points(&spec, c.grid(), 2, pm).inner(&u, &u);
                let fd = (gp - gm) / (2.0 * d);
                assert!((fd - gc[i][comp]).abs() < 1e-5 * (1.0 + fd.abs()), "{s} dc: {fd} vs {}", gc[i][comp]);
            }
        }
    }

    #[test]
    fn sawtooth_endpoints_are_circles() {
        let p = sawtooth_path(1.0, 2.0, 4, 8).unwrap();
        for (k, r) in [(0usize, 1.0), (8, 2.0)] {
            for q in p.curves[k].points() {
                assert!((norm(*q) - r).abs() < 1e-12);
            }
        }
        assert!(sawtooth_path(2.0, 1.0, 4, 8).is_err());
    }
}
