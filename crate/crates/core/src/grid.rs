//! Uniform parameter grids and the discrete calculus on them.
//!
//! Closed curves live on `θᵢ = 2πi/N`, `i = 0..N`, and are differentiated
//! spectrally. Open curves live on `θᵢ = 2πi/(N−1)` including both endpoints
//! and use fourth-order finite differences. Every operator here is linear and
//! acts componentwise on `Vec3` fields, so a field of dimension `d < 3` keeps
//! its unused components at zero.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Closed,
    Open,
}

/// A uniform sampling of `[0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
    pub topology: Topology,
}

impl Grid {
    pub fn new(n: usize, topology: Topology) -> Self {
        Self { n, topology }
    }

    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Closed => 2.0 * PI / self.n as f64,
            Topology::Open => 2.0 * PI / (self.n - 1) as f64,
        }
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.theta(i)).collect()
    }

    /// Quadrature weights for `∫₀^{2π} f dθ`: uniform for closed curves,
    /// trapezoidal for open ones.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        if self.topology == Topology::Open {
            w[0] = 0.5 * h;
            w[self.n - 1] = 0.5 * h;
        }
        w
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// First θ-derivative of a field.
    pub fn derivative(&self, f: &[Vec3]) -> Vec<Vec3> {
        match self.topology {
            Topology::Closed => fourier_multiply(f, |k, n| {
                if 2 * k.unsigned_abs() as usize == n {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k as f64)
                }
            }),
            Topology::Open => fd_apply(f, self.spacing(), false),
        }
    }

    /// Transpose of [`Grid::derivative`] with respect to the plain Euclidean
    /// product of sample vectors.
    pub fn derivative_transpose(&self, f: &[Vec3]) -> Vec<Vec3> {
        match self.topology {
            Topology::Closed => self.derivative(f).into_iter().map(|v| neg(v)).collect(),
            Topology::Open => fd_apply(f, self.spacing(), true),
        }
    }

    /// Samples of `θ ↦ ∫₀^θ f dσ` at the grid nodes.
    ///
    /// Closed grids integrate spectrally: the mean of `f` contributes a linear
    /// ramp and the zero-mean part a periodic antiderivative.
    pub fn cumulative_integral(&self, f: &[Vec3]) -> Vec<Vec3> {
        match self.topology {
            Topology::Closed => {
                let n = f.len();
                let mut mean = [0.0; 3];
                for v in f {
                    for (m, x) in mean.iter_mut().zip(v) {
                        *m += x / n as f64;
                    }
                }
                let anti = fourier_multiply(f, |k, n| {
                    if k == 0 || 2 * k.unsigned_abs() as usize == n {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, -1.0 / k as f64)
                    }
                });
                let a0 = anti[0];
                (0..n)
                    .map(|i| {
                        let t = self.theta(i);
                        let mut out = [0.0; 3];
                        for c in 0..3 {
                            out[c] = mean[c] * t + anti[i][c] - a0[c];
                        }
                        out
                    })
                    .collect()
            }
            Topology::Open => {
                let n = f.len();
                let h = self.spacing();
                let mut out = vec![[0.0; 3]; n];
                for i in 0..n - 1 {
                    let (start, w): (usize, [f64; 4]) = if i == 0 {
                        (0, [9.0, 19.0, -5.0, 1.0])
                    } else if i == n - 2 {
                        (n - 4, [1.0, -5.0, 19.0, 9.0])
                    } else {
                        (i - 1, [-1.0, 13.0, 13.0, -1.0])
                    };
                    let mut cell = [0.0; 3];
                    for (j, wj) in w.iter().enumerate() {
                        for c in 0..3 {
                            cell[c] += wj * f[start + j][c];
                        }
                    }
                    for c in 0..3 {
                        out[i + 1][c] = out[i][c] + cell[c] * h / 24.0;
                    }
                }
                out
            }
        }
    }

    /// `∫₀^{2π} f dθ` consistent with [`Grid::cumulative_integral`].
    pub fn total_integral(&self, f: &[Vec3]) -> Vec3 {
        match self.topology {
            Topology::Closed => {
                let h = self.spacing();
                let mut s = [0.0; 3];
                for v in f {
                    for c in 0..3 {
                        s[c] += v[c] * h;
                    }
                }
                s
            }
            Topology::Open => *self.cumulative_integral(f).last().unwrap(),
        }
    }
}

/// Applies a Fourier multiplier `m(k, n)` to each component of a periodic
/// field. The multiplier must describe a real operator
/// (`m(−k) = conj m(k)`, real at the Nyquist index), which lets two real
/// components share one complex transform.
pub(crate) fn fourier_multiply<F>(f: &[Vec3], mult: F) -> Vec<Vec3>
where
    F: Fn(i64, usize) -> Complex64,
{
    let n = f.len();
    let mut out = vec![[0.0; 3]; n];
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for pair in [(0usize, Some(1usize)), (2, None)] {
        let any = f
            .iter()
            .any(|v| v[pair.0] != 0.0 || pair.1.is_some_and(|c| v[c] != 0.0));
        if !any {
            continue;
        }
        for (b, v) in buf.iter_mut().zip(f) {
            *b = Complex64::new(v[pair.0], pair.1.map_or(0.0, |c| v[c]));
        }
        fft_in_place(&mut buf, false);
        for (j, b) in buf.iter_mut().enumerate() {
            *b *= mult(signed_index(j, n), n) / n as f64;
        }
        fft_in_place(&mut buf, true);
        for (o, b) in out.iter_mut().zip(&buf) {
            o[pair.0] = b.re;
            if let Some(c) = pair.1 {
                o[c] = b.im;
            }
        }
    }
    out
}

pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Fourth-order finite-difference derivative on an open grid, or its
/// transpose.
fn fd_apply(f: &[Vec3], h: f64, transpose: bool) -> Vec<Vec3> {
    let n = f.len();
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        for (j, coef) in fd_row(i, n) {
            let (src, dst) = if transpose { (i, j) } else { (j, i) };
            for c in 0..3 {
                out[dst][c] += coef / (12.0 * h) * f[src][c];
            }
        }
    }
    out
}

fn fd_row(i: usize, n: usize) -> Vec<(usize, f64)> {
    const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const CENTER: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    if i == 0 {
        EDGE0.iter().enumerate().map(|(j, &c)| (j, c)).collect()
    } else if i == 1 {
        EDGE1.iter().enumerate().map(|(j, &c)| (j, c)).collect()
    } else if i == n - 1 {
        EDGE0.iter().enumerate().map(|(j, &c)| (n - 1 - j, -c)).collect()
    } else if i == n - 2 {
        EDGE1.iter().enumerate().map(|(j, &c)| (n - 1 - j, -c)).collect()
    } else {
        CENTER.iter().enumerate().map(|(j, &c)| (i + j - 2, c)).collect()
    }
}

/// Trigonometric interpolant of periodic samples, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    n: usize,
    coeffs: [Vec<Complex64>; 2],
}

impl TrigInterpolant {
    pub fn new(f: &[Vec3]) -> Self {
        let n = f.len();
        let mut coeffs = [Vec::new(), Vec::new()];
        for (slot, pair) in [(0usize, Some(1usize)), (2, None)].into_iter().enumerate() {
            let mut buf: Vec<Complex64> = f
                .iter()
                .map(|v| Complex64::new(v[pair.0], pair.1.map_or(0.0, |c| v[c])))
                .collect();
            fft_in_place(&mut buf, false);
            for b in buf.iter_mut() {
                *b /= n as f64;
            }
            coeffs[slot] = buf;
        }
        Self { n, coeffs }
    }

    pub fn eval(&self, theta: f64) -> Vec3 {
        let n = self.n;
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for j in 0..n {
            let k = signed_index(j, n);
            let basis = if 2 * k.unsigned_abs() as usize == n {
                Complex64::new((k as f64 * theta).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k as f64 * theta)
            };
            for s in 0..2 {
                acc[s] += self.coeffs[s][j] * basis;
            }
        }
        [acc[0].re, acc[0].im, acc[1].re]
    }

    /// Samples on a uniform closed grid of `m` points, by zero padding or
    /// truncation of the spectrum.
    pub fn resample(&self, m: usize) -> Vec<Vec3> {
        let n = self.n;
        let mut out = vec![[0.0; 3]; m];
        for s in 0..2 {
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..n {
                let k = signed_index(j, n);
                let c = self.coeffs[s][j];
                let nyq_src = n % 2 == 0 && 2 * k.unsigned_abs() as usize == n;
                if 2 * k.unsigned_abs() as usize > m {
                    continue;
                }
                if nyq_src && m > n {
                    // split the source Nyquist mode into ±n/2
                    let kp = (n / 2) as i64;
                    buf[kp as usize] += 0.5 * c;
                    buf[(m as i64 - kp) as usize] += 0.5 * c;
                } else {
                    let idx = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
                    buf[idx] += c;
                }
            }
            fft_in_place(&mut buf, true);
            for (o, b) in out.iter_mut().zip(&buf) {
                if s == 0 {
                    o[0] = b.re;
                    o[1] = b.im;
                } else {
                    o[2] = b.re;
                }
            }
        }
        out
    }
}

/// Natural cubic spline through uniformly spaced samples on `[0, 2π]`.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    h: f64,
    values: Vec<Vec3>,
    second: Vec<Vec3>,
}

impl CubicSpline {
    pub fn new(values: &[Vec3]) -> Self {
        let n = values.len();
        let h = 2.0 * PI / (n - 1) as f64;
        let mut second = vec![[0.0; 3]; n];
        if n > 2 {
            // Thomas algorithm for M[i-1] + 4 M[i] + M[i+1] = rhs, M[0] = M[n-1] = 0
            let m = n - 2;
            let mut cp = vec![0.0; m];
            let mut dp = vec![[0.0; 3]; m];
            for r in 0..m {
                let i = r + 1;
                let mut rhs = [0.0; 3];
                for c in 0..3 {
                    rhs[c] = 6.0 * (values[i + 1][c] - 2.0 * values[i][c] + values[i - 1][c]) / (h * h);
                }
                let denom = if r == 0 { 4.0 } else { 4.0 - cp[r - 1] };
                cp[r] = 1.0 / denom;
                for c in 0..3 {
                    let prev = if r == 0 { 0.0 } else { dp[r - 1][c] };
                    dp[r][c] = (rhs[c] - prev) / denom;
                }
            }
            for r in (0..m).rev() {
                for c in 0..3 {
                    let next = if r + 1 < m { second[r + 2][c] } else { 0.0 };
                    second[r + 1][c] = dp[r][c] - cp[r] * next;
                }
            }
        }
        Self {
            h,
            values: values.to_vec(),
            second,
        }
    }

    pub fn eval(&self, x: f64) -> Vec3 {
        let n = self.values.len();
        let pos = (x / self.h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let t = x - i as f64 * self.h;
        let h = self.h;
        let a = (h - t) / h;
        let b = t / h;
        let mut out = [0.0; 3];
        for c in 0..3 {
            let (y0, y1) = (self.values[i][c], self.values[i + 1][c]);
            let (m0, m1) = (self.second[i][c], self.second[i + 1][c]);
            out[c] = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        }
        out
    }
}

// small vector helpers

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn neg(a: Vec3) -> Vec3 {
    [-a[0], -a[1], -a[2]]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(grid: &Grid, f: impl Fn(f64) -> Vec3) -> Vec<Vec3> {
        grid.thetas().into_iter().map(f).collect()
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let g = Grid::new(32, Topology::Closed);
        let f = field(&g, |t| [(3.0 * t).cos(), (2.0 * t).sin(), t.cos()]);
        let d = g.derivative(&f);
        for (i, t) in g.thetas().into_iter().enumerate() {
            let e = [-3.0 * (3.0 * t).sin(), 2.0 * (2.0 * t).cos(), -t.sin()];
            assert!(norm(sub(d[i], e)) < 1e-12);
        }
    }

    #[test]
    fn derivative_transpose_is_adjoint() {
        for topo in [Topology::Closed, Topology::Open] {
            let g = Grid::new(17, topo);
            let a = field(&g, |t| [t.sin() + 0.3 * t, (2.0 * t).cos(), 0.0]);
            let b = field(&g, |t| [(t * 0.7).cos(), t * t * 0.1, 0.0]);
            let da = g.derivative(&a);
            let dtb = g.derivative_transpose(&b);
            let lhs: f64 = da.iter().zip(&b).map(|(x, y)| dot(*x, *y)).sum();
            let rhs: f64 = a.iter().zip(&dtb).map(|(x, y)| dot(*x, *y)).sum();
            assert!((lhs - rhs).abs() < 1e-10, "{topo:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn fd_exact_on_quartics() {
        let g = Grid::new(12, Topology::Open);
        let f = field(&g, |t| [t.powi(4), t * t, 1.0]);
        let d = g.derivative(&f);
        for (i, t) in g.thetas().into_iter().enumerate() {
            assert!((d[i][0] - 4.0 * t.powi(3)).abs() < 1e-9);
            assert!((d[i][1] - 2.0 * t).abs() < 1e-11);
            assert!(d[i][2].abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_integral_open_exact_on_cubics() {
        let g = Grid::new(10, Topology::Open);
        let f = field(&g, |t| [3.0 * t * t, 1.0, 0.0]);
        let c = g.cumulative_integral(&f);
        for (i, t) in g.thetas().into_iter().enumerate() {
            assert!((c[i][0] - t.powi(3)).abs() < 1e-10);
            assert!((c[i][1] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_resample_round_trip() {
        let g = Grid::new(16, Topology::Closed);
        let f = field(&g, |t| [(5.0 * t).cos(), t.sin(), (3.0 * t).sin()]);
        let up = TrigInterpolant::new(&f).resample(48);
        for (j, v) in up.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 48.0;
            assert!(norm(sub(*v, [(5.0 * t).cos(), t.sin(), (3.0 * t).sin()])) < 1e-12);
        }
        let same = TrigInterpolant::new(&f).resample(16);
        for (a, b) in same.iter().zip(&f) {
            assert!(norm(sub(*a, *b)) < 1e-13);
        }
    }

    #[test]
    fn spline_is_exact_on_lines_and_interpolates() {
        let g = Grid::new(9, Topology::Open);
        let f = field(&g, |t| [t, 2.0 - t, 0.0]);
        let s = CubicSpline::new(&f);
        for x in [0.0, 0.1, 1.7, 3.3, 2.0 * PI] {
            let v = s.eval(x);
            assert!((v[0] - x).abs() < 1e-12 && (v[1] - (2.0 - x)).abs() < 1e-12);
        }
        let f = field(&g, |t| [t.sin(), 0.0, 0.0]);
        let s = CubicSpline::new(&f);
        for (i, t) in g.thetas().into_iter().enumerate() {
            assert!((s.eval(t)[0] - f[i][0]).abs() < 1e-12);
        }
    }
}
