//! Curves, fields and oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapecurve::{DiscreteCurve, TangentField, Topology, Vec3};

pub const TWO_PI: f64 = 2.0 * PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn circle(n: usize, r: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| [r * t.cos(), r * t.sin(), 0.0]).unwrap()
}

pub fn ellipse(n: usize, a: f64, b: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| [a * t.cos(), b * t.sin(), 0.0]).unwrap()
}

pub fn segment(n: usize, slope: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(n, 2, Topology::Open, |t| [slope * t, 0.0, 0.0]).unwrap()
}

/// Ellipse `(2cos, sin)` with a Z-shaped fold at its top: the curve runs
/// forward, back and forward again over a short stretch.
pub fn folded_ellipse(n: usize, depth: f64) -> DiscreteCurve {
    let w = 0.15;
    DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| {
        let mut d = (t - FRAC_PI_2) / w;
        if d > PI / w {
            d -= TWO_PI / w;
        }
        let bump = d * (-d * d).exp();
        let psi = t - depth * w * bump;
        let (nx, ny) = (psi.cos(), 2.0 * psi.sin());
        let m = nx.hypot(ny);
        let g = 0.2 * depth * bump;
        [2.0 * psi.cos() + g * nx / m, psi.sin() + g * ny / m, 0.0]
    })
    .unwrap()
}

/// Random Fourier coefficients `(k, a_k, b_k)` with amplitudes decaying
/// like `amp / k²`.
pub fn random_modes(rng: &mut ChaCha8Rng, modes: usize, amp: f64) -> Vec<(f64, f64, f64)> {
    (1..=modes)
        .map(|k| {
            let s = amp / (k * k) as f64;
            (k as f64, rng.gen_range(-s..s), rng.gen_range(-s..s))
        })
        .collect()
}

pub fn fourier(modes: &[(f64, f64, f64)], t: f64) -> f64 {
    modes.iter().map(|(k, a, b)| a * (k * t).cos() + b * (k * t).sin()).sum()
}

pub fn fourier_dt(modes: &[(f64, f64, f64)], t: f64) -> f64 {
    modes.iter().map(|(k, a, b)| k * (b * (k * t).cos() - a * (k * t).sin())).sum()
}

/// A star-shaped closed curve `ρ(θ)(cos θ, sin θ) + shift`, with `ρ` a
/// band-limited perturbation of 1.
#[derive(Debug, Clone)]
pub struct StarCurve {
    radial: Vec<(f64, f64, f64)>,
    shift: [f64; 2],
}

impl StarCurve {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            radial: random_modes(rng, 5, 0.25),
            shift: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        }
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        let r = 1.0 + fourier(&self.radial, t);
        [r * t.cos() + self.shift[0], r * t.sin() + self.shift[1], 0.0]
    }

    pub fn sample(&self, n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, 2, Topology::Closed, |t| self.eval(t)).unwrap()
    }

    pub fn sample_at(&self, thetas: &[f64]) -> DiscreteCurve {
        DiscreteCurve::new(thetas.iter().map(|&t| self.eval(t)).collect(), 2, Topology::Closed).unwrap()
    }
}

/// A graph-like open curve `(θ, f(θ))` with band-limited `f`.
#[derive(Debug, Clone)]
pub struct OpenCurve {
    f: Vec<(f64, f64, f64)>,
}

impl OpenCurve {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            f: random_modes(rng, 4, 0.6),
        }
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        [t, fourier(&self.f, t), 0.0]
    }

    pub fn sample(&self, n: usize) -> DiscreteCurve {
        DiscreteCurve::from_fn(n, 2, Topology::Open, |t| self.eval(t)).unwrap()
    }

    pub fn sample_at(&self, thetas: &[f64]) -> DiscreteCurve {
        DiscreteCurve::new(thetas.iter().map(|&t| self.eval(t)).collect(), 2, Topology::Open).unwrap()
    }
}

/// A band-limited vector field given by its values as a function of θ.
#[derive(Debug, Clone)]
pub struct Field {
    x: Vec<(f64, f64, f64)>,
    y: Vec<(f64, f64, f64)>,
    offset: [f64; 2],
}

impl Field {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            x: random_modes(rng, 4, 1.0),
            y: random_modes(rng, 4, 1.0),
            offset: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
        }
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        [self.offset[0] + fourier(&self.x, t), self.offset[1] + fourier(&self.y, t), 0.0]
    }

    pub fn sample(&self, thetas: &[f64]) -> TangentField {
        TangentField::new(thetas.iter().map(|&t| self.eval(t)).collect())
    }
}

/// A smooth orientation-preserving diffeomorphism of the parameter domain.
#[derive(Debug, Clone, Copy)]
pub struct Warp {
    pub amp: f64,
    pub k: f64,
    pub shift: f64,
    pub topology: Topology,
}

impl Warp {
    pub fn random(rng: &mut ChaCha8Rng, topology: Topology) -> Self {
        match topology {
            // φ(θ) = θ + shift + (a/k) sin kθ with |a| < 1
            Topology::Closed => Self {
                amp: rng.gen_range(-0.6..0.6),
                k: rng.gen_range(1..=3) as f64,
                shift: rng.gen_range(0.0..TWO_PI),
                topology,
            },
            // φ(θ) = θ + (a/m) sin(mθ/2) with m even, so φ(2π) = 2π
            Topology::Open => Self {
                amp: rng.gen_range(-0.6..0.6),
                k: 2.0 * rng.gen_range(1..=2) as f64,
                shift: 0.0,
                topology,
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.topology {
            Topology::Closed => t + self.shift + self.amp / self.k * (self.k * t).sin(),
            Topology::Open => t + 2.0 * self.amp / self.k * (0.5 * self.k * t).sin(),
        }
    }

    pub fn samples(&self, thetas: &[f64]) -> Vec<f64> {
        thetas.iter().map(|&t| self.eval(t)).collect()
    }
}

pub fn rotation_2d(angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn max_dist(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Classical RK4 for a scalar autonomous system `y′ = f(y)` in `R²`.
pub fn rk4_2(f: &dyn Fn([f64; 2]) -> [f64; 2], y0: [f64; 2], t_end: f64, steps: usize) -> [f64; 2] {
    let h = t_end / steps as f64;
    let mut y = y0;
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(add(y, k1, 0.5 * h));
        let k3 = f(add(y, k2, 0.5 * h));
        let k4 = f(add(y, k3, h));
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Radius of a concentric circle, averaged over the samples.
pub fn mean_radius(c: &DiscreteCurve) -> f64 {
    c.points().iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / c.len() as f64
}

/// Largest deviation of `|p|` from its mean over the samples.
pub fn radial_spread(c: &DiscreteCurve) -> f64 {
    let r = mean_radius(c);
    c.points().iter().map(|p| (p[0].hypot(p[1]) - r).abs()).fold(0.0, f64::max)
}

/// Geodesic distance between concentric circles of radii `r0 < r1` under
/// `sobolev:a0,0,a2`, from the radial reduction `G = 2π ṙ²(a0 r + a2 r⁻³)`.
pub fn sobolev_radial_distance(a0: f64, a2: f64, r0: f64, r1: f64) -> f64 {
    adaptive_simpson(&|r| (TWO_PI * (a0 * r + a2 / r.powi(3))).sqrt(), r0, r1, 1e-13)
}
