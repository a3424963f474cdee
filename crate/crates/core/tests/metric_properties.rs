mod common;

use common::*;
use proptest::prelude::*;
use shapecurve::grid::Grid;
use shapecurve::metrics::{
    apply_operator_l, metric_eval, path_functionals, MetricSpec, SobolevCoefficients, VelocityMode,
};
use shapecurve::path::PathOfCurves;
use shapecurve::{ds_derivative, integrate_ds, DiscreteCurve, TangentField, Topology};

const SPECS: [&str; 8] = [
    "l2",
    "almost:curv:A=1",
    "almost:scaleinv",
    "almost:conf:p=-1",
    "elastic:a=1,b=0.5",
    "elastic:a=2,b=1",
    "sobolev:1,0,1",
    "sobolev:0,1",
];

fn specs() -> Vec<MetricSpec> {
    SPECS.iter().map(|s| s.parse().unwrap()).collect()
}

/// `|G_{c∘φ}(h∘φ, k∘φ) − G_c(h, k)|` with everything sampled exactly from
/// analytic functions on an `n`-point grid.
fn reparam_defect(spec: &MetricSpec, seed: u64, topology: Topology, n: usize) -> (f64, f64) {
    let mut r = rng(seed);
    let thetas = Grid::new(n, topology).thetas();
    let warp = Warp::random(&mut r, topology);
    let (h, k) = (Field::random(&mut r), Field::random(&mut r));
    let warped = warp.samples(&thetas);
    let (c, cw) = match topology {
        Topology::Closed => {
            let s = StarCurve::random(&mut r);
            (s.sample_at(&thetas), s.sample_at(&warped))
        }
        Topology::Open => {
            let s = OpenCurve::random(&mut r);
            (s.sample_at(&thetas), s.sample_at(&warped))
        }
    };
    let g = metric_eval(spec, &c, &h.sample(&thetas), &k.sample(&thetas)).unwrap();
    let gw = metric_eval(spec, &cw, &h.sample(&warped), &k.sample(&warped)).unwrap();
    ((gw - g).abs(), g.abs())
}

#[test]
fn reparametrization_invariance_closed_converges_spectrally() {
    for spec in specs() {
        for seed in 0..3 {
            let errs: Vec<f64> = [32, 64, 128, 256]
                .iter()
                .map(|&n| reparam_defect(&spec, seed, Topology::Closed, n))
                .map(|(e, g)| e / g.max(1e-300))
                .collect();
            // Spectral accuracy: each doubling gains far more than a fixed
            // algebraic order until roundoff is reached.
            for w in errs.windows(2) {
                assert!(w[1] <= (w[0] / 16.0).max(1e-10), "{spec}: {errs:?}");
            }
            assert!(errs[3] < 1e-10, "{spec}: {errs:?}");
        }
    }
}

#[test]
fn reparametrization_invariance_open_converges_algebraically() {
    for spec in specs() {
        for seed in 0..3 {
            let errs: Vec<f64> = [65, 129, 257, 513]
                .iter()
                .map(|&n| reparam_defect(&spec, seed, Topology::Open, n))
                .map(|(e, g)| e / g.max(1e-300))
                .collect();
            // Observed rates approach fourth order (a factor of 16 per
            // doubling); require at least second.
            for w in errs.windows(2) {
                assert!(w[1] <= (w[0] / 4.0).max(1e-11), "{spec}: {errs:?}");
            }
            assert!(errs[3] < 1e-3, "{spec}: {errs:?}");
        }
    }
}

fn rigid_invariance_defect(spec: &MetricSpec, seed: u64, topology: Topology) -> f64 {
    use rand::Rng;
    let mut r = rng(seed);
    let n = 64 + (topology == Topology::Open) as usize;
    let thetas = Grid::new(n, topology).thetas();
    let c = match topology {
        Topology::Closed => StarCurve::random(&mut r).sample(n),
        Topology::Open => OpenCurve::random(&mut r).sample(n),
    };
    let (h, k) = (Field::random(&mut r).sample(&thetas), Field::random(&mut r).sample(&thetas));
    let rot = rotation_2d(r.gen_range(0.0..TWO_PI));
    let shift = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), 0.0];
    let g = metric_eval(spec, &c, &h, &k).unwrap();
    let gm = metric_eval(spec, &c.rigid_motion(&rot, shift), &h.rotated(&rot), &k.rotated(&rot)).unwrap();
    (gm - g).abs() / metric_eval(spec, &c, &h, &h).unwrap().abs().max(1e-300)
}

#[test]
fn rigid_motion_invariance_is_exact() {
    for spec in specs() {
        for seed in 0..10 {
            for topology in [Topology::Closed, Topology::Open] {
                let d = rigid_invariance_defect(&spec, seed, topology);
                assert!(d < 1e-11, "{spec} {topology:?} seed {seed}: {d:e}");
            }
        }
    }
}

#[test]
fn rigid_motion_invariance_in_space() {
    // A space curve, rotated about a skew axis.
    let c = DiscreteCurve::from_fn(64, 3, Topology::Closed, |t| [t.cos(), t.sin(), 0.3 * (2.0 * t).sin()]).unwrap();
    let h = TangentField::from_fn(&c, |t| [0.2 * (3.0 * t).cos(), 0.1, t.sin()]);
    let axis = [1.0 / 3f64.sqrt(); 3];
    let (s, co) = 0.7f64.sin_cos();
    let mut rot = [[0.0; 3]; 3];
    for (i, row) in rot.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let cross = match (i, j) {
                (0, 1) => -axis[2],
                (0, 2) => axis[1],
                (1, 0) => axis[2],
                (1, 2) => -axis[0],
                (2, 0) => -axis[1],
                (2, 1) => axis[0],
                _ => 0.0,
            };
            *x = co * (i == j) as u8 as f64 + s * cross + (1.0 - co) * axis[i] * axis[j];
        }
    }
    for spec in specs() {
        let g = metric_eval(&spec, &c, &h, &h).unwrap();
        let gm = metric_eval(&spec, &c.rigid_motion(&rot, [1.0, -2.0, 0.5]), &h.rotated(&rot), &h.rotated(&rot)).unwrap();
        assert!((g - gm).abs() < 1e-11 * g, "{spec}");
    }
}

#[test]
fn sobolev_fourier_closed_form_on_unit_circle() {
    let spec: MetricSpec = "sobolev:1,0,1".parse().unwrap();
    let c = circle(256, 1.0);
    for m in 1..=3 {
        let h = TangentField::from_fn(&c, |t| [(m as f64 * t).cos(), 0.0, 0.0]);
        let g = metric_eval(&spec, &c, &h, &h).unwrap();
        let exact = std::f64::consts::PI * (1.0 + (m as f64).powi(4));
        assert!((g - exact).abs() < 1e-8, "m={m}: {g} vs {exact}");
    }
}

#[test]
fn closed_forms_on_unit_circle() {
    let c = circle(128, 1.0);
    let e1 = TangentField::from_fn(&c, |_| [1.0, 0.0, 0.0]);
    let pi = std::f64::consts::PI;
    let cases = [
        ("l2", TWO_PI),
        ("almost:curv:A=1", 4.0 * pi),
        ("almost:scaleinv", (TWO_PI.powi(-3) + TWO_PI) * TWO_PI),
        ("almost:conf:p=-1", 1.0),
    ];
    for (s, exact) in cases {
        let g = metric_eval(&s.parse().unwrap(), &c, &e1, &e1).unwrap();
        assert!((g - exact).abs() < 1e-10 * exact, "{s}: {g} vs {exact}");
    }
}

#[test]
fn operator_forms_agree_on_random_data() {
    for seed in 0..5 {
        let mut r = rng(100 + seed);
        for coeffs in [vec![1.0, 2.0, 1.0], vec![1.0, 0.0, 1.0], vec![0.5, 1.0]] {
            let n = 128;
            let thetas = Grid::new(n, Topology::Closed).thetas();
            let c = StarCurve::random(&mut r).sample(n);
            let (h, k) = (Field::random(&mut r).sample(&thetas), Field::random(&mut r).sample(&thetas));
            let sc = SobolevCoefficients::new(coeffs.clone()).unwrap();
            let lh = apply_operator_l(&c, &sc, &h).unwrap();
            let weak = integrate_ds(&c, &dots(&lh, &k)).unwrap();
            // Σ aⱼ ∫⟨D_sʲh, D_sʲk⟩ ds, assembled from ds_derivative.
            let mut strong = 0.0;
            for (j, a) in coeffs.iter().enumerate() {
                let dh = ds_derivative(&c, &h, j).unwrap();
                let dk = ds_derivative(&c, &k, j).unwrap();
                strong += a * integrate_ds(&c, &dots(&dh, &dk)).unwrap();
            }
            let g = metric_eval(&MetricSpec::Sobolev(sc), &c, &h, &k).unwrap();
            let scale = strong.abs().max(1.0);
            assert!((weak - strong).abs() < 1e-6 * scale, "{coeffs:?}: {weak} vs {strong}");
            assert!((g - strong).abs() < 1e-9 * scale);
        }
    }
}

fn dots(a: &TangentField, b: &TangentField) -> Vec<f64> {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
        .collect()
}

#[test]
fn linear_path_between_concentric_circles() {
    let exact = TWO_PI.sqrt() * 2.0 / 3.0 * (2f64.powf(1.5) - 1.0);
    let path = PathOfCurves::linear(&circle(128, 1.0), &circle(128, 2.0), 64).unwrap();
    let full = path_functionals(&MetricSpec::L2, &path, VelocityMode::Full).unwrap();
    let normal = path_functionals(&MetricSpec::L2, &path, VelocityMode::NormalOnly).unwrap();
    assert!((full.length / exact - 1.0).abs() < 0.01, "{} vs {exact}", full.length);
    assert!((normal.length - full.length).abs() < 1e-12 * full.length);
    // Constant speed in t up to the variation of √r: Cauchy–Schwarz is
    // nearly tight.
    assert!(full.length.powi(2) <= full.energy * (1.0 + 1e-12));
    assert!(full.length.powi(2) > 0.97 * full.energy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_and_bilinear(seed in 0u64..10_000, alpha in -3.0f64..3.0, which in 0usize..8) {
        let spec = &specs()[which];
        let mut r = rng(seed);
        let n = 64;
        let thetas = Grid::new(n, Topology::Closed).thetas();
        let c = StarCurve::random(&mut r).sample(n);
        let f: Vec<TangentField> = (0..3).map(|_| Field::random(&mut r).sample(&thetas)).collect();
        let g = |a: &TangentField, b: &TangentField| metric_eval(spec, &c, a, b).unwrap();
        let scale = g(&f[0], &f[0]).max(g(&f[1], &f[1])).max(g(&f[2], &f[2])).max(1e-300);
        prop_assert!((g(&f[0], &f[1]) - g(&f[1], &f[0])).abs() <= 1e-12 * scale);
        let combo = f[0].scaled(alpha).plus(&f[2]);
        let lhs = g(&combo, &f[1]);
        let rhs = alpha * g(&f[0], &f[1]) + g(&f[2], &f[1]);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale * (1.0 + alpha.abs()));
    }

    #[test]
    fn path_length_squared_below_energy(seed in 0u64..10_000, which in 0usize..8, steps in 2usize..12) {
        let spec = &specs()[which];
        let mut r = rng(seed);
        let (a, b) = (StarCurve::random(&mut r).sample(48), StarCurve::random(&mut r).sample(48));
        let path = PathOfCurves::linear(&a, &b, steps).unwrap();
        let f = path_functionals(spec, &path, VelocityMode::Full).unwrap();
        prop_assert!(f.length * f.length <= f.energy * (1.0 + 1e-12));
    }
}
