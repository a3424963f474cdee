//! Text renderings of results: CSV tables and static SVG snapshots.

use std::fmt::Write;

use shapecurve::path::PathOfCurves;
use shapecurve::reparam::Reparametrization;
use shapecurve::DiscreteCurve;

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn matrix_csv(names: &[String], d: &[Vec<f64>]) -> String {
    let mut out = String::from("curve");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (n, row) in names.iter().zip(d) {
        out.push_str(n);
        for x in row {
            out.push(',');
            out.push_str(&num(*x));
        }
        out.push('\n');
    }
    out
}

fn coord_header(dim: usize) -> &'static str {
    if dim == 3 {
        "x,y,z"
    } else {
        "x,y"
    }
}

pub fn curve_csv(c: &DiscreteCurve) -> String {
    let mut out = format!("i,{}\n", coord_header(c.dim()));
    for (i, p) in c.points().iter().enumerate() {
        let coords: Vec<String> = p[..c.dim()].iter().map(|x| num(*x)).collect();
        writeln!(out, "{i},{}", coords.join(",")).unwrap();
    }
    out
}

pub fn path_csv(path: &PathOfCurves) -> String {
    let dim = path.first().dim();
    let mut out = format!("t,i,{}\n", coord_header(dim));
    for (c, t) in path.curves.iter().zip(&path.times) {
        for (i, p) in c.points().iter().enumerate() {
            let coords: Vec<String> = p[..dim].iter().map(|x| num(*x)).collect();
            writeln!(out, "{},{i},{}", num(*t), coords.join(",")).unwrap();
        }
    }
    out
}

pub fn reparam_csv(phis: &[&Reparametrization]) -> String {
    let grid = phis[0].grid();
    let mut out = String::from("theta");
    for k in 0..phis.len() {
        if phis.len() == 1 {
            out.push_str(",phi");
        } else {
            write!(out, ",phi{k}").unwrap();
        }
    }
    out.push('\n');
    for i in 0..grid.n {
        out.push_str(&num(grid.theta(i)));
        for phi in phis {
            out.push(',');
            out.push_str(&num(phi.values()[i]));
        }
        out.push('\n');
    }
    out
}

/// Polylines of the first two coordinates, later curves drawn darker.
pub fn svg(curves: &[&DiscreteCurve]) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in curves {
        for p in c.points() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let pad = 0.05 * span;
    let size = 512.0;
    let s = size / (span + 2.0 * pad);
    let map = |p: &[f64; 3]| ((p[0] - lo[0] + pad) * s, (hi[1] - p[1] + pad) * s);
    let width = (hi[0] - lo[0] + 2.0 * pad) * s;
    let height = (hi[1] - lo[1] + 2.0 * pad) * s;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.1}\" height=\"{height:.1}\" viewBox=\"0 0 {width:.1} {height:.1}\">\n"
    );
    let m = curves.len();
    for (k, c) in curves.iter().enumerate() {
        let shade = if m == 1 { 0 } else { 200 - (200 * k) / (m - 1) };
        let tag = match c.topology() {
            shapecurve::Topology::Closed => "polygon",
            shapecurve::Topology::Open => "polyline",
        };
        let pts: Vec<String> = c
            .points()
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            out,
            "  <{tag} fill=\"none\" stroke=\"rgb({shade},{shade},{shade})\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
