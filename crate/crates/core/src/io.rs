//! JSON forms of curves, SRV curves and paths.
//!
//! A curve is `{"topology": "closed" | "open", "points": [[x, y], ...]}`,
//! with 2 or 3 coordinates per point. SRV curves add `"srv": true` and a
//! `"basepoint"`; their `"points"` are the samples of `q`. A path is an array
//! of curve objects, each with a time stamp `"t"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{resample, DiscreteCurve};
use crate::error::{Result, ShapeError};
use crate::grid::{Topology, Vec3};
use crate::path::PathOfCurves;
use crate::srv::SrvCurve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub topology: Topology,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrvRecord {
    pub srv: bool,
    pub topology: Topology,
    pub basepoint: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedCurveRecord {
    pub t: f64,
    pub topology: Topology,
    pub points: Vec<Vec<f64>>,
}

fn rows(points: &[Vec3], dim: usize) -> Vec<Vec<f64>> {
    points.iter().map(|p| p[..dim].to_vec()).collect()
}

fn points_from_rows(rows: &[Vec<f64>]) -> Result<(Vec<Vec3>, usize)> {
    let dim = rows.first().map_or(0, Vec::len);
    if !(2..=3).contains(&dim) {
        return Err(ShapeError::InvalidInput("points must have 2 or 3 coordinates".into()));
    }
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(ShapeError::InvalidInput(format!("point {i} has {} coordinates, expected {dim}", r.len())));
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(r);
        points.push(p);
    }
    Ok((points, dim))
}

impl CurveRecord {
    pub fn from_curve(c: &DiscreteCurve) -> Self {
        Self {
            topology: c.topology(),
            points: rows(c.points(), c.dim()),
        }
    }

    /// The sampled curve. A closed curve given with its first point repeated
    /// at the end loses the duplicate.
    pub fn to_curve(&self) -> Result<DiscreteCurve> {
        let (mut points, dim) = points_from_rows(&self.points)?;
        if self.topology == Topology::Closed && points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        DiscreteCurve::new(points, dim, self.topology)
    }
}

impl SrvRecord {
    pub fn from_srv(q: &SrvCurve) -> Self {
        Self {
            srv: true,
            topology: q.topology,
            basepoint: q.basepoint[..q.dim].to_vec(),
            points: rows(&q.q, q.dim),
        }
    }

    pub fn to_srv(&self) -> Result<SrvCurve> {
        if !self.srv {
            return Err(ShapeError::InvalidInput("record is not marked \"srv\": true".into()));
        }
        let (q, dim) = points_from_rows(&self.points)?;
        if self.basepoint.len() != dim {
            return Err(ShapeError::InvalidInput("basepoint dimension differs from the points".into()));
        }
        let mut basepoint = [0.0; 3];
        basepoint[..dim].copy_from_slice(&self.basepoint);
        Ok(SrvCurve {
            q,
            basepoint,
            dim,
            topology: self.topology,
        })
    }
}

fn parse_err(e: serde_json::Error) -> ShapeError {
    ShapeError::InvalidInput(format!("malformed JSON: {e}"))
}

/// Parses a curve from JSON text.
pub fn parse_curve(text: &str) -> Result<DiscreteCurve> {
    serde_json::from_str::<CurveRecord>(text).map_err(parse_err)?.to_curve()
}

/// Reads a curve file, resampling to `n` points when given.
pub fn read_curve(path: &Path, n: Option<usize>) -> Result<DiscreteCurve> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ShapeError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let c = parse_curve(&text)?;
    match n {
        Some(n) if n != c.len() => resample(&c, n),
        _ => Ok(c),
    }
}

pub fn curve_to_json(c: &DiscreteCurve) -> serde_json::Value {
    serde_json::to_value(CurveRecord::from_curve(c)).expect("curve record serializes")
}

pub fn srv_to_json(q: &SrvCurve) -> serde_json::Value {
    serde_json::to_value(SrvRecord::from_srv(q)).expect("srv record serializes")
}

pub fn parse_srv(text: &str) -> Result<SrvCurve> {
    serde_json::from_str::<SrvRecord>(text).map_err(parse_err)?.to_srv()
}

pub fn path_to_json(path: &PathOfCurves) -> serde_json::Value {
    let records: Vec<TimedCurveRecord> = path
        .curves
        .iter()
        .zip(&path.times)
        .map(|(c, &t)| TimedCurveRecord {
            t,
            topology: c.topology(),
            points: rows(c.points(), c.dim()),
        })
        .collect();
    serde_json::to_value(records).expect("path records serialize")
}

pub fn parse_path(text: &str) -> Result<PathOfCurves> {
    let records: Vec<TimedCurveRecord> = serde_json::from_str(text).map_err(parse_err)?;
    let mut curves = Vec::with_capacity(records.len());
    let mut times = Vec::with_capacity(records.len());
    for r in records {
        let (points, dim) = points_from_rows(&r.points)?;
        curves.push(DiscreteCurve::new(points, dim, r.topology)?);
        times.push(r.t);
    }
    PathOfCurves::with_times(curves, times)
}
