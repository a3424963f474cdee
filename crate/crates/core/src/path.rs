use crate::curve::DiscreteCurve;
use crate::error::{Result, ShapeError};

/// A time-discretized path of curves sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOfCurves {
    pub curves: Vec<DiscreteCurve>,
    pub times: Vec<f64>,
}

impl PathOfCurves {
    /// Path with `curves.len()` samples uniformly spaced on `[0, 1]`.
    pub fn uniform(curves: Vec<DiscreteCurve>) -> Result<Self> {
        let steps = curves.len().saturating_sub(1);
        if steps == 0 {
            return Err(ShapeError::InvalidInput("a path needs at least two curves".into()));
        }
        let times = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        Self::with_times(curves, times)
    }

    pub fn with_times(curves: Vec<DiscreteCurve>, times: Vec<f64>) -> Result<Self> {
        if curves.len() != times.len() || curves.is_empty() {
            return Err(ShapeError::InvalidInput("curve and time counts differ".into()));
        }
        if let Some(bad) = curves.iter().find(|c| !c.same_grid(&curves[0])) {
            return curves[0].check_same_grid(bad).map(|_| unreachable!());
        }
        Ok(Self { curves, times })
    }

    /// Straight-line interpolation `c₀ + t(c₁ − c₀)` at `steps + 1` times.
    pub fn linear(c0: &DiscreteCurve, c1: &DiscreteCurve, steps: usize) -> Result<Self> {
        c0.check_same_grid(c1)?;
        let steps = steps.max(1);
        let curves = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                c0.with_points(
                    c0.points()
                        .iter()
                        .zip(c1.points())
                        .map(|(a, b)| {
                            [
                                a[0] + t * (b[0] - a[0]),
                                a[1] + t * (b[1] - a[1]),
                                a[2] + t * (b[2] - a[2]),
                            ]
                        })
                        .collect(),
                )
            })
            .collect();
        Self::uniform(curves)
    }

    pub fn steps(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn first(&self) -> &DiscreteCurve {
        &self.curves[0]
    }

    pub fn last(&self) -> &DiscreteCurve {
        self.curves.last().unwrap()
    }
}
