use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite metric space carrying a real function; the value metric is `|f(x) - f(y)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl TryFrom<RawSpace> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        Self::new(raw.labels, raw.dist, raw.values)
    }
}

impl FiniteMetricSpace {
    /// Checks the metric axioms. The triangle inequality is allowed a relative
    /// slack of `1e-12` of the largest distance to absorb rounding.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidArgument("metric space has no points".into()));
        }
        if values.len() != n || dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "expected {n} values and an {n}x{n} distance matrix"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("values must be finite".into()));
        }
        let mut max = 0.0f64;
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::InvalidArgument(format!("dist[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "dist[{i}][{j}] = {d} must be finite and nonnegative"
                    )));
                }
                if d != dist[j][i] {
                    return Err(Error::InvalidArgument(format!(
                        "distance matrix not symmetric at ({i}, {j})"
                    )));
                }
                max = max.max(d);
            }
        }
        let slack = max * 1e-12;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + slack {
                        return Err(Error::InvalidArgument(format!(
                            "triangle inequality fails for ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            labels,
            dist,
            values,
        })
    }

    /// Points on the real line with the usual distance `|x - y|`.
    pub fn from_line(points: &[f64], values: &[f64]) -> Result<Self> {
        let dist = points
            .iter()
            .map(|x| points.iter().map(|y| (x - y).abs()).collect())
            .collect();
        let labels = points.iter().map(|x| x.to_string()).collect();
        Self::new(labels, dist, values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
