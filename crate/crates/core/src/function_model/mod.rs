//! Real functions on compact intervals and small finite metric spaces.
//!
//! Every [`RealFunction`] is total on its domain: evaluation either returns a
//! finite value or a [`Error::Domain`]. Values are immutable once built, so
//! evaluation can be shared freely across threads.

mod expr;
mod finite;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::Expr;
pub use finite::FiniteMetricSpace;
pub use parse::{parse_expr, parse_function};

/// Shortest decimal text that parses back to the same `f64` (never more than
/// 17 significant digits).
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A closed interval `[lo, hi]`; singletons are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval requires lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Endpoint rounding allowance: `2^-40 * (hi - lo)`.
    pub fn tolerance(&self) -> f64 {
        self.width() * 2f64.powi(-40)
    }

    /// The point `lo + (hi - lo) * i / intervals`, with the last point pinned to `hi`.
    ///
    /// Every grid in the crate goes through this formula, so grids with the same
    /// number of intervals share their points bit for bit, and a grid with `2m`
    /// intervals contains the one with `m`.
    pub fn grid_point(&self, i: usize, intervals: usize) -> f64 {
        if i >= intervals {
            self.hi
        } else {
            self.lo + self.width() * (i as f64) / (intervals as f64)
        }
    }

    /// `points` equally spaced points from `lo` to `hi` inclusive.
    pub fn uniform_grid(&self, points: usize) -> Result<Vec<f64>> {
        if points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 2, got {points}"
            )));
        }
        Ok((0..points).map(|i| self.grid_point(i, points - 1)).collect())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// How a [`RealFunction`] computes its values.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `x^alpha` on `[0, b]`.
    Power { alpha: f64, b: f64 },
    /// The decreasing chainsaw on `[0, 1]`: zero at `0`, and on each
    /// `[1/(n+1), 1/n]` a tooth falling from `1/(n+1)` to zero at
    /// `2/(2n+1)` and rising back to `1/n`.
    Chainsaw,
    /// Coefficients in ascending order of degree.
    Polynomial(Vec<f64>),
    /// Breakpoints with non-decreasing `x`. A repeated `x` encodes a jump: the
    /// function is right-continuous there, except that a run of three equal
    /// `x` pins the value at the jump to the middle `y`.
    PiecewiseLinear(Vec<(f64, f64)>),
    Expression(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealFunction {
    domain: Interval,
    rule: Rule,
}

impl RealFunction {
    pub fn power(alpha: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power family needs alpha > 0 and b > 0, got alpha={alpha}, b={b}"
            )));
        }
        Ok(Self {
            domain: Interval { lo: 0.0, hi: b },
            rule: Rule::Power { alpha, b },
        })
    }

    pub fn chainsaw() -> Self {
        Self {
            domain: Interval { lo: 0.0, hi: 1.0 },
            rule: Rule::Chainsaw,
        }
    }

    /// Polynomial on the default domain `[0, 1]`; see [`RealFunction::with_domain`].
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self {
            domain: Interval { lo: 0.0, hi: 1.0 },
            rule: Rule::Polynomial(coefficients),
        }
    }

    /// Piecewise-linear function on `[x_first, x_last]`.
    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "piecewise-linear function needs at least two breakpoints".into(),
            ));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        let mut run = 1;
        for w in points.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(Error::InvalidArgument(format!(
                    "breakpoint x values must be non-decreasing ({} after {})",
                    w[1].0, w[0].0
                )));
            }
            run = if w[1].0 == w[0].0 { run + 1 } else { 1 };
            if run > 3 {
                return Err(Error::InvalidArgument(format!(
                    "at most three breakpoints may share x = {}",
                    w[0].0
                )));
            }
        }
        let domain = Interval::new(points[0].0, points[points.len() - 1].0)?;
        if domain.is_degenerate() {
            return Err(Error::InvalidArgument(
                "piecewise-linear domain must be nondegenerate".into(),
            ));
        }
        Ok(Self {
            domain,
            rule: Rule::PiecewiseLinear(points),
        })
    }

    pub fn expression(expr: Expr, domain: Interval) -> Self {
        Self {
            domain,
            rule: Rule::Expression(expr),
        }
    }

    /// Moves a polynomial or expression onto another interval. The other
    /// families have fixed domains; asking for the same domain is accepted.
    pub fn with_domain(mut self, domain: Interval) -> Result<Self> {
        match self.rule {
            Rule::Polynomial(_) | Rule::Expression(_) => {
                self.domain = domain;
                Ok(self)
            }
            _ if domain == self.domain => Ok(self),
            _ => Err(Error::InvalidArgument(format!(
                "{} has the fixed domain [{}, {}]",
                self, self.domain.lo, self.domain.hi
            ))),
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Evaluates `f(x)`. Points within [`Interval::tolerance`] of the domain are
    /// clamped onto it.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let d = self.domain;
        let tol = d.tolerance();
        if !(x >= d.lo - tol && x <= d.hi + tol) {
            return Err(Error::Domain(format!(
                "x = {x} outside the domain [{}, {}]",
                d.lo, d.hi
            )));
        }
        let x = x.clamp(d.lo, d.hi);
        let y = match &self.rule {
            Rule::Power { alpha, .. } => x.powf(*alpha),
            Rule::Chainsaw => chainsaw(x),
            Rule::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Rule::PiecewiseLinear(pts) => piecewise_linear(pts, x),
            Rule::Expression(e) => e.eval(x),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Domain(format!("f({x}) = {y} is not finite")))
        }
    }

    /// Evaluates on every point of `xs`.
    pub fn eval_all(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Points where the function has kinks or jumps, sorted and inside the domain.
    ///
    /// The chainsaw has infinitely many; only teeth wider than `min_spacing`
    /// contribute.
    pub fn knots(&self, min_spacing: f64) -> Vec<f64> {
        self.knots_within(self.domain, min_spacing)
    }

    /// [`RealFunction::knots`] restricted to `window`.
    pub fn knots_within(&self, window: Interval, min_spacing: f64) -> Vec<f64> {
        let mut out = match &self.rule {
            Rule::PiecewiseLinear(pts) => pts.iter().map(|p| p.0).collect(),
            Rule::Chainsaw => {
                let mut v = vec![0.0];
                // teeth [1/(n+1), 1/n] meeting the window
                let first = if window.hi >= 1.0 {
                    1
                } else {
                    ((1.0 / window.hi).floor() as u64).max(1)
                };
                let mut n = first;
                while n < first + (1 << 20) {
                    if n > first && 1.0 / (n as f64) < window.lo {
                        break;
                    }
                    if 1.0 / ((n * (n + 1)) as f64) < min_spacing {
                        break;
                    }
                    v.push(1.0 / n as f64);
                    v.push(2.0 / (2 * n + 1) as f64);
                    v.push(1.0 / (n + 1) as f64);
                    n += 1;
                }
                v
            }
            _ => Vec::new(),
        };
        out.retain(|x| self.domain.contains(*x) && window.contains(*x));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Branch index `n >= 1` with `t` in `[1/(n+1), 1/n]`, for `t` in `(0, 1]`.
pub(crate) fn chainsaw_tooth(t: f64) -> u64 {
    let mut n = ((1.0 / t).floor() as u64).max(1);
    // floor(1/t) can be one off at breakpoints.
    if t < 1.0 / (n + 1) as f64 {
        n += 1;
    } else if t > 1.0 / n as f64 && n > 1 {
        n -= 1;
    }
    // at a shared endpoint 1/n take the tooth it starts, whose falling branch is exact there
    if n > 1 && t == 1.0 / n as f64 {
        n -= 1;
    }
    n
}

fn chainsaw(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = chainsaw_tooth(t);
    let slope = (2 * n + 1) as f64;
    // the rising branch is exactly zero at its own left end
    if t < 2.0 / slope {
        1.0 / (n + 1) as f64 - slope * (t - 1.0 / (n + 1) as f64)
    } else {
        slope * (t - 2.0 / slope)
    }
}

fn piecewise_linear(pts: &[(f64, f64)], x: f64) -> f64 {
    // First breakpoint strictly to the right of x.
    let right = pts.partition_point(|p| p.0 <= x);
    if right > 0 && pts[right - 1].0 == x {
        let start = pts[..right].partition_point(|p| p.0 < x);
        return if right - start == 3 {
            pts[start + 1].1
        } else {
            pts[right - 1].1
        };
    }
    if right == 0 {
        return pts[0].1;
    }
    if right == pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (x0, y0) = pts[right - 1];
    let (x1, y1) = pts[right];
    y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
}

/// Grid range estimate: `(min, max)` of `f` over `resolution` equally spaced points.
pub fn range_bounds(f: &RealFunction, resolution: usize) -> Result<(f64, f64)> {
    let xs = f.domain().uniform_grid(resolution)?;
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    for x in xs {
        let y = f.eval(x)?;
        low = low.min(y);
        high = high.max(y);
    }
    Ok((low, high))
}

/// Canonical text form; parses back to an equal [`RealFunction`].
impl fmt::Display for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Power { alpha, b } => {
                write!(f, "power(alpha={},b={})", fmt_num(*alpha), fmt_num(*b))
            }
            Rule::Chainsaw => f.write_str("chainsaw"),
            Rule::Polynomial(c) => {
                let body: Vec<_> = c.iter().map(|v| fmt_num(*v)).collect();
                write!(f, "poly({}", body.join(","))?;
                if self.domain != (Interval { lo: 0.0, hi: 1.0 }) {
                    write!(
                        f,
                        ",lo={},hi={}",
                        fmt_num(self.domain.lo),
                        fmt_num(self.domain.hi)
                    )?;
                }
                f.write_str(")")
            }
            Rule::PiecewiseLinear(pts) => {
                let body: Vec<_> = pts
                    .iter()
                    .map(|(x, y)| format!("({},{})", fmt_num(*x), fmt_num(*y)))
                    .collect();
                write!(f, "pwl({})", body.join(","))
            }
            Rule::Expression(e) => write!(
                f,
                "expr({e},lo={},hi={})",
                fmt_num(self.domain.lo),
                fmt_num(self.domain.hi)
            ),
        }
    }
}
