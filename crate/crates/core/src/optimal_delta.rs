//! The optimal delta `δ(ε) = inf { |x - y| : |f(x) - f(y)| >= ε }` and its dual,
//! the modulus of continuity `w(δ) = sup { |f(x) - f(y)| : |x - y| <= δ }`.
//!
//! Grid estimates of `δ` minimize over a finite subset of the level set, so they
//! only ever overshoot; grid estimates of `w` maximize over a subset, so they
//! only ever undershoot. [`DeltaSample::bias`] records which guarantee applies.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{range_bounds, FiniteMetricSpace, Interval, RealFunction, Rule};

/// Relative allowance on the level-set test `|f(x) - f(y)| >= ε`.
///
/// Closed-form optima sit exactly on the threshold, where a floating evaluation
/// can land a few ulps short.
pub const LEVEL_REL_SLACK: f64 = 16.0 * f64::EPSILON;

/// Relative allowance when deciding that a distance is strictly below a claimed delta.
pub const DISTANCE_REL_SLACK: f64 = 1e-12;

/// Relative margin for the maximality half of [`verify_largest_delta`].
pub const MAXIMALITY_MARGIN: f64 = 1e-3;

/// Whether a value gap puts a pair into `A_ε`.
pub fn in_level_set(gap: f64, epsilon: f64) -> bool {
    gap >= epsilon * (1.0 - LEVEL_REL_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Grid,
    /// Full enumeration of a finite space.
    Exhaustive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Grid => "grid",
            Method::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    Exact,
    UpperBound,
}

impl Bias {
    pub fn as_str(self) -> &'static str {
        match self {
            Bias::Exact => "exact",
            Bias::UpperBound => "upper_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub epsilon: f64,
    pub delta: f64,
    pub method: Method,
    pub bias: Bias,
    /// The pair realizing `delta`, when one was found by search.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub resolution: usize,
    pub refine_rounds: u32,
    pub zoom_factor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 1 << 12,
            refine_rounds: 2,
            zoom_factor: 4.0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least 2, got {}",
                self.resolution
            )));
        }
        if !(self.zoom_factor >= 2.0 && self.zoom_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "zoom factor must be at least 2, got {}",
                self.zoom_factor
            )));
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )))
    }
}

/// Closest pair `(distance, i, j)` with `i < j` in the level set, over points
/// sorted by `x`. Ties keep the lexicographically smallest `(i, j)`.
pub fn closest_pair_in_level_set(
    xs: &[f64],
    fs: &[f64],
    epsilon: f64,
) -> Option<(f64, usize, usize)> {
    debug_assert_eq!(xs.len(), fs.len());
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let d = xs[j] - xs[i];
            if matches!(best, Some((bd, _, _)) if d > bd) {
                break;
            }
            if in_level_set((fs[j] - fs[i]).abs(), epsilon)
                && best.map_or(true, |(bd, _, _)| d < bd)
            {
                best = Some((d, i, j));
            }
        }
    }
    best
}

fn spread(fs: &[f64]) -> f64 {
    let (lo, hi) = fs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

fn sorted_union(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Moves from `out` (outside the level set relative to `fa`) towards `inside`,
/// returning the point closest to `out` that bisection can certify inside.
fn crossing(f: &RealFunction, fa: f64, mut out: f64, mut inside: f64, epsilon: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = out + (inside - out) / 2.0;
        if mid == out || mid == inside {
            break;
        }
        if in_level_set((f.eval(mid)? - fa).abs(), epsilon) {
            inside = mid;
        } else {
            out = mid;
        }
    }
    Ok(inside)
}

/// Improves `seed = (d, x, y)` by locating, for every point, the crossing into
/// the level set inside the cell holding its nearest qualifying partner.
/// Every returned pair is itself in the level set.
fn sharpen(
    f: &RealFunction,
    xs: &[f64],
    fs: &[f64],
    epsilon: f64,
    seed: (f64, f64, f64),
) -> Result<(f64, f64, f64)> {
    let mut best = seed;
    let cell = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let hit = |a: usize, b: usize| in_level_set((fs[a] - fs[b]).abs(), epsilon);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[j] - xs[i] > best.0 + cell {
                break;
            }
            if hit(i, j) {
                if xs[j - 1] - xs[i] < best.0 {
                    let y = crossing(f, fs[i], xs[j - 1], xs[j], epsilon)?;
                    if y - xs[i] < best.0 {
                        best = (y - xs[i], xs[i], y);
                    }
                }
                break;
            }
        }
    }
    for j in 0..xs.len() {
        for i in (0..j).rev() {
            if xs[j] - xs[i] > best.0 + cell {
                break;
            }
            if hit(i, j) {
                if xs[j] - xs[i + 1] < best.0 {
                    let x = crossing(f, fs[j], xs[i + 1], xs[i], epsilon)?;
                    if xs[j] - x < best.0 {
                        best = (xs[j] - x, x, xs[j]);
                    }
                }
                break;
            }
        }
    }
    Ok(best)
}

/// The uniform grid of `resolution` points merged with the function's knots.
///
/// Knots matter for piecewise-linear functions, whose optimal pairs often sit
/// on isolated breakpoints that no uniform grid would hit.
pub fn candidate_points(f: &RealFunction, resolution: usize) -> Result<Vec<f64>> {
    let grid = f.domain().uniform_grid(resolution)?;
    let step = f.domain().width() / (resolution - 1) as f64;
    let mut pts = grid;
    pts.extend(f.knots(step));
    Ok(sorted_union(pts))
}

/// Grid estimate of `δ(ε)` with local zoom refinement.
///
/// The base pass scans every pair of [`candidate_points`]. Each refinement
/// round then lays `resolution / 2` points on each of the two windows of
/// half-width `zoom_factor * h` centred on the current best pair (`h` being the
/// previous step), and rescans. The current pair always stays in the candidate
/// set, so rounds never make the estimate worse.
///
/// After every scan each point's nearest qualifying partner is pinned down by
/// bisecting inside the grid cell where the level set is first entered. Where
/// `δ` is nearly flat in the pair's position, grid rounding alone can park the
/// pair far from the optimum, and the zoom windows would never recover it.
pub fn optimal_delta_grid(f: &RealFunction, epsilon: f64, cfg: &GridConfig) -> Result<DeltaSample> {
    check_epsilon(epsilon)?;
    cfg.validate()?;
    let domain = f.domain();
    let xs = candidate_points(f, cfg.resolution)?;
    let fs = f.eval_all(&xs)?;
    let (best, i, j) = closest_pair_in_level_set(&xs, &fs, epsilon).ok_or(Error::EmptyLevelSet {
        epsilon,
        spread: spread(&fs),
    })?;
    let (mut best, mut x, mut y) = sharpen(f, &xs, &fs, epsilon, (best, xs[i], xs[j]))?;

    let per_window = (cfg.resolution / 2).max(2);
    let mut step = domain.width() / (cfg.resolution - 1) as f64;
    for _ in 0..cfg.refine_rounds {
        let radius = cfg.zoom_factor * step;
        let next_step = 2.0 * radius / (per_window - 1) as f64;
        let mut pts = vec![x, y];
        for centre in [x, y] {
            let lo = (centre - radius).max(domain.lo());
            let hi = (centre + radius).min(domain.hi());
            let window = Interval::new(lo, hi)?;
            if !window.is_degenerate() {
                pts.extend(window.uniform_grid(per_window)?);
                pts.extend(f.knots_within(window, next_step));
            }
        }
        let pts = sorted_union(pts);
        let vals = f.eval_all(&pts)?;
        (best, x, y) = sharpen(f, &pts, &vals, epsilon, (best, x, y))?;
        step = next_step;
    }

    Ok(DeltaSample {
        epsilon,
        delta: best,
        method: Method::Grid,
        bias: Bias::UpperBound,
        witness: Some((x, y)),
    })
}

/// `Some(n)` when `epsilon` is `1/n` up to rounding.
fn reciprocal_index(epsilon: f64) -> Option<u64> {
    let n = (1.0 / epsilon).round();
    if !(1.0..=1e15).contains(&n) {
        return None;
    }
    let back = 1.0 / n;
    ((back - epsilon).abs() <= 4.0 * f64::EPSILON * epsilon).then_some(n as u64)
}

/// Whether [`optimal_delta_closed_form`] can answer for this `(f, ε)`.
pub fn has_closed_form(f: &RealFunction, epsilon: f64) -> bool {
    match f.rule() {
        Rule::Power { alpha, b } => epsilon > 0.0 && epsilon < b.powf(*alpha),
        Rule::Chainsaw => reciprocal_index(epsilon).is_some(),
        _ => false,
    }
}

/// Exact `δ(ε)` for the power family `x^α` on `[0, b]` and for the chainsaw at `ε = 1/n`.
///
/// Power family: `b - (b^α - ε)^(1/α)` for `α >= 1`, `ε^(1/α)` for `α <= 1`.
/// Chainsaw: `1/(n(2n+1))`.
pub fn optimal_delta_closed_form(f: &RealFunction, epsilon: f64) -> Result<DeltaSample> {
    check_epsilon(epsilon)?;
    let delta = match f.rule() {
        Rule::Power { alpha, b } => {
            let m = b.powf(*alpha);
            if epsilon >= m {
                return Err(Error::OutOfRange(format!(
                    "epsilon {epsilon} must be below b^alpha = {m}"
                )));
            }
            if *alpha >= 1.0 {
                b - (m - epsilon).powf(1.0 / alpha)
            } else {
                epsilon.powf(1.0 / alpha)
            }
        }
        Rule::Chainsaw => {
            let n = reciprocal_index(epsilon).ok_or_else(|| {
                Error::OutOfRange(format!(
                    "chainsaw closed form needs epsilon = 1/n, got {epsilon}"
                ))
            })?;
            1.0 / (n * (2 * n + 1)) as f64
        }
        _ => return Err(Error::UnsupportedFamily(f.to_string())),
    };
    Ok(DeltaSample {
        epsilon,
        delta,
        method: Method::ClosedForm,
        bias: Bias::Exact,
        witness: None,
    })
}

/// Exact `δ(ε)` on a finite space by scanning every pair.
pub fn optimal_delta_finite(space: &FiniteMetricSpace, epsilon: f64) -> Result<DeltaSample> {
    check_epsilon(epsilon)?;
    let n = space.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let gap = (space.value(i) - space.value(j)).abs();
            let d = space.dist(i, j);
            if in_level_set(gap, epsilon) && best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    let (delta, _, _) = best.ok_or(Error::EmptyLevelSet {
        epsilon,
        spread: spread(space.values()),
    })?;
    Ok(DeltaSample {
        epsilon,
        delta,
        method: Method::Exhaustive,
        bias: Bias::Exact,
        witness: None,
    })
}

/// Largest `|f(x) - f(y)|` over sorted points with `|x - y| <= delta`.
///
/// Sliding-window max/min, linear in the number of points.
pub fn modulus_on_points(xs: &[f64], fs: &[f64], delta: f64) -> f64 {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut left = 0;
    let mut w = 0.0f64;
    for j in 0..xs.len() {
        while maxq.back().is_some_and(|&k| fs[k] <= fs[j]) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&k| fs[k] >= fs[j]) {
            minq.pop_back();
        }
        minq.push_back(j);
        while xs[j] - xs[left] > delta {
            left += 1;
        }
        while maxq.front().is_some_and(|&k| k < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&k| k < left) {
            minq.pop_front();
        }
        w = w.max(fs[maxq[0]] - fs[minq[0]]);
    }
    w
}

/// Grid lower bound on the modulus of continuity `w(δ)`.
pub fn modulus_of_continuity(f: &RealFunction, delta: f64, resolution: usize) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let xs = f.domain().uniform_grid(resolution)?;
    let fs = f.eval_all(&xs)?;
    Ok(modulus_on_points(&xs, &fs, delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaProfile {
    pub function_id: String,
    #[serde(rename = "M_estimate")]
    pub m_estimate: f64,
    pub samples: Vec<DeltaSample>,
}

impl DeltaProfile {
    /// `epsilon,delta,method,bias` rows; numbers go through `num`.
    pub fn to_csv(&self, num: impl Fn(f64) -> String) -> String {
        let mut out = String::from("epsilon,delta,method,bias\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                num(s.epsilon),
                num(s.delta),
                s.method.as_str(),
                s.bias.as_str()
            );
        }
        out
    }
}

/// Samples `δ` at each epsilon: closed form where one exists, grid otherwise.
///
/// All epsilons are range-checked before any sampling starts; failures carry
/// the index of the offending epsilon.
pub fn build_profile(f: &RealFunction, epsilons: &[f64], cfg: &GridConfig) -> Result<DeltaProfile> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("no epsilon values given".into()));
    }
    cfg.validate()?;
    let (low, high) = range_bounds(f, cfg.resolution)?;
    let m_estimate = high - low;
    let annotate = |index: usize, epsilon: f64, e: Error| Error::Sample {
        index,
        epsilon,
        source: Box::new(e),
    };
    for (index, &eps) in epsilons.iter().enumerate() {
        check_epsilon(eps).map_err(|e| annotate(index, eps, e))?;
        if !has_closed_form(f, eps) && eps > m_estimate {
            return Err(annotate(
                index,
                eps,
                Error::EmptyLevelSet {
                    epsilon: eps,
                    spread: m_estimate,
                },
            ));
        }
    }
    let mut samples = epsilons
        .iter()
        .enumerate()
        .map(|(index, &eps)| {
            let s = if has_closed_form(f, eps) {
                optimal_delta_closed_form(f, eps)
            } else {
                optimal_delta_grid(f, eps, cfg)
            };
            s.map_err(|e| annotate(index, eps, e))
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(DeltaProfile {
        function_id: f.to_string(),
        m_estimate,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub fx: f64,
    pub fy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub delta_claimed: f64,
    /// No candidate pair closer than the claim reaches the level set.
    pub valid: bool,
    /// Some candidate pair within the relative margin above the claim reaches it.
    pub maximal: bool,
    /// Closest pair in the level set, if any.
    pub witness: Option<Witness>,
}

/// Checks a claimed delta against the grid: valid means nothing closer than
/// `delta_claimed` reaches the level set, maximal means something within
/// `delta_claimed * (1 + 1e-3)` does.
pub fn verify_largest_delta(
    f: &RealFunction,
    epsilon: f64,
    delta_claimed: f64,
    resolution: usize,
) -> Result<VerificationReport> {
    check_epsilon(epsilon)?;
    if !(delta_claimed > 0.0 && delta_claimed.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "claimed delta must be positive, got {delta_claimed}"
        )));
    }
    let xs = candidate_points(f, resolution)?;
    let fs = f.eval_all(&xs)?;
    let closest = closest_pair_in_level_set(&xs, &fs, epsilon);
    let witness = closest.map(|(_, i, j)| Witness {
        x: xs[i],
        y: xs[j],
        fx: fs[i],
        fy: fs[j],
    });
    let (valid, maximal) = match closest {
        Some((d, _, _)) => (
            d >= delta_claimed * (1.0 - DISTANCE_REL_SLACK),
            d < delta_claimed * (1.0 + MAXIMALITY_MARGIN),
        ),
        None => (true, false),
    };
    Ok(VerificationReport {
        epsilon,
        delta_claimed,
        valid,
        maximal,
        witness,
    })
}
