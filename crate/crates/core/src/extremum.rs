//! Maxima and minima of continuous functions on a compact interval.
//!
//! Two constructions: refinement over nested dyadic nets, where the running
//! net maximum `M_n` climbs monotonically to the true maximum and the modulus
//! of continuity at the mesh size certifies how far it can still move; and the
//! envelope `g(x) = sup f([a, x])`, whose first point reaching `g(b)` is a
//! maximizer.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{Interval, RealFunction};
use crate::optimal_delta::modulus_of_continuity;

/// Largest net level; level 24 already means 2^24 + 1 evaluations.
pub const MAX_LEVEL: u32 = 24;

/// The net `E_n = { a + (b - a) k / 2^n : k = 0..=2^n }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicNet {
    pub level: u32,
    pub points: Vec<f64>,
}

impl DyadicNet {
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn check_domain(domain: Interval) -> Result<()> {
    if domain.is_degenerate() {
        return Err(Error::InvalidArgument(format!(
            "the domain [{}, {}] must be nondegenerate",
            domain.lo(),
            domain.hi()
        )));
    }
    Ok(())
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::LevelTooLarge {
            level,
            max: MAX_LEVEL,
        });
    }
    Ok(())
}

pub fn dyadic_net(domain: Interval, level: u32) -> Result<DyadicNet> {
    check_domain(domain)?;
    check_level(level)?;
    let intervals = 1usize << level;
    Ok(DyadicNet {
        level,
        points: (0..=intervals)
            .map(|k| domain.grid_point(k, intervals))
            .collect(),
    })
}

/// One level of the refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    /// `(b - a) / 2^n`.
    pub mesh: f64,
    #[serde(rename = "M_n")]
    pub max: f64,
    #[serde(rename = "m_n")]
    pub min: f64,
    pub argmax: f64,
    pub argmin: f64,
    /// `w(mesh)`, once [`certified_max_bound`] has run at this level.
    pub certified_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub function_id: String,
    pub levels: Vec<LevelRecord>,
    /// Whether the stall rule ended the run before `max_level`.
    pub stopped_early: bool,
}

impl RefinementTrace {
    pub fn last(&self) -> &LevelRecord {
        self.levels.last().expect("a trace always has level 0")
    }

    pub fn level(&self, level: u32) -> Option<&LevelRecord> {
        self.levels.iter().find(|r| r.level == level)
    }

    /// The argmax of every level in order; a unique maximizer shows up as convergence.
    pub fn argmax_sequence(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.argmax).collect()
    }

    /// `level,mesh,M_n,m_n,argmax,argmin,certified_gap` rows; an absent gap is left empty.
    pub fn to_csv(&self, num: impl Fn(f64) -> String) -> String {
        let mut out = String::from("level,mesh,M_n,m_n,argmax,argmin,certified_gap\n");
        for r in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.level,
                num(r.mesh),
                num(r.max),
                num(r.min),
                num(r.argmax),
                num(r.argmin),
                r.certified_gap.map(&num).unwrap_or_default()
            );
        }
        out
    }
}

/// Max/min over `values` with ties going to the smallest index.
fn extremes(values: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[imax] {
            imax = k;
        }
        if v < values[imin] {
            imin = k;
        }
    }
    (imax, imin)
}

/// Evaluates `f` on the nets `E_0, E_1, ...` up to `max_level`.
///
/// Each level reuses the previous level's evaluations at the even indices, so
/// `M_n` is non-decreasing and `m_n` non-increasing without any rounding slack.
/// With `stall_tol > 0` the run stops once both `M_n` and `m_n` have moved less
/// than `stall_tol` over two consecutive levels.
pub fn refine_extrema(f: &RealFunction, max_level: u32, stall_tol: f64) -> Result<RefinementTrace> {
    let domain = f.domain();
    check_domain(domain)?;
    check_level(max_level)?;
    if !(stall_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "stall tolerance must be nonnegative, got {stall_tol}"
        )));
    }

    let mut values = vec![f.eval(domain.lo())?, f.eval(domain.hi())?];
    let mut levels: Vec<LevelRecord> = Vec::new();
    let mut stopped_early = false;
    for level in 0..=max_level {
        let intervals = 1usize << level;
        if level > 0 {
            let mut next = Vec::with_capacity(intervals + 1);
            for (j, &v) in values.iter().enumerate() {
                if j > 0 {
                    next.push(f.eval(domain.grid_point(2 * j - 1, intervals))?);
                }
                next.push(v);
            }
            values = next;
        }
        let (imax, imin) = extremes(&values);
        levels.push(LevelRecord {
            level,
            mesh: domain.width() / intervals as f64,
            max: values[imax],
            min: values[imin],
            argmax: domain.grid_point(imax, intervals),
            argmin: domain.grid_point(imin, intervals),
            certified_gap: None,
        });
        if level < max_level && levels.len() >= 3 {
            let [a, b, c] = &levels[levels.len() - 3..] else {
                unreachable!()
            };
            let still = |x: f64, y: f64| (x - y).abs() < stall_tol;
            if still(a.max, b.max) && still(b.max, c.max) && still(a.min, b.min) && still(b.min, c.min) {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(RefinementTrace {
        function_id: f.to_string(),
        levels,
        stopped_early,
    })
}

fn record_gap(
    f: &RealFunction,
    trace: &mut RefinementTrace,
    level: u32,
    modulus_resolution: usize,
) -> Result<(f64, f64, f64)> {
    let record = trace
        .levels
        .iter_mut()
        .find(|r| r.level == level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} is not in the trace")))?;
    let w = modulus_of_continuity(f, record.mesh, modulus_resolution)?;
    record.certified_gap = Some(w);
    Ok((record.max, record.min, w))
}

/// `M_n + w(mesh_n)`: every point lies within one mesh of a net point, so no
/// value of `f` can exceed this (up to the grid bias of `w`).
pub fn certified_max_bound(
    f: &RealFunction,
    trace: &mut RefinementTrace,
    level: u32,
    modulus_resolution: usize,
) -> Result<f64> {
    let (max, _, w) = record_gap(f, trace, level, modulus_resolution)?;
    Ok(max + w)
}

/// `m_n - w(mesh_n)`, the mirror of [`certified_max_bound`].
pub fn certified_min_bound(
    f: &RealFunction,
    trace: &mut RefinementTrace,
    level: u32,
    modulus_resolution: usize,
) -> Result<f64> {
    let (_, min, w) = record_gap(f, trace, level, modulus_resolution)?;
    Ok(min - w)
}

/// Running maximum `g(x_i) = max f(x_0..=x_i)` over the uniform grid.
pub fn envelope(f: &RealFunction, resolution: usize) -> Result<Vec<(f64, f64)>> {
    let xs = f.domain().uniform_grid(resolution)?;
    let mut running = f64::NEG_INFINITY;
    xs.into_iter()
        .map(|x| {
            running = running.max(f.eval(x)?);
            Ok((x, running))
        })
        .collect()
}

/// `x,g` rows for plotting.
pub fn envelope_to_csv(env: &[(f64, f64)], num: impl Fn(f64) -> String) -> String {
    let mut out = String::from("x,g\n");
    for (x, g) in env {
        let _ = writeln!(out, "{},{}", num(*x), num(*g));
    }
    out
}

/// Smallest grid point where the envelope reaches `g(b) - value_tol`.
///
/// This is the infimum of `{x : g(x) = g(b)}`, i.e. the earliest maximizer.
pub fn first_maximizer(f: &RealFunction, resolution: usize, value_tol: f64) -> Result<f64> {
    if !(value_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "value tolerance must be nonnegative, got {value_tol}"
        )));
    }
    let env = envelope(f, resolution)?;
    let top = env.last().map(|p| p.1).unwrap_or(f64::NEG_INFINITY);
    Ok(env
        .iter()
        .find(|(_, g)| *g >= top - value_tol)
        .map(|p| p.0)
        .unwrap_or(f.domain().hi()))
}
