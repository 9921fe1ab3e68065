//! Locating points whose image lands on the boundary of a target set.
//!
//! If `f(a)` lies in `D` and `f(b)` does not, and the preimages of `Int(D)`
//! and `Ext(D)` are open, some `x` in `[a, b]` has `f(x)` in `∂D`. Halving the
//! bracket while keeping one end in `D` and the other out of it pins such a
//! point down to `(b - a) * 2^-n` after `n` steps. Nothing here needs `f` to be
//! continuous; the open-preimage hypothesis itself is not checked.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremum::dyadic_net;
use crate::function_model::{fmt_num, Interval, RealFunction};

/// One interval of a [`TargetSet`]; infinite ends are always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Piece {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: false, hi_open: false }
    }

    fn contains(&self, y: f64) -> bool {
        (y > self.lo || (y == self.lo && !self.lo_open)) && (y < self.hi || (y == self.hi && !self.hi_open))
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }
}

/// A finite union of intervals, kept sorted, disjoint and non-adjacent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Interior,
    Boundary,
    Exterior,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Interior => "interior",
            Class::Boundary => "boundary",
            Class::Exterior => "exterior",
        }
    }
}

impl TargetSet {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let mut ps = Vec::with_capacity(pieces.len());
        for mut p in pieces {
            if p.lo.is_nan() || p.hi.is_nan() {
                return Err(Error::InvalidArgument("target set endpoints must not be NaN".into()));
            }
            p.lo_open |= p.lo.is_infinite();
            p.hi_open |= p.hi.is_infinite();
            if !p.is_empty() {
                ps.push(p);
            }
        }
        // closed lower ends first so a merge keeps them closed
        ps.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.lo_open.cmp(&b.lo_open)));
        let mut merged: Vec<Piece> = Vec::with_capacity(ps.len());
        for p in ps {
            match merged.last_mut() {
                Some(c) if p.lo < c.hi || (p.lo == c.hi && !(c.hi_open && p.lo_open)) => {
                    if p.hi > c.hi {
                        c.hi = p.hi;
                        c.hi_open = p.hi_open;
                    } else if p.hi == c.hi {
                        c.hi_open &= p.hi_open;
                    }
                }
                _ => merged.push(p),
            }
        }
        Ok(Self { pieces: merged })
    }

    /// `(-inf, c)`.
    pub fn below(c: f64) -> Self {
        Self { pieces: vec![Piece::open(f64::NEG_INFINITY, c)] }
    }

    /// `(c, inf)`.
    pub fn above(c: f64) -> Self {
        Self { pieces: vec![Piece::open(c, f64::INFINITY)] }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Set membership, honouring the openness flags.
    pub fn contains(&self, y: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(y))
    }

    /// The finite endpoints, which make up `∂D` for a normalized union.
    pub fn boundary(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo, p.hi])
            .filter(|e| e.is_finite())
            .collect();
        b.dedup();
        b
    }

    /// Interior, boundary or exterior. Boundary wins within `boundary_tol` of
    /// an endpoint; it does not depend on whether that endpoint belongs to the set.
    pub fn classify(&self, y: f64, boundary_tol: f64) -> Class {
        if self.boundary().iter().any(|e| (y - e).abs() <= boundary_tol) {
            Class::Boundary
        } else if self.pieces.iter().any(|p| p.lo < y && y < p.hi) {
            Class::Interior
        } else {
            Class::Exterior
        }
    }
}

fn fmt_end(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        fmt_num(v)
    }
}

/// `(-inf,0)`, `[0,1]`, `(0,1)u(2,3)`; the empty set prints as `{}`.
impl fmt::Display for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self
            .pieces
            .iter()
            .map(|p| {
                format!(
                    "{}{},{}{}",
                    if p.lo_open { '(' } else { '[' },
                    fmt_end(p.lo),
                    fmt_end(p.hi),
                    if p.hi_open { ')' } else { ']' }
                )
            })
            .collect();
        f.write_str(&parts.join("u"))
    }
}

fn parse_end(text: &str, offset: usize) -> Result<f64> {
    match text {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => text.parse().map_err(|_| Error::Parse {
            position: offset,
            expected: format!("a number or inf, found `{text}`"),
        }),
    }
}

impl FromStr for TargetSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pieces = Vec::new();
        let mut offset = 0;
        for part in compact.split(['u', 'U']) {
            let fail = |at: usize, what: &str| Error::Parse {
                position: at,
                expected: what.to_string(),
            };
            let lo_open = match part.chars().next() {
                Some('(') => true,
                Some('[') => false,
                _ => return Err(fail(offset, "`(` or `[` opening an interval")),
            };
            let hi_open = match part.chars().last() {
                Some(')') if part.len() > 1 => true,
                Some(']') if part.len() > 1 => false,
                _ => return Err(fail(offset + part.len(), "`)` or `]` closing an interval")),
            };
            let body = &part[1..part.len() - 1];
            let (lo, hi) = body
                .split_once(',')
                .ok_or_else(|| fail(offset + 1, "`lo,hi` inside the interval"))?;
            let lo = parse_end(lo, offset + 1)?;
            let hi = parse_end(hi, offset + 2 + body.find(',').unwrap_or(0))?;
            if lo > hi {
                return Err(fail(offset, "an interval with lo <= hi"));
            }
            pieces.push(Piece { lo, hi, lo_open, hi_open });
            offset += part.len() + 1;
        }
        TargetSet::new(pieces)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub midpoint: f64,
    pub class: Class,
}

/// Record of a bisection run. Brackets are stored left to right;
/// `inside_at_left` says which end maps into the target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionTrace {
    pub target: String,
    pub inside_at_left: bool,
    pub steps: Vec<BisectionStep>,
    pub final_bracket: (f64, f64),
    /// `(b - a) * 2^-n` for `n` completed halvings.
    pub error_bound: f64,
    /// A point whose image was classified as boundary, when the run hit one.
    pub located: Option<f64>,
}

impl BisectionTrace {
    pub fn halvings(&self) -> u32 {
        self.steps.iter().filter(|s| s.class != Class::Boundary).count() as u32
    }

    pub fn midpoint(&self) -> f64 {
        let (a, b) = self.final_bracket;
        self.located.unwrap_or(a + (b - a) / 2.0)
    }

    /// `k,a_k,b_k,midpoint,class` rows.
    pub fn to_csv(&self, num: impl Fn(f64) -> String) -> String {
        let mut out = String::from("k,a_k,b_k,midpoint,class\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.k,
                num(s.a),
                num(s.b),
                num(s.midpoint),
                s.class.as_str()
            );
        }
        out
    }
}

/// Generalized bisection for any map `g` on `domain`.
pub fn bisect_map(
    g: impl Fn(f64) -> Result<f64>,
    domain: Interval,
    target: &TargetSet,
    steps: u32,
    boundary_tol: f64,
) -> Result<BisectionTrace> {
    if domain.is_degenerate() {
        return Err(Error::InvalidArgument("bisection needs a nondegenerate interval".into()));
    }
    if !(boundary_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "boundary tolerance must be nonnegative, got {boundary_tol}"
        )));
    }
    let (mut a, mut b) = (domain.lo(), domain.hi());
    let (ga, gb) = (g(a)?, g(b)?);
    let inside_at_left = target.contains(ga);
    if inside_at_left == target.contains(gb) {
        let where_ = if inside_at_left { "inside" } else { "outside" };
        return Err(Error::PreconditionViolated(format!(
            "f(a) = {ga} and f(b) = {gb} both lie {where_} {target}"
        )));
    }
    let width = b - a;
    let mut trace = BisectionTrace {
        target: target.to_string(),
        inside_at_left,
        steps: Vec::with_capacity(steps as usize),
        final_bracket: (a, b),
        error_bound: width,
        located: None,
    };
    for (x, gx) in [(a, ga), (b, gb)] {
        if target.classify(gx, boundary_tol) == Class::Boundary {
            trace.located = Some(x);
            return Ok(trace);
        }
    }
    let mut halvings = 0;
    for k in 0..steps {
        let m = a + (b - a) / 2.0;
        let gm = g(m)?;
        let class = target.classify(gm, boundary_tol);
        trace.steps.push(BisectionStep { k, a, b, midpoint: m, class });
        if class == Class::Boundary {
            trace.located = Some(m);
            break;
        }
        if target.contains(gm) == inside_at_left {
            a = m;
        } else {
            b = m;
        }
        halvings += 1;
    }
    trace.final_bracket = (a, b);
    trace.error_bound = width * 0.5f64.powi(halvings);
    Ok(trace)
}

/// Brackets a point of `f^{-1}(∂D)` on the domain of `f`.
pub fn bisect_boundary(
    f: &RealFunction,
    target: &TargetSet,
    steps: u32,
    boundary_tol: f64,
) -> Result<BisectionTrace> {
    bisect_map(|x| f.eval(x), f.domain(), target, steps, boundary_tol)
}

/// Brackets `x` with `f(x) = c` for `c` strictly between `f(a)` and `f(b)`.
pub fn classical_ivt(f: &RealFunction, c: f64, steps: u32) -> Result<BisectionTrace> {
    let d = f.domain();
    let (fa, fb) = (f.eval(d.lo())?, f.eval(d.hi())?);
    if !(fa.min(fb) < c && c < fa.max(fb)) {
        return Err(Error::PreconditionViolated(format!(
            "c = {c} is not strictly between f(a) = {fa} and f(b) = {fb}"
        )));
    }
    bisect_boundary(f, &TargetSet::below(c), steps, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedPointOutcome {
    /// An endpoint already satisfies `|f(x) - x| <= endpoint_tol`.
    Endpoint { x: f64, fx: f64 },
    /// Bisection of `g(x) = f(x) - x` against `(0, inf)`.
    Bracket { trace: BisectionTrace },
}

impl FixedPointOutcome {
    /// Best single estimate of the fixed point.
    pub fn point(&self) -> f64 {
        match self {
            FixedPointOutcome::Endpoint { x, .. } => *x,
            FixedPointOutcome::Bracket { trace } => trace.midpoint(),
        }
    }
}

/// Level of the net used to check that `f` maps its domain into itself.
pub const SELF_MAP_CHECK_LEVEL: u32 = 10;

/// Fixed point of a self-map of `[a, b]`, continuous or not, via `g(x) = f(x) - x`.
pub fn fixed_point(f: &RealFunction, steps: u32, endpoint_tol: f64) -> Result<FixedPointOutcome> {
    let d = f.domain();
    if !(endpoint_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "endpoint tolerance must be nonnegative, got {endpoint_tol}"
        )));
    }
    for x in dyadic_net(d, SELF_MAP_CHECK_LEVEL)?.points {
        let fx = f.eval(x)?;
        if !d.contains(fx) {
            return Err(Error::NotSelfMap { x, fx, lo: d.lo(), hi: d.hi() });
        }
    }
    for x in [d.lo(), d.hi()] {
        let fx = f.eval(x)?;
        if (fx - x).abs() <= endpoint_tol {
            return Ok(FixedPointOutcome::Endpoint { x, fx });
        }
    }
    let trace = bisect_map(|x| Ok(f.eval(x)? - x), d, &TargetSet::above(0.0), steps, 0.0)?;
    Ok(FixedPointOutcome::Bracket { trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::parse_function;

    fn set(s: &str) -> TargetSet {
        s.parse().unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(set("(0,inf)").classify(0.5, 0.0), Class::Interior);
        assert_eq!(set("(0,inf)").classify(0.0, 0.0), Class::Boundary);
        assert_eq!(set("[0,1]").classify(0.0, 0.0), Class::Boundary);
        assert_eq!(set("(0,1)u(2,3)").classify(-1.0, 0.0), Class::Exterior);
        assert_eq!(set("(0,1)u(2,3)").classify(1.5, 0.0), Class::Exterior);
        assert_eq!(set("(0,1)").classify(1e-9, 1e-6), Class::Boundary);
    }

    #[test]
    fn normalization() {
        assert_eq!(set("[1,2)u[0,1)").to_string(), "[0,2)");
        assert_eq!(set("(0,1)u(1,2)").to_string(), "(0,1)u(1,2)");
        assert_eq!(set("(0,1)u[1,1]u(1,2)").to_string(), "(0,2)");
        assert_eq!(set("(0,3)u[1,2]").to_string(), "(0,3)");
        assert_eq!(set("(0,1]u(0,1)").to_string(), "(0,1]");
        assert_eq!(set("[0,1)u(0,1]").to_string(), "[0,1]");
        assert_eq!(set("(1,1)u[2,2]").to_string(), "[2,2]");
        assert_eq!(set("[-inf,0]").to_string(), "(-inf,0]");
        assert!(set("(0,1)").contains(0.5) && !set("(0,1)").contains(1.0));
        assert!(set("[0,1]").contains(1.0));
        assert_eq!(set("(-inf, 0) u (2, inf)").boundary(), vec![0.0, 2.0]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("0,1".parse::<TargetSet>(), Err(Error::Parse { position: 0, .. })));
        assert!(matches!("(0,1".parse::<TargetSet>(), Err(Error::Parse { .. })));
        assert!(matches!("(0;1)".parse::<TargetSet>(), Err(Error::Parse { .. })));
        assert!(matches!("(2,1)".parse::<TargetSet>(), Err(Error::Parse { .. })));
        assert!(matches!("(a,1)".parse::<TargetSet>(), Err(Error::Parse { position: 1, .. })));
    }

    #[test]
    fn cube_root_of_two() {
        let f = parse_function("poly(-2,0,0,1,lo=0,hi=2)").unwrap();
        let t = bisect_boundary(&f, &TargetSet::below(0.0), 20, 0.0).unwrap();
        let (a, b) = t.final_bracket;
        assert_eq!(b - a, 2.0 * 2f64.powi(-20));
        assert_eq!(t.error_bound, 2.0 * 2f64.powi(-20));
        assert!(a * a * a < 2.0 && b * b * b > 2.0);
        assert!(a <= 1.2599210 && 1.2599210 <= b);
        assert!(t.inside_at_left);
    }

    #[test]
    fn identity_root() {
        let f = parse_function("pwl((-1,-1),(1,1))").unwrap();
        for n in [1, 5, 17] {
            let t = bisect_boundary(&f, &TargetSet::below(0.0), n, 0.0).unwrap();
            // the first midpoint is exactly 0, a boundary hit
            assert_eq!(t.located, Some(0.0));
        }
        let g = parse_function("pwl((-1,-1),(0.3,0.3))").unwrap();
        let t = bisect_boundary(&g, &TargetSet::below(0.0), 12, 0.0).unwrap();
        let (a, b) = t.final_bracket;
        assert!(a <= 0.0 && 0.0 <= b);
        assert_eq!(t.error_bound, 1.3 * 2f64.powi(-12));
    }

    #[test]
    fn steep_ramp_bracket() {
        // -1 on [0, 0.5], then a ramp crossing zero at 0.5 + 1/64
        let f = parse_function("pwl((0,-1),(0.5,-1),(0.53125,1),(1,1))").unwrap();
        let t = bisect_boundary(&f, &TargetSet::below(0.0), 30, 0.0).unwrap();
        let cross = 0.5 + 1.0 / 64.0;
        match t.located {
            Some(x) => assert_eq!(x, cross),
            None => {
                let (a, b) = t.final_bracket;
                assert!(a <= cross && cross <= b);
            }
        }
    }

    #[test]
    fn jump_without_boundary_value() {
        let f = parse_function("pwl((0,-1),(0.375,-1),(0.375,1),(1,1))").unwrap();
        let t = bisect_boundary(&f, &TargetSet::below(0.0), 25, 0.0).unwrap();
        assert_eq!(t.located, None);
        let (a, b) = t.final_bracket;
        assert!(a <= 0.375 && 0.375 <= b);
        assert_eq!(b - a, 2f64.powi(-25));
    }

    #[test]
    fn pinned_jump_hits_boundary() {
        let f = parse_function("pwl((0,-1),(0.375,-1),(0.375,0),(0.375,1),(1,1))").unwrap();
        let t = bisect_boundary(&f, &TargetSet::below(0.0), 25, 0.0).unwrap();
        assert_eq!(t.located, Some(0.375));
        assert_eq!(t.halvings(), 2);
    }

    #[test]
    fn precondition_and_endpoints() {
        let f = parse_function("poly(1,1)").unwrap();
        assert!(matches!(
            bisect_boundary(&f, &TargetSet::below(0.0), 5, 0.0),
            Err(Error::PreconditionViolated(_))
        ));
        let g = parse_function("poly(0,1)").unwrap();
        let t = bisect_boundary(&g, &TargetSet::above(0.0), 5, 0.0).unwrap();
        assert_eq!(t.located, Some(0.0));
        assert!(t.steps.is_empty());
    }

    #[test]
    fn ivt_examples() {
        let cube = parse_function("poly(0,0,0,1,lo=0,hi=2)").unwrap();
        let t = classical_ivt(&cube, 2.0, 20).unwrap();
        let (a, b) = t.final_bracket;
        assert!(a <= 2f64.cbrt() && 2f64.cbrt() <= b);

        let id = parse_function("pwl((0,0),(1,1))").unwrap();
        let t = classical_ivt(&id, 0.5, 10).unwrap();
        assert_eq!(t.located, Some(0.5));

        let t = classical_ivt(&id, 0.3, 10).unwrap();
        let (a, b) = t.final_bracket;
        assert_eq!(b - a, 2f64.powi(-10));
        assert!(a <= 0.3 && 0.3 <= b);

        let dec = parse_function("poly(1,-1)").unwrap();
        let t = classical_ivt(&dec, 0.3, 10).unwrap();
        assert!(!t.inside_at_left);
        let (a, b) = t.final_bracket;
        assert!(a <= 0.7 && 0.7 <= b);

        let sq = parse_function("poly(0,0,1)").unwrap();
        assert!(matches!(classical_ivt(&sq, 2.0, 5), Err(Error::PreconditionViolated(_))));
        assert!(matches!(classical_ivt(&sq, 0.0, 5), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn fixed_point_examples() {
        let cos = parse_function("expr(cos(x),lo=0,hi=1)").unwrap();
        let FixedPointOutcome::Bracket { trace } = fixed_point(&cos, 30, 0.0).unwrap() else {
            panic!("expected a bracket");
        };
        let (a, b) = trace.final_bracket;
        assert!(a <= 0.7390851332151607 && 0.7390851332151607 <= b);
        assert_eq!(b - a, 2f64.powi(-30));

        let id = parse_function("pwl((0,0),(1,1))").unwrap();
        assert_eq!(
            fixed_point(&id, 20, 1e-12).unwrap(),
            FixedPointOutcome::Endpoint { x: 0.0, fx: 0.0 }
        );

        let flip = parse_function("pwl((0,1),(1,0))").unwrap();
        let out = fixed_point(&flip, 20, 0.0).unwrap();
        assert_eq!(out.point(), 0.5);

        let out_of_range = parse_function("poly(0.5,1)").unwrap();
        assert!(matches!(
            fixed_point(&out_of_range, 10, 0.0),
            Err(Error::NotSelfMap { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let id = parse_function("pwl((0,0),(1,1))").unwrap();
        let t = classical_ivt(&id, 0.3, 2).unwrap();
        let csv = t.to_csv(|v| v.to_string());
        assert_eq!(
            csv,
            "k,a_k,b_k,midpoint,class\n0,0,1,0.5,exterior\n1,0,0.5,0.25,interior\n"
        );
    }
}
