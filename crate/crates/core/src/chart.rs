//! Coordinate charts, deterministic sample generation and the numeric
//! zero test.
//!
//! Deciding whether an expression vanishes identically is undecidable for
//! this function class, so every "vanishes" claim in the library reduces to
//! a seeded sample sweep with a two-part tolerance: an expression passes at
//! a point when `|e(p)| <= tol_abs + tol_rel * scale(p)`, where `scale(p)`
//! is the largest top-level additive term of `e` at `p`. The relative part
//! keeps residuals of large cancelling sums from false-failing.
//!
//! # Sample generator
//!
//! Points are produced by a SplitMix64 PRNG seeded with `SampleSpec::seed`.
//! For each point, one 64-bit output is drawn per coordinate in chart
//! declaration order; the output `u` is mapped to the coordinate interval
//! `[lo, hi)` as `lo + (u >> 11) * 2^-53 * (hi - lo)`. The procedure is
//! bit-exact: equal `(seed, count, box)` always give identical point lists.

use std::collections::BTreeMap;

use crate::expr::{EvalError, Expr, Point};

/// Ordered list of coordinate names with optional per-coordinate domain
/// intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coords: Vec<String>,
    domain: BTreeMap<String, (f64, f64)>,
}

impl Chart {
    pub fn new(coords: &[&str]) -> Chart {
        Chart::from_names(coords.iter().map(|s| s.to_string()).collect())
    }

    pub fn from_names(coords: Vec<String>) -> Chart {
        let mut seen = std::collections::BTreeSet::new();
        for c in &coords {
            assert!(seen.insert(c.clone()), "duplicate coordinate `{c}`");
        }
        Chart {
            coords,
            domain: BTreeMap::new(),
        }
    }

    /// Declare a domain box for one coordinate. Panics unless `lo < hi`.
    pub fn with_domain(mut self, coord: &str, lo: f64, hi: f64) -> Chart {
        assert!(lo < hi, "domain for `{coord}` must satisfy lo < hi");
        assert!(self.has_coord(coord), "unknown coordinate `{coord}`");
        self.domain.insert(coord.to_string(), (lo, hi));
        self
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn has_coord(&self, name: &str) -> bool {
        self.coords.iter().any(|c| c == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn domain_of(&self, name: &str) -> Option<(f64, f64)> {
        self.domain.get(name).copied()
    }

    /// Chart over the concatenation of these coordinates and `extra`.
    /// Domains carry over.
    pub fn extend(&self, extra: &Chart) -> Chart {
        let mut coords = self.coords.clone();
        coords.extend(extra.coords.iter().cloned());
        let mut chart = Chart::from_names(coords);
        for (k, v) in self.domain.iter().chain(extra.domain.iter()) {
            chart.domain.insert(k.clone(), *v);
        }
        chart
    }
}

/// Sampling and tolerance policy for numeric zero testing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub seed: u64,
    pub count: usize,
    /// Explicit per-coordinate intervals; they override chart domains.
    pub boxes: BTreeMap<String, (f64, f64)>,
    pub tol_abs: f64,
    pub tol_rel: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            seed: 0x5eed_0001,
            count: 64,
            boxes: BTreeMap::new(),
            tol_abs: 1e-9,
            tol_rel: 1e-7,
        }
    }
}

impl SampleSpec {
    pub fn with_seed(seed: u64) -> SampleSpec {
        SampleSpec {
            seed,
            ..SampleSpec::default()
        }
    }

    pub fn with_box(mut self, coord: &str, lo: f64, hi: f64) -> SampleSpec {
        assert!(lo < hi);
        self.boxes.insert(coord.to_string(), (lo, hi));
        self
    }

    /// Same policy, different stream. Used where an independent check must
    /// not reuse the points that produced a candidate.
    pub fn reseeded(&self, salt: u64) -> SampleSpec {
        let mut s = self.clone();
        s.seed = splitmix64(&mut (self.seed ^ salt));
        s
    }

    /// Interval used for a coordinate: explicit box, else chart domain,
    /// else `[-1, 1]`.
    pub fn interval_for(&self, chart: &Chart, coord: &str) -> (f64, f64) {
        self.boxes
            .get(coord)
            .copied()
            .or_else(|| chart.domain_of(coord))
            .unwrap_or((-1.0, 1.0))
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn unit_f64(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic sample sweep over the chart.
pub fn sample_points(chart: &Chart, spec: &SampleSpec) -> Vec<Point> {
    let mut state = spec.seed;
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let mut p = Point::new();
        for coord in chart.coords() {
            let (lo, hi) = spec.interval_for(chart, coord);
            let frac = unit_f64(splitmix64(&mut state));
            p.insert(coord.clone(), lo + frac * (hi - lo));
        }
        out.push(p);
    }
    out
}

/// Outcome of a numeric zero test: worst absolute value seen and where.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCheck {
    pub pass: bool,
    pub max_abs: f64,
    pub worst_point: Option<Point>,
}

impl ZeroCheck {
    pub fn trivial() -> ZeroCheck {
        ZeroCheck {
            pass: true,
            max_abs: 0.0,
            worst_point: None,
        }
    }

    /// Combine with another check, keeping the worse residual.
    pub fn merge(&mut self, other: ZeroCheck) {
        self.pass &= other.pass;
        if other.max_abs > self.max_abs {
            self.max_abs = other.max_abs;
            self.worst_point = other.worst_point;
        }
    }
}

/// Test `e == 0` on the sample sweep with the scale-aware tolerance.
pub fn is_zero(e: &Expr, chart: &Chart, spec: &SampleSpec) -> Result<ZeroCheck, EvalError> {
    is_zero_at(e, &sample_points(chart, spec), spec)
}

/// Same test on a caller-provided point list.
pub fn is_zero_at(e: &Expr, points: &[Point], spec: &SampleSpec) -> Result<ZeroCheck, EvalError> {
    let e = e.simplify();
    let terms = e.additive_terms();
    let mut check = ZeroCheck::trivial();
    for p in points {
        let v = e.evaluate(p)?;
        let mut scale = 0.0f64;
        for t in &terms {
            scale = scale.max(t.evaluate(p)?.abs());
        }
        let tol = spec.tol_abs + spec.tol_rel * scale;
        let abs = v.abs();
        if abs > check.max_abs {
            check.max_abs = abs;
            check.worst_point = Some(p.clone());
        }
        if abs > tol {
            check.pass = false;
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn sampling_is_deterministic() {
        let chart = Chart::new(&["x", "y"]);
        let spec = SampleSpec::with_seed(7);
        assert_eq!(sample_points(&chart, &spec), sample_points(&chart, &spec));
    }

    #[test]
    fn sampling_is_bit_exact() {
        // frozen first output of the documented generator: SplitMix64
        // from seed 1, mapped to [-1, 1)
        let mut state = 1u64;
        let u = splitmix64(&mut state);
        assert_eq!(u, 0x910a_2dec_8902_5cc1);
        let chart = Chart::new(&["x"]);
        let spec = SampleSpec::with_seed(1);
        let points = sample_points(&chart, &spec);
        let expect = -1.0 + unit_f64(0x910a_2dec_8902_5cc1) * 2.0;
        assert_eq!(points[0]["x"], expect);
    }

    #[test]
    fn sampling_respects_boxes() {
        let chart = Chart::new(&["t", "r"]).with_domain("r", 0.5, 1.5);
        let spec = SampleSpec::default();
        for p in sample_points(&chart, &spec) {
            let r = p["r"];
            let t = p["t"];
            assert!((0.5..1.5).contains(&r));
            assert!((-1.0..1.0).contains(&t));
        }
        // an explicit box overrides the chart domain
        let spec = SampleSpec::default().with_box("r", 10.0, 11.0);
        for p in sample_points(&chart, &spec) {
            assert!((10.0..11.0).contains(&p["r"]));
        }
    }

    #[test]
    fn zero_literal_is_zero() {
        let chart = Chart::new(&["x"]);
        let check = is_zero(&Expr::zero(), &chart, &SampleSpec::default()).unwrap();
        assert!(check.pass);
        assert_eq!(check.max_abs, 0.0);
    }

    #[test]
    fn pythagorean_identity_is_zero() {
        let chart = Chart::new(&["x"]);
        let e = parse("sin(x)^2 + cos(x)^2 - 1", &chart).unwrap();
        let check = is_zero(&e, &chart, &SampleSpec::default()).unwrap();
        assert!(check.pass, "residual {}", check.max_abs);
    }

    #[test]
    fn product_is_not_zero() {
        let chart = Chart::new(&["x", "y"]);
        let e = parse("x*y", &chart).unwrap();
        let check = is_zero(&e, &chart, &SampleSpec::default()).unwrap();
        assert!(!check.pass);
        assert!(check.max_abs > 0.01);
        assert!(check.worst_point.is_some());
    }
}
