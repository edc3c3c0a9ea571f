//! Sampled piecewise affine functions and their convex and concave envelopes.
//!
//! Every value that a solver manipulates sits on a uniform value grid
//! `origin + m * step`, so grid values are carried around as their integer
//! index `m`. A [`PiecewiseAffineFn`] stores the samples on a contiguous index
//! range and is affine on each cell `[m - 1, m]`. Cells are named by their
//! right endpoint throughout the crate.
//!
//! Envelopes are lower hulls of the sample points computed with Andrew's
//! monotone chain. Turn tests use the exact `orient2d` predicate, so the hull,
//! its contact set and the split into constant slope runs are exact for any
//! finite samples. Collinear points on the hull boundary are kept in the
//! contact set.

use std::cmp::Ordering;

use robust::{orient2d, Coord};

use crate::error::{Error, Result};

/// A function sampled on every point of a uniform grid and affine in between.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffineFn {
    origin: f64,
    step: f64,
    lo: i64,
    values: Vec<f64>,
}

impl PiecewiseAffineFn {
    /// Builds a function from its samples at indices `lo, lo + 1, ...`.
    pub fn new(origin: f64, step: f64, lo: i64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidFunction(format!("grid step {step} must be positive")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidFunction("grid origin must be finite".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidFunction("at least two samples are required".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("sample {} is not finite", lo + i as i64)));
        }
        Ok(Self { origin, step, lo, values })
    }

    /// Samples `f` at every grid point of the index range `[lo, hi]`.
    pub fn from_fn(origin: f64, step: f64, lo: i64, hi: i64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::InvalidFunction(format!("empty index range [{lo}, {hi}]")));
        }
        let values = (lo..=hi).map(|m| f(origin + m as f64 * step)).collect();
        Self::new(origin, step, lo, values)
    }

    /// Real value of grid index 0.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Grid step `ε_u`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// First sampled index.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last sampled index.
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    /// Samples in index order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when `m` is a sampled index.
    pub fn contains(&self, m: i64) -> bool {
        m >= self.lo && m <= self.hi()
    }

    /// Checks that `m` is a sampled index.
    pub fn check(&self, m: i64) -> Result<()> {
        if self.contains(m) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { index: m, lo: self.lo, hi: self.hi() })
        }
    }

    /// Sample at index `m`.
    ///
    /// # Panics
    /// Panics when `m` is outside the sampled range.
    pub fn value(&self, m: i64) -> f64 {
        assert!(self.contains(m), "index {m} outside [{}, {}]", self.lo, self.hi());
        self.values[(m - self.lo) as usize]
    }

    /// Real value of grid index `m`.
    pub fn u(&self, m: i64) -> f64 {
        self.origin + m as f64 * self.step
    }

    /// Grid index of the real value `u`, if `u` lies on the grid.
    pub fn index_of(&self, u: f64) -> Result<i64> {
        let r = (u - self.origin) / self.step;
        let m = r.round();
        if !r.is_finite() || (r - m).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(Error::OffGrid(u));
        }
        Ok(m as i64)
    }

    /// Slope on the cell `[m - 1, m]`.
    pub fn cell_slope(&self, m: i64) -> f64 {
        (self.value(m) - self.value(m - 1)) / self.step
    }

    /// Slope of the chord between the samples at `a` and `b`.
    pub fn chord_slope(&self, a: i64, b: i64) -> f64 {
        (self.value(b) - self.value(a)) / ((b - a) as f64 * self.step)
    }

    /// Largest jump of the cell slope across an interior grid point divided by
    /// the step. This is the second derivative bound used by all estimates.
    pub fn second_derivative_bound(&self) -> f64 {
        (self.lo + 1..self.hi())
            .map(|m| (self.cell_slope(m + 1) - self.cell_slope(m)).abs() / self.step)
            .fold(0.0, f64::max)
    }

    /// Second derivative bound restricted to the interior points of `[a, b]`.
    pub fn second_derivative_bound_on(&self, a: i64, b: i64) -> f64 {
        (a.max(self.lo) + 1..b.min(self.hi()))
            .map(|m| (self.cell_slope(m + 1) - self.cell_slope(m)).abs() / self.step)
            .fold(0.0, f64::max)
    }

    /// Copy restricted to the index range `[a, b]`.
    pub fn restrict(&self, a: i64, b: i64) -> Result<Self> {
        self.check(a)?;
        self.check(b)?;
        if b <= a {
            return Err(Error::Degenerate(a));
        }
        let values = self.values[(a - self.lo) as usize..=(b - self.lo) as usize].to_vec();
        Self::new(self.origin, self.step, a, values)
    }

    /// Applies `g(u, f(u))` to every sample.
    pub fn map_samples(&self, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (self.lo..=self.hi()).map(|m| g(self.u(m), self.value(m))).collect();
        Self::new(self.origin, self.step, self.lo, values)
    }

    /// Exact orientation of the sample points at `a`, `b`, `c`.
    /// `Greater` is a left (counterclockwise) turn.
    pub fn orientation(&self, a: i64, b: i64, c: i64) -> Ordering {
        orient_sign(self.point(a, 1.0), self.point(b, 1.0), self.point(c, 1.0))
    }

    /// True when the chords `[a, b]` and `[c, d]` lie on one straight line,
    /// decided exactly. Two envelope runs covering a common cell have the same
    /// slope exactly when this holds.
    pub fn same_line(&self, a: i64, b: i64, c: i64, d: i64) -> bool {
        (a == c && b == d)
            || (self.orientation(a, b, c) == Ordering::Equal && self.orientation(a, b, d) == Ordering::Equal)
    }

    fn point(&self, m: i64, sign: f64) -> Coord<f64> {
        Coord { x: m as f64, y: sign * self.value(m) }
    }
}

fn orient_sign(a: Coord<f64>, b: Coord<f64>, c: Coord<f64>) -> Ordering {
    orient2d(a, b, c).partial_cmp(&0.0).expect("orientation of finite points is finite")
}

/// Which envelope was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// Greatest convex minorant.
    Lower,
    /// Least concave majorant.
    Upper,
}

/// A maximal chain of grid cells on which the envelope has one slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    /// Left endpoint index.
    pub lo: i64,
    /// Right endpoint index.
    pub hi: i64,
    /// Slope of the envelope on the run.
    pub slope: f64,
}

/// Envelope of a sampled function on a grid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    /// Lower or upper envelope.
    pub kind: EnvelopeKind,
    /// Left end of the interval.
    pub lo: i64,
    /// Right end of the interval.
    pub hi: i64,
    /// Envelope values at `lo..=hi`.
    pub env: Vec<f64>,
    /// Grid points where the envelope touches the function, sorted.
    pub contact_set: Vec<i64>,
    /// Maximal open intervals where the envelope is strictly away from the function.
    pub shock_intervals: Vec<(i64, i64)>,
    /// Maximal constant slope runs, left to right.
    pub runs: Vec<Run>,
}

impl EnvelopeResult {
    /// Envelope value at grid index `m`.
    pub fn value(&self, m: i64) -> f64 {
        self.env[(m - self.lo) as usize]
    }

    /// True when `m` is a contact point.
    pub fn is_contact(&self, m: i64) -> bool {
        self.contact_set.binary_search(&m).is_ok()
    }

    /// Index into [`Self::runs`] of the run containing the cell `[m - 1, m]`.
    pub fn run_of_cell(&self, m: i64) -> Option<usize> {
        if m <= self.lo || m > self.hi {
            return None;
        }
        Some(self.runs.partition_point(|r| r.hi < m))
    }
}

/// Greatest convex function below `f` on the index interval `[a, b]`.
pub fn lower_envelope(f: &PiecewiseAffineFn, a: i64, b: i64) -> Result<EnvelopeResult> {
    envelope(f, a, b, EnvelopeKind::Lower)
}

/// Least concave function above `f` on the index interval `[a, b]`,
/// computed as the negated lower envelope of `-f`.
pub fn upper_envelope(f: &PiecewiseAffineFn, a: i64, b: i64) -> Result<EnvelopeResult> {
    envelope(f, a, b, EnvelopeKind::Upper)
}

/// Slope of the envelope on the cell `[m - 1, m]`.
pub fn envelope_slope(env: &EnvelopeResult, m: i64) -> Result<f64> {
    env.run_of_cell(m)
        .map(|r| env.runs[r].slope)
        .ok_or(Error::OutOfDomain { index: m, lo: env.lo + 1, hi: env.hi })
}

fn envelope(f: &PiecewiseAffineFn, a: i64, b: i64, kind: EnvelopeKind) -> Result<EnvelopeResult> {
    f.check(a)?;
    f.check(b)?;
    match a.cmp(&b) {
        Ordering::Equal => return Err(Error::Degenerate(a)),
        Ordering::Greater => return Err(Error::OutOfDomain { index: b, lo: a, hi: f.hi() }),
        Ordering::Less => {}
    }
    let sign = match kind {
        EnvelopeKind::Lower => 1.0,
        EnvelopeKind::Upper => -1.0,
    };

    let mut hull: Vec<i64> = Vec::new();
    for m in a..=b {
        while hull.len() >= 2 {
            let p = f.point(hull[hull.len() - 2], sign);
            let q = f.point(hull[hull.len() - 1], sign);
            if orient_sign(p, q, f.point(m, sign)) == Ordering::Less {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(m);
    }

    let mut env = Vec::with_capacity((b - a + 1) as usize);
    let mut shock_intervals = Vec::new();
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (fi, fj) = (f.value(i), f.value(j));
        env.push(fi);
        let len = (j - i) as f64;
        for m in i + 1..j {
            env.push((fi * (j - m) as f64 + fj * (m - i) as f64) / len);
        }
        if j - i > 1 {
            shock_intervals.push((i, j));
        }
    }
    env.push(f.value(b));

    let mut runs = Vec::new();
    let mut start = hull[0];
    for w in hull.windows(3) {
        let turn = orient_sign(f.point(w[0], sign), f.point(w[1], sign), f.point(w[2], sign));
        if turn != Ordering::Equal {
            runs.push(Run { lo: start, hi: w[1], slope: f.chord_slope(start, w[1]) });
            start = w[1];
        }
    }
    runs.push(Run { lo: start, hi: b, slope: f.chord_slope(start, b) });

    Ok(EnvelopeResult { kind, lo: a, hi: b, env, contact_set: hull, shock_intervals, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burgers(lo: i64, hi: i64, step: f64) -> PiecewiseAffineFn {
        PiecewiseAffineFn::from_fn(0.0, step, lo, hi, |u| 0.5 * u * u).unwrap()
    }

    #[test]
    fn affine_function_is_its_own_envelope() {
        let f = PiecewiseAffineFn::from_fn(0.0, 0.25, 0, 4, |u| 3.0 * u - 1.0).unwrap();
        for env in [lower_envelope(&f, 0, 4).unwrap(), upper_envelope(&f, 0, 4).unwrap()] {
            assert_eq!(env.env, f.values());
            assert!(env.shock_intervals.is_empty());
            assert_eq!(env.contact_set, vec![0, 1, 2, 3, 4]);
            assert_eq!(env.runs.len(), 1);
            for m in 1..=4 {
                assert_eq!(envelope_slope(&env, m).unwrap(), 3.0);
            }
        }
    }

    #[test]
    fn concave_envelope_of_parabola_is_the_secant() {
        let f = burgers(-2, 2, 0.5);
        let env = upper_envelope(&f, -2, 2).unwrap();
        assert_eq!(env.contact_set, vec![-2, 2]);
        assert_eq!(env.shock_intervals, vec![(-2, 2)]);
        assert!(env.env.iter().all(|&v| v == 0.5));
        assert_eq!(envelope_slope(&env, 1).unwrap(), 0.0);
    }

    #[test]
    fn convex_function_keeps_every_sample() {
        let f = burgers(-3, 3, 1.0);
        let env = lower_envelope(&f, -3, 3).unwrap();
        assert_eq!(env.contact_set, (-3..=3).collect::<Vec<_>>());
        assert_eq!(env.runs.len(), 6);
        let slopes: Vec<f64> = env.runs.iter().map(|r| r.slope).collect();
        assert_eq!(slopes, vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
    }

    #[test]
    fn collinear_boundary_points_are_contacts() {
        let f = PiecewiseAffineFn::new(0.0, 1.0, 0, vec![0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        let up = upper_envelope(&f, 0, 4).unwrap();
        assert_eq!(up.contact_set, vec![0, 1, 2, 3, 4]);
        assert_eq!(up.runs.len(), 3);
        let low = lower_envelope(&f, 0, 4).unwrap();
        assert_eq!(low.contact_set, vec![0, 4]);
        assert_eq!(low.runs, vec![Run { lo: 0, hi: 4, slope: 0.0 }]);
    }

    #[test]
    fn degenerate_and_out_of_domain_are_rejected() {
        let f = burgers(0, 4, 1.0);
        assert_eq!(lower_envelope(&f, 2, 2), Err(Error::Degenerate(2)));
        assert!(matches!(lower_envelope(&f, 0, 5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(upper_envelope(&f, -1, 3), Err(Error::OutOfDomain { .. })));
        let env = lower_envelope(&f, 0, 4).unwrap();
        assert!(envelope_slope(&env, 0).is_err());
        assert!(envelope_slope(&env, 5).is_err());
    }

    #[test]
    fn grid_lookup_round_trips() {
        let f = burgers(-8, 8, 0.125);
        assert_eq!(f.index_of(-0.75).unwrap(), -6);
        assert!(f.index_of(0.3).is_err());
        assert_eq!(f.u(-6), -0.75);
        assert_eq!(f.second_derivative_bound(), 1.0);
    }

    #[test]
    fn same_line_detects_parallel_offset_chords() {
        let f = PiecewiseAffineFn::new(0.0, 1.0, 0, vec![0.0, 1.0, 2.0, 4.0, 5.0]).unwrap();
        assert!(f.same_line(0, 1, 1, 2));
        assert!(f.same_line(0, 2, 1, 2));
        assert!(!f.same_line(0, 1, 3, 4));
    }
}
