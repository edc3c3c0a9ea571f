//! Independent oracles shared by the integration tests.
//!
//! Envelopes are recomputed by brute force over all chords with exact integer
//! arithmetic. Pair potentials are recomputed from a pairwise "have met"
//! matrix built by replaying the events, without using the interval histories
//! kept by the solvers.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;

use wavelab::envelope::{lower_envelope, upper_envelope, EnvelopeResult, PiecewiseAffineFn};

/// Exact fraction `n / d` with `d > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Frac {
    pub n: i128,
    pub d: i128,
}

impl Frac {
    pub fn new(n: i128, d: i128) -> Self {
        assert!(d != 0);
        if d < 0 {
            Self { n: -n, d: -d }
        } else {
            Self { n, d }
        }
    }

    pub fn int(n: i128) -> Self {
        Self { n, d: 1 }
    }

    pub fn to_big(self) -> BigRational {
        BigRational::new(BigInt::from(self.n), BigInt::from(self.d))
    }

    /// Correctly rounded value.
    pub fn to_f64(self) -> f64 {
        self.to_big().to_f64().expect("finite fraction")
    }

    pub fn sub(self, o: Frac) -> Frac {
        Frac::new(self.n * o.d - o.n * self.d, self.d * o.d)
    }

    pub fn abs(self) -> Frac {
        Frac { n: self.n.abs(), d: self.d }
    }

    pub fn scale(self, k: i128) -> Frac {
        Frac::new(self.n * k, self.d)
    }
}

impl PartialEq for Frac {
    fn eq(&self, o: &Self) -> bool {
        self.n * o.d == o.n * self.d
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Frac {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.n * o.d).cmp(&(o.n * self.d))
    }
}

/// Flux with integer samples on indices `lo..=lo + values.len() - 1`.
#[derive(Debug, Clone)]
pub struct IntFlux {
    pub lo: i64,
    pub values: Vec<i64>,
    pub step: f64,
}

impl IntFlux {
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn at(&self, m: i64) -> i64 {
        self.values[(m - self.lo) as usize]
    }

    pub fn to_fn(&self) -> PiecewiseAffineFn {
        PiecewiseAffineFn::new(0.0, self.step, self.lo, self.values.iter().map(|&v| v as f64).collect())
            .expect("valid samples")
    }

    pub fn negated(&self) -> IntFlux {
        IntFlux { lo: self.lo, values: self.values.iter().map(|v| -v).collect(), step: self.step }
    }

    /// Largest jump of the cell slope, in sample units per cell.
    pub fn second_difference_on(&self, a: i64, b: i64) -> i64 {
        (a + 1..b).map(|m| (self.at(m + 1) - 2 * self.at(m) + self.at(m - 1)).abs()).max().unwrap_or(0)
    }
}

/// Random integer flux with `cells` cells, at most `max_kinks` slope changes
/// and integer slopes in `[-max_slope, max_slope]`.
pub fn random_int_flux(rng: &mut impl Rng, cells: usize, max_kinks: usize, max_slope: i64) -> IntFlux {
    let lo = rng.gen_range(-20..=20);
    let kinks = rng.gen_range(0..=max_kinks.min(cells - 1));
    let mut at: Vec<usize> = rand::seq::index::sample(rng, cells - 1, kinks).into_iter().map(|k| k + 1).collect();
    at.sort_unstable();
    let mut values = vec![rng.gen_range(-50..=50)];
    let mut slope = rng.gen_range(-max_slope..=max_slope);
    let mut next = 0;
    for c in 0..cells {
        if next < at.len() && at[next] == c {
            next += 1;
            let mut s = rng.gen_range(-max_slope..=max_slope);
            while s == slope {
                s = rng.gen_range(-max_slope..=max_slope);
            }
            slope = s;
        }
        let last = *values.last().unwrap();
        values.push(last + slope);
    }
    IntFlux { lo, values, step: 0.125 }
}

/// Brute force lower envelope on `[a, b]`: the smallest chord value over all
/// chords `i <= m <= j` at every grid point `m`.
pub fn brute_lower(f: &IntFlux, a: i64, b: i64) -> Vec<Frac> {
    (a..=b)
        .map(|m| {
            let mut best = Frac::int(f.at(m) as i128);
            for i in a..=m {
                for j in m..=b {
                    if i == j {
                        continue;
                    }
                    let (fi, fj) = (f.at(i) as i128, f.at(j) as i128);
                    let v = Frac::new(fi * (j - m) as i128 + fj * (m - i) as i128, (j - i) as i128);
                    if v < best {
                        best = v;
                    }
                }
            }
            best
        })
        .collect()
}

/// Brute force upper envelope on `[a, b]`.
pub fn brute_upper(f: &IntFlux, a: i64, b: i64) -> Vec<Frac> {
    brute_lower(&f.negated(), a, b).into_iter().map(|v| Frac { n: -v.n, d: v.d }).collect()
}

/// Exact slope of a brute force envelope on cell `m` of `[a, b]`, in sample
/// units per cell.
pub fn brute_cell_slope(env: &[Frac], a: i64, m: i64) -> Frac {
    env[(m - a) as usize].sub(env[(m - a - 1) as usize])
}

/// Exact slope of a computed envelope on cell `m`, in sample units per cell.
pub fn exact_run_slope(f: &IntFlux, env: &EnvelopeResult, m: i64) -> Frac {
    let r = env.runs[env.run_of_cell(m).expect("cell of the interval")];
    Frac::new((f.at(r.hi) - f.at(r.lo)) as i128, (r.hi - r.lo) as i128)
}

/// Number of disagreements between a computed envelope and the brute force
/// one: values, contact set, shock intervals and runs.
pub fn envelope_mismatches(f: &IntFlux, env: &EnvelopeResult, brute: &[Frac]) -> usize {
    let (a, b) = (env.lo, env.hi);
    let mut bad = 0;
    for m in a..=b {
        let exact = brute[(m - a) as usize];
        bad += (env.value(m) != exact.to_f64()) as usize;
        let contact = exact == Frac::int(f.at(m) as i128);
        bad += (env.is_contact(m) != contact) as usize;
    }
    let contacts: Vec<i64> = (a..=b).filter(|&m| brute[(m - a) as usize] == Frac::int(f.at(m) as i128)).collect();
    let shocks: Vec<(i64, i64)> = contacts.windows(2).filter(|w| w[1] - w[0] > 1).map(|w| (w[0], w[1])).collect();
    bad += (shocks != env.shock_intervals) as usize;
    let mut runs: Vec<(i64, i64, Frac)> = Vec::new();
    for m in a + 1..=b {
        let s = brute_cell_slope(brute, a, m);
        match runs.last_mut() {
            Some(r) if r.2 == s => r.1 = m,
            _ => runs.push((m - 1, m, s)),
        }
    }
    bad += (runs.len() != env.runs.len()) as usize;
    for (r, got) in runs.iter().zip(&env.runs) {
        let slope = r.2.scale(1).to_f64() / f.step;
        bad += (r.0 != got.lo || r.1 != got.hi || slope != got.slope) as usize;
    }
    bad
}

/// Counts of the structural envelope properties.
#[derive(Debug, Default, Clone, Copy)]
pub struct StructuralCount {
    pub checks: usize,
    pub violations: usize,
}

impl StructuralCount {
    fn record(&mut self, ok: bool) {
        self.checks += 1;
        self.violations += (!ok) as usize;
    }
}

fn structural_lower(f: &IntFlux, rng: &mut impl Rng, out: &mut StructuralCount) {
    let g = f.to_fn();
    let (lo, hi) = (f.lo, f.hi());
    if hi - lo < 2 {
        return;
    }
    let a = rng.gen_range(lo..hi - 1);
    let b = rng.gen_range(a + 2..=hi);
    let full = lower_envelope(&g, a, b).unwrap();
    let k = f.second_difference_on(a, b) as i128;

    for m in a + 1..=b {
        for m2 in m + 1..=b {
            let gap = exact_run_slope(f, &full, m2).sub(exact_run_slope(f, &full, m));
            out.record(gap >= Frac::int(0) && gap <= Frac::int(k * (m2 - m + 1) as i128));
        }
    }

    let ubar = rng.gen_range(a + 1..b);
    let left = lower_envelope(&g, a, ubar).unwrap();
    let right = lower_envelope(&g, ubar, b).unwrap();
    for m in a + 1..=ubar {
        out.record(exact_run_slope(f, &left, m) >= exact_run_slope(f, &full, m));
        for m2 in m + 1..=ubar {
            let sub = exact_run_slope(f, &left, m2).sub(exact_run_slope(f, &left, m));
            let whole = exact_run_slope(f, &full, m2).sub(exact_run_slope(f, &full, m));
            out.record(sub >= whole);
        }
    }
    for m in ubar + 1..=b {
        out.record(exact_run_slope(f, &right, m) <= exact_run_slope(f, &full, m));
        for m2 in m + 1..=b {
            let sub = exact_run_slope(f, &right, m2).sub(exact_run_slope(f, &right, m));
            let whole = exact_run_slope(f, &full, m2).sub(exact_run_slope(f, &full, m));
            out.record(sub >= whole);
        }
    }

    let gap = exact_run_slope(f, &left, ubar).sub(exact_run_slope(f, &full, ubar));
    out.record(gap <= Frac::int(k * (b - ubar) as i128));

    let in_shock = |env: &EnvelopeResult, m: i64| env.shock_intervals.iter().position(|&(i, j)| i < m && m <= j);
    for m in a + 1..=ubar {
        for m2 in m + 1..=ubar {
            if let (Some(p), Some(p2)) = (in_shock(&left, m), in_shock(&left, m2)) {
                if p == p2 {
                    let (q, q2) = (in_shock(&full, m), in_shock(&full, m2));
                    out.record(q.is_some() && q == q2);
                }
            }
        }
    }

    if full.is_contact(ubar) {
        for m in a..=ubar {
            out.record(full.value(m) == left.value(m));
        }
        for m in ubar..=b {
            out.record(full.value(m) == right.value(m));
        }
    }

    for &c in &full.contact_set {
        let (a2, b2) = (rng.gen_range(a..=c), rng.gen_range(c..=b));
        if a2 < b2 {
            out.record(lower_envelope(&g, a2, b2).unwrap().is_contact(c));
        }
    }

    if hi - lo >= 4 {
        for _ in 0..40 {
            let mut u: Vec<i64> = rand::seq::index::sample(rng, (hi - lo + 1) as usize, 5)
                .into_iter()
                .map(|k| lo + k as i64)
                .collect();
            u.sort_unstable();
            let e14 = lower_envelope(&g, u[0], u[3]).unwrap();
            let e25 = lower_envelope(&g, u[1], u[4]).unwrap();
            if e14.is_contact(u[1]) && e25.is_contact(u[2]) {
                out.record(lower_envelope(&g, u[0], u[4]).unwrap().is_contact(u[1]));
            }
        }
    }
}

/// Structural envelope properties on random subintervals of `f`, for the
/// lower envelope of `f` and, through `-f`, for its upper envelope.
pub fn structural_properties(f: &IntFlux, rng: &mut impl Rng) -> StructuralCount {
    let mut out = StructuralCount::default();
    structural_lower(f, rng, &mut out);
    structural_lower(&f.negated(), rng, &mut out);
    let (g, ng) = (f.to_fn(), f.negated().to_fn());
    let up = upper_envelope(&g, f.lo, f.hi()).unwrap();
    let down = lower_envelope(&ng, f.lo, f.hi()).unwrap();
    out.record(up.env.iter().zip(&down.env).all(|(x, y)| *x == -*y) && up.contact_set == down.contact_set);
    out
}

/// Pairwise record of which waves have ever been at the same point.
#[derive(Debug, Clone)]
pub struct MetMatrix {
    n: usize,
    met: Vec<bool>,
}

impl MetMatrix {
    pub fn new(n: usize) -> Self {
        let mut met = vec![false; n * n];
        for i in 0..n {
            met[i * n + i] = true;
        }
        Self { n, met }
    }

    /// Marks every pair of `ids` as met.
    pub fn meet(&mut self, ids: &[u32]) {
        for &a in ids {
            for &b in ids {
                self.met[(a as usize - 1) * self.n + b as usize - 1] = true;
            }
        }
    }

    pub fn met(&self, a: u32, b: u32) -> bool {
        self.met[(a as usize - 1) * self.n + b as usize - 1]
    }

    /// Smallest and largest wave met by `s`.
    pub fn range(&self, s: u32) -> (u32, u32) {
        let row = (1..=self.n as u32).filter(|&p| self.met(s, p));
        let v: Vec<u32> = row.collect();
        (v[0], *v.last().unwrap())
    }
}

/// Wave data needed by the potential oracle.
pub struct OracleWave {
    pub id: u32,
    pub sign: i8,
    /// Right end of the cell of the wave.
    pub cell: i64,
}

/// Double integral of `1 / (d + y - x)` over the unit square, by Gauss
/// Legendre quadrature of the inner primitive on a mesh graded towards the
/// singular corner when `d = 1`.
pub fn unit_cell_integral(d: i64) -> f64 {
    const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let d = d as f64;
    // inner primitive in t = 1 - x, singular at t = 0 when d = 1
    let g = |t: f64| (d + t).ln() - (d - 1.0 + t).ln();
    let mut s = 0.0;
    // dyadic cells [2^-(k+1), 2^-k]; the sliver below 2^-61 contributes below 1e-16
    // each split into eight equal parts
    for k in 0..61 {
        let (a, b) = (0.5f64.powi(k + 1), 0.5f64.powi(k));
        for j in 0..8 {
            let (lo, hi) = (a + (b - a) * j as f64 / 8.0, a + (b - a) * (j + 1) as f64 / 8.0);
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for i in 0..5 {
                s += W[i] * h * g(c + h * X[i]);
            }
        }
    }
    s
}

/// `𝔔` recomputed from its definition for the live waves `waves`, given the
/// integer flux samples `f(m) = values[m - lo]` scaled by `scale`, the grid
/// step, the bound `k` and the met matrix. With `glimm` the pair weights are
/// integrated over the two cells.
pub fn brute_qfrak(
    f: &PiecewiseAffineFn,
    step: f64,
    k: f64,
    waves: &[OracleWave],
    met: &MetMatrix,
    glimm: bool,
) -> f64 {
    let mut envs: HashMap<(i64, i64, i8), Vec<f64>> = HashMap::new();
    let mut slope = |lo: i64, hi: i64, sign: i8, cell: i64| -> f64 {
        let env = envs.entry((lo, hi, sign)).or_insert_with(|| {
            let vals: Vec<f64> = (lo..=hi).map(|m| f.value(m) * sign as f64).collect();
            (lo..=hi)
                .map(|m| {
                    let mut best = vals[(m - lo) as usize];
                    for i in lo..=m {
                        for j in m..=hi {
                            if i == j {
                                continue;
                            }
                            let (fi, fj) = (vals[(i - lo) as usize], vals[(j - lo) as usize]);
                            let v = fi + (fj - fi) * (m - i) as f64 / (j - i) as f64;
                            if v < best {
                                best = v;
                            }
                        }
                    }
                    best * sign as f64
                })
                .collect()
        });
        (env[(cell - lo) as usize] - env[(cell - lo - 1) as usize]) / step
    };
    let mut total = 0.0;
    for (i, s) in waves.iter().enumerate() {
        for s2 in &waves[i + 1..] {
            if s.sign != s2.sign || !met.met(s.id, s2.id) {
                total += k * step * step;
                continue;
            }
            let cells: Vec<i64> = waves
                .iter()
                .filter(|p| met.met(p.id, s.id) && met.met(p.id, s2.id))
                .map(|p| p.cell)
                .collect();
            let lo = cells.iter().min().unwrap() - 1;
            let hi = *cells.iter().max().unwrap();
            let ds = (slope(lo, hi, s.sign, s.cell) - slope(lo, hi, s.sign, s2.cell)).abs();
            let d = (s2.cell - s.cell).abs();
            if d == 0 {
                continue;
            }
            total += if glimm { ds * step * unit_cell_integral(d) } else { ds * step / (d + 1) as f64 };
        }
    }
    total
}
