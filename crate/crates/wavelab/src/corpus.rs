//! Seeded random scenarios.
//!
//! Fluxes are piecewise affine on the value grid `ε_u = 1/8` with slopes that
//! are multiples of `1/64`, so every sample is a dyadic rational and exact
//! collinearity is preserved by the samples.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::glimm::SamplingKind;
use crate::riemann::solve;
use crate::verifier::GlimmConfig;

/// Value grid step of the generated scenarios.
pub const GRID_STEP: f64 = 0.125;

/// Wavefront tracking scenario.
#[derive(Debug, Clone)]
pub struct WftCase {
    /// Seed that produced the case.
    pub seed: u64,
    /// Flux.
    pub flux: Arc<PiecewiseAffineFn>,
    /// Initial datum.
    pub datum: StepDatum,
}

/// Glimm scenario.
#[derive(Debug, Clone)]
pub struct GlimmCase {
    /// Seed that produced the case.
    pub seed: u64,
    /// Flux.
    pub flux: Arc<PiecewiseAffineFn>,
    /// Initial datum.
    pub datum: StepDatum,
    /// Grid step, step count and sampling.
    pub config: GlimmConfig,
}

/// Random flux on indices `0..=cells` with at most `max_kinks` slope changes
/// and slopes `k / 64` for `k` in `slopes`.
pub fn random_flux(rng: &mut impl Rng, cells: i64, max_kinks: usize, slopes: std::ops::RangeInclusive<i32>) -> PiecewiseAffineFn {
    let kinks = rng.gen_range(0..=max_kinks.min(cells as usize - 1));
    let mut at: Vec<i64> = sample(rng, cells as usize - 1, kinks).into_iter().map(|k| k as i64 + 1).collect();
    at.sort_unstable();
    let mut values = vec![0.0];
    let mut slope = rng.gen_range(slopes.clone());
    let mut next = at.iter().peekable();
    for m in 1..=cells {
        if next.peek() == Some(&&(m - 1)) {
            next.next();
            let mut s = rng.gen_range(slopes.clone());
            while s == slope {
                s = rng.gen_range(slopes.clone());
            }
            slope = s;
        }
        let last = *values.last().expect("nonempty");
        values.push(last + slope as f64 / 64.0 * GRID_STEP);
    }
    PiecewiseAffineFn::new(0.0, GRID_STEP, 0, values).expect("valid flux table")
}

fn random_values(rng: &mut impl Rng, n: usize, max: i64) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::with_capacity(n + 1);
    out.push(rng.gen_range(0..=max));
    while out.len() <= n {
        let v = rng.gen_range(0..=max);
        if v != *out.last().expect("nonempty") {
            out.push(v);
        }
    }
    out
}

/// Wavefront tracking case: at most 40 initial fronts and 12 flux kinks,
/// jumps at random real positions in `[0, 10]`.
pub fn wft_case(seed: u64) -> WftCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(8..=24);
    let flux = random_flux(&mut rng, cells, 12, -128..=128);
    let jumps = rng.gen_range(2..=20);
    let values = random_values(&mut rng, jumps, cells);
    let mut xs: Vec<f64> = (0..jumps).map(|_| rng.gen_range(0.0..10.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut steps = Vec::new();
    let mut fronts = 0;
    for (k, &x) in xs.iter().enumerate() {
        let n = solve(&flux, values[k], values[k + 1]).expect("values inside the flux domain").len();
        if fronts + n > 40 {
            break;
        }
        fronts += n;
        steps.push((x, values[k + 1]));
    }
    let datum = StepDatum::new(values[0], steps).expect("increasing positions");
    WftCase { seed, flux: Arc::new(flux), datum }
}

/// Glimm case: slopes in `(0.05, 0.95)`, at most 12 kinks, up to 8 jumps at
/// nodes in `[0, 40]`, between 50 and 200 van der Corput steps.
pub fn glimm_case(seed: u64) -> GlimmCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(8..=24);
    let flux = random_flux(&mut rng, cells, 12, 4..=60);
    let jumps = rng.gen_range(2..=8);
    let values = random_values(&mut rng, jumps, cells);
    let mut nodes: Vec<i64> = sample(&mut rng, 41, jumps).into_iter().map(|k| k as i64).collect();
    nodes.sort_unstable();
    let steps: Vec<(f64, i64)> = nodes.iter().zip(&values[1..]).map(|(&m, &v)| (m as f64, v)).collect();
    let datum = StepDatum::new(values[0], steps).expect("increasing positions");
    let config = GlimmConfig { eps_x: 1.0, steps: rng.gen_range(50..=200), sampling: SamplingKind::VanDerCorput };
    GlimmCase { seed, flux: Arc::new(flux), datum, config }
}

fn small_datum(rng: &mut impl Rng, cells: i64, max_waves: i64, positions: impl Fn(&mut dyn rand::RngCore, usize) -> Vec<f64>) -> StepDatum {
    let left = rng.gen_range(0..=cells);
    let mut prev = left;
    let mut budget = max_waves;
    let mut vals = Vec::new();
    for _ in 0..rng.gen_range(2..=5) {
        let lo = (prev - budget).max(0);
        let hi = (prev + budget).min(cells);
        let v = rng.gen_range(lo..=hi);
        if v == prev {
            continue;
        }
        budget -= (v - prev).abs();
        vals.push(v);
        prev = v;
        if budget == 0 {
            break;
        }
    }
    let xs = positions(rng, vals.len());
    StepDatum::new(left, xs.into_iter().zip(vals).collect()).expect("increasing positions")
}

/// Small wavefront tracking case with at most 10 waves.
pub fn small_wft_case(seed: u64) -> WftCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(4..=10);
    let flux = random_flux(&mut rng, cells, 6, -128..=128);
    let datum = small_datum(&mut rng, cells, 10, |r, n| {
        let mut xs: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..4.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.resize(n, 0.0);
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            (0..n).map(|k| k as f64).collect()
        } else {
            xs
        }
    });
    WftCase { seed, flux: Arc::new(flux), datum }
}

/// Small Glimm case with at most 10 waves.
pub fn small_glimm_case(seed: u64) -> GlimmCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(4..=10);
    let flux = random_flux(&mut rng, cells, 6, 4..=60);
    let datum = small_datum(&mut rng, cells, 10, |r, n| {
        let mut nodes: Vec<usize> = sample(r, 12, n).into_iter().collect();
        nodes.sort_unstable();
        nodes.into_iter().map(|m| m as f64).collect()
    });
    let config = GlimmConfig { eps_x: 1.0, steps: 60, sampling: SamplingKind::VanDerCorput };
    GlimmCase { seed, flux: Arc::new(flux), datum, config }
}

/// `n` wavefront tracking cases with seeds `base..base + n`.
pub fn wft_corpus(n: usize, base: u64) -> Vec<WftCase> {
    (0..n as u64).map(|k| wft_case(base + k)).collect()
}

/// `n` Glimm cases with seeds `base..base + n`.
pub fn glimm_corpus(n: usize, base: u64) -> Vec<GlimmCase> {
    (0..n as u64).map(|k| glimm_case(base + k)).collect()
}
