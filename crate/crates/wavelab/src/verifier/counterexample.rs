//! A tree whose speed variation is linear in the total variation while its
//! cubic interaction amount and its cancellation are arbitrarily small.
//!
//! For `0 < ε ≪ L ≪ 1` the flux is concave on `u <= -L`, equal to `α u² / 2`
//! on `(-L, ε]`, concave on `(ε, 3ε]` and affine with slope `-αε` beyond. The
//! datum takes the values `u⁻ = -L (2 + √2)`, `uᵐ = -2L`, `u⁺ = 4ε` and `3ε`,
//! with jumps at `x = 0`, `x = 1` and `x = 1 + ε/δ`, `δ = ε (√17 - 4)`. All
//! waves coming from the first two jumps merge into one front, which then
//! meets the contact `[4ε, 3ε]` and splits.
//!
//! The value grid has step `ε_u = ε / q`. The states `-2L, -L, ε, 3ε, 4ε` are
//! grid points while `u⁻` is rounded to the nearest one; every speed is
//! reported next to its exact value and to the value of the rounded states.
//! The flux table stores `f / (α ε_u²)`, whose samples are exact half
//! integers; reported speeds, times and functionals are converted back.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::Serialize;

use crate::datum::StepDatum;
use crate::envelope::PiecewiseAffineFn;
use crate::error::{Error, Result};
use crate::potentials::q_bb;
use crate::verifier::tree::{is_splitting, tree_at};
use crate::verifier::{run_wft, Report, VerifyOptions};
use crate::wft::{EventKind, WftSolver};

/// Parameters of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleParams {
    /// Flux amplitude `α`.
    pub alpha: f64,
    /// Scale `L`.
    pub l: f64,
    /// Scale `ε`.
    pub eps: f64,
    /// Grid refinement: `ε_u = ε / q`.
    pub q: u32,
    /// Also run the verifier with `𝔔` on the full event sequence.
    pub verify: bool,
}

impl CounterexampleParams {
    /// Parameters with the given scales, `q = 64` and no verification.
    pub fn new(alpha: f64, l: f64, eps: f64) -> Self {
        Self { alpha, l, eps, q: 64, verify: false }
    }
}

/// The flux of the construction.
pub fn splitting_flux(alpha: f64, l: f64, eps: f64, u: f64) -> f64 {
    if u <= -l {
        -0.5 * alpha * (u + 2.0 * l).powi(2) + alpha * l * l
    } else if u <= eps {
        0.5 * alpha * u * u
    } else if u <= 3.0 * eps {
        -0.5 * alpha * (u - 2.0 * eps).powi(2) + alpha * eps * eps
    } else {
        -alpha * eps * (u - 3.0 * eps) + 0.5 * alpha * eps * eps
    }
}

/// A quantity in three versions: closed form, closed form on the rounded
/// states, and as produced by the solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Name.
    pub name: String,
    /// Closed form with the exact states.
    pub exact: f64,
    /// Direct evaluation on the grid states.
    pub snapped: f64,
    /// Solver output.
    pub measured: f64,
    /// `|measured - snapped| / |snapped|`.
    pub rel_err_snapped: f64,
    /// `|measured - exact| / |exact|`.
    pub rel_err_exact: f64,
}

impl Comparison {
    fn new(name: &str, exact: f64, snapped: f64, measured: f64) -> Self {
        Self {
            name: name.to_string(),
            exact,
            snapped,
            measured,
            rel_err_snapped: (measured - snapped).abs() / snapped.abs(),
            rel_err_exact: (measured - exact).abs() / exact.abs(),
        }
    }
}

/// Summary of the tree rooted at the splitting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    /// Events in the tree, the splitting included.
    pub events: usize,
    /// Interactions in the tree.
    pub interactions: usize,
    /// Cancellations in the tree.
    pub cancellations: usize,
    /// Surviving waves.
    pub waves: usize,
}

/// Quantities of the construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    /// Parameters.
    pub params: CounterexampleParams,
    /// Value grid step `ε_u`.
    pub grid_step: f64,
    /// `δ = ε (√17 - 4)`.
    pub delta: f64,
    /// Exact `u⁻`.
    pub u_minus_exact: f64,
    /// Grid value used for `u⁻`.
    pub u_minus_snapped: f64,
    /// Number of waves.
    pub waves: usize,
    /// Events up to the splitting.
    pub events: usize,
    /// Speeds of `w̄₁`, `w̄₂` and of the last shock of the second jump.
    pub shock_speeds: Vec<Comparison>,
    /// Speed of the merged front before the splitting.
    pub merged_speed: Comparison,
    /// Triangle area bound on `Q^BB`: closed form.
    pub triangle_area_formula: f64,
    /// Triangle area from the exact vertices.
    pub triangle_area_exact: f64,
    /// Triangle area from the grid vertices.
    pub triangle_area_snapped: f64,
    /// `Q^BB` at time zero.
    pub qbb_initial: f64,
    /// `Q^BB` right after the splitting.
    pub qbb_after: f64,
    /// `max(0, Q^BB(0) - Q^BB(t̄+))`.
    pub qbb_decrease: f64,
    /// Drop of total variation at the splitting.
    pub cancellation: f64,
    /// Size of the contact, which is the amount of cancellation on each side.
    pub cancellation_one_side: f64,
    /// Splitting time.
    pub splitting_time: f64,
    /// Splitting position.
    pub splitting_x: f64,
    /// Fronts leaving the splitting.
    pub splitting_fronts: usize,
    /// Tree of the splitting.
    pub tree: TreeSummary,
    /// `max |σ(t̄+) - σ(0)|` over the waves of `w̄₁`.
    pub speed_change_w1: f64,
    /// `α L / √2`.
    pub speed_change_formula: f64,
    /// `speed_change_w1 / (qbb_decrease + cancellation)`.
    pub ratio: f64,
    /// Verified run over the full event sequence, in table units.
    pub verification: Option<Report>,
}

struct Setup {
    n_l: i64,
    m_minus: i64,
    step: f64,
    scale: f64,
    delta: f64,
    flux: Arc<PiecewiseAffineFn>,
    datum: StepDatum,
}

fn setup(p: &CounterexampleParams) -> Result<Setup> {
    let CounterexampleParams { alpha, l, eps, q, .. } = *p;
    let finite = [alpha, l, eps].iter().all(|v| v.is_finite());
    if !finite || alpha <= 0.0 || eps <= 0.0 || 10.0 * eps > l || l >= 1.0 || q < 4 {
        return Err(Error::InvalidParameters(format!(
            "need alpha > 0, 0 < 10 eps <= L < 1 and q >= 4, got alpha={alpha}, L={l}, eps={eps}, q={q}"
        )));
    }
    let step = eps / q as f64;
    let ratio = l / step;
    let n_l = ratio.round() as i64;
    if (ratio - n_l as f64).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::InvalidParameters(format!("L / (eps / q) = {ratio} must be an integer")));
    }
    let q = q as i64;
    let u_minus = -l * (2.0 + SQRT_2);
    let m_minus = (u_minus / step).round() as i64;
    let h = |m: i64| -> f64 {
        let v2 = if m <= -n_l {
            -(m + 2 * n_l).pow(2) + 2 * n_l * n_l
        } else if m <= q {
            m * m
        } else if m <= 3 * q {
            -(m - 2 * q).pow(2) + 2 * q * q
        } else {
            -2 * q * (m - 3 * q) + q * q
        };
        v2 as f64 / 2.0
    };
    let (lo, hi) = (m_minus - 1, 4 * q + 1);
    let values: Vec<f64> = (lo..=hi).map(h).collect();
    let flux = Arc::new(PiecewiseAffineFn::new(0.0, step, lo, values)?);
    let delta = eps * (17f64.sqrt() - 4.0);
    let datum = StepDatum::new(m_minus, vec![(0.0, -2 * n_l), (1.0, 4 * q), (1.0 + eps / delta, 3 * q)])?;
    Ok(Setup { n_l, m_minus, step, scale: alpha * step * step, delta, flux, datum })
}

fn shoelace(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
}

/// Runs the construction up to the splitting and reports its quantities.
pub fn counterexample(p: &CounterexampleParams) -> Result<CounterexampleReport> {
    let s = setup(p)?;
    let CounterexampleParams { alpha, l, eps, q, .. } = *p;
    let q = q as i64;
    let f = |m: i64| splitting_flux(alpha, l, eps, m as f64 * s.step);
    let chord = |a: i64, b: i64| (f(b) - f(a)) / ((b - a) as f64 * s.step);

    let mut solver = WftSolver::init(&s.datum, Arc::clone(&s.flux))?;
    let to_speed = |v: f64| v * alpha * s.step * s.step;
    let fronts_of = |sv: &WftSolver| -> Vec<(f64, f64)> {
        sv.fronts().iter().map(|fr| (fr.cells() as f64 * s.step, to_speed(fr.speed))).collect()
    };
    let initial = solver.fronts().to_vec();
    let n1 = initial[0].cells() as usize;
    let last_shock = initial.iter().rev().find(|fr| fr.right == 4 * q).expect("second jump ends at 4 eps");
    let w1_speed = to_speed(initial[0].speed);
    let qbb_initial = q_bb(&fronts_of(&solver));

    let mut events = Vec::new();
    let root = loop {
        let ev = solver.step()?.ok_or_else(|| Error::InvalidParameters("the fronts never split".into()))?;
        let split = ev.kind == EventKind::Cancellation;
        events.push(ev);
        if split {
            break events.len() - 1;
        }
    };
    let split = &events[root];
    if !is_splitting(split) {
        return Err(Error::InvalidParameters("the first cancellation is not a splitting".into()));
    }
    let merged = split.incoming[0];
    let fronts_after = fronts_of(&solver);
    let qbb_after = q_bb(&fronts_after);
    let owner = solver.wave_fronts();
    let speed_change_w1 = (1..=n1)
        .filter_map(|id| owner[id - 1])
        .map(|k| (to_speed(solver.fronts()[k].speed) - w1_speed).abs())
        .fold(0.0, f64::max);
    let tree = tree_at(&events, root, solver.waves().len());

    let shock_speeds = vec![
        Comparison::new("w1", alpha * l / SQRT_2, chord(s.m_minus, -2 * s.n_l), w1_speed),
        Comparison::new(
            "w2",
            -alpha * l * (2.0 - SQRT_2),
            (-2 * s.n_l + 1..=4 * q).map(|m| chord(-2 * s.n_l, m)).fold(f64::INFINITY, f64::min),
            to_speed(initial[1].speed),
        ),
        Comparison::new(
            "last_shock",
            -alpha * s.delta,
            (-2 * s.n_l..4 * q).map(|m| chord(m, 4 * q)).fold(f64::NEG_INFINITY, f64::max),
            to_speed(last_shock.speed),
        ),
    ];
    let merged_speed = Comparison::new(
        "merged",
        -0.5 * alpha * eps * eps / (4.0 * eps + l * (2.0 + SQRT_2)),
        chord(s.m_minus, 4 * q),
        to_speed(merged.speed),
    );
    let u_minus = -l * (2.0 + SQRT_2);
    let fx = |u: f64| (u, splitting_flux(alpha, l, eps, u));
    let triangle_area_formula = 0.5 * alpha * ((2.0 + SQRT_2) * l.powi(3) + 4.0 * eps * l * l + eps * eps * l / SQRT_2);
    let triangle_area_exact = shoelace(fx(u_minus), fx(-2.0 * l), fx(4.0 * eps));
    let triangle_area_snapped = shoelace(
        (s.m_minus as f64 * s.step, f(s.m_minus)),
        (-2.0 * s.n_l as f64 * s.step, f(-2 * s.n_l)),
        (4.0 * q as f64 * s.step, f(4 * q)),
    );
    let qbb_decrease = (qbb_initial - qbb_after).max(0.0);
    let cancellation = split.cancellation;
    let verification = if p.verify {
        Some(run_wft(&s.datum, Arc::clone(&s.flux), &VerifyOptions::default())?)
    } else {
        None
    };
    Ok(CounterexampleReport {
        params: *p,
        grid_step: s.step,
        delta: s.delta,
        u_minus_exact: u_minus,
        u_minus_snapped: s.m_minus as f64 * s.step,
        waves: solver.waves().len(),
        events: events.len(),
        shock_speeds,
        merged_speed,
        triangle_area_formula,
        triangle_area_exact,
        triangle_area_snapped,
        qbb_initial,
        qbb_after,
        qbb_decrease,
        cancellation,
        cancellation_one_side: eps,
        splitting_time: split.t / s.scale,
        splitting_x: split.x,
        splitting_fronts: split.outgoing.len(),
        tree: TreeSummary {
            events: tree.events.len(),
            interactions: tree.interactions,
            cancellations: tree.cancellations,
            waves: tree.waves.len(),
        },
        speed_change_w1,
        speed_change_formula: alpha * l / SQRT_2,
        ratio: speed_change_w1 / (qbb_decrease + cancellation),
        verification,
    })
}

/// Runs the construction for every `L` with `ε = L³`.
pub fn sweep(alpha: f64, ls: &[f64], q: u32) -> Result<Vec<CounterexampleReport>> {
    crate::batch::map(ls.to_vec(), |l| counterexample(&CounterexampleParams { alpha, l, eps: l * l * l, q, verify: false }))
        .into_iter()
        .collect()
}
