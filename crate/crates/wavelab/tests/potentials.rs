//! Functionals over waves, checked against definitions evaluated pair by pair.

mod support;

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{brute_qfrak, unit_cell_integral, MetMatrix, OracleWave};
use wavelab::corpus::{glimm_case, random_flux, small_glimm_case, small_wft_case, wft_case, wft_corpus};
use wavelab::datum::StepDatum;
use wavelab::envelope::PiecewiseAffineFn;
use wavelab::glimm::{GlimmState, SamplingSequence};
use wavelab::potentials::{
    interaction_height, inverse_distance_integral, log_split_integral, mean_speed, pair_mass, q_bb, q_frak, q_gl,
    q_weight, WaveSnapshot,
};
use wavelab::verifier::flux_bound;
use wavelab::wft::{EventKind, WaveId, WftSolver};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Relative agreement, with a floor for values that vanish up to the
/// rounding of the f64 brute envelope.
fn q_close(fast: f64, brute: f64, scale: f64) -> bool {
    (fast - brute).abs() <= 1e-10 * fast.abs().max(brute.abs()) + 1e-13 * scale
}

fn wft_oracle_waves(s: &WftSolver) -> Vec<OracleWave> {
    let w = s.waves();
    (1..=w.len() as WaveId).filter(|&id| w.is_alive(id)).map(|id| OracleWave { id, sign: w.sign(id), cell: w.cell(id) }).collect()
}

fn glimm_oracle_waves(g: &GlimmState) -> Vec<OracleWave> {
    (1..=g.wave_count() as WaveId)
        .filter(|&s| g.is_alive(s))
        .map(|s| OracleWave { id: s, sign: g.sign(s), cell: wavelab::riemann::wave_cell(g.uhat(s), g.sign(s)) })
        .collect()
}

fn initial_met_wft(s: &WftSolver) -> MetMatrix {
    let n = s.waves().len();
    let mut met = MetMatrix::new(n);
    for f in s.fronts() {
        let x0 = s.waves().initial_position(f.first_id());
        let ids: Vec<WaveId> = (1..=n as WaveId).filter(|&id| s.waves().initial_position(id) == x0).collect();
        met.meet(&ids);
    }
    met
}

#[test]
fn wft_potential_matches_the_pairwise_definition() {
    let mut snapshots = 0;
    for seed in 0..120u64 {
        let case = if seed % 3 == 0 { wft_case(seed) } else { small_wft_case(seed) };
        let Ok(mut s) = WftSolver::init(&case.datum, case.flux.clone()) else { continue };
        if s.waves().len() > 60 {
            continue;
        }
        let k = flux_bound(&case.flux, &case.datum);
        let step = case.flux.step();
        let mut met = initial_met_wft(&s);
        loop {
            let fast = q_frak(&WaveSnapshot::from_wft(&s, k), None);
            let brute = brute_qfrak(&case.flux, step, k, &wft_oracle_waves(&s), &met, false);
            let scale = k * (s.waves().len() as f64 * step).powi(2);
            assert!(q_close(fast, brute, scale), "seed {seed}: {fast} vs {brute}");
            snapshots += 1;
            let Some(ev) = s.step().unwrap() else { break };
            let ids: Vec<WaveId> = ev.incoming_ids.iter().flatten().flat_map(|&(a, b)| a..=b).collect();
            met.meet(&ids);
        }
    }
    assert!(snapshots > 300);
}

#[test]
fn glimm_potential_matches_the_pairwise_integral() {
    let mut snapshots = 0;
    for seed in 0..40u64 {
        let case = if seed % 4 == 0 { glimm_case(seed) } else { small_glimm_case(seed) };
        let mut g = GlimmState::init(&case.datum, case.flux.clone(), case.config.eps_x).unwrap();
        if g.wave_count() > 60 {
            continue;
        }
        let mut seq = SamplingSequence::new(case.config.sampling.clone()).unwrap();
        let k = flux_bound(&case.flux, &case.datum);
        let step = case.flux.step();
        let mut met = MetMatrix::new(g.wave_count());
        for node in g.nodes() {
            met.meet(&node.ids);
        }
        for _ in 0..case.config.steps.min(60) {
            let fast = q_frak(&g.snapshot(k), None);
            let brute = brute_qfrak(&case.flux, step, k, &glimm_oracle_waves(&g), &met, true);
            let scale = k * (g.wave_count() as f64 * step).powi(2);
            assert!(q_close(fast, brute, scale), "seed {seed}: {fast} vs {brute}");
            snapshots += 1;
            for node in g.step(seq.next_theta()).unwrap() {
                let ids: Vec<WaveId> = node.left_in.iter().chain(&node.right_in).copied().collect();
                met.meet(&ids);
            }
        }
    }
    assert!(snapshots > 500);
}

#[test]
fn cell_integral_quadrature_matches_the_primitive() {
    for d in 1..40 {
        let closed = inverse_distance_integral(0.0, 1.0, d as f64, d as f64 + 1.0);
        assert!(rel_close(closed, unit_cell_integral(d), 1e-12), "d = {d}");
    }
}

#[test]
fn pair_weights_stay_between_zero_and_the_flux_bound() {
    for case in wft_corpus(30, 40) {
        let mut s = WftSolver::init(&case.datum, case.flux.clone()).unwrap();
        let k = flux_bound(&case.flux, &case.datum);
        for _ in 0..30 {
            let snap = WaveSnapshot::from_wft(&s, k);
            let live: Vec<WaveId> = (1..=snap.n_waves() as WaveId).filter(|&id| snap.is_alive(id)).collect();
            for (i, &a) in live.iter().enumerate().step_by(3) {
                for &b in live[i + 1..].iter().step_by(2) {
                    let q = q_weight(&snap, a, b).unwrap();
                    assert!(q >= 0.0 && q <= k * (1.0 + 1e-12), "q = {q}, k = {k}");
                    if snap.joined(a, b) {
                        assert_eq!(q, 0.0);
                    }
                }
            }
            if s.step().unwrap().is_none() {
                break;
            }
        }
    }
}

#[test]
fn glimm_mean_weights_are_bounded_by_the_adjacent_cell_factor() {
    for seed in 0..20 {
        let case = glimm_case(seed);
        let mut g = GlimmState::init(&case.datum, case.flux.clone(), case.config.eps_x).unwrap();
        let mut seq = SamplingSequence::new(case.config.sampling.clone()).unwrap();
        let k = flux_bound(&case.flux, &case.datum);
        for _ in 0..case.config.steps {
            g.step(seq.next_theta()).unwrap();
        }
        let snap = g.snapshot(k);
        let live: Vec<WaveId> = (1..=snap.n_waves() as WaveId).filter(|&id| snap.is_alive(id)).collect();
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                let q = q_weight(&snap, a, b).unwrap();
                assert!(q >= 0.0 && q <= 4.0 * LN_2 * k * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn initial_potential_of_single_cell_jumps_counts_pairs() {
    let flux = Arc::new(PiecewiseAffineFn::from_fn(0.0, 0.25, 0, 8, |u| u * u).unwrap());
    let d = StepDatum::new(0, vec![(0.0, 1), (1.0, 2), (2.0, 3), (3.0, 2), (4.0, 1)]).unwrap();
    let s = WftSolver::init(&d, flux.clone()).unwrap();
    let k = flux_bound(&flux, &d);
    assert_eq!(k, 2.0);
    let q0 = q_frak(&WaveSnapshot::from_wft(&s, k), None);
    let n = 5.0;
    assert!(rel_close(q0, k * n * (n - 1.0) / 2.0 * 0.0625, 1e-15));
    assert!(q0 <= k * (n * 0.25) * (n * 0.25));
}

#[test]
fn one_shock_carrying_every_wave_has_zero_potential() {
    let flux = Arc::new(PiecewiseAffineFn::from_fn(0.0, 0.25, -8, 8, |u| 0.5 * u * u).unwrap());
    let d = StepDatum::new(6, vec![(0.0, -6)]).unwrap();
    let s = WftSolver::init(&d, flux.clone()).unwrap();
    assert_eq!(s.fronts().len(), 1);
    let snap = WaveSnapshot::from_wft(&s, flux_bound(&flux, &d));
    assert_eq!(q_frak(&snap, None), 0.0);
    assert_eq!(pair_mass(&snap, 1, 12).unwrap(), 0.0);
    assert!(pair_mass(&snap, 3, 3).is_err());
}

#[test]
fn distant_spectators_do_not_change_potential_differences() {
    let mut compared = 0;
    for case in wft_corpus(40, 2000) {
        let (lo, hi) = case.datum.range();
        let last = case.datum.right();
        let target = if last - lo >= hi - last { lo } else { hi };
        if target == last {
            continue;
        }
        let mut steps = case.datum.steps().to_vec();
        steps.push((1e9, target));
        let with = StepDatum::new(case.datum.left(), steps).unwrap();
        let k = flux_bound(&case.flux, &case.datum);
        let mut a = WftSolver::init(&case.datum, case.flux.clone()).unwrap();
        let mut b = WftSolver::init(&with, case.flux.clone()).unwrap();
        let n = a.waves().len() as WaveId;
        let mask: Vec<bool> = (1..=b.waves().len() as WaveId).map(|id| id <= n).collect();
        let q = |s: &WftSolver, m: Option<&[bool]>| q_frak(&WaveSnapshot::from_wft(s, k), m);
        let scale = k * (n as f64 * case.flux.step()).powi(2);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * scale;
        let (mut pa, mut pb, mut pm) = (q(&a, None), q(&b, None), q(&b, Some(&mask)));
        while let Some(ea) = a.step().unwrap() {
            let eb = b.step().unwrap().unwrap();
            assert_eq!((ea.t, ea.x), (eb.t, eb.x));
            assert!(eb.incoming_ids.iter().flatten().all(|&(_, hi)| hi <= n));
            let (na, nb, nm) = (q(&a, None), q(&b, None), q(&b, Some(&mask)));
            assert!(close(pa - na, pm - nm), "seed {}", case.seed);
            if ea.kind == EventKind::Interaction {
                assert!(close(pa - na, pb - nb), "seed {}", case.seed);
                compared += 1;
            }
            (pa, pb, pm) = (na, nb, nm);
        }
    }
    assert!(compared > 50, "{compared}");
}

#[test]
fn mean_speed_is_additive_at_every_merge() {
    let exact = |v: f64| BigRational::from_f64(v).unwrap();
    let mut merges = 0;
    for case in wft_corpus(200, 0) {
        let f = &case.flux;
        let mut s = WftSolver::init(&case.datum, f.clone()).unwrap();
        let chord = |a: i64, b: i64| {
            let (lo, hi) = (a.min(b), a.max(b));
            (exact(f.value(hi)) - exact(f.value(lo))) / (exact(f.step()) * BigRational::from_i64(hi - lo).unwrap())
        };
        while let Some(ev) = s.step().unwrap() {
            if ev.kind != EventKind::Interaction {
                continue;
            }
            merges += 1;
            let (ul, ur) = (ev.incoming[0].left, ev.incoming.last().unwrap().right);
            let whole = chord(ul, ur) * BigRational::from_i64(ur - ul).unwrap();
            let parts = ev
                .incoming
                .iter()
                .map(|p| chord(p.left, p.right) * BigRational::from_i64(p.right - p.left).unwrap())
                .fold(BigRational::from_i64(0).unwrap(), |acc, x| acc + x);
            assert_eq!(whole, parts);
            let (lo, hi) = (ul.min(ur), ul.max(ur));
            let rounded = chord(lo, hi).to_f64().unwrap();
            assert!((mean_speed(f, lo, hi) - rounded).abs() <= 4.0 * f64::EPSILON * rounded.abs());
            assert_eq!(ev.outgoing[0].speed, mean_speed(f, lo, hi));
        }
    }
    assert!(merges > 500, "{merges}");
}

#[test]
fn log_split_peaks_at_the_midpoint_with_value_log_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let a: f64 = rng.gen_range(-10.0..10.0);
        let b = a + rng.gen_range(1e-3..20.0);
        let g = |xi: f64| log_split_integral(a, xi, b);
        let (mut lo, mut hi) = (a, b);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (x1, x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
            if g(x1) < g(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        let best = 0.5 * (lo + hi);
        assert!((g(best) - LN_2 * (b - a)).abs() <= 1e-10 * (b - a));
        assert!((best - 0.5 * (a + b)).abs() <= 1e-6 * (b - a));
        assert!((g(0.5 * (a + b)) - LN_2 * (b - a)).abs() <= 1e-10 * (b - a));
    }
}

#[test]
fn interaction_height_forms_agree_on_random_fluxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut nonzero = 0;
    for _ in 0..500 {
        let f = random_flux(&mut rng, 24, 1, -128..=128);
        let mut v: Vec<i64> = rand::seq::index::sample(&mut rng, 25, 3).into_iter().map(|k| k as i64).collect();
        v.sort_unstable();
        if rng.gen_bool(0.5) {
            v.reverse();
        }
        let (env, tri) = interaction_height(&f, v[0], v[1], v[2]).unwrap();
        let convex_side = {
            let (lo, hi) = (v[0].min(v[2]), v[0].max(v[2]));
            let (a, b) = (f.chord_slope(lo, v[1]), f.chord_slope(v[1], hi));
            if v[0] < v[2] { a >= b } else { a <= b }
        };
        if convex_side {
            assert!(rel_close(env, tri, 1e-12) || (env.abs() < 1e-15 && tri.abs() < 1e-15));
            nonzero += (env > 0.0) as usize;
        }
        assert!(env >= 0.0);
    }
    assert!(nonzero > 50);
    let affine = PiecewiseAffineFn::from_fn(0.0, 1.0, 0, 6, |u| 2.0 * u).unwrap();
    assert_eq!(interaction_height(&affine, 6, 3, 0).unwrap(), (0.0, 0.0));
    assert!(interaction_height(&affine, 0, 4, 3).is_err());
}

proptest! {
    #[test]
    fn quadratic_and_cubic_functionals_match_double_loops(fronts in prop::collection::vec((0.0f64..2.0, -3.0f64..3.0), 0..30)) {
        let mut gl = 0.0;
        let mut bb = 0.0;
        for i in 0..fronts.len() {
            for j in i + 1..fronts.len() {
                gl += fronts[i].0 * fronts[j].0;
                bb += (fronts[i].1 - fronts[j].1).abs() * fronts[i].0 * fronts[j].0;
            }
        }
        prop_assert!((q_gl(&fronts) - gl).abs() <= 1e-12 * gl.max(1.0));
        prop_assert!((q_bb(&fronts) - bb).abs() <= 1e-12 * bb.max(1.0));
    }

    #[test]
    fn cubic_functional_is_bounded_by_the_cube_of_the_variation(seed in any::<u64>()) {
        let case = wft_case(seed);
        let mut s = WftSolver::init(&case.datum, case.flux.clone()).unwrap();
        let k = flux_bound(&case.flux, &case.datum);
        let step = case.flux.step();
        loop {
            let fronts: Vec<(f64, f64)> = s.fronts().iter().map(|f| (f.cells() as f64 * step, f.speed)).collect();
            let tv = s.total_variation();
            prop_assert!(q_bb(&fronts) <= k * tv.powi(3) * (1.0 + 1e-12));
            prop_assert!(q_gl(&fronts) <= tv * tv);
            if s.step().unwrap().is_none() {
                break;
            }
        }
    }
}
