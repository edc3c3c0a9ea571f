//! Batches of independent runs.
//!
//! Runs are independent and each one is single threaded. With the `parallel`
//! feature the batch is spread over the rayon thread pool, otherwise it runs
//! sequentially; both paths return the results in input order.

use crate::corpus::{GlimmCase, WftCase};
use crate::error::Result;
use crate::verifier::{run_glimm, run_wft, Report, VerifyOptions};

/// Applies `f` to every item in order on the current thread.
pub fn map_sequential<T, R>(items: Vec<T>, f: impl Fn(T) -> R) -> Vec<R> {
    items.into_iter().map(f).collect()
}

/// Applies `f` to every item on the rayon thread pool, keeping the order.
#[cfg(feature = "parallel")]
pub fn map_parallel<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Applies `f` to every item, in parallel when the `parallel` feature is on.
pub fn map<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        map_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

/// Verifies every wavefront tracking case.
pub fn verify_wft(cases: &[WftCase], opts: &VerifyOptions) -> Vec<Result<Report>> {
    map(cases.iter().collect(), |c| run_wft(&c.datum, c.flux.clone(), opts))
}

/// Verifies every Glimm case.
pub fn verify_glimm(cases: &[GlimmCase], opts: &VerifyOptions) -> Vec<Result<Report>> {
    map(cases.iter().collect(), |c| run_glimm(&c.datum, c.flux.clone(), &c.config, opts))
}

/// Verifies every wavefront tracking case on the current thread.
pub fn verify_wft_sequential(cases: &[WftCase], opts: &VerifyOptions) -> Vec<Result<Report>> {
    map_sequential(cases.iter().collect(), |c| run_wft(&c.datum, c.flux.clone(), opts))
}

/// Verifies every Glimm case on the current thread.
pub fn verify_glimm_sequential(cases: &[GlimmCase], opts: &VerifyOptions) -> Vec<Result<Report>> {
    map_sequential(cases.iter().collect(), |c| run_glimm(&c.datum, c.flux.clone(), &c.config, opts))
}
