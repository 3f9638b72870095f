//! Desk-scale verification toolkit for second-derivative regularizations
//! of Perona-Malik energies and their sharp-interface limits.
//!
//! The crate is organized around the objects it verifies:
//!
//! - [`functionals`]: growth penalties, jump costs, sampled grids,
//!   piecewise-constant polygonal partitions, the Hessian norm;
//! - [`profile`]: the 1D optimal transition profile, the constant
//!   sigma_a and the power scaling law of the transition cost;
//! - [`energy`]: evaluation and clamped minimization of the perturbed
//!   energies in 1D/2D and signed-distance recovery fields;
//! - [`limit`]: jump energies of piecewise-constant functions, slicing
//!   operators and the line-integral identity;
//! - [`density`]: shifted-lattice discrete energies, hypercube
//!   interpolation, the vector jump measure and the polytope
//!   approximation pipeline;
//! - [`flow`]: the semi-implicit gradient flow with staircasing
//!   diagnostics;
//! - [`config`]: the batch experiment front end behind the `gamma-pm`
//!   binary.
//!
//! Reported scalars are reproducible: all reductions run in index order,
//! Monte-Carlo draws are seeded, and parallel work is mapped into
//! pre-indexed buffers.

pub mod banded;
pub mod config;
pub mod density;
pub mod energy;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod lbfgs;
pub mod limit;
pub mod profile;

pub use error::{Error, Result};
pub use functionals::{
    GridFunction, GrowthFunction, HessianNormMode, JumpCost, PiecewisePoly1, PiecewisePoly2,
    SymmetricMatrix2,
};

use std::sync::OnceLock;

/// Thread cap from GAMMA_PM_THREADS (defaults to the rayon default).
pub fn thread_cap() -> Option<usize> {
    static CAP: OnceLock<Option<usize>> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("GAMMA_PM_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(cap) = thread_cap() {
            builder = builder.num_threads(cap);
        }
        builder.build().expect("thread pool")
    })
}

/// Evaluate `f` for every index in parallel and return the results in
/// index order. Scheduling cannot change the output: each slot is written
/// exactly once and reductions over the result stay sequential.
pub fn run_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    let results: Vec<Result<T>> = pool().install(|| (0..n).into_par_iter().map(|k| f(k)).collect());
    results.into_iter().collect()
}
