use rayon::prelude::*;

use super::{
    assemble_selection, fixed_point_residual, pinned_start, to_extended, HittingResult,
    HittingSolver, SolverOptions,
};
use crate::credal::{row_optimum, CredalModel};
use crate::error::{Error, Result};
use crate::reachability::classify;
use crate::sets::StateSet;
use crate::value::Sense;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Monotone iteration `h <- 1 + T h` from `h = 0`.
///
/// Slow but simple; serves as the reference the policy-iteration solver is
/// checked against.
pub struct ValueIteration;

impl HittingSolver for ValueIteration {
    fn name(&self) -> &'static str {
        "value-iteration"
    }

    fn description(&self) -> &'static str {
        "fixed-point iteration from below on the finite region"
    }

    fn solve(
        &self,
        model: &dyn CredalModel,
        target: &StateSet,
        sense: Sense,
        options: &SolverOptions,
    ) -> Result<HittingResult> {
        value_iteration(model, target, sense, options)
    }
}

pub fn value_iteration<M: CredalModel + ?Sized>(
    model: &M,
    target: &StateSet,
    sense: Sense,
    options: &SolverOptions,
) -> Result<HittingResult> {
    let tol = options.tol.unwrap_or(DEFAULT_TOL);
    let max_iter = options.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let classification = classify(model, target, sense)?;
    let finite = classification.finite.to_vec();
    let mut h = pinned_start(&classification);
    let mut history = Vec::new();
    let mut change = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let updated: Vec<f64> = finite
            .par_iter()
            .map_init(Vec::new, |buf, &x| {
                1.0 + row_optimum(model, x, &h, sense, buf).1
            })
            .collect();
        change = finite
            .iter()
            .zip(&updated)
            .map(|(&x, &v)| (v - h[x]).abs())
            .fold(0.0, f64::max);
        for (&x, &v) in finite.iter().zip(&updated) {
            h[x] = v;
        }
        if options.record_history {
            history.push(to_extended(&h));
        }
        if change <= tol {
            break;
        }
    }
    if change > tol {
        return Err(Error::NonConvergence {
            solver: "value-iteration",
            iterations,
            change,
        });
    }

    let selection = assemble_selection(model, &classification, &h, |x| {
        row_optimum(model, x, &h, sense, &mut Vec::new()).0
    });
    let residual = fixed_point_residual(model, &classification, &h);
    Ok(HittingResult {
        values: to_extended(&h),
        selection,
        classification,
        iterations,
        residual,
        solver: "value-iteration",
        history,
    })
}
