//! Upper and lower expected hitting times of an imprecise Markov chain.
//!
//! Each algorithm implements [`HittingSolver`] and is registered by name in a
//! [`SolverRegistry`]; callers pick one at runtime (the CLI's `--solver`).
//! Both built-in solvers pin `+inf` on the states that [`classify`](crate::reachability::classify) marks
//! infinite and work only on the finite region.

mod policy_iteration;
mod value_iteration;

use std::collections::BTreeMap;
use std::fmt;

pub use policy_iteration::{policy_iteration, PolicyIteration};
pub use value_iteration::{value_iteration, ValueIteration};

use crate::credal::{optimize_rows, CredalModel, Selection};
use crate::error::{Error, Result};
use crate::reachability::Classification;
use crate::sets::StateSet;
use crate::value::{ExtendedValue, Sense};

pub const DEFAULT_SOLVER: &str = "policy-iteration";

/// Tuning knobs; `None` falls back to the solver's own default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverOptions {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Keep the value vector of every iteration in [`HittingResult::history`].
    pub record_history: bool,
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HittingResult {
    pub values: Vec<ExtendedValue>,
    /// Optimizing vertex per state. On infinite states it is a greedy
    /// witness; on the target it is 0.
    pub selection: Selection,
    pub classification: Classification,
    pub iterations: usize,
    /// Largest violation of the fixed-point equation on finite states.
    pub residual: f64,
    pub solver: &'static str,
    pub history: Vec<Vec<ExtendedValue>>,
}

pub trait HittingSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn solve(
        &self,
        model: &dyn CredalModel,
        target: &StateSet,
        sense: Sense,
        options: &SolverOptions,
    ) -> Result<HittingResult>;
}

impl fmt::Debug for dyn HittingSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HittingSolver")
            .field("name", &self.name())
            .finish()
    }
}

/// Named hitting-time solvers.
#[derive(Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn HittingSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry::default()
    }

    /// Policy iteration and value iteration.
    pub fn builtin() -> Self {
        let mut registry = SolverRegistry::empty();
        registry.register(Box::new(PolicyIteration));
        registry.register(Box::new(ValueIteration));
        registry
    }

    /// Replaces any solver already registered under the same name.
    pub fn register(&mut self, solver: Box<dyn HittingSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn HittingSolver> {
        self.solvers
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn HittingSolver> {
        self.solvers.values().map(|s| s.as_ref())
    }
}

/// Value vector with `0` on the target and `+inf` on the infinite region;
/// finite states start at zero.
pub(crate) fn pinned_start(classification: &Classification) -> Vec<f64> {
    let infinite = classification.infinite();
    (0..classification.len())
        .map(|x| {
            if infinite.contains(x) {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

/// Greedy witnesses on infinite states, `chosen` on finite ones, 0 on the target.
pub(crate) fn assemble_selection<M: CredalModel + ?Sized>(
    model: &M,
    classification: &Classification,
    values: &[f64],
    chosen: impl Fn(usize) -> usize,
) -> Selection {
    let greedy = optimize_rows(model, values, classification.sense);
    Selection(
        (0..model.num_states())
            .map(|x| {
                if classification.target.contains(x) {
                    0
                } else if classification.finite.contains(x) {
                    chosen(x)
                } else {
                    greedy[x].0
                }
            })
            .collect(),
    )
}

/// `max |h - (1 + T h)|` over the finite states.
pub(crate) fn fixed_point_residual<M: CredalModel + ?Sized>(
    model: &M,
    classification: &Classification,
    values: &[f64],
) -> f64 {
    let applied = optimize_rows(model, values, classification.sense);
    classification
        .finite
        .iter()
        .map(|x| (values[x] - (1.0 + applied[x].1)).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn to_extended(values: &[f64]) -> Vec<ExtendedValue> {
    values
        .iter()
        .map(|&v| ExtendedValue::new(v).expect("hitting times are nonnegative"))
        .collect()
}
