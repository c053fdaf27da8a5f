//! Upper and lower expected meeting times for interdependent stochastic
//! agents whose transition rows are only known to lie in credal sets.
//!
//! The pipeline:
//!
//! - [`credal`]: state spaces, credal rows given by vertices, and the upper and
//!   lower transition operators.
//! - [`precise`]: ordinary Markov chains, hitting and meeting times, simulation.
//! - [`reachability`]: support-graph closures and the split of the state space
//!   into target, finite, absorbing and unsafe states.
//! - [`solver`]: registered hitting-time solvers (policy iteration, value
//!   iteration).
//! - [`meeting`]: joint chains of several agents on the full or symmetric
//!   product space, and meeting times under degenerate, vacuous and mixture
//!   beliefs.
//! - [`io`]: model, result and selection files.

pub mod bundled;
pub mod credal;
pub mod error;
pub mod io;
mod linalg;
pub mod meeting;
pub mod precise;
pub mod reachability;
pub mod selfcheck;
pub mod sets;
pub mod solver;
pub mod value;

pub use credal::{CredalMatrix, CredalModel, ModelDraft, Selection, StateSpace};
pub use error::{Error, Result};
pub use meeting::{meet, Belief, MeetConfig, MeetingResult, ProductMode};
pub use sets::StateSet;
pub use solver::{HittingSolver, SolverOptions, SolverRegistry};
pub use value::{ExtendedValue, Sense};
