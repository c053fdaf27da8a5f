//! Meeting times of several agents as hitting times of the diagonal in a
//! joint chain on the product space.

mod joint;
mod product;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use joint::{joint_transition_weight, JointModel, JointSelection};
pub use product::{
    binomial, build_product_space, product_size, ProductMode, ProductSpace, MAX_PRODUCT_STATES,
};

use crate::credal::{CredalMatrix, SelectedModel};
use crate::error::{Error, Result};
use crate::precise::{precise_hitting, MeetingMatrix};
use crate::reachability::{classify, Classification};
use crate::solver::{fixed_point_residual, SolverOptions, SolverRegistry, DEFAULT_SOLVER};
use crate::value::{ExtendedValue, Sense};

/// What is known about the agents' selections.
#[derive(Clone, Debug, PartialEq)]
pub enum Belief {
    /// The selections are known exactly.
    Degenerate(JointSelection),
    /// Nothing is known; bound over all selections.
    Vacuous(Sense),
    /// With probability `1 - epsilon` the given selection, otherwise vacuous.
    Mixture {
        epsilon: f64,
        selection: JointSelection,
        sense: Sense,
    },
}

impl Belief {
    pub fn kind(&self) -> BeliefKind {
        match self {
            Belief::Degenerate(_) => BeliefKind::Degenerate,
            Belief::Vacuous(Sense::Upper) => BeliefKind::VacuousUpper,
            Belief::Vacuous(Sense::Lower) => BeliefKind::VacuousLower,
            Belief::Mixture { .. } => BeliefKind::Mixture,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefKind {
    Degenerate,
    VacuousUpper,
    VacuousLower,
    Mixture,
}

impl fmt::Display for BeliefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BeliefKind::Degenerate => "degenerate",
            BeliefKind::VacuousUpper => "vacuous-upper",
            BeliefKind::VacuousLower => "vacuous-lower",
            BeliefKind::Mixture => "mixture",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeetConfig {
    pub mode: ProductMode,
    /// Registry name of the hitting solver used for vacuous components.
    pub solver: String,
    pub options: SolverOptions,
}

impl Default for MeetConfig {
    fn default() -> Self {
        MeetConfig {
            mode: ProductMode::Quotient,
            solver: DEFAULT_SOLVER.to_string(),
            options: SolverOptions::default(),
        }
    }
}

impl MeetConfig {
    pub fn with_mode(mut self, mode: ProductMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug)]
pub struct MeetingResult {
    pub space: ProductSpace,
    /// One value per joint state, zero on the diagonal.
    pub values: Vec<ExtendedValue>,
    /// The selection used (degenerate) or an optimizing one (vacuous and
    /// mixture).
    pub selection: JointSelection,
    /// For mixtures, the classification of the vacuous component.
    pub classification: Classification,
    pub belief: BeliefKind,
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub solver: &'static str,
}

impl MeetingResult {
    /// Value at an agent tuple; any ordering is accepted in quotient mode.
    pub fn value_at(&self, tuple: &[usize]) -> Result<ExtendedValue> {
        Ok(self.values[self.space.index_of(tuple)?])
    }

    /// The `N x N` matrix of meeting times for two agents.
    pub fn matrix(&self) -> Option<MeetingMatrix> {
        if self.space.agents() != 2 {
            return None;
        }
        let n = self.space.base().len();
        let mut values = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                values.push(self.value_at(&[x, y]).ok()?);
            }
        }
        Some(MeetingMatrix::from_row_major(n, values))
    }
}

struct Component {
    values: Vec<ExtendedValue>,
    selection: JointSelection,
    classification: Classification,
    iterations: usize,
    residual: f64,
    solver: &'static str,
}

fn degenerate(joint: &JointModel<'_>, selection: &JointSelection) -> Result<Component> {
    let raw = selection.to_selection(joint)?;
    let chain = SelectedModel::new(joint, &raw)?;
    let diagonal = joint.space().diagonal();
    let values = precise_hitting(&chain, diagonal)?;
    let classification = classify(&chain, diagonal, Sense::Upper)?;
    let plain: Vec<f64> = values.iter().map(|v| v.get()).collect();
    Ok(Component {
        residual: fixed_point_residual(&chain, &classification, &plain),
        values,
        selection: JointSelection::from_selection(joint, &raw),
        classification,
        iterations: 1,
        solver: "precise",
    })
}

fn vacuous(joint: &JointModel<'_>, sense: Sense, config: &MeetConfig) -> Result<Component> {
    let registry = SolverRegistry::builtin();
    let solver = registry.get(&config.solver)?;
    let r = solver.solve(joint, joint.space().diagonal(), sense, &config.options)?;
    Ok(Component {
        values: r.values,
        selection: JointSelection::from_selection(joint, &r.selection),
        classification: r.classification,
        iterations: r.iterations,
        residual: r.residual,
        solver: r.solver,
    })
}

/// Expected meeting times of `agents` walkers that all use `model`.
pub fn meet(
    model: &CredalMatrix,
    agents: usize,
    belief: &Belief,
    config: &MeetConfig,
) -> Result<MeetingResult> {
    if let Belief::Mixture { epsilon, .. } = belief {
        if !(0.0..=1.0).contains(epsilon) {
            return Err(Error::InvalidArgument(format!(
                "mixture weight must lie in [0, 1], got {epsilon}"
            )));
        }
    }
    let space = build_product_space(model.space(), agents, config.mode)?;
    let joint = JointModel::new(model, &space)?;
    let (component, epsilon) = match belief {
        Belief::Degenerate(selection) => (degenerate(&joint, selection)?, None),
        Belief::Vacuous(sense) => (vacuous(&joint, *sense, config)?, None),
        Belief::Mixture {
            epsilon,
            selection,
            sense,
        } => {
            let fixed = degenerate(&joint, selection)?;
            let mut free = vacuous(&joint, *sense, config)?;
            free.values = mix(&fixed.values, &free.values, *epsilon);
            (free, Some(*epsilon))
        }
    };
    Ok(MeetingResult {
        space,
        values: component.values,
        selection: component.selection,
        classification: component.classification,
        belief: belief.kind(),
        epsilon,
        iterations: component.iterations,
        residual: component.residual,
        solver: component.solver,
    })
}

/// `(1 - epsilon) * fixed + epsilon * free`; a zero weight silences `+inf`.
pub fn mix(fixed: &[ExtendedValue], free: &[ExtendedValue], epsilon: f64) -> Vec<ExtendedValue> {
    fixed
        .iter()
        .zip(free)
        .map(|(&a, &b)| a.scale(1.0 - epsilon) + b.scale(epsilon))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub full_states: usize,
    pub quotient_states: usize,
    /// Largest `|full - quotient|` over tuples finite in both.
    pub max_discrepancy: f64,
    /// Labels of tuples that are infinite in one mode only.
    pub infinity_mismatches: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.max_discrepancy <= tol && self.infinity_mismatches.is_empty()
    }
}

/// Solves in both modes and compares the full values at every ordered tuple
/// with the quotient value at its multiset.
///
/// Selections in `belief` are read as quotient selections and symmetrized
/// for the full run.
pub fn quotient_consistency_check(
    model: &CredalMatrix,
    agents: usize,
    belief: &Belief,
    config: &MeetConfig,
) -> Result<ConsistencyReport> {
    let full_belief = match belief {
        Belief::Degenerate(s) => Belief::Degenerate(s.symmetrized()),
        Belief::Vacuous(sense) => Belief::Vacuous(*sense),
        Belief::Mixture {
            epsilon,
            selection,
            sense,
        } => Belief::Mixture {
            epsilon: *epsilon,
            selection: selection.symmetrized(),
            sense: *sense,
        },
    };
    let full = meet(
        model,
        agents,
        &full_belief,
        &config.clone().with_mode(ProductMode::Full),
    )?;
    let quotient = meet(
        model,
        agents,
        belief,
        &config.clone().with_mode(ProductMode::Quotient),
    )?;
    let mut max_discrepancy: f64 = 0.0;
    let mut infinity_mismatches = Vec::new();
    for i in 0..full.space.len() {
        let a = full.values[i];
        let b = quotient.value_at(full.space.tuple(i))?;
        match (a.is_finite(), b.is_finite()) {
            (true, true) => max_discrepancy = max_discrepancy.max((a.get() - b.get()).abs()),
            (false, false) => {}
            _ => infinity_mismatches.push(full.space.label(i)),
        }
    }
    Ok(ConsistencyReport {
        full_states: full.space.len(),
        quotient_states: quotient.space.len(),
        max_discrepancy,
        infinity_mismatches,
    })
}
