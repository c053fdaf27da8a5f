//! Upper and lower reachability, and the classification of non-target
//! states into those with finite and infinite expected hitting times.
//!
//! Edges exist where some stored vertex entry is strictly positive; no
//! tolerance is applied. Reachability is a property of the support graph.

use crate::credal::CredalModel;
use crate::error::{Error, Result};
use crate::sets::StateSet;
use crate::value::Sense;

/// Partition of the state space relative to a target set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub target: StateSet,
    pub absorbing: StateSet,
    pub unsafe_states: StateSet,
    pub finite: StateSet,
    pub sense: Sense,
}

impl Classification {
    /// Condition (R1): no non-target state is absorbing.
    pub fn reachability_holds(&self) -> bool {
        self.absorbing.is_empty()
    }

    /// States with infinite hitting time in this sense.
    pub fn infinite(&self) -> StateSet {
        self.absorbing.union(&self.unsafe_states)
    }

    pub fn len(&self) -> usize {
        self.target.universe()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// States adjacent to `x` in the upper graph, reversed.
pub(crate) struct Predecessors {
    preds: Vec<Vec<usize>>,
}

impl Predecessors {
    pub(crate) fn of<M: CredalModel + ?Sized>(model: &M) -> Self {
        let n = model.num_states();
        let mut preds = vec![Vec::new(); n];
        let mut support = Vec::new();
        for x in 0..n {
            model.upper_support(x, &mut support);
            for &y in &support {
                preds[y].push(x);
            }
        }
        Predecessors { preds }
    }

    fn get(&self, y: usize) -> &[usize] {
        &self.preds[y]
    }
}

fn check_targets(targets: &StateSet, n: usize) -> Result<()> {
    if targets.universe() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: targets.universe(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyTarget);
    }
    Ok(())
}

/// Backward search over the upper graph; states in `blocked` are never
/// entered, so paths through them do not count.
fn upper_closure(
    preds: &Predecessors,
    targets: &StateSet,
    blocked: Option<&StateSet>,
    strict: bool,
) -> StateSet {
    let n = targets.universe();
    let mut reached = StateSet::empty(n);
    let mut stack = Vec::new();
    let is_blocked = |x: usize| blocked.is_some_and(|b| b.contains(x));
    if strict {
        for t in targets.iter() {
            stack.extend(preds.get(t).iter().copied().filter(|&x| !is_blocked(x)));
        }
        for &x in &stack {
            reached.insert(x);
        }
    } else {
        for t in targets.iter() {
            reached.insert(t);
            stack.push(t);
        }
    }
    while let Some(y) = stack.pop() {
        for &x in preds.get(y) {
            if !is_blocked(x) && reached.insert(x) {
                stack.push(x);
            }
        }
    }
    reached
}

/// Least fixed point of `S -> S ∪ {x : every vertex of x puts mass on S}`.
///
/// Only rows upstream of a newly added state are re-examined.
fn lower_closure<M: CredalModel + ?Sized>(
    model: &M,
    preds: &Predecessors,
    targets: &StateSet,
    blocked: Option<&StateSet>,
) -> StateSet {
    let mut reached = targets.clone();
    let mut frontier: Vec<usize> = targets.iter().collect();
    let mut buf = Vec::new();
    while let Some(y) = frontier.pop() {
        for &x in preds.get(y) {
            if reached.contains(x) || blocked.is_some_and(|b| b.contains(x)) {
                continue;
            }
            let forced = (0..model.num_vertices(x)).all(|v| {
                model.vertex_masses(x, v, &mut buf);
                buf.iter().any(|&(d, _)| reached.contains(d))
            });
            if forced {
                reached.insert(x);
                frontier.push(x);
            }
        }
    }
    reached
}

/// States with a directed path in the upper graph to `targets`. The targets
/// themselves are included.
pub fn upper_reach_set<M: CredalModel + ?Sized>(model: &M, targets: &StateSet) -> Result<StateSet> {
    upper_reach_set_with(model, targets, false)
}

/// As [`upper_reach_set`]; with `strict` set, only paths of length at least
/// one count, so a target is included only if it can return to the targets.
pub fn upper_reach_set_with<M: CredalModel + ?Sized>(
    model: &M,
    targets: &StateSet,
    strict: bool,
) -> Result<StateSet> {
    check_targets(targets, model.num_states())?;
    Ok(upper_closure(
        &Predecessors::of(model),
        targets,
        None,
        strict,
    ))
}

/// States from which every selection reaches `targets` with positive probability.
pub fn lower_reach_set<M: CredalModel + ?Sized>(model: &M, targets: &StateSet) -> Result<StateSet> {
    check_targets(targets, model.num_states())?;
    Ok(lower_closure(
        model,
        &Predecessors::of(model),
        targets,
        None,
    ))
}

/// Vertices of `x` that give zero mass to `avoid`.
pub(crate) fn admissible_vertices<M: CredalModel + ?Sized>(
    model: &M,
    x: usize,
    avoid: &StateSet,
    buf: &mut Vec<(usize, f64)>,
) -> Vec<usize> {
    (0..model.num_vertices(x))
        .filter(|&v| {
            model.vertex_masses(x, v, buf);
            buf.iter().all(|&(d, _)| !avoid.contains(d))
        })
        .collect()
}

/// Splits the non-target states into absorbing, unsafe and finite for the
/// given bound.
///
/// Upper: absorbing states cannot lower-reach the target; unsafe states can
/// upper-reach an absorbing state without passing through the target.
///
/// Lower: absorbing states cannot upper-reach the target at all; unsafe
/// states are those every selection drives into the infinite region with
/// positive probability, plus those that can only reach the target by
/// taking such a risk. The second group is found by iterating until the
/// admissible (infinity-avoiding) vertices connect every remaining state to
/// the target.
pub fn classify<M: CredalModel + ?Sized>(
    model: &M,
    target: &StateSet,
    sense: Sense,
) -> Result<Classification> {
    let n = model.num_states();
    check_targets(target, n)?;
    let preds = Predecessors::of(model);
    let outside = target.complement();

    let (absorbing, unsafe_states) = match sense {
        Sense::Upper => {
            let lower = lower_closure(model, &preds, target, None);
            let absorbing = outside.difference(&lower);
            let unsafe_states = if absorbing.is_empty() {
                StateSet::empty(n)
            } else {
                upper_closure(&preds, &absorbing, Some(target), false).difference(&absorbing)
            };
            (absorbing, unsafe_states)
        }
        Sense::Lower => {
            let upper = upper_closure(&preds, target, None, false);
            let absorbing = outside.difference(&upper);
            let mut unsafe_states = StateSet::empty(n);
            loop {
                let infinite = absorbing.union(&unsafe_states);
                if !infinite.is_empty() {
                    let forced = lower_closure(model, &preds, &infinite, Some(target));
                    unsafe_states = unsafe_states.union(&forced.difference(&infinite));
                }
                let infinite = absorbing.union(&unsafe_states);
                let stranded = stranded_states(model, target, &infinite);
                if stranded.is_empty() {
                    break;
                }
                unsafe_states = unsafe_states.union(&stranded);
            }
            (absorbing, unsafe_states)
        }
    };

    let finite = outside.difference(&absorbing).difference(&unsafe_states);
    Ok(Classification {
        target: target.clone(),
        absorbing,
        unsafe_states,
        finite,
        sense,
    })
}

/// Candidate-finite states that cannot upper-reach the target using only
/// vertices avoiding `infinite`.
fn stranded_states<M: CredalModel + ?Sized>(
    model: &M,
    target: &StateSet,
    infinite: &StateSet,
) -> StateSet {
    let n = model.num_states();
    let mut preds = vec![Vec::new(); n];
    let mut buf = Vec::new();
    for x in 0..n {
        if target.contains(x) || infinite.contains(x) {
            continue;
        }
        let mut succ = Vec::new();
        for v in admissible_vertices(model, x, infinite, &mut buf) {
            model.vertex_masses(x, v, &mut buf);
            succ.extend(buf.iter().map(|&(d, _)| d));
        }
        succ.sort_unstable();
        succ.dedup();
        for y in succ {
            preds[y].push(x);
        }
    }
    let reached = upper_closure(&Predecessors { preds }, target, None, false);
    target
        .complement()
        .difference(infinite)
        .difference(&reached)
}
