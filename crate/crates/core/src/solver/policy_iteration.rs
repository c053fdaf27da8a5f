use super::{
    assemble_selection, fixed_point_residual, pinned_start, to_extended, HittingResult,
    HittingSolver, SolverOptions,
};
use crate::credal::{sparse_dot, CredalModel};
use crate::error::{Error, Result};
use crate::linalg::solve_restricted;
use crate::reachability::{admissible_vertices, classify, Classification};
use crate::sets::StateSet;
use crate::value::Sense;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000;

/// Howard-style policy iteration over the vertices that keep the walk out of
/// the infinite region.
pub struct PolicyIteration;

impl HittingSolver for PolicyIteration {
    fn name(&self) -> &'static str {
        "policy-iteration"
    }

    fn description(&self) -> &'static str {
        "exact linear solves alternated with greedy vertex switching"
    }

    fn solve(
        &self,
        model: &dyn CredalModel,
        target: &StateSet,
        sense: Sense,
        options: &SolverOptions,
    ) -> Result<HittingResult> {
        policy_iteration(model, target, sense, options)
    }
}

pub fn policy_iteration<M: CredalModel + ?Sized>(
    model: &M,
    target: &StateSet,
    sense: Sense,
    options: &SolverOptions,
) -> Result<HittingResult> {
    let tol = options.tol.unwrap_or(DEFAULT_TOL);
    let max_iter = options.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let classification = classify(model, target, sense)?;
    let finite = classification.finite.to_vec();
    let infinite = classification.infinite();

    let mut buf = Vec::new();
    let mut admissible = vec![Vec::new(); model.num_states()];
    for &x in &finite {
        admissible[x] = admissible_vertices(model, x, &infinite, &mut buf);
        if admissible[x].is_empty() {
            return Err(Error::Singular(format!(
                "state {} has no vertex avoiding the infinite region",
                model.state_label(x)
            )));
        }
    }

    let mut policy = initial_policy(model, &classification, &admissible, &finite)?;
    let mut h = pinned_start(&classification);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let solved = solve_restricted(model, &finite, |x| policy[x])?;
        let change = finite
            .iter()
            .zip(&solved)
            .map(|(&x, &v)| (v - h[x]).abs())
            .fold(0.0, f64::max);
        for (&x, &v) in finite.iter().zip(&solved) {
            h[x] = v;
        }
        if options.record_history {
            history.push(to_extended(&h));
        }
        if iterations > 1 && change <= tol {
            break;
        }

        let mut improved = policy.clone();
        for &x in &finite {
            let mut best: Option<(usize, f64)> = None;
            for &v in &admissible[x] {
                model.vertex_masses(x, v, &mut buf);
                let value = sparse_dot(&buf, &h);
                if best.is_none_or(|(_, b)| sense.improves(value, b)) {
                    best = Some((v, value));
                }
            }
            improved[x] = best.expect("admissible set is nonempty").0;
        }
        if improved == policy {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                solver: "policy-iteration",
                iterations,
                change,
            });
        }
        policy = improved;
    }

    let selection = assemble_selection(model, &classification, &h, |x| policy[x]);
    let residual = fixed_point_residual(model, &classification, &h);
    Ok(HittingResult {
        values: to_extended(&h),
        selection,
        classification,
        iterations,
        residual,
        solver: "policy-iteration",
        history,
    })
}

/// A starting policy whose restricted system is nonsingular.
///
/// Upper: any admissible choice works, since no finite state can avoid the
/// target forever. Lower: grow a tree outward from the target, each state
/// picking its first admissible vertex that reaches an earlier layer.
fn initial_policy<M: CredalModel + ?Sized>(
    model: &M,
    classification: &Classification,
    admissible: &[Vec<usize>],
    finite: &[usize],
) -> Result<Vec<usize>> {
    let mut policy = vec![0; model.num_states()];
    match classification.sense {
        Sense::Upper => {
            for &x in finite {
                policy[x] = admissible[x][0];
            }
        }
        Sense::Lower => {
            let mut reached = classification.target.clone();
            let mut pending: Vec<usize> = finite.to_vec();
            let mut buf = Vec::new();
            while !pending.is_empty() {
                let mut layer = Vec::new();
                pending.retain(|&x| {
                    let hit = admissible[x].iter().copied().find(|&v| {
                        model.vertex_masses(x, v, &mut buf);
                        buf.iter().any(|&(d, _)| reached.contains(d))
                    });
                    match hit {
                        Some(v) => {
                            policy[x] = v;
                            layer.push(x);
                            false
                        }
                        None => true,
                    }
                });
                if layer.is_empty() {
                    return Err(Error::Singular(format!(
                        "{} finite states cannot reach the target",
                        pending.len()
                    )));
                }
                for x in layer {
                    reached.insert(x);
                }
            }
        }
    }
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::{CredalMatrix, ModelDraft};
    use crate::value::ExtendedValue;

    fn model(rows: Vec<Vec<Vec<f64>>>) -> CredalMatrix {
        CredalMatrix::new(ModelDraft::numbered(rows)).unwrap()
    }

    #[test]
    fn two_state_geometric_bounds() {
        // From state 0 the walk stays put with probability 0.5 or 0.9.
        let m = model(vec![
            vec![vec![0.5, 0.5], vec![0.9, 0.1]],
            vec![vec![0.0, 1.0]],
        ]);
        let target = StateSet::from_indices(2, [1]);
        let opts = SolverOptions::default();
        let upper = policy_iteration(&m, &target, Sense::Upper, &opts).unwrap();
        let lower = policy_iteration(&m, &target, Sense::Lower, &opts).unwrap();
        assert!((upper.values[0].get() - 10.0).abs() < 1e-9);
        assert!((lower.values[0].get() - 2.0).abs() < 1e-9);
        assert_eq!(upper.selection.choice(0), 1);
        assert_eq!(lower.selection.choice(0), 0);
    }

    #[test]
    fn lower_policy_avoids_trap() {
        // Vertex 0 of state 0 leaks into the absorbing state 2.
        let m = model(vec![
            vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.5, 0.0]],
            vec![vec![0.0, 1.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0]],
        ]);
        let target = StateSet::from_indices(3, [1]);
        let opts = SolverOptions::default();
        let lower = policy_iteration(&m, &target, Sense::Lower, &opts).unwrap();
        assert!((lower.values[0].get() - 2.0).abs() < 1e-9);
        assert_eq!(lower.selection.choice(0), 1);
        assert_eq!(lower.values[2], ExtendedValue::INFINITY);
        let upper = policy_iteration(&m, &target, Sense::Upper, &opts).unwrap();
        assert_eq!(upper.values[0], ExtendedValue::INFINITY);
    }

    #[test]
    fn whole_space_target_takes_one_iteration() {
        let m = model(vec![vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]]);
        let target = StateSet::full(2);
        let r = policy_iteration(&m, &target, Sense::Upper, &SolverOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.values.iter().all(|v| *v == ExtendedValue::ZERO));
    }
}
