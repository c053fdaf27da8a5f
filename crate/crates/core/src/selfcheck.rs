//! Worked examples with known answers, runnable from the command line.

use crate::bundled;
use crate::credal::{apply_lower, apply_upper, greedy_selection, CredalMatrix, ModelDraft};
use crate::error::Result;
use crate::io::interval_vertices;
use crate::meeting::{
    build_product_space, joint_transition_weight, meet, quotient_consistency_check, Belief,
    JointModel, JointSelection, MeetConfig, ProductMode,
};
use crate::precise::{hitting_times, meeting_times_precise, simulate_hitting, TransitionMatrix};
use crate::reachability::{classify, lower_reach_set, upper_reach_set};
use crate::sets::StateSet;
use crate::solver::{policy_iteration, value_iteration, SolverOptions};
use crate::value::{ExtendedValue, Sense};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn credal(rows: Vec<Vec<Vec<f64>>>) -> Result<CredalMatrix> {
    CredalMatrix::new(ModelDraft::numbered(rows))
}

fn ev(values: &[f64]) -> Vec<ExtendedValue> {
    values.iter().map(|&v| ExtendedValue::finite(v)).collect()
}

fn close(a: ExtendedValue, b: f64, tol: f64) -> bool {
    a.is_finite() && (a.get() - b).abs() <= tol
}

type Outcome = Result<(bool, String)>;

fn upper_operator() -> Outcome {
    let m = credal(vec![
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.0, 1.0]],
    ])?;
    let got = apply_upper(&m, &ev(&[0.0, 1.0]))?;
    Ok((got == ev(&[1.0, 1.0]), format!("{got:?}")))
}

fn lower_operator() -> Outcome {
    let m = credal(vec![
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.0, 1.0]],
    ])?;
    let got = apply_lower(&m, &ev(&[0.0, 1.0]))?;
    Ok((got[0] == ExtendedValue::ZERO, format!("{got:?}")))
}

fn greedy_vertex() -> Outcome {
    let m = credal(vec![
        vec![vec![0.5, 0.5], vec![0.9, 0.1]],
        vec![vec![0.0, 1.0]],
    ])?;
    let s = greedy_selection(&m, &ev(&[10.0, 0.0]), Sense::Upper)?;
    Ok((
        s.choice(0) == 1,
        format!("row 0 picks vertex {}", s.choice(0)),
    ))
}

fn geometric_hitting() -> Outcome {
    let t = TransitionMatrix::numbered(vec![vec![0.5, 0.5], vec![0.0, 1.0]])?;
    let h = hitting_times(&t, &StateSet::from_indices(2, [1]))?;
    Ok((
        close(h.get(0), 2.0, 1e-12) && h.get(1) == ExtendedValue::ZERO,
        format!("{:?}", h.0),
    ))
}

fn uniform_meeting() -> Outcome {
    let t = TransitionMatrix::numbered(vec![vec![0.5, 0.5], vec![0.5, 0.5]])?;
    let m = meeting_times_precise(&t, &t)?;
    Ok((
        close(m.get(0, 1), 2.0, 1e-12),
        format!("m(0,1) = {}", m.get(0, 1)),
    ))
}

fn swap_never_meets() -> Outcome {
    let t = TransitionMatrix::numbered(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?;
    let m = meeting_times_precise(&t, &t)?;
    Ok((
        m.get(0, 1).is_infinite(),
        format!("m(0,1) = {}", m.get(0, 1)),
    ))
}

fn reach_chain() -> Outcome {
    let m = credal(vec![
        vec![vec![0.0, 1.0, 0.0]],
        vec![vec![0.0, 0.0, 1.0]],
        vec![vec![0.0, 0.0, 1.0]],
    ])?;
    let r = upper_reach_set(&m, &StateSet::from_indices(3, [2]))?;
    Ok((r.to_vec() == vec![0, 1, 2], format!("{r:?}")))
}

fn lower_reach_needs_all_vertices() -> Outcome {
    let m = credal(vec![
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.0, 1.0]],
    ])?;
    let r = lower_reach_set(&m, &StateSet::from_indices(2, [1]))?;
    Ok((r.to_vec() == vec![1], format!("{r:?}")))
}

fn disconnected_is_absorbing() -> Outcome {
    let m = credal(vec![
        vec![vec![0.5, 0.5, 0.0, 0.0]],
        vec![vec![0.5, 0.5, 0.0, 0.0]],
        vec![vec![0.0, 0.0, 0.5, 0.5]],
        vec![vec![0.0, 0.0, 0.5, 0.5]],
    ])?;
    let c = classify(&m, &StateSet::from_indices(4, [0]), Sense::Upper)?;
    Ok((
        c.absorbing.to_vec() == vec![2, 3],
        format!("absorbing {:?}", c.absorbing),
    ))
}

fn two_state_bounds() -> Outcome {
    let m = bundled::load("lazy_exit")?;
    let target = StateSet::from_indices(2, [1]);
    let opts = SolverOptions::default();
    let upper = policy_iteration(&m, &target, Sense::Upper, &opts)?;
    let lower = policy_iteration(&m, &target, Sense::Lower, &opts)?;
    // lazy_exit lists [0.9, 0.1] first, then [0.5, 0.5].
    let ok = close(upper.values[0], 10.0, 1e-10)
        && close(lower.values[0], 2.0, 1e-10)
        && m.row(0).vertices()[upper.selection.choice(0)].mass() == [0.9, 0.1]
        && m.row(0).vertices()[lower.selection.choice(0)].mass() == [0.5, 0.5];
    Ok((
        ok,
        format!("upper {} lower {}", upper.values[0], lower.values[0]),
    ))
}

fn solvers_agree() -> Outcome {
    let m = bundled::load("lazy_exit")?;
    let target = StateSet::from_indices(2, [1]);
    let opts = SolverOptions::default().with_tol(1e-13);
    let mut worst: f64 = 0.0;
    for sense in [Sense::Upper, Sense::Lower] {
        let a = policy_iteration(&m, &target, sense, &opts)?;
        let b = value_iteration(
            &m,
            &target,
            sense,
            &SolverOptions::default()
                .with_max_iter(100_000)
                .with_tol(1e-13),
        )?;
        worst = worst.max((a.values[0].get() - b.values[0].get()).abs());
    }
    Ok((worst <= 1e-8, format!("max difference {worst:e}")))
}

fn quotient_weight() -> Outcome {
    let m = bundled::load("hold_or_mix")?;
    let space = build_product_space(m.space(), 2, ProductMode::Quotient)?;
    let w = joint_transition_weight(
        &m,
        &space,
        space.index_of(&[0, 0])?,
        &[0, 0],
        space.index_of(&[0, 1])?,
    )?;
    Ok(((w - 0.5).abs() < 1e-15, format!("weight {w}")))
}

/// Minimum and maximum of the degenerate meeting time from (0,1) over every
/// stationary joint selection of the full two-agent product.
fn brute_force_hold_or_mix(m: &CredalMatrix) -> Result<(ExtendedValue, ExtendedValue)> {
    let config = MeetConfig::default().with_mode(ProductMode::Full);
    let mut lo = ExtendedValue::INFINITY;
    let mut hi = ExtendedValue::ZERO;
    for code in 0..16usize {
        let mut sel = JointSelection::new();
        sel.insert(vec![0, 1], vec![code & 1, code >> 1 & 1])?;
        sel.insert(vec![1, 0], vec![code >> 2 & 1, code >> 3 & 1])?;
        let v = meet(m, 2, &Belief::Degenerate(sel), &config)?.value_at(&[0, 1])?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

fn hold_or_mix_bounds() -> Outcome {
    let m = bundled::load("hold_or_mix")?;
    let (lo, hi) = brute_force_hold_or_mix(&m)?;
    let config = MeetConfig::default();
    let upper = meet(&m, 2, &Belief::Vacuous(Sense::Upper), &config)?.value_at(&[0, 1])?;
    let lower = meet(&m, 2, &Belief::Vacuous(Sense::Lower), &config)?.value_at(&[0, 1])?;
    let ok = upper == hi && upper.is_infinite() && close(lower, lo.get(), 1e-10);
    Ok((
        ok,
        format!("lower {lower} upper {upper} (exhaustive: {lo} .. {hi})"),
    ))
}

fn quotient_lossless() -> Outcome {
    let m = credal(vec![
        vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.2, 0.2]],
        vec![
            vec![0.1, 0.8, 0.1],
            vec![0.0, 0.5, 0.5],
            vec![0.3, 0.0, 0.7],
        ],
        vec![vec![0.3, 0.3, 0.4]],
    ])?;
    let mut worst: f64 = 0.0;
    let mut patterns = true;
    for agents in [2, 3] {
        for sense in [Sense::Upper, Sense::Lower] {
            let r = quotient_consistency_check(
                &m,
                agents,
                &Belief::Vacuous(sense),
                &MeetConfig::default(),
            )?;
            worst = worst.max(r.max_discrepancy);
            patterns &= r.infinity_mismatches.is_empty();
        }
    }
    Ok((
        worst <= 1e-8 && patterns,
        format!("max discrepancy {worst:e}"),
    ))
}

fn interval_expansion() -> Outcome {
    let v = interval_vertices(&[0.0, 0.0], &[1.0, 1.0])
        .map_err(|r| crate::error::Error::InvalidArgument(r.join("; ")))?;
    Ok((v == vec![vec![1.0, 0.0], vec![0.0, 1.0]], format!("{v:?}")))
}

fn five_state_classification() -> Outcome {
    let m = bundled::load("five_state")?;
    let space = build_product_space(m.space(), 2, ProductMode::Quotient)?;
    let joint = JointModel::new(&m, &space)?;
    let c = classify(&joint, space.diagonal(), Sense::Upper)?;
    let a = space.index_of_labels(&["1", "2"])?;
    let u = space.index_of_labels(&["2", "3"])?;
    let r = meet(
        &m,
        2,
        &Belief::Vacuous(Sense::Upper),
        &MeetConfig::default(),
    )?;
    let ok = c.absorbing.contains(a)
        && c.unsafe_states.contains(u)
        && r.values[a].is_infinite()
        && r.values[u].is_infinite();
    Ok((
        ok,
        format!(
            "(1,2) absorbing: {}, (2,3) unsafe: {}",
            c.absorbing.contains(a),
            c.unsafe_states.contains(u)
        ),
    ))
}

fn monte_carlo() -> Outcome {
    let t = TransitionMatrix::numbered(vec![vec![0.5, 0.5], vec![0.0, 1.0]])?;
    let s = simulate_hitting(&t, &StateSet::from_indices(2, [1]), 0, 100_000, 10_000, 7)?;
    let mean = s.mean.unwrap_or(f64::NAN);
    let width = s.half_width(3.0).unwrap_or(0.0);
    let cycle = TransitionMatrix::numbered(vec![
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![1.0, 0.0, 0.0],
    ])?;
    let c = simulate_hitting(&cycle, &StateSet::from_indices(3, [2]), 0, 1_000, 100, 7)?;
    let ok = (mean - 2.0).abs() <= width && c.mean == Some(2.0) && c.variance == Some(0.0);
    Ok((
        ok,
        format!("mean {mean:.4} ± {width:.4}; cycle mean {:?}", c.mean),
    ))
}

type Example = (&'static str, fn() -> Outcome);

const SUITE: &[Example] = &[
    ("upper operator by vertex enumeration", upper_operator),
    ("lower operator by vertex enumeration", lower_operator),
    ("greedy step picks the larger dot product", greedy_vertex),
    ("geometric hitting time", geometric_hitting),
    ("meeting under uniform jumps", uniform_meeting),
    ("swapping walkers never meet", swap_never_meets),
    ("upper reachability along a chain", reach_chain),
    (
        "lower reachability needs every vertex",
        lower_reach_needs_all_vertices,
    ),
    (
        "disconnected component is absorbing",
        disconnected_is_absorbing,
    ),
    ("two-state credal bounds and selections", two_state_bounds),
    ("policy and value iteration agree", solvers_agree),
    ("quotient transition weight", quotient_weight),
    ("hold-or-mix meeting bounds", hold_or_mix_bounds),
    ("quotient space is lossless", quotient_lossless),
    ("interval row expansion", interval_expansion),
    (
        "five-state example classification",
        five_state_classification,
    ),
    ("Monte Carlo agrees with the analytic mean", monte_carlo),
];

pub fn run_selfcheck() -> Vec<Check> {
    SUITE
        .iter()
        .map(|&(name, f)| match f() {
            Ok((passed, detail)) => Check {
                name,
                passed,
                detail,
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}
