//! Acceptance criteria, one line of output each.
//!
//! Run with `cargo test --test acceptance`. Every criterion has a time budget;
//! exceeding it counts as a failure.

#![allow(clippy::needless_range_loop)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use credal_meet::credal::CredalModel;
use credal_meet::io::ResultFile;
use credal_meet::meeting::{
    build_product_space, meet, mix, quotient_consistency_check, Belief, JointModel, JointSelection,
    MeetConfig, ProductMode,
};
use credal_meet::precise::{meeting_times_precise, simulate_hitting, TransitionMatrix};
use credal_meet::reachability::classify;
use credal_meet::solver::{policy_iteration, value_iteration, SolverOptions};
use credal_meet::{bundled, ExtendedValue, Sense, StateSet};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vi_options() -> SolverOptions {
    SolverOptions::default()
        .with_tol(1e-13)
        .with_max_iter(2_000_000)
}

fn criterion_1() -> Check {
    let mut rng = rng(1);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let models = 200;
    for i in 0..models {
        let n = rng.random_range(2..=6);
        let rows = random_rows(&mut rng, n, 4, 0.4);
        let model = model_from_rows(&rows);
        let target = random_target(&mut rng, n);
        for sense in [Sense::Upper, Sense::Lower] {
            let pi = policy_iteration(&model, &target, sense, &SolverOptions::default())
                .map_err(|e| format!("model {i} {sense}: policy iteration: {e}"))?;
            let vi = value_iteration(&model, &target, sense, &vi_options())
                .map_err(|e| format!("model {i} {sense}: value iteration: {e}"))?;
            for x in 0..n {
                ensure(ext_agrees(pi.values[x], vi.values[x], 1e-8), || {
                    format!(
                        "model {i} {sense} state {x}: policy {} vs value {}",
                        pi.values[x], vi.values[x]
                    )
                })?;
                if pi.values[x].is_finite() {
                    worst = worst.max((pi.values[x].get() - vi.values[x].get()).abs());
                    compared += 1;
                }
            }
        }
    }
    Ok(format!(
        "{models} models, {compared} finite entries, max |pi - vi| = {worst:.2e}"
    ))
}

fn criterion_2() -> Check {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    let mut full_runs = 0;
    let mut quotient_runs = 0;
    let instances = 100;
    for i in 0..instances {
        let n = if i % 2 == 0 { 2 } else { 3 };
        let rows = random_rows(&mut rng, n, 3, 0.4);
        let model = model_from_rows(&rows);
        let rows = rows_of(&model);
        let small = rows.iter().all(|r| r.len() <= 2);
        let full_ok = n == 2 || small;

        if full_ok {
            let (lo, hi) = brute_force_meeting_full(&rows);
            for (sense, expect) in [(Sense::Upper, &hi), (Sense::Lower, &lo)] {
                let config = MeetConfig::default().with_mode(ProductMode::Full);
                let r = meet(&model, 2, &Belief::Vacuous(sense), &config)
                    .map_err(|e| format!("instance {i}: {e}"))?;
                for x in 0..n {
                    for y in 0..n {
                        let got = r.value_at(&[x, y]).unwrap();
                        let want = expect[x * n + y];
                        ensure(agrees(got, want, 1e-8), || {
                            format!(
                                "instance {i} full {sense} ({x},{y}): {got} vs exhaustive {want}"
                            )
                        })?;
                        if want.is_finite() {
                            worst = worst.max((got.get() - want).abs());
                        }
                    }
                }
            }
            full_runs += 1;
        }

        let table = brute_force_meeting_quotient(&rows);
        for sense in [Sense::Upper, Sense::Lower] {
            let r = meet(&model, 2, &Belief::Vacuous(sense), &MeetConfig::default())
                .map_err(|e| format!("instance {i}: {e}"))?;
            for (&(x, y), &(lo, hi)) in &table {
                let want = if sense == Sense::Upper { hi } else { lo };
                let got = r.value_at(&[x, y]).unwrap();
                ensure(agrees(got, want, 1e-8), || {
                    format!("instance {i} quotient {sense} {{{x},{y}}}: {got} vs exhaustive {want}")
                })?;
                if want.is_finite() {
                    worst = worst.max((got.get() - want).abs());
                }
            }
        }
        quotient_runs += 1;
    }
    Ok(format!(
        "{instances} instances ({full_runs} full, {quotient_runs} quotient), max error {worst:.2e}"
    ))
}

fn criterion_3() -> Check {
    let mut rng = rng(3);
    let mut worst_residual: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let pairs = 100;
    for i in 0..pairs {
        let n = rng.random_range(2..=6);
        let sparsity = if i % 3 == 0 { 0.6 } else { 0.3 };
        let t: Vec<Vec<f64>> = (0..n)
            .map(|_| random_distribution(&mut rng, n, sparsity))
            .collect();
        let s: Vec<Vec<f64>> = (0..n)
            .map(|_| random_distribution(&mut rng, n, sparsity))
            .collect();
        let tm = TransitionMatrix::numbered(t.clone()).unwrap();
        let sm = TransitionMatrix::numbered(s.clone()).unwrap();
        let m = meeting_times_precise(&tm, &sm).map_err(|e| format!("pair {i}: {e}"))?;
        // Use the renormalized rows the library stores.
        let t: Vec<Vec<f64>> = (0..n).map(|x| tm.row(x).to_vec()).collect();
        let s: Vec<Vec<f64>> = (0..n).map(|x| sm.row(x).to_vec()).collect();

        for x in 0..n {
            ensure(m.get(x, x) == ExtendedValue::ZERO, || {
                format!("pair {i}: nonzero diagonal at {x}")
            })?;
            for y in 0..n {
                if x == y || !m.get(x, y).is_finite() {
                    continue;
                }
                let mut rhs = 1.0;
                for x2 in 0..n {
                    for y2 in 0..n {
                        let w = t[x][x2] * s[y][y2];
                        if w > 0.0 {
                            rhs += w * m.get(x2, y2).get();
                        }
                    }
                }
                let r = (m.get(x, y).get() - rhs).abs();
                ensure(r <= 1e-10 * m.get(x, y).get().max(1.0), || {
                    format!("pair {i} ({x},{y}): residual {r:e}")
                })?;
                worst_residual = worst_residual.max(r);
            }
        }

        let oracle = oracle_hitting(&kronecker(&t, &s), &diagonal_mask(n));
        for x in 0..n {
            for y in 0..n {
                let want = oracle[x * n + y];
                let got = m.get(x, y);
                ensure(agrees(got, want, 1e-9 * want.abs().max(1.0)), || {
                    format!("pair {i} ({x},{y}): {got} vs product-space solve {want}")
                })?;
                if want.is_finite() {
                    worst_gap = worst_gap.max((got.get() - want).abs());
                }
            }
        }
    }
    Ok(format!(
        "{pairs} pairs, max residual {worst_residual:.2e}, max gap to product solve {worst_gap:.2e}"
    ))
}

fn count_sorted_tuples(n: usize, m: usize) -> usize {
    let mut count = 0;
    for_each_choice(&vec![n; m], |t| {
        if t.windows(2).all(|w| w[0] <= w[1]) {
            count += 1;
        }
    });
    count
}

fn criterion_4() -> Check {
    let mut rng = rng(4);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (agents, count, max_n) in [(2, 50, 5), (3, 10, 3)] {
        for i in 0..count {
            let n = rng.random_range(2..=max_n);
            let model = model_from_rows(&random_rows(&mut rng, n, 3, 0.4));
            for sense in [Sense::Upper, Sense::Lower] {
                let report = quotient_consistency_check(
                    &model,
                    agents,
                    &Belief::Vacuous(sense),
                    &MeetConfig::default(),
                )
                .map_err(|e| format!("m={agents} model {i}: {e}"))?;
                ensure(report.is_consistent(1e-8), || {
                    format!("m={agents} model {i} {sense}: {report:?}")
                })?;
                let expected = count_sorted_tuples(n, agents);
                ensure(report.quotient_states == expected, || {
                    format!(
                        "m={agents} N={n}: {} quotient states, expected {expected}",
                        report.quotient_states
                    )
                })?;
                worst = worst.max(report.max_discrepancy);
                runs += 1;
            }
        }
    }
    for n in 2..=6 {
        for m in 2..=4 {
            let space = build_product_space(
                &credal_meet::StateSpace::numbered(n).unwrap(),
                m,
                ProductMode::Quotient,
            )
            .unwrap();
            let expected = count_sorted_tuples(n, m);
            ensure(space.len() == expected, || {
                format!("N={n} m={m}: {} states, expected {expected}", space.len())
            })?;
        }
    }
    Ok(format!(
        "{runs} checks, max discrepancy {worst:.2e}; state counts match for N<=6, m<=4"
    ))
}

fn random_joint_selection(
    rng: &mut impl Rng,
    model: &credal_meet::CredalMatrix,
    n: usize,
) -> JointSelection {
    let mut sel = JointSelection::new();
    for x in 0..n {
        for y in x + 1..n {
            let a = rng.random_range(0..model.num_vertices(x));
            let b = rng.random_range(0..model.num_vertices(y));
            sel.insert(vec![x, y], vec![a, b]).unwrap();
        }
    }
    sel
}

fn within(lower: ExtendedValue, value: ExtendedValue, upper: ExtendedValue) -> bool {
    let slack = |v: ExtendedValue| 1e-9 * v.get().abs().max(1.0);
    let above = !lower.is_finite() && !value.is_finite()
        || value.is_infinite()
        || value.get() >= lower.get() - slack(lower);
    let below =
        upper.is_infinite() || (value.is_finite() && value.get() <= upper.get() + slack(upper));
    above && below
}

fn criterion_5() -> Check {
    let mut rng = rng(5);
    let models = 50;
    let selections = 20;
    let mut checked = 0;
    for i in 0..models {
        let n = rng.random_range(2..=4);
        let model = model_from_rows(&random_rows(&mut rng, n, 3, 0.4));
        let config = MeetConfig::default();
        let upper =
            meet(&model, 2, &Belief::Vacuous(Sense::Upper), &config).map_err(|e| e.to_string())?;
        let lower =
            meet(&model, 2, &Belief::Vacuous(Sense::Lower), &config).map_err(|e| e.to_string())?;
        let target = random_target(&mut rng, n);
        let hu = policy_iteration(&model, &target, Sense::Upper, &SolverOptions::default())
            .map_err(|e| e.to_string())?;
        let hl = policy_iteration(&model, &target, Sense::Lower, &SolverOptions::default())
            .map_err(|e| e.to_string())?;
        for k in 0..selections {
            let sel = random_joint_selection(&mut rng, &model, n);
            let fixed =
                meet(&model, 2, &Belief::Degenerate(sel), &config).map_err(|e| e.to_string())?;
            for s in 0..fixed.values.len() {
                ensure(
                    within(lower.values[s], fixed.values[s], upper.values[s]),
                    || {
                        format!(
                            "model {i} selection {k} state {}: {} not in [{}, {}]",
                            fixed.space.label(s),
                            fixed.values[s],
                            lower.values[s],
                            upper.values[s]
                        )
                    },
                )?;
                checked += 1;
            }

            let choice: Vec<usize> = (0..n)
                .map(|x| rng.random_range(0..model.num_vertices(x)))
                .collect();
            let p: Vec<Vec<f64>> = (0..n)
                .map(|x| model.row(x).vertices()[choice[x]].mass().to_vec())
                .collect();
            let h = oracle_hitting(&p, target.mask());
            for x in 0..n {
                ensure(
                    within(
                        hl.values[x],
                        ExtendedValue::new(h[x]).unwrap(),
                        hu.values[x],
                    ),
                    || {
                        format!(
                            "model {i} hitting state {x}: {} not in [{}, {}]",
                            h[x], hl.values[x], hu.values[x]
                        )
                    },
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{models} models x {selections} selections, {checked} entries inside the envelope"
    ))
}

fn criterion_6() -> Check {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    let models = 20;
    for i in 0..models {
        let n = rng.random_range(2..=4);
        let model = model_from_rows(&random_rows(&mut rng, n, 3, 0.3));
        let sel = random_joint_selection(&mut rng, &model, n);
        let config = MeetConfig::default();
        let fixed = meet(&model, 2, &Belief::Degenerate(sel.clone()), &config)
            .map_err(|e| e.to_string())?;
        for sense in [Sense::Upper, Sense::Lower] {
            let free =
                meet(&model, 2, &Belief::Vacuous(sense), &config).map_err(|e| e.to_string())?;
            let run = |epsilon: f64| {
                meet(
                    &model,
                    2,
                    &Belief::Mixture {
                        epsilon,
                        selection: sel.clone(),
                        sense,
                    },
                    &config,
                )
                .map_err(|e| e.to_string())
            };
            let zero = run(0.0)?;
            ensure(
                zero.values
                    .iter()
                    .zip(&fixed.values)
                    .all(|(a, b)| a.get().to_bits() == b.get().to_bits()),
                || format!("model {i} {sense}: epsilon 0 differs from degenerate"),
            )?;
            let one = run(1.0)?;
            ensure(one.values == free.values, || {
                format!("model {i} {sense}: epsilon 1 differs from vacuous")
            })?;
            ensure(one.selection == free.selection, || {
                format!("model {i} {sense}: vacuous selection changed")
            })?;
            for epsilon in [0.25, 0.5, 0.75] {
                let r = run(epsilon)?;
                ensure(r.selection == free.selection, || {
                    format!("model {i} {sense}: selection depends on epsilon")
                })?;
                for s in 0..r.values.len() {
                    let (d, v) = (fixed.values[s], free.values[s]);
                    if d.is_finite() && v.is_finite() {
                        let want = (1.0 - epsilon) * d.get() + epsilon * v.get();
                        let gap = (r.values[s].get() - want).abs();
                        ensure(gap <= 1e-12 * want.max(1.0), || {
                            format!("model {i} {sense} eps {epsilon}: gap {gap:e}")
                        })?;
                        worst = worst.max(gap);
                    } else {
                        ensure(r.values[s].is_infinite(), || {
                            format!("model {i} {sense} eps {epsilon}: infinite component lost")
                        })?;
                    }
                }
                ensure(
                    r.values == mix(&fixed.values, &free.values, epsilon),
                    || "mixture is not the componentwise blend".to_string(),
                )?;
            }
        }
    }
    Ok(format!(
        "{models} models, both senses, max affine gap {worst:.2e}"
    ))
}

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn criterion_7() -> Check {
    let model = bundled::load("five_state").map_err(|e| e.to_string())?;
    let label = |x: usize| model.space().label(x).to_string();
    let mut edges = Vec::new();
    let mut support = Vec::new();
    for x in 0..model.len() {
        model.upper_support(x, &mut support);
        for &y in &support {
            edges.push(format!("{}->{}", label(x), label(y)));
        }
    }
    let figure = [
        "1->2", "2->1", "2->4", "3->1", "3->2", "3->3", "4->5", "5->3",
    ];
    ensure(edges == figure, || format!("upper adjacency {edges:?}"))?;

    let avoid = model.row(1).vertices().iter().any(|v| v.get(3) == 0.0);
    ensure(avoid, || "state 2 has no vertex avoiding state 4".into())?;

    for mode in [ProductMode::Quotient, ProductMode::Full] {
        let space = build_product_space(model.space(), 2, mode).map_err(|e| e.to_string())?;
        let joint = JointModel::new(&model, &space).map_err(|e| e.to_string())?;
        let c = classify(&joint, space.diagonal(), Sense::Upper).map_err(|e| e.to_string())?;
        let a = space.index_of_labels(&["1", "2"]).unwrap();
        let u = space.index_of_labels(&["2", "3"]).unwrap();
        ensure(c.absorbing.contains(a), || {
            format!("{mode}: (1,2) not absorbing")
        })?;
        ensure(c.unsafe_states.contains(u), || {
            format!("{mode}: (2,3) not unsafe")
        })?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("meet.json");
    let status = Command::new(env!("CARGO_BIN_EXE_credal-meet"))
        .arg("meet")
        .arg(models_dir().join("five_state.toml"))
        .args([
            "--agents", "2", "--belief", "vacuous", "--sense", "upper", "--json",
        ])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("meet failed: {}", String::from_utf8_lossy(&status.stderr))
    })?;
    let result = ResultFile::read(&out).map_err(|e| e.to_string())?;
    for pair in [["1", "2"], ["2", "3"]] {
        let entry = result
            .values
            .iter()
            .find(|v| v.state == pair)
            .ok_or_else(|| format!("no value for {pair:?}"))?;
        ensure(entry.value.is_infinite(), || {
            format!("meet --sense upper gives {} at {pair:?}", entry.value)
        })?;
    }
    Ok("upper graph matches the figure; (1,2) absorbing, (2,3) unsafe in both modes; CLI upper meet is inf at both".into())
}

fn criterion_8() -> Check {
    let t = TransitionMatrix::numbered(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
    let trials = 100_000;
    let stats = simulate_hitting(
        &t,
        &StateSet::from_indices(2, [1]),
        0,
        trials,
        1_000_000,
        20240601,
    )
    .map_err(|e| e.to_string())?;
    let mean = stats.mean.ok_or("no hits")?;
    let sigma = stats.variance.ok_or("no variance")?.sqrt();
    let bound = 3.0 * sigma / (trials as f64).sqrt();
    ensure(stats.censored == 0, || {
        format!("{} censored paths", stats.censored)
    })?;
    ensure((mean - 2.0).abs() <= bound, || {
        format!("mean {mean} outside 2 ± {bound}")
    })?;

    let cycle = bundled::load("cycle").map_err(|e| e.to_string())?;
    let cycle =
        TransitionMatrix::from_selection(&cycle, &credal_meet::Selection::lowest(3)).unwrap();
    let c = simulate_hitting(&cycle, &StateSet::from_indices(3, [2]), 0, 1_000, 100, 9)
        .map_err(|e| e.to_string())?;
    ensure(c.mean == Some(2.0) && c.variance == Some(0.0), || {
        format!("cycle mean {:?} variance {:?}", c.mean, c.variance)
    })?;
    Ok(format!(
        "geometric mean {mean:.5}, |mean - 2| = {:.5} <= {bound:.5}; cycle mean 2, variance 0",
        (mean - 2.0).abs()
    ))
}

fn criterion_9() -> Check {
    let model = model_from_rows(&vec![
        vec![vec![0.5, 0.5], vec![0.9, 0.1]],
        vec![vec![0.0, 1.0]],
    ]);
    let target = StateSet::from_indices(2, [1]);
    let up = policy_iteration(&model, &target, Sense::Upper, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let lo = policy_iteration(&model, &target, Sense::Lower, &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    ensure((up.values[0].get() - 10.0).abs() <= 1e-10, || {
        format!("upper h(0) = {}", up.values[0])
    })?;
    ensure((lo.values[0].get() - 2.0).abs() <= 1e-10, || {
        format!("lower h(0) = {}", lo.values[0])
    })?;

    let rows = vec![
        vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        vec![vec![0.5, 0.5], vec![0.0, 1.0]],
    ];
    let hold = model_from_rows(&rows);
    let config = MeetConfig::default().with_mode(ProductMode::Full);
    let upper = meet(&hold, 2, &Belief::Vacuous(Sense::Upper), &config)
        .map_err(|e| e.to_string())?
        .value_at(&[0, 1])
        .unwrap();
    let lower = meet(&hold, 2, &Belief::Vacuous(Sense::Lower), &config)
        .map_err(|e| e.to_string())?
        .value_at(&[0, 1])
        .unwrap();
    ensure(upper.is_infinite(), || {
        format!("upper meeting from (0,1) = {upper}")
    })?;
    let (exhaustive_lo, _) = brute_force_meeting_full(&rows);
    ensure((lower.get() - 4.0 / 3.0).abs() <= 1e-10, || {
        format!(
            "lower meeting from (0,1) = {lower}, expected 4/3 (exhaustive 16-selection oracle gives {})",
            exhaustive_lo[1]
        )
    })?;
    Ok("h(0) upper 10, lower 2; hold-or-mix lower 4/3, upper inf".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "policy vs value iteration", 60, criterion_1),
        (2, "brute-force meeting equivalence", 120, criterion_2),
        (3, "precise meeting consistency", 30, criterion_3),
        (4, "quotient losslessness", 120, criterion_4),
        (5, "envelope", 60, criterion_5),
        (6, "mixture endpoints and affinity", 10, criterion_6),
        (7, "five-state example", 5, criterion_7),
        (8, "Monte Carlo cross-check", 30, criterion_8),
        (9, "hand-derived golden values", 5, criterion_9),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => {
                Err(format!("{detail}; over the {budget} s budget"))
            }
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] criterion {id} ({name}): {detail} [{:.2} s / {budget} s]",
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
