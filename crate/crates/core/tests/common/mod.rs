//! Independent reference implementations and random instance generators.
//!
//! Nothing here calls the crate's solvers: hitting times are computed from
//! scratch with graph searches and Gaussian elimination, and credal bounds by
//! enumerating every stationary selection.

#![allow(dead_code, clippy::needless_range_loop)]

use credal_meet::credal::{CredalMatrix, ModelDraft};
use credal_meet::{ExtendedValue, StateSet};
use rand::Rng;

pub type Rows = Vec<Vec<Vec<f64>>>;

/// A random probability vector; each entry is zero with probability
/// `sparsity`, otherwise in `[0.05, 1)` before normalization.
pub fn random_distribution(rng: &mut impl Rng, n: usize, sparsity: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < sparsity {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 {
            return raw.iter().map(|p| p / sum).collect();
        }
    }
}

pub fn random_rows(rng: &mut impl Rng, n: usize, max_vertices: usize, sparsity: f64) -> Rows {
    (0..n)
        .map(|_| {
            let k = rng.random_range(1..=max_vertices);
            let mut row: Vec<Vec<f64>> = Vec::new();
            while row.len() < k {
                let v = random_distribution(rng, n, sparsity);
                if !row.contains(&v) {
                    row.push(v);
                }
            }
            row
        })
        .collect()
}

pub fn model_from_rows(rows: &Rows) -> CredalMatrix {
    CredalMatrix::new(ModelDraft::numbered(rows.clone())).expect("generated rows are valid")
}

/// Rows exactly as stored by the model (after renormalization).
pub fn rows_of(model: &CredalMatrix) -> Rows {
    model.to_draft().rows
}

pub fn random_target(rng: &mut impl Rng, n: usize) -> StateSet {
    loop {
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.35)).collect();
        if mask.iter().any(|&b| b) {
            return StateSet::from_mask(mask);
        }
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-14, "singular oracle system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Backward closure: every state with a positive-probability edge into
/// `seed` (optionally only through states allowed by `through`).
fn backward(p: &[Vec<f64>], seed: &[bool], through: &dyn Fn(usize) -> bool) -> Vec<bool> {
    let n = p.len();
    let mut set = seed.to_vec();
    loop {
        let mut changed = false;
        for x in 0..n {
            if !set[x] && through(x) && (0..n).any(|y| set[y] && p[x][y] > 0.0) {
                set[x] = true;
                changed = true;
            }
        }
        if !changed {
            return set;
        }
    }
}

/// Minimal nonnegative solution for a precise chain, `f64::INFINITY` where
/// the target is missed with positive probability.
pub fn oracle_hitting(p: &[Vec<f64>], target: &[bool]) -> Vec<f64> {
    let n = p.len();
    let reaches = backward(p, target, &|_| true);
    let never: Vec<bool> = reaches.iter().map(|r| !r).collect();
    let doomed = backward(p, &never, &|x| !target[x]);
    let finite: Vec<usize> = (0..n).filter(|&x| !target[x] && !doomed[x]).collect();
    let mut h: Vec<f64> = (0..n)
        .map(|x| if target[x] { 0.0 } else { f64::INFINITY })
        .collect();
    if finite.is_empty() {
        return h;
    }
    let a: Vec<Vec<f64>> = finite
        .iter()
        .map(|&x| {
            finite
                .iter()
                .map(|&y| if x == y { 1.0 } else { 0.0 } - p[x][y])
                .collect()
        })
        .collect();
    let sol = gauss_solve(a, vec![1.0; finite.len()]);
    for (&x, v) in finite.iter().zip(sol) {
        h[x] = v;
    }
    h
}

/// Calls `f` with every tuple in the mixed-radix range given by `radices`.
pub fn for_each_choice(radices: &[usize], mut f: impl FnMut(&[usize])) {
    let mut current = vec![0; radices.len()];
    loop {
        f(&current);
        let mut pos = radices.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < radices[pos] {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// Componentwise minimum and maximum of the hitting time over every
/// stationary selection.
pub fn brute_force_hitting(rows: &Rows, target: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![0.0_f64; n];
    let radices: Vec<usize> = rows.iter().map(Vec::len).collect();
    for_each_choice(&radices, |sel| {
        let p: Vec<Vec<f64>> = (0..n).map(|x| rows[x][sel[x]].clone()).collect();
        let h = oracle_hitting(&p, target);
        for x in 0..n {
            lo[x] = lo[x].min(h[x]);
            hi[x] = hi[x].max(h[x]);
        }
    });
    (lo, hi)
}

/// Kronecker product chain on ordered pairs, `(x, y) -> x * n + y`.
pub fn kronecker(t: &[Vec<f64>], s: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = t.len();
    let mut p = vec![vec![0.0; n * n]; n * n];
    for x in 0..n {
        for y in 0..n {
            for x2 in 0..n {
                for y2 in 0..n {
                    p[x * n + y][x2 * n + y2] = t[x][x2] * s[y][y2];
                }
            }
        }
    }
    p
}

pub fn diagonal_mask(n: usize) -> Vec<bool> {
    (0..n * n).map(|i| i / n == i % n).collect()
}

/// Two agents on the ordered product: for every stationary joint selection
/// (a vertex pair per off-diagonal pair), solve exactly. Returns the
/// componentwise min and max indexed by `x * n + y`.
pub fn brute_force_meeting_full(rows: &Rows) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| x != y)
        .collect();
    let radices: Vec<usize> = pairs
        .iter()
        .map(|&(x, y)| rows[x].len() * rows[y].len())
        .collect();
    let target = diagonal_mask(n);
    let mut lo = vec![f64::INFINITY; n * n];
    let mut hi = vec![0.0_f64; n * n];
    for_each_choice(&radices, |sel| {
        let mut p = vec![vec![0.0; n * n]; n * n];
        for k in 0..n {
            p[k * n + k][k * n + k] = 1.0;
        }
        for (i, &(x, y)) in pairs.iter().enumerate() {
            let a = sel[i] / rows[y].len();
            let b = sel[i] % rows[y].len();
            for x2 in 0..n {
                for y2 in 0..n {
                    p[x * n + y][x2 * n + y2] = rows[x][a][x2] * rows[y][b][y2];
                }
            }
        }
        let h = oracle_hitting(&p, &target);
        for i in 0..n * n {
            lo[i] = lo[i].min(h[i]);
            hi[i] = hi[i].max(h[i]);
        }
    });
    (lo, hi)
}

/// Two agents on unordered pairs `{x <= y}`: every stationary selection of a
/// vertex pair per off-diagonal pair, destinations merged by multiset.
/// Results are keyed by the sorted pair.
pub fn brute_force_meeting_quotient(
    rows: &Rows,
) -> std::collections::HashMap<(usize, usize), (f64, f64)> {
    let n = rows.len();
    let states: Vec<(usize, usize)> = (0..n).flat_map(|x| (x..n).map(move |y| (x, y))).collect();
    let index = |x: usize, y: usize| {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        states.iter().position(|&s| s == (a, b)).unwrap()
    };
    let off: Vec<usize> = (0..states.len())
        .filter(|&i| states[i].0 != states[i].1)
        .collect();
    let radices: Vec<usize> = off
        .iter()
        .map(|&i| rows[states[i].0].len() * rows[states[i].1].len())
        .collect();
    let target: Vec<bool> = states.iter().map(|&(x, y)| x == y).collect();
    let m = states.len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![0.0_f64; m];
    for_each_choice(&radices, |sel| {
        let mut p = vec![vec![0.0; m]; m];
        for i in 0..m {
            if target[i] {
                p[i][i] = 1.0;
            }
        }
        for (k, &i) in off.iter().enumerate() {
            let (x, y) = states[i];
            let a = sel[k] / rows[y].len();
            let b = sel[k] % rows[y].len();
            for x2 in 0..n {
                for y2 in 0..n {
                    p[i][index(x2, y2)] += rows[x][a][x2] * rows[y][b][y2];
                }
            }
        }
        let h = oracle_hitting(&p, &target);
        for i in 0..m {
            lo[i] = lo[i].min(h[i]);
            hi[i] = hi[i].max(h[i]);
        }
    });
    states
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, (lo[i], hi[i])))
        .collect()
}

/// Same finiteness, and finite values within `tol`.
pub fn agrees(a: ExtendedValue, b: f64, tol: f64) -> bool {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => (a.get() - b).abs() <= tol,
        (false, false) => true,
        _ => false,
    }
}

pub fn ext_agrees(a: ExtendedValue, b: ExtendedValue, tol: f64) -> bool {
    agrees(a, b.get(), tol)
}
