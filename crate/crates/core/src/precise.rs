//! Precise (single-matrix) Markov chains: exact hitting and meeting times
//! and a seeded Monte Carlo simulator used as an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credal::{CredalMatrix, CredalModel, ModelDraft, Selection, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::solve_restricted;
use crate::reachability::classify;
use crate::sets::StateSet;
use crate::value::{ExtendedValue, Sense};

/// A row-stochastic matrix over a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    space: StateSpace,
    entries: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Validated and renormalized like any credal row.
    pub fn new(space: StateSpace, entries: Vec<Vec<f64>>) -> Result<Self> {
        let rows = entries.iter().cloned().map(|r| vec![r]).collect();
        let checked = CredalMatrix::new(ModelDraft::new(space.labels().to_vec(), rows))?;
        TransitionMatrix::from_selection(&checked, &Selection::lowest(checked.len()))
    }

    /// Matrix labelled `0..n`.
    pub fn numbered(entries: Vec<Vec<f64>>) -> Result<Self> {
        TransitionMatrix::new(StateSpace::numbered(entries.len())?, entries)
    }

    /// The matrix that picks `selection`'s vertex in every row.
    pub fn from_selection(model: &CredalMatrix, selection: &Selection) -> Result<Self> {
        selection.check(model)?;
        let entries = model
            .rows()
            .iter()
            .zip(&selection.0)
            .map(|(row, &v)| row.vertices()[v].mass().to_vec())
            .collect();
        Ok(TransitionMatrix {
            space: model.space().clone(),
            entries,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from][to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from]
    }
}

impl CredalModel for TransitionMatrix {
    fn num_states(&self) -> usize {
        self.space.len()
    }
    fn num_vertices(&self, _state: usize) -> usize {
        1
    }
    fn vertex_masses(&self, state: usize, _vertex: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        out.extend(
            self.entries[state]
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(d, &p)| (d, p)),
        );
    }
    fn state_label(&self, state: usize) -> String {
        self.space.label(state).to_string()
    }
}

/// Expected hitting times, one per state; zero on the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HittingVector(pub Vec<ExtendedValue>);

impl HittingVector {
    pub fn get(&self, state: usize) -> ExtendedValue {
        self.0[state]
    }

    pub fn as_slice(&self) -> &[ExtendedValue] {
        &self.0
    }
}

/// Expected meeting times of two walkers; zero on the diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingMatrix {
    n: usize,
    values: Vec<ExtendedValue>,
}

impl MeetingMatrix {
    /// `values` in row-major order, `values[x * n + y] = m(x, y)`.
    pub fn from_row_major(n: usize, values: Vec<ExtendedValue>) -> Self {
        assert_eq!(values.len(), n * n);
        MeetingMatrix { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: usize, y: usize) -> ExtendedValue {
        self.values[x * self.n + y]
    }

    pub fn values(&self) -> &[ExtendedValue] {
        &self.values
    }
}

/// Minimal nonnegative solution of `h = 1_{A^c} + 1_{A^c} T h` for a model
/// whose rows each have a single vertex.
///
/// States that reach the target with probability below one get `+inf`; the
/// rest solve a linear system restricted to them, which is nonsingular
/// because of that pre-pass.
pub fn precise_hitting<M: CredalModel + ?Sized>(
    model: &M,
    target: &StateSet,
) -> Result<Vec<ExtendedValue>> {
    let n = model.num_states();
    if let Some(x) = (0..n).find(|&x| model.num_vertices(x) != 1) {
        return Err(Error::InvalidArgument(format!(
            "state `{}` has {} vertices; a precise chain needs exactly one",
            model.state_label(x),
            model.num_vertices(x)
        )));
    }
    // Finite exactly where the target is hit almost surely: not absorbing,
    // and no path into an absorbing state that avoids the target.
    let classification = classify(model, target, Sense::Upper)?;
    let region: Vec<usize> = classification.finite.iter().collect();
    let solved = solve_restricted(model, &region, |_| 0)?;
    let mut h = vec![ExtendedValue::INFINITY; n];
    for x in target.iter() {
        h[x] = ExtendedValue::ZERO;
    }
    for (&x, &v) in region.iter().zip(&solved) {
        h[x] = ExtendedValue::finite(v);
    }
    Ok(h)
}

/// Expected hitting times of `target` under `matrix`.
pub fn hitting_times(matrix: &TransitionMatrix, target: &StateSet) -> Result<HittingVector> {
    precise_hitting(matrix, target).map(HittingVector)
}

/// Two independent walkers as one chain on ordered pairs, `(x, y) -> x * n + y`.
///
/// Weights `T(x,x') S(y,y')` are computed per row on demand; the Kronecker
/// product is never formed.
pub struct PairChain<'a> {
    first: &'a TransitionMatrix,
    second: &'a TransitionMatrix,
}

impl<'a> PairChain<'a> {
    pub fn new(first: &'a TransitionMatrix, second: &'a TransitionMatrix) -> Result<Self> {
        if first.space() != second.space() {
            return Err(Error::InvalidArgument(
                "meeting times need both chains on the same state space".into(),
            ));
        }
        Ok(PairChain { first, second })
    }

    pub fn diagonal(&self) -> StateSet {
        let n = self.first.len();
        StateSet::from_indices(n * n, (0..n).map(|k| k * n + k))
    }
}

impl CredalModel for PairChain<'_> {
    fn num_states(&self) -> usize {
        self.first.len() * self.first.len()
    }
    fn num_vertices(&self, _state: usize) -> usize {
        1
    }
    fn vertex_masses(&self, state: usize, _vertex: usize, out: &mut Vec<(usize, f64)>) {
        let n = self.first.len();
        let (x, y) = (state / n, state % n);
        out.clear();
        for (x2, &p) in self.first.row(x).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (y2, &q) in self.second.row(y).iter().enumerate() {
                if q > 0.0 {
                    out.push((x2 * n + y2, p * q));
                }
            }
        }
    }
    fn state_label(&self, state: usize) -> String {
        let n = self.first.len();
        format!(
            "({},{})",
            self.first.space().label(state / n),
            self.first.space().label(state % n)
        )
    }
}

/// Expected meeting times of independent walkers driven by `first` and `second`.
pub fn meeting_times_precise(
    first: &TransitionMatrix,
    second: &TransitionMatrix,
) -> Result<MeetingMatrix> {
    let chain = PairChain::new(first, second)?;
    let h = precise_hitting(&chain, &chain.diagonal())?;
    Ok(MeetingMatrix::from_row_major(first.len(), h))
}

/// Summary of a batch of simulated paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationStats {
    pub trials: usize,
    /// Paths that hit the target within the horizon.
    pub hits: usize,
    /// Paths still outside the target at the horizon; excluded from the mean.
    pub censored: usize,
    pub mean: Option<f64>,
    /// Unbiased sample variance of the uncensored hitting times.
    pub variance: Option<f64>,
    pub seed: u64,
    pub horizon: u64,
}

impl SimulationStats {
    /// Half-width of the `k`-sigma interval around the mean.
    pub fn half_width(&self, k: f64) -> Option<f64> {
        let var = self.variance?;
        Some(k * (var / self.hits as f64).sqrt())
    }
}

/// Simulates `trials` paths from `start` until they enter `target`.
///
/// Trial `i` draws from a ChaCha8 stream seeded with `seed` on stream `i`,
/// so results do not depend on how trials are scheduled across threads.
pub fn simulate_hitting(
    matrix: &TransitionMatrix,
    target: &StateSet,
    start: usize,
    trials: usize,
    horizon: u64,
    seed: u64,
) -> Result<SimulationStats> {
    let n = matrix.len();
    if start >= n {
        return Err(Error::InvalidArgument(format!(
            "start state {start} out of range for {n} states"
        )));
    }
    if target.universe() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: target.universe(),
        });
    }
    if target.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if trials == 0 || horizon == 0 {
        return Err(Error::InvalidArgument(
            "trials and horizon must both be at least 1".into(),
        ));
    }

    // Cumulative sparse rows for inverse-CDF sampling.
    let cumulative: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            let mut acc = 0.0;
            matrix
                .row(x)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(d, &p)| {
                    acc += p;
                    (d, acc)
                })
                .collect()
        })
        .collect();

    let outcomes: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut state = start;
            let mut steps = 0u64;
            while !target.contains(state) {
                if steps == horizon {
                    return None;
                }
                let u: f64 = rng.random();
                let row = &cumulative[state];
                state = row
                    .iter()
                    .find(|&&(_, c)| u < c)
                    .unwrap_or_else(|| row.last().expect("stochastic row"))
                    .0;
                steps += 1;
            }
            Some(steps)
        })
        .collect();

    let times: Vec<f64> = outcomes.iter().flatten().map(|&s| s as f64).collect();
    let hits = times.len();
    let mean = (hits > 0).then(|| times.iter().sum::<f64>() / hits as f64);
    let variance = mean.map(|m| {
        if hits < 2 {
            0.0
        } else {
            times.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / (hits - 1) as f64
        }
    });
    Ok(SimulationStats {
        trials,
        hits,
        censored: trials - hits,
        mean,
        variance,
        seed,
        horizon,
    })
}
