//! Credal sets of transition matrices with separately specified rows.
//!
//! Every row of a [`CredalMatrix`] is a finite list of extreme-point
//! distributions. Because `p -> sum_y p(y) f(y)` is linear, the upper and
//! lower transition operators reduce to an exact maximum or minimum over
//! these vertices.
//!
//! Solvers in this crate work against the [`CredalModel`] trait rather than
//! `CredalMatrix` directly, so that product spaces, restrictions and fixed
//! selections can all present themselves as credal models without ever
//! materializing their rows.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{ExtendedValue, Sense};

/// Tolerance on row sums before renormalization.
pub const SUM_TOL: f64 = 1e-12;

/// Ordered state labels with a stable index <-> label bijection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::StateSpace(format!(
                "need at least 2 states, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::StateSpace(format!("duplicate label `{label}`")));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States labelled `0`, `1`, ..., `n-1`.
    pub fn numbered(n: usize) -> Result<Self> {
        StateSpace::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }
}

/// A probability mass function over the states of a [`StateSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    mass: Vec<f64>,
}

impl Distribution {
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, state: usize) -> f64 {
        self.mass[state]
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn point(n: usize, state: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[state] = 1.0;
        Distribution { mass }
    }

    /// Left-to-right dot product over state indices; zero mass never touches `f`.
    pub fn dot(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, v) in self.mass.iter().zip(f) {
            if *p > 0.0 {
                acc += p * v;
            }
        }
        acc
    }
}

/// The extreme points of one state's credal set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CredalRow {
    vertices: Vec<Distribution>,
}

impl CredalRow {
    pub fn vertices(&self) -> &[Distribution] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// What went wrong with a model, and where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: Option<usize>,
    pub label: Option<String>,
    pub vertex: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    TooFewStates {
        count: usize,
    },
    DuplicateLabel {
        label: String,
    },
    RowCount {
        expected: usize,
        actual: usize,
    },
    EmptyRow,
    Dimension {
        expected: usize,
        actual: usize,
    },
    NonFinite {
        entry: usize,
        value: f64,
    },
    NegativeMass {
        entry: usize,
        value: f64,
    },
    MassAboveOne {
        entry: usize,
        value: f64,
    },
    RowSum {
        sum: f64,
    },
    DuplicateVertex {
        first: usize,
    },
    /// Row specification problems found while reading a model file.
    RowSpec {
        reason: String,
    },
    /// Interval bounds that admit no distribution.
    Interval {
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.label, self.row) {
            (Some(label), _) => write!(f, "state `{label}`")?,
            (None, Some(row)) => write!(f, "row {row}")?,
            (None, None) => write!(f, "model")?,
        }
        if let Some(v) = self.vertex {
            write!(f, ", vertex {v}")?;
        }
        f.write_str(": ")?;
        match &self.kind {
            ViolationKind::TooFewStates { count } => {
                write!(f, "need at least 2 states, got {count}")
            }
            ViolationKind::DuplicateLabel { label } => write!(f, "duplicate label `{label}`"),
            ViolationKind::RowCount { expected, actual } => {
                write!(f, "expected {expected} rows, got {actual}")
            }
            ViolationKind::EmptyRow => write!(f, "empty vertex list"),
            ViolationKind::Dimension { expected, actual } => {
                write!(f, "dimension {actual} != {expected}")
            }
            ViolationKind::NonFinite { entry, value } => {
                write!(f, "entry {entry} is not finite ({value})")
            }
            ViolationKind::NegativeMass { entry, value } => {
                write!(f, "negative mass {value} at entry {entry}")
            }
            ViolationKind::MassAboveOne { entry, value } => {
                write!(f, "mass {value} > 1 at entry {entry}")
            }
            ViolationKind::RowSum { sum } => write!(f, "row-sum {sum} ≠ 1"),
            ViolationKind::DuplicateVertex { first } => {
                write!(f, "duplicate of vertex {first}")
            }
            ViolationKind::RowSpec { reason } | ViolationKind::Interval { reason } => {
                f.write_str(reason)
            }
        }
    }
}

/// An unvalidated model: labels plus raw vertex vectors per row.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModelDraft {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl ModelDraft {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<Vec<f64>>>) -> Self {
        ModelDraft { labels, rows }
    }

    /// States labelled by index.
    pub fn numbered(rows: Vec<Vec<Vec<f64>>>) -> Self {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        ModelDraft { labels, rows }
    }

    /// Every invariant violation, in a fixed check order: model-level first,
    /// then per row, per vertex: dimension, entries, sum, duplicates.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.labels.len();
        let model_level = |kind| Violation {
            row: None,
            label: None,
            vertex: None,
            kind,
        };
        if n < 2 {
            out.push(model_level(ViolationKind::TooFewStates { count: n }));
        }
        let mut seen = HashSet::new();
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                out.push(model_level(ViolationKind::DuplicateLabel {
                    label: label.clone(),
                }));
            }
        }
        if self.rows.len() != n {
            out.push(model_level(ViolationKind::RowCount {
                expected: n,
                actual: self.rows.len(),
            }));
        }

        for (r, row) in self.rows.iter().enumerate() {
            let at = |vertex: Option<usize>, kind| Violation {
                row: Some(r),
                label: self.labels.get(r).cloned(),
                vertex,
                kind,
            };
            if row.is_empty() {
                out.push(at(None, ViolationKind::EmptyRow));
                continue;
            }
            let mut normalized: Vec<Vec<f64>> = Vec::with_capacity(row.len());
            for (v, vertex) in row.iter().enumerate() {
                if vertex.len() != n {
                    out.push(at(
                        Some(v),
                        ViolationKind::Dimension {
                            expected: n,
                            actual: vertex.len(),
                        },
                    ));
                    continue;
                }
                let mut entries_ok = true;
                for (entry, &value) in vertex.iter().enumerate() {
                    if !value.is_finite() {
                        out.push(at(Some(v), ViolationKind::NonFinite { entry, value }));
                        entries_ok = false;
                    } else if value < 0.0 {
                        out.push(at(Some(v), ViolationKind::NegativeMass { entry, value }));
                        entries_ok = false;
                    } else if value > 1.0 {
                        out.push(at(Some(v), ViolationKind::MassAboveOne { entry, value }));
                        entries_ok = false;
                    }
                }
                if !entries_ok {
                    continue;
                }
                let sum: f64 = vertex.iter().sum();
                if (sum - 1.0).abs() > SUM_TOL {
                    out.push(at(Some(v), ViolationKind::RowSum { sum }));
                    continue;
                }
                let renormalized = renormalize(vertex, sum);
                if let Some(first) = normalized.iter().position(|w| *w == renormalized) {
                    out.push(at(Some(v), ViolationKind::DuplicateVertex { first }));
                }
                normalized.push(renormalized);
            }
        }
        out
    }
}

/// Divides by `sum`, then folds the leftover rounding error into the largest
/// entry. Vectors already within a few ulps of 1 are returned unchanged, and
/// the output always lands in that band, so renormalizing twice is the same
/// as once (reloading a saved model is the identity).
fn renormalize(vertex: &[f64], sum: f64) -> Vec<f64> {
    if (sum - 1.0).abs() <= settled_band(vertex.len()) {
        return vertex.to_vec();
    }
    let mut out: Vec<f64> = vertex.iter().map(|p| p / sum).collect();
    let largest = (0..out.len())
        .max_by(|&a, &b| out[a].total_cmp(&out[b]))
        .expect("vertex is nonempty");
    for _ in 0..4 {
        let total: f64 = out.iter().sum();
        if total == 1.0 {
            break;
        }
        out[largest] += 1.0 - total;
    }
    out
}

fn settled_band(len: usize) -> f64 {
    2.0 * len.max(1) as f64 * f64::EPSILON
}

/// A credal set of transition matrices with separately specified rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredalMatrix {
    space: StateSpace,
    rows: Vec<CredalRow>,
}

impl CredalMatrix {
    /// Validates and renormalizes each vertex by its actual sum.
    pub fn new(draft: ModelDraft) -> Result<Self> {
        let violations = draft.validate();
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let space = StateSpace::new(draft.labels)?;
        let rows = draft
            .rows
            .into_iter()
            .map(|row| CredalRow {
                vertices: row
                    .into_iter()
                    .map(|v| {
                        let sum: f64 = v.iter().sum();
                        Distribution {
                            mass: renormalize(&v, sum),
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(CredalMatrix { space, rows })
    }

    /// A model whose every row is the single given distribution.
    pub fn precise(space: StateSpace, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.into_iter().map(|r| vec![r]).collect();
        CredalMatrix::new(ModelDraft::new(space.labels, rows))
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn rows(&self) -> &[CredalRow] {
        &self.rows
    }

    pub fn row(&self, state: usize) -> &CredalRow {
        &self.rows[state]
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// True when every row has exactly one vertex.
    pub fn is_precise(&self) -> bool {
        self.rows.iter().all(|r| r.len() == 1)
    }

    /// Always empty for a constructed matrix; kept so callers holding a
    /// `CredalMatrix` can re-check it after deserialization.
    pub fn validate(&self) -> Vec<Violation> {
        self.to_draft().validate()
    }

    pub fn to_draft(&self) -> ModelDraft {
        ModelDraft {
            labels: self.space.labels.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.vertices.iter().map(|v| v.mass.clone()).collect())
                .collect(),
        }
    }
}

/// A per-state vertex choice; a policy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection(pub Vec<usize>);

impl Selection {
    pub fn lowest(n: usize) -> Self {
        Selection(vec![0; n])
    }

    pub fn choice(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check<M: CredalModel + ?Sized>(&self, model: &M) -> Result<()> {
        if self.0.len() != model.num_states() {
            return Err(Error::Dimension {
                expected: model.num_states(),
                actual: self.0.len(),
            });
        }
        for (state, &choice) in self.0.iter().enumerate() {
            if choice >= model.num_vertices(state) {
                return Err(Error::InvalidArgument(format!(
                    "vertex {choice} out of range at state `{}` ({} vertices)",
                    model.state_label(state),
                    model.num_vertices(state)
                )));
            }
        }
        Ok(())
    }
}

/// A finite-state credal set with separately specified, finitely generated rows.
///
/// Implementations only need to enumerate vertex masses; all the operators
/// and solvers are written against this trait.
pub trait CredalModel: Sync {
    fn num_states(&self) -> usize;

    fn num_vertices(&self, state: usize) -> usize;

    /// Writes the positive-mass entries of one vertex into `out` as
    /// `(destination, probability)`, sorted by destination. `out` is cleared
    /// first.
    fn vertex_masses(&self, state: usize, vertex: usize, out: &mut Vec<(usize, f64)>);

    /// Destinations reachable in one step under some vertex, sorted and
    /// deduplicated.
    fn upper_support(&self, state: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut buf = Vec::new();
        for v in 0..self.num_vertices(state) {
            self.vertex_masses(state, v, &mut buf);
            out.extend(buf.iter().map(|&(d, _)| d));
        }
        out.sort_unstable();
        out.dedup();
    }

    fn state_label(&self, state: usize) -> String {
        format!("#{state}")
    }
}

impl CredalModel for CredalMatrix {
    fn num_states(&self) -> usize {
        self.space.len()
    }

    fn num_vertices(&self, state: usize) -> usize {
        self.rows[state].len()
    }

    fn vertex_masses(&self, state: usize, vertex: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let mass = &self.rows[state].vertices[vertex].mass;
        out.extend(
            mass.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(d, &p)| (d, p)),
        );
    }

    fn state_label(&self, state: usize) -> String {
        self.space.label(state).to_string()
    }
}

impl<M: CredalModel + ?Sized> CredalModel for &M {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }
    fn num_vertices(&self, state: usize) -> usize {
        (**self).num_vertices(state)
    }
    fn vertex_masses(&self, state: usize, vertex: usize, out: &mut Vec<(usize, f64)>) {
        (**self).vertex_masses(state, vertex, out)
    }
    fn upper_support(&self, state: usize, out: &mut Vec<usize>) {
        (**self).upper_support(state, out)
    }
    fn state_label(&self, state: usize) -> String {
        (**self).state_label(state)
    }
}

/// The precise chain obtained by fixing one vertex per row of a credal model.
pub struct SelectedModel<'a, M: ?Sized> {
    model: &'a M,
    selection: &'a Selection,
}

impl<'a, M: CredalModel + ?Sized> SelectedModel<'a, M> {
    pub fn new(model: &'a M, selection: &'a Selection) -> Result<Self> {
        selection.check(model)?;
        Ok(SelectedModel { model, selection })
    }
}

impl<M: CredalModel + ?Sized> CredalModel for SelectedModel<'_, M> {
    fn num_states(&self) -> usize {
        self.model.num_states()
    }
    fn num_vertices(&self, _state: usize) -> usize {
        1
    }
    fn vertex_masses(&self, state: usize, _vertex: usize, out: &mut Vec<(usize, f64)>) {
        self.model
            .vertex_masses(state, self.selection.choice(state), out)
    }
    fn state_label(&self, state: usize) -> String {
        self.model.state_label(state)
    }
}

/// `sum_y p(y) f(y)` over a sparse, destination-sorted vertex.
///
/// Entries with zero mass are absent, which realizes `0 * inf = 0`.
pub(crate) fn sparse_dot(masses: &[(usize, f64)], f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &(d, p) in masses {
        acc += p * f[d];
    }
    acc
}

/// Best vertex of one row under `sense`, lowest index on ties.
pub(crate) fn row_optimum<M: CredalModel + ?Sized>(
    model: &M,
    state: usize,
    f: &[f64],
    sense: Sense,
    buf: &mut Vec<(usize, f64)>,
) -> (usize, f64) {
    let mut best = (0, 0.0);
    for v in 0..model.num_vertices(state) {
        model.vertex_masses(state, v, buf);
        let value = sparse_dot(buf, f);
        if v == 0 || sense.improves(value, best.1) {
            best = (v, value);
        }
    }
    best
}

pub(crate) fn check_function<M: CredalModel + ?Sized>(
    model: &M,
    f: &[ExtendedValue],
) -> Result<Vec<f64>> {
    if f.len() != model.num_states() {
        return Err(Error::Dimension {
            expected: model.num_states(),
            actual: f.len(),
        });
    }
    // ExtendedValue cannot be negative, so only raw callers need this check.
    Ok(f.iter().map(|v| v.get()).collect())
}

/// Checks a raw function for negative or NaN entries.
pub fn extended_vector<M: CredalModel + ?Sized>(
    model: &M,
    f: &[f64],
) -> Result<Vec<ExtendedValue>> {
    if f.len() != model.num_states() {
        return Err(Error::Dimension {
            expected: model.num_states(),
            actual: f.len(),
        });
    }
    f.iter()
        .enumerate()
        .map(|(i, &v)| {
            ExtendedValue::new(v).ok_or_else(|| Error::NegativeEntry {
                label: model.state_label(i),
                value: v,
            })
        })
        .collect()
}

/// Row-wise optimum and its value for every state, in parallel.
pub(crate) fn optimize_rows<M: CredalModel + ?Sized>(
    model: &M,
    f: &[f64],
    sense: Sense,
) -> Vec<(usize, f64)> {
    (0..model.num_states())
        .into_par_iter()
        .map_init(Vec::new, |buf, state| {
            row_optimum(model, state, f, sense, buf)
        })
        .collect()
}

/// `[T f](x)` optimized over the credal set in the given sense.
pub fn apply<M: CredalModel + ?Sized>(
    model: &M,
    f: &[ExtendedValue],
    sense: Sense,
) -> Result<Vec<ExtendedValue>> {
    let raw = check_function(model, f)?;
    Ok(optimize_rows(model, &raw, sense)
        .into_iter()
        .map(|(_, v)| ExtendedValue::new(v).expect("nonnegative combination"))
        .collect())
}

/// The upper transition operator.
pub fn apply_upper<M: CredalModel + ?Sized>(
    model: &M,
    f: &[ExtendedValue],
) -> Result<Vec<ExtendedValue>> {
    apply(model, f, Sense::Upper)
}

/// The lower transition operator.
pub fn apply_lower<M: CredalModel + ?Sized>(
    model: &M,
    f: &[ExtendedValue],
) -> Result<Vec<ExtendedValue>> {
    apply(model, f, Sense::Lower)
}

/// A selection attaining [`apply`] row by row; ties go to the lowest index.
pub fn greedy_selection<M: CredalModel + ?Sized>(
    model: &M,
    f: &[ExtendedValue],
    sense: Sense,
) -> Result<Selection> {
    let raw = check_function(model, f)?;
    Ok(Selection(
        optimize_rows(model, &raw, sense)
            .into_iter()
            .map(|(v, _)| v)
            .collect(),
    ))
}
