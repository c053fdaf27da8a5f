//! The TOML model format.
//!
//! ```toml
//! name = "lazy walk"
//! states = ["a", "b"]
//!
//! [[rows]]
//! state = "a"
//! vertices = [[0.5, 0.5], [0.9, 0.1]]
//!
//! [[rows]]
//! state = "b"
//! lower = [0.0, 0.6]
//! upper = [0.4, 1.0]
//! ```
//!
//! Rows may omit `state`, in which case they are taken in order. Interval
//! rows are expanded to the vertices of `{p : lower <= p <= upper, sum p = 1}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::credal::{CredalMatrix, ModelDraft, Violation, ViolationKind, SUM_TOL};
use crate::error::{Error, Result};

/// Interval rows are expanded by enumeration, which is exponential in the
/// number of states.
pub const MAX_INTERVAL_STATES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<String>,
    #[serde(default)]
    pub rows: Vec<RowSpec>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        ModelFile::parse(&text, &path.display().to_string())
    }

    /// Vertex-form file for a validated model, rows in state order.
    pub fn from_matrix(model: &CredalMatrix) -> Self {
        let draft = model.to_draft();
        ModelFile {
            name: None,
            description: None,
            rows: draft
                .labels
                .iter()
                .zip(draft.rows)
                .map(|(label, vertices)| RowSpec {
                    state: Some(label.clone()),
                    vertices: Some(vertices),
                    ..RowSpec::default()
                })
                .collect(),
            states: draft.labels,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    /// Resolves rows to states, expands intervals and validates.
    pub fn to_matrix(&self) -> Result<CredalMatrix> {
        let n = self.states.len();
        let mut violations = Vec::new();
        let mut rows: Vec<Option<Vec<Vec<f64>>>> = vec![None; n];
        let mut unresolved = 0;

        for (position, spec) in self.rows.iter().enumerate() {
            let index = match &spec.state {
                Some(label) => match self.states.iter().position(|s| s == label) {
                    Some(i) => i,
                    None => return Err(Error::UnknownState(label.clone())),
                },
                None => position,
            };
            if index >= n {
                unresolved += 1;
                continue;
            }
            let label = self.states[index].clone();
            let at = |kind| Violation {
                row: Some(index),
                label: Some(label.clone()),
                vertex: None,
                kind,
            };
            if rows[index].is_some() {
                violations.push(at(ViolationKind::RowSpec {
                    reason: "row given more than once".into(),
                }));
                continue;
            }
            let vertices = match (&spec.vertices, &spec.lower, &spec.upper) {
                (Some(v), None, None) => v.clone(),
                (None, Some(lower), Some(upper)) => {
                    if n > MAX_INTERVAL_STATES {
                        return Err(Error::InvalidArgument(format!(
                            "state `{label}`: interval rows are limited to {MAX_INTERVAL_STATES} \
                             states, the model has {n}; list the vertices instead"
                        )));
                    }
                    match interval_vertices(lower, upper) {
                        Ok(v) => v,
                        Err(reasons) => {
                            for reason in reasons {
                                violations.push(at(ViolationKind::Interval { reason }));
                            }
                            continue;
                        }
                    }
                }
                _ => {
                    violations.push(at(ViolationKind::RowSpec {
                        reason: "row needs either `vertices` or both `lower` and `upper`".into(),
                    }));
                    continue;
                }
            };
            rows[index] = Some(vertices);
        }
        if unresolved > 0 {
            violations.push(Violation {
                row: None,
                label: None,
                vertex: None,
                kind: ViolationKind::RowCount {
                    expected: n,
                    actual: self.rows.len(),
                },
            });
        }
        for (index, row) in rows.iter().enumerate() {
            if row.is_none() && !violations.iter().any(|v| v.row == Some(index)) {
                violations.push(Violation {
                    row: Some(index),
                    label: Some(self.states[index].clone()),
                    vertex: None,
                    kind: ViolationKind::RowSpec {
                        reason: "no row given".into(),
                    },
                });
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let draft = ModelDraft::new(
            self.states.clone(),
            rows.into_iter().map(Option::unwrap).collect(),
        );
        CredalMatrix::new(draft)
    }
}

/// Vertices of `{p : lower <= p <= upper, sum p = 1}`, or the reasons the
/// set is empty or malformed.
///
/// Every vertex has at least `N - 1` coordinates at a bound; the remaining
/// one is fixed by the sum. Candidates are generated in a fixed order and
/// deduplicated.
pub fn interval_vertices(
    lower: &[f64],
    upper: &[f64],
) -> std::result::Result<Vec<Vec<f64>>, Vec<String>> {
    let n = lower.len();
    let mut reasons = Vec::new();
    if upper.len() != n {
        reasons.push(format!(
            "lower has {} entries but upper has {}",
            n,
            upper.len()
        ));
        return Err(reasons);
    }
    for (i, (&l, &u)) in lower.iter().zip(upper).enumerate() {
        for (name, v) in [("lower", l), ("upper", u)] {
            if !(0.0..=1.0).contains(&v) {
                reasons.push(format!("{name}[{i}] = {v} is outside [0, 1]"));
            }
        }
        if l > u {
            reasons.push(format!("lower[{i}] = {l} exceeds upper[{i}] = {u}"));
        }
    }
    let sum_lower: f64 = lower.iter().sum();
    let sum_upper: f64 = upper.iter().sum();
    if sum_lower > 1.0 + SUM_TOL {
        reasons.push(format!("lower bounds sum to {sum_lower} > 1"));
    }
    if sum_upper < 1.0 - SUM_TOL {
        reasons.push(format!("upper bounds sum to {sum_upper} < 1"));
    }
    if !reasons.is_empty() {
        return Err(reasons);
    }

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for free in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != free).collect();
        for mask in 0..1usize << others.len() {
            let mut p = lower.to_vec();
            for (bit, &j) in others.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    p[j] = upper[j];
                }
            }
            let rest: f64 = others.iter().map(|&j| p[j]).sum();
            let value = 1.0 - rest;
            if value < lower[free] - SUM_TOL || value > upper[free] + SUM_TOL {
                continue;
            }
            p[free] = value.clamp(lower[free], upper[free]);
            let duplicate = vertices
                .iter()
                .any(|w| w.iter().zip(&p).all(|(a, b)| (a - b).abs() <= SUM_TOL));
            if !duplicate {
                vertices.push(p);
            }
        }
    }
    Ok(vertices)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CredalMatrix> {
    ModelFile::load(path)?.to_matrix()
}

pub fn save_model(path: impl AsRef<Path>, model: &CredalMatrix) -> Result<()> {
    fs::write(path, ModelFile::from_matrix(model).to_toml())?;
    Ok(())
}

/// SHA-256 of the vertex-form serialization, as lowercase hex.
pub fn model_hash(model: &CredalMatrix) -> String {
    hex::encode(Sha256::digest(
        ModelFile::from_matrix(model).to_toml().as_bytes(),
    ))
}
