//! JSON result and selection files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model_file::model_hash;
use crate::credal::{CredalMatrix, CredalModel, Selection, Violation};
use crate::error::{Error, Result};
use crate::meeting::{JointSelection, ProductSpace};
use crate::precise::SimulationStats;
use crate::reachability::Classification;
use crate::sets::StateSet;
use crate::value::{ExtendedValue, Sense};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub model_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<ValueEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selections: Vec<ChoiceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

/// A value at a state (one label) or joint state (one label per agent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    pub state: Vec<String>,
    pub value: ExtendedValue,
}

/// Chosen vertex indices at a state, one per agent for joint states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiceEntry {
    pub state: Vec<String>,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationEntry {
    pub sense: Sense,
    pub target: Vec<Vec<String>>,
    pub absorbing: Vec<Vec<String>>,
    #[serde(rename = "unsafe")]
    pub unsafe_states: Vec<Vec<String>>,
    pub finite: Vec<Vec<String>>,
}

impl ClassificationEntry {
    pub fn new(c: &Classification, label: impl Fn(usize) -> Vec<String>) -> Self {
        let list = |s: &StateSet| s.iter().map(&label).collect();
        ClassificationEntry {
            sense: c.sense,
            target: list(&c.target),
            absorbing: list(&c.absorbing),
            unsafe_states: list(&c.unsafe_states),
            finite: list(&c.finite),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub solver: String,
    pub iterations: usize,
    pub residual: f64,
}

impl ResultFile {
    pub fn new(command: &str, model: &CredalMatrix) -> Self {
        ResultFile {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            parameters: BTreeMap::new(),
            model_hash: model_hash(model),
            values: Vec::new(),
            selections: Vec::new(),
            classification: None,
            diagnostics: None,
            simulation: None,
            violations: Vec::new(),
        }
    }

    pub fn parameter(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result files always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        ResultFile::from_json(&fs::read_to_string(path)?)
    }
}

/// Vertex choices read from or written to a JSON file:
/// `{"choices": [{"state": ["a", "b"], "vertices": [1, 0]}]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionFile {
    pub choices: Vec<ChoiceEntry>,
}

impl SelectionFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Single-chain selection; states without an entry use vertex 0.
    pub fn to_selection(&self, model: &CredalMatrix) -> Result<Selection> {
        let mut selection = Selection::lowest(model.len());
        for entry in &self.choices {
            let (label, vertex) = match (entry.state.as_slice(), entry.vertices.as_slice()) {
                ([label], [vertex]) => (label, *vertex),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "selection entry for ({}) needs exactly one state and one vertex",
                        entry.state.join(",")
                    )))
                }
            };
            selection.0[model.space().index_of(label)?] = vertex;
        }
        selection.check(model)?;
        Ok(selection)
    }

    pub fn to_joint(&self, space: &ProductSpace) -> Result<JointSelection> {
        let mut joint = JointSelection::new();
        for entry in &self.choices {
            if entry.state.len() != space.agents() {
                return Err(Error::InvalidArgument(format!(
                    "selection entry ({}) has {} states but there are {} agents",
                    entry.state.join(","),
                    entry.state.len(),
                    space.agents()
                )));
            }
            let tuple = entry
                .state
                .iter()
                .map(|l| space.base().index_of(l))
                .collect::<Result<Vec<_>>>()?;
            joint.insert(tuple, entry.vertices.clone())?;
        }
        Ok(joint)
    }

    pub fn from_selection<M: CredalModel + ?Sized>(model: &M, selection: &Selection) -> Self {
        SelectionFile {
            choices: (0..selection.len())
                .map(|x| ChoiceEntry {
                    state: vec![model.state_label(x)],
                    vertices: vec![selection.choice(x)],
                })
                .collect(),
        }
    }

    pub fn from_joint(space: &ProductSpace, selection: &JointSelection) -> Self {
        SelectionFile {
            choices: selection
                .iter()
                .map(|(tuple, choices)| ChoiceEntry {
                    state: tuple
                        .iter()
                        .map(|&z| space.base().label(z).to_string())
                        .collect(),
                    vertices: choices.to_vec(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::ModelDraft;

    #[test]
    fn json_round_trip_keeps_infinity() {
        let model = CredalMatrix::new(ModelDraft::numbered(vec![
            vec![vec![0.5, 0.5]],
            vec![vec![0.0, 1.0]],
        ]))
        .unwrap();
        let mut file = ResultFile::new("hit", &model).parameter("sense", "upper");
        file.values = vec![
            ValueEntry {
                state: vec!["0".into()],
                value: ExtendedValue::INFINITY,
            },
            ValueEntry {
                state: vec!["1".into()],
                value: ExtendedValue::finite(0.1 + 0.2),
            },
        ];
        file.diagnostics = Some(Diagnostics {
            solver: "policy-iteration".into(),
            iterations: 3,
            residual: 1e-17,
        });
        let text = file.to_json();
        assert!(text.contains("\"inf\""));
        assert_eq!(ResultFile::from_json(&text).unwrap(), file);
    }

    #[test]
    fn selection_file_defaults_to_vertex_zero() {
        let model = CredalMatrix::new(ModelDraft::new(
            vec!["a".into(), "b".into()],
            vec![vec![vec![0.5, 0.5], vec![0.9, 0.1]], vec![vec![0.0, 1.0]]],
        ))
        .unwrap();
        let file: SelectionFile =
            serde_json::from_str(r#"{"choices":[{"state":["a"],"vertices":[1]}]}"#).unwrap();
        assert_eq!(file.to_selection(&model).unwrap(), Selection(vec![1, 0]));
        let bad: SelectionFile =
            serde_json::from_str(r#"{"choices":[{"state":["b"],"vertices":[1]}]}"#).unwrap();
        let err = bad.to_selection(&model).unwrap_err().to_string();
        assert!(err.contains("`b`"), "{err}");
    }
}
