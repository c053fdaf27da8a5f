use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::credal::StateSpace;
use crate::error::{Error, Result};
use crate::sets::StateSet;

/// Refuse product spaces larger than this.
pub const MAX_PRODUCT_STATES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMode {
    /// Ordered tuples, one coordinate per agent.
    Full,
    /// Sorted tuples: agents are interchangeable.
    Quotient,
}

impl fmt::Display for ProductMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProductMode::Full => "full",
            ProductMode::Quotient => "quotient",
        })
    }
}

impl FromStr for ProductMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ProductMode::Full),
            "quotient" => Ok(ProductMode::Quotient),
            other => Err(Error::InvalidArgument(format!(
                "unknown product mode `{other}` (expected full or quotient)"
            ))),
        }
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of joint states for `n` base states and `agents` agents.
pub fn product_size(n: usize, agents: usize, mode: ProductMode) -> Option<u128> {
    match mode {
        ProductMode::Full => (n as u128).checked_pow(agents as u32),
        ProductMode::Quotient => binomial((n + agents - 1) as u128, agents as u128),
    }
}

/// Enumerated joint states of `agents` walkers on a common state space.
///
/// Full mode lists tuples lexicographically (agent 0 most significant);
/// quotient mode lists non-decreasing tuples lexicographically.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    base: StateSpace,
    agents: usize,
    mode: ProductMode,
    tuples: Vec<usize>,
    index: HashMap<Vec<usize>, usize>,
    diagonal: StateSet,
}

pub fn build_product_space(
    space: &StateSpace,
    agents: usize,
    mode: ProductMode,
) -> Result<ProductSpace> {
    if agents < 2 {
        return Err(Error::InvalidArgument(format!(
            "meeting times need at least 2 agents, got {agents}"
        )));
    }
    let n = space.len();
    let size = product_size(n, agents, mode).unwrap_or(u128::MAX);
    if size > MAX_PRODUCT_STATES as u128 {
        return Err(Error::ProductOverflow {
            states: size,
            limit: MAX_PRODUCT_STATES,
        });
    }
    let size = size as usize;

    let mut tuples = Vec::with_capacity(size * agents);
    let mut current = vec![0; agents];
    'outer: loop {
        tuples.extend_from_slice(&current);
        // Advance to the next tuple, rightmost coordinate fastest.
        let mut pos = agents;
        while pos > 0 {
            pos -= 1;
            if current[pos] + 1 < n {
                current[pos] += 1;
                let reset = match mode {
                    ProductMode::Full => 0,
                    ProductMode::Quotient => current[pos],
                };
                for c in &mut current[pos + 1..] {
                    *c = reset;
                }
                continue 'outer;
            }
        }
        break;
    }
    debug_assert_eq!(tuples.len(), size * agents);

    let index = match mode {
        ProductMode::Full => HashMap::new(),
        ProductMode::Quotient => tuples
            .chunks(agents)
            .enumerate()
            .map(|(i, t)| (t.to_vec(), i))
            .collect(),
    };
    let diagonal = StateSet::from_mask(
        tuples
            .chunks(agents)
            .map(|t| t.iter().all(|&z| z == t[0]))
            .collect(),
    );
    Ok(ProductSpace {
        base: space.clone(),
        agents,
        mode,
        tuples,
        index,
        diagonal,
    })
}

impl ProductSpace {
    pub fn len(&self) -> usize {
        self.tuples.len() / self.agents
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn mode(&self) -> ProductMode {
        self.mode
    }

    pub fn base(&self) -> &StateSpace {
        &self.base
    }

    pub fn tuple(&self, index: usize) -> &[usize] {
        &self.tuples[index * self.agents..(index + 1) * self.agents]
    }

    /// States where all agents coincide.
    pub fn diagonal(&self) -> &StateSet {
        &self.diagonal
    }

    /// Index of a tuple; in quotient mode any ordering is accepted.
    pub fn index_of(&self, tuple: &[usize]) -> Result<usize> {
        let n = self.base.len();
        if tuple.len() != self.agents {
            return Err(Error::Dimension {
                expected: self.agents,
                actual: tuple.len(),
            });
        }
        if let Some(&z) = tuple.iter().find(|&&z| z >= n) {
            return Err(Error::UnknownState(format!("#{z}")));
        }
        Ok(match self.mode {
            ProductMode::Full => tuple.iter().fold(0, |acc, &z| acc * n + z),
            ProductMode::Quotient => {
                let mut sorted = tuple.to_vec();
                sorted.sort_unstable();
                self.index[&sorted]
            }
        })
    }

    /// Index of a tuple that is already sorted in quotient mode.
    pub(crate) fn index_of_canonical(&self, tuple: &[usize]) -> usize {
        let n = self.base.len();
        match self.mode {
            ProductMode::Full => tuple.iter().fold(0, |acc, &z| acc * n + z),
            ProductMode::Quotient => self.index[tuple],
        }
    }

    /// Index of a tuple given by base-state labels.
    pub fn index_of_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        let tuple = labels
            .iter()
            .map(|l| self.base.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.index_of(&tuple)
    }

    /// `(a,b,...)` from the base labels.
    pub fn label(&self, index: usize) -> String {
        let parts: Vec<&str> = self
            .tuple(index)
            .iter()
            .map(|&z| self.base.label(z))
            .collect();
        format!("({})", parts.join(","))
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn tuple_labels(&self, index: usize) -> Vec<String> {
        self.tuple(index)
            .iter()
            .map(|&z| self.base.label(z).to_string())
            .collect()
    }
}
