use std::collections::BTreeMap;

use super::product::{binomial, ProductMode, ProductSpace};
use crate::credal::{CredalMatrix, CredalModel, Selection};
use crate::error::{Error, Result};

/// The joint credal chain of several agents sharing one credal model.
///
/// Rows are generated on demand. A vertex of a joint row is a tuple of
/// per-agent vertex choices; in quotient mode agents standing on the same
/// state are interchangeable, so their choices form a multiset.
pub struct JointModel<'a> {
    model: &'a CredalMatrix,
    space: &'a ProductSpace,
}

/// Number of non-decreasing length-`r` tuples over `k` symbols.
fn multisets(k: usize, r: usize) -> usize {
    if r == 0 {
        return 1;
    }
    binomial((k + r - 1) as u128, r as u128)
        .and_then(|c| usize::try_from(c).ok())
        .expect("vertex count overflow")
}

/// Lexicographic rank of a non-decreasing tuple over `k` symbols.
fn rank_multiset(sorted: &[usize], k: usize) -> usize {
    let c = sorted.len();
    let mut rank = 0;
    let mut prev = 0;
    for (i, &value) in sorted.iter().enumerate() {
        let rest = c - i - 1;
        for v in prev..value {
            rank += multisets(k - v, rest);
        }
        prev = value;
    }
    rank
}

fn unrank_multiset(mut rank: usize, k: usize, out: &mut [usize]) {
    let c = out.len();
    let mut prev = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let rest = c - i - 1;
        let mut v = prev;
        loop {
            let count = multisets(k - v, rest);
            if rank < count {
                break;
            }
            rank -= count;
            v += 1;
        }
        *slot = v;
        prev = v;
    }
}

/// Runs of equal coordinates in a sorted tuple as `(start, len)`.
fn runs(tuple: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=tuple.len() {
        if i == tuple.len() || tuple[i] != tuple[start] {
            out.push((start, i - start));
            start = i;
        }
    }
    out
}

impl<'a> JointModel<'a> {
    pub fn new(model: &'a CredalMatrix, space: &'a ProductSpace) -> Result<Self> {
        if model.space() != space.base() {
            return Err(Error::InvalidArgument(
                "product space was built over a different state space".into(),
            ));
        }
        Ok(JointModel { model, space })
    }

    pub fn space(&self) -> &ProductSpace {
        self.space
    }

    pub fn base(&self) -> &CredalMatrix {
        self.model
    }

    /// Per-agent vertex choices of joint vertex `vertex` at `state`.
    pub fn decode(&self, state: usize, vertex: usize) -> Vec<usize> {
        let tuple = self.space.tuple(state);
        let mut choices = vec![0; tuple.len()];
        let mut rest = vertex;
        match self.space.mode() {
            ProductMode::Full => {
                for j in (0..tuple.len()).rev() {
                    let radix = self.model.num_vertices(tuple[j]);
                    choices[j] = rest % radix;
                    rest /= radix;
                }
            }
            ProductMode::Quotient => {
                for &(start, len) in runs(tuple).iter().rev() {
                    let k = self.model.num_vertices(tuple[start]);
                    let radix = multisets(k, len);
                    unrank_multiset(rest % radix, k, &mut choices[start..start + len]);
                    rest /= radix;
                }
            }
        }
        choices
    }

    /// Joint vertex index of per-agent choices aligned with the tuple of
    /// `state`. In quotient mode the choices of co-located agents may come
    /// in any order.
    pub fn encode(&self, state: usize, choices: &[usize]) -> Result<usize> {
        let tuple = self.space.tuple(state);
        if choices.len() != tuple.len() {
            return Err(Error::Dimension {
                expected: tuple.len(),
                actual: choices.len(),
            });
        }
        for (&z, &c) in tuple.iter().zip(choices) {
            if c >= self.model.num_vertices(z) {
                return Err(Error::InvalidArgument(format!(
                    "vertex {c} out of range at state `{}` of joint state {} ({} vertices)",
                    self.model.space().label(z),
                    self.space.label(state),
                    self.model.num_vertices(z)
                )));
            }
        }
        let mut vertex = 0;
        match self.space.mode() {
            ProductMode::Full => {
                for (&z, &c) in tuple.iter().zip(choices) {
                    vertex = vertex * self.model.num_vertices(z) + c;
                }
            }
            ProductMode::Quotient => {
                for (start, len) in runs(tuple) {
                    let k = self.model.num_vertices(tuple[start]);
                    let mut group = choices[start..start + len].to_vec();
                    group.sort_unstable();
                    vertex = vertex * multisets(k, len) + rank_multiset(&group, k);
                }
            }
        }
        Ok(vertex)
    }
}

impl CredalModel for JointModel<'_> {
    fn num_states(&self) -> usize {
        self.space.len()
    }

    fn num_vertices(&self, state: usize) -> usize {
        let tuple = self.space.tuple(state);
        match self.space.mode() {
            ProductMode::Full => tuple.iter().map(|&z| self.model.num_vertices(z)).product(),
            ProductMode::Quotient => runs(tuple)
                .into_iter()
                .map(|(start, len)| multisets(self.model.num_vertices(tuple[start]), len))
                .product(),
        }
    }

    fn vertex_masses(&self, state: usize, vertex: usize, out: &mut Vec<(usize, f64)>) {
        let tuple = self.space.tuple(state);
        let choices = self.decode(state, vertex);
        let agent_masses: Vec<Vec<(usize, f64)>> = tuple
            .iter()
            .zip(&choices)
            .map(|(&z, &c)| {
                let mut buf = Vec::new();
                self.model.vertex_masses(z, c, &mut buf);
                buf
            })
            .collect();
        out.clear();
        for_each_product(&agent_masses, |dest, p| {
            if self.space.mode() == ProductMode::Quotient {
                dest.sort_unstable();
            }
            out.push((self.space.index_of_canonical(dest), p));
        });
        merge_sorted(out);
    }

    fn upper_support(&self, state: usize, out: &mut Vec<usize>) {
        let supports: Vec<Vec<(usize, f64)>> = self
            .space
            .tuple(state)
            .iter()
            .map(|&z| {
                let mut s = Vec::new();
                self.model.upper_support(z, &mut s);
                s.into_iter().map(|d| (d, 1.0)).collect()
            })
            .collect();
        out.clear();
        for_each_product(&supports, |dest, _| {
            if self.space.mode() == ProductMode::Quotient {
                dest.sort_unstable();
            }
            out.push(self.space.index_of_canonical(dest));
        });
        out.sort_unstable();
        out.dedup();
    }

    fn state_label(&self, state: usize) -> String {
        self.space.label(state)
    }
}

/// Calls `f` with every destination tuple of the independent product and
/// its probability. The tuple may be reordered by `f`.
fn for_each_product(factors: &[Vec<(usize, f64)>], mut f: impl FnMut(&mut [usize], f64)) {
    let m = factors.len();
    if factors.iter().any(|v| v.is_empty()) {
        return;
    }
    let mut odometer = vec![0; m];
    let mut dest = vec![0; m];
    loop {
        let mut p = 1.0;
        for j in 0..m {
            let (d, q) = factors[j][odometer[j]];
            dest[j] = d;
            p *= q;
        }
        f(&mut dest, p);
        let mut pos = m;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < factors[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

fn merge_sorted(entries: &mut Vec<(usize, f64)>) {
    entries.sort_by_key(|e| e.0);
    let mut write = 0;
    for read in 0..entries.len() {
        if write > 0 && entries[write - 1].0 == entries[read].0 {
            entries[write - 1].1 += entries[read].1;
        } else {
            entries[write] = entries[read];
            write += 1;
        }
    }
    entries.truncate(write);
}

/// Probability of moving from joint state `from` to `to` when the agents use
/// the vertex choices `choices` (aligned with the tuple of `from`).
pub fn joint_transition_weight(
    model: &CredalMatrix,
    space: &ProductSpace,
    from: usize,
    choices: &[usize],
    to: usize,
) -> Result<f64> {
    let joint = JointModel::new(model, space)?;
    if from >= space.len() || to >= space.len() {
        return Err(Error::InvalidArgument(format!(
            "joint state index out of range ({} states)",
            space.len()
        )));
    }
    let vertex = joint.encode(from, choices)?;
    let mut masses = Vec::new();
    joint.vertex_masses(from, vertex, &mut masses);
    Ok(masses
        .iter()
        .find(|&&(d, _)| d == to)
        .map_or(0.0, |&(_, p)| p))
}

/// Per-agent vertex choices keyed by joint state tuple.
///
/// Tuples without an entry use vertex 0 for every agent. In quotient mode
/// keys are stored sorted, with the choices reordered alongside.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JointSelection {
    choices: BTreeMap<Vec<usize>, Vec<usize>>,
}

impl JointSelection {
    pub fn new() -> Self {
        JointSelection::default()
    }

    pub fn insert(&mut self, tuple: Vec<usize>, choices: Vec<usize>) -> Result<()> {
        if tuple.len() != choices.len() {
            return Err(Error::Dimension {
                expected: tuple.len(),
                actual: choices.len(),
            });
        }
        self.choices.insert(tuple, choices);
        Ok(())
    }

    pub fn get(&self, tuple: &[usize]) -> Option<&[usize]> {
        self.choices.get(tuple).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.choices
            .iter()
            .map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    /// Every ordering of every entry, so that a selection written for the
    /// quotient space can drive the full product space.
    pub fn symmetrized(&self) -> JointSelection {
        let mut out = JointSelection::new();
        for (tuple, choices) in &self.choices {
            for perm in permutations(tuple.len()) {
                let t: Vec<usize> = perm.iter().map(|&i| tuple[i]).collect();
                let c: Vec<usize> = perm.iter().map(|&i| choices[i]).collect();
                out.choices.entry(t).or_insert(c);
            }
        }
        out
    }

    /// Joint vertex indices for `joint`; off-table and diagonal states get 0.
    pub fn to_selection(&self, joint: &JointModel<'_>) -> Result<Selection> {
        let space = joint.space();
        let mut selection = vec![0; space.len()];
        for (tuple, choices) in &self.choices {
            let state = space.index_of(tuple)?;
            let aligned = match space.mode() {
                ProductMode::Full => choices.clone(),
                ProductMode::Quotient => {
                    let mut pairs: Vec<(usize, usize)> =
                        tuple.iter().copied().zip(choices.iter().copied()).collect();
                    pairs.sort_unstable();
                    pairs.into_iter().map(|(_, c)| c).collect()
                }
            };
            selection[state] = joint.encode(state, &aligned)?;
        }
        for d in space.diagonal().iter() {
            selection[d] = 0;
        }
        Ok(Selection(selection))
    }

    /// Decodes every off-diagonal entry of a joint selection.
    pub fn from_selection(joint: &JointModel<'_>, selection: &Selection) -> JointSelection {
        let space = joint.space();
        let mut out = JointSelection::new();
        for state in 0..space.len() {
            if space.diagonal().contains(state) {
                continue;
            }
            out.choices.insert(
                space.tuple(state).to_vec(),
                joint.decode(state, selection.choice(state)),
            );
        }
        out
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for k in 0..m {
        let mut next = Vec::new();
        for p in &out {
            for pos in 0..=k {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        out = next;
    }
    out.sort();
    out
}
