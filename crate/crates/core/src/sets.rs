use std::fmt;

/// A subset of the dense index range `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet {
            mask: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        StateSet {
            mask: vec![true; n],
        }
    }

    /// Out-of-range indices panic.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = StateSet::empty(n);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        StateSet { mask }
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let was = self.mask[i];
        self.mask[i] = true;
        !was
    }

    pub fn remove(&mut self, i: usize) {
        self.mask[i] = false;
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn complement(&self) -> Self {
        StateSet {
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(
            self.universe(),
            other.universe(),
            "state sets over different spaces"
        );
        StateSet {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
