use std::fmt;

/// Sorted, duplicate-free set of node indices.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_sorted_unchecked(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Self(v)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self(
            mask.iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = usize> + ExactSizeIterator + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// Membership mask over `0..n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            m[i] = true;
        }
        m
    }

    /// `{0..n} \ self`.
    pub fn complement(&self, n: usize) -> Self {
        let m = self.mask(n);
        Self((0..n).filter(|&i| !m[i]).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.iter().all(|&i| !other.contains(i))
    }

    /// Position of `i` inside the set, if present.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.0).finish()
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}
