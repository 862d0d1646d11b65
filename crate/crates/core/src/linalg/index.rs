use crate::error::{AmcError, Result};

/// Ordered set of distinct indices below `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    bound: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, bound: usize) -> Result<Self> {
        let mut seen = vec![false; bound];
        for &i in &indices {
            if i >= bound {
                return Err(AmcError::OutOfBounds { index: i, bound });
            }
            if seen[i] {
                return Err(AmcError::DuplicateIndex(i));
            }
            seen[i] = true;
        }
        Ok(Self { indices, bound })
    }

    pub fn empty(bound: usize) -> Self {
        Self { indices: Vec::new(), bound }
    }

    pub fn full(bound: usize) -> Self {
        Self { indices: (0..bound).collect(), bound }
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    /// Appends `i`; returns false if it was already present.
    pub fn insert(&mut self, i: usize) -> Result<bool> {
        if i >= self.bound {
            return Err(AmcError::OutOfBounds { index: i, bound: self.bound });
        }
        if self.contains(i) {
            return Ok(false);
        }
        self.indices.push(i);
        Ok(true)
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }

    /// Indices below `bound` not in the set, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut inside = vec![false; self.bound];
        for &i in &self.indices {
            inside[i] = true;
        }
        (0..self.bound).filter(|&i| !inside[i]).collect()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.indices
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates() {
        assert!(IndexSet::new(vec![0, 3], 3).is_err());
        assert_eq!(IndexSet::new(vec![1, 1], 3), Err(AmcError::DuplicateIndex(1)));
        let mut s = IndexSet::new(vec![2, 0], 4).unwrap();
        assert_eq!(s.as_slice(), &[2, 0]);
        assert!(!s.insert(2).unwrap());
        assert!(s.insert(3).unwrap());
        assert_eq!(s.complement(), vec![1]);
        assert_eq!(s.sorted(), vec![0, 2, 3]);
    }
}
