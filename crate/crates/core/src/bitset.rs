use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

const WORD: usize = 64;

/// Fixed-universe bitset over path indices `0..len`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PathSet {
    len: usize,
    words: Vec<u64>,
}

impl PathSet {
    pub fn empty(len: usize) -> Self {
        PathSet {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::empty(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn from_range(len: usize, start: usize, end: usize) -> Self {
        Self::from_indices(len, start..end)
    }

    /// Size of the universe, not the number of members.
    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "path index {i} out of range {}", self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "path index {i} out of range {}", self.len);
        self.words[i / WORD] &= !(1 << (i % WORD));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / WORD] & (1 << (i % WORD)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    pub fn complement(&self) -> Self {
        let mut s = PathSet {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.trim();
        s
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            core::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + bit)
            })
        })
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.len, other.len, "path sets over different universes");
        PathSet {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn trim(&mut self) {
        let tail = self.len % WORD;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

/// Canonical order: by cardinality, then lexicographically by sorted members.
impl Ord for PathSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.count().cmp(&other.count()))
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for PathSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl core::fmt::Debug for PathSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_masks_tail_bits() {
        let s = PathSet::from_indices(70, [0, 69]);
        let c = s.complement();
        assert_eq!(c.count(), 68);
        assert!(!c.contains(69));
        assert!(c.complement() == s);
        assert!(PathSet::full(70).complement().is_empty());
    }

    #[test]
    fn iter_is_sorted() {
        let s = PathSet::from_indices(200, [150, 3, 64, 63]);
        assert_eq!(s.iter().collect::<Vec<_>>(), [3, 63, 64, 150]);
        assert_eq!(s.first(), Some(3));
    }

    #[test]
    fn canonical_order_is_size_then_members() {
        let a = PathSet::from_indices(8, [6, 7]);
        let b = PathSet::from_indices(8, [0, 1, 2]);
        let c = PathSet::from_indices(8, [0, 7]);
        assert!(a < b);
        assert!(c < a);
        assert!(PathSet::empty(8) < c);
    }

    #[test]
    fn zero_length_universe() {
        let s = PathSet::full(0);
        assert!(s.is_empty());
        assert!(s.is_full());
    }
}
