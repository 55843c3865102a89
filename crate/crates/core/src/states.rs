//! Fixed-width state sets.

use std::fmt;

use fixedbitset::FixedBitSet;

/// A set of states of a system with a fixed number of states, stored as a
/// bit-vector indexed by state.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct StateSet(FixedBitSet);

/// Number of states packed into one block of a [`StateSet`].
pub const BLOCK_BITS: usize = usize::BITS as usize;

impl StateSet {
    pub fn empty(n: usize) -> StateSet {
        StateSet(FixedBitSet::with_capacity(n))
    }

    pub fn full(n: usize) -> StateSet {
        let mut b = FixedBitSet::with_capacity(n);
        b.insert_range(..);
        StateSet(b)
    }

    pub fn from_states(n: usize, states: impl IntoIterator<Item = usize>) -> StateSet {
        let mut s = StateSet::empty(n);
        for q in states {
            s.insert(q);
        }
        s
    }

    /// Builds a set from raw blocks; bits past `n` are cleared.
    pub fn from_blocks(n: usize, mut blocks: Vec<usize>) -> StateSet {
        blocks.truncate(n.div_ceil(BLOCK_BITS));
        if !n.is_multiple_of(BLOCK_BITS) {
            if let Some(last) = blocks.get_mut(n / BLOCK_BITS) {
                *last &= (1usize << (n % BLOCK_BITS)) - 1;
            }
        }
        StateSet(FixedBitSet::with_capacity_and_blocks(n, blocks))
    }

    /// Size of the universe, i.e. the number of states of the system.
    pub fn universe(&self) -> usize {
        self.0.len()
    }

    pub fn count(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.0.contains(s)
    }

    /// Panics when `s` is outside the universe.
    pub fn insert(&mut self, s: usize) {
        self.0.insert(s)
    }

    pub fn remove(&mut self, s: usize) {
        self.0.set(s, false)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.0.union_with(&other.0);
        out
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let mut out = self.clone();
        out.0.intersect_with(&other.0);
        out
    }

    pub fn complement(&self) -> StateSet {
        let mut out = self.clone();
        out.0.toggle_range(..);
        out
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn blocks(&self) -> &[usize] {
        self.0.as_slice()
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
