use std::fmt;

pub type FactId = usize;

/// Set of true facts as a fixed-width bit vector over the task's fact ids.
/// Equality and hashing are exact on the bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Box<[u64]>,
}

impl State {
    pub fn empty(num_facts: usize) -> Self {
        State {
            words: vec![0; num_facts.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn from_facts(num_facts: usize, facts: impl IntoIterator<Item = FactId>) -> Self {
        let mut s = Self::empty(num_facts);
        for f in facts {
            s.insert(f);
        }
        s
    }

    #[inline]
    pub fn contains(&self, fact: FactId) -> bool {
        self.words
            .get(fact / 64)
            .is_some_and(|w| w & (1 << (fact % 64)) != 0)
    }

    #[inline]
    pub fn insert(&mut self, fact: FactId) {
        self.words[fact / 64] |= 1 << (fact % 64);
    }

    #[inline]
    pub fn remove(&mut self, fact: FactId) {
        self.words[fact / 64] &= !(1 << (fact % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// True facts in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
