//! Ordered set of vacant sites over a contiguous index range.
//!
//! Two-level bitmap: one bit per site plus one summary bit per non-empty
//! word, giving cheap predecessor/successor search even across long
//! occupied runs.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VacantSet {
    words: Vec<u64>,
    summary: Vec<u64>,
    len: usize,
    capacity: usize,
}

impl VacantSet {
    pub fn full(capacity: usize) -> Self {
        let mut set = Self::empty(capacity);
        if capacity > 0 {
            set.insert_range(0, capacity - 1);
        }
        set
    }

    pub fn empty(capacity: usize) -> Self {
        let nw = capacity.div_ceil(64);
        Self {
            words: vec![0; nw],
            summary: vec![0; nw.div_ceil(64)],
            len: 0,
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    fn sync_summary(&mut self, w: usize) {
        let bit = 1u64 << (w & 63);
        if self.words[w] == 0 {
            self.summary[w >> 6] &= !bit;
        } else {
            self.summary[w >> 6] |= bit;
        }
    }

    /// Returns `true` if `i` was not already present.
    pub fn insert(&mut self, i: usize) -> bool {
        let w = i >> 6;
        let bit = 1u64 << (i & 63);
        if self.words[w] & bit != 0 {
            return false;
        }
        self.words[w] |= bit;
        self.len += 1;
        self.sync_summary(w);
        true
    }

    /// Returns `true` if `i` was present.
    pub fn remove(&mut self, i: usize) -> bool {
        let w = i >> 6;
        let bit = 1u64 << (i & 63);
        if self.words[w] & bit == 0 {
            return false;
        }
        self.words[w] &= !bit;
        self.len -= 1;
        self.sync_summary(w);
        true
    }

    /// Insert every index in `lo..=hi`.
    pub fn insert_range(&mut self, lo: usize, hi: usize) {
        for w in (lo >> 6)..=(hi >> 6) {
            let first = if w == lo >> 6 { lo & 63 } else { 0 };
            let last = if w == hi >> 6 { hi & 63 } else { 63 };
            let mask = (u64::MAX >> (63 - last)) & (u64::MAX << first);
            self.len += (mask & !self.words[w]).count_ones() as usize;
            self.words[w] |= mask;
            self.sync_summary(w);
        }
    }

    /// Largest member `≤ i`.
    pub fn pred(&self, i: usize) -> Option<usize> {
        let w = i >> 6;
        let masked = self.words[w] & (u64::MAX >> (63 - (i & 63)));
        if masked != 0 {
            return Some((w << 6) + 63 - masked.leading_zeros() as usize);
        }
        if w == 0 {
            return None;
        }
        let w = self.pred_word(w - 1)?;
        let word = self.words[w];
        Some((w << 6) + 63 - word.leading_zeros() as usize)
    }

    /// Smallest member `≥ i`.
    pub fn succ(&self, i: usize) -> Option<usize> {
        if i >= self.capacity {
            return None;
        }
        let w = i >> 6;
        let masked = self.words[w] & (u64::MAX << (i & 63));
        if masked != 0 {
            return Some((w << 6) + masked.trailing_zeros() as usize);
        }
        let w = self.succ_word(w + 1)?;
        Some((w << 6) + self.words[w].trailing_zeros() as usize)
    }

    /// Largest non-empty word index `≤ w`.
    fn pred_word(&self, w: usize) -> Option<usize> {
        let mut s = w >> 6;
        let mut masked = self.summary[s] & (u64::MAX >> (63 - (w & 63)));
        loop {
            if masked != 0 {
                return Some((s << 6) + 63 - masked.leading_zeros() as usize);
            }
            if s == 0 {
                return None;
            }
            s -= 1;
            masked = self.summary[s];
        }
    }

    /// Smallest non-empty word index `≥ w`.
    fn succ_word(&self, w: usize) -> Option<usize> {
        if w >= self.words.len() {
            return None;
        }
        let mut s = w >> 6;
        let mut masked = self.summary[s] & (u64::MAX << (w & 63));
        loop {
            if masked != 0 {
                return Some((s << 6) + masked.trailing_zeros() as usize);
            }
            s += 1;
            if s >= self.summary.len() {
                return None;
            }
            masked = self.summary[s];
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some((w << 6) + b)
            })
        })
    }
}
