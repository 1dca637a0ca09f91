//! Dense row-major bit matrix used for reachability closures.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitMatrix { rows, cols, words_per_row, words: vec![0; rows * words_per_row] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        let w = self.words_per_row;
        &mut self.words[r * w..(r + 1) * w]
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.words[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn insert(&mut self, r: usize, c: usize) -> bool {
        let w = &mut self.words[r * self.words_per_row + c / 64];
        let before = *w;
        *w |= 1 << (c % 64);
        before != *w
    }

    pub fn count_row(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_row(&self, r: usize) -> BitIter<'_> {
        BitIter { words: self.row(r), word_idx: 0, current: self.row(r).first().copied().unwrap_or(0) }
    }
}

/// Iterator over the set column indices of one row.
pub struct BitIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * 64 + bit);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

pub fn union_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= s;
    }
}

/// `a` is a subset of `b`.
pub fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

pub fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

pub fn set_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(k, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(k * 64 + b)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_iterate() {
        let mut m = BitMatrix::new(3, 130);
        assert!(m.insert(1, 0));
        assert!(m.insert(1, 64));
        assert!(m.insert(1, 129));
        assert!(!m.insert(1, 129));
        assert_eq!(m.iter_row(1).collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(m.count_row(1), 3);
        assert_eq!(m.iter_row(0).count(), 0);
        assert!(m.contains(1, 64) && !m.contains(2, 64));
        assert_eq!(set_bits(m.row(1)).collect::<Vec<_>>(), vec![0, 64, 129]);
    }

    #[test]
    fn subset_and_union() {
        let a = [0b0101u64, 0];
        let b = [0b0111u64, 1];
        assert!(is_subset(&a, &b));
        assert!(!is_subset(&b, &a));
        let mut c = a;
        union_into(&mut c, &b);
        assert_eq!(c, b);
        assert_eq!(intersect(&a, &b), vec![0b0101, 0]);
    }
}
