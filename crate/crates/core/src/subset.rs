//! Small index sets and binomial coefficients.
//!
//! Files and users are both labelled `1..=n` with `n <= MAX_ELEMENT`, so a
//! subset fits in one machine word. Ordering is lexicographic on the sorted
//! element list, which is the canonical order used everywhere in the crate.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest element a [`Subset`] can hold.
pub const MAX_ELEMENT: usize = 63;

/// A set of 1-based indices, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    /// Builds a subset from 1-based elements.
    ///
    /// # Panics
    ///
    /// Panics if an element is zero or larger than [`MAX_ELEMENT`].
    pub fn from_elements<I: IntoIterator<Item = usize>>(elements: I) -> Subset {
        let mut bits = 0u64;
        for e in elements {
            assert!(
                (1..=MAX_ELEMENT).contains(&e),
                "subset element {e} out of range"
            );
            bits |= 1 << (e - 1);
        }
        Subset(bits)
    }

    /// The full set `{1, ..., n}`.
    pub fn full(n: usize) -> Subset {
        assert!(n <= MAX_ELEMENT);
        if n == 0 {
            Subset::EMPTY
        } else {
            Subset(u64::MAX >> (64 - n))
        }
    }

    pub fn singleton(e: usize) -> Subset {
        Subset::from_elements([e])
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, e: usize) -> bool {
        (1..=MAX_ELEMENT).contains(&e) && self.0 & (1 << (e - 1)) != 0
    }

    pub fn insert(self, e: usize) -> Subset {
        Subset(self.0 | Subset::singleton(e).0)
    }

    pub fn remove(self, e: usize) -> Subset {
        if self.contains(e) {
            Subset(self.0 & !(1 << (e - 1)))
        } else {
            self
        }
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Subset) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest element, if any.
    pub fn min(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize + 1)
        }
    }

    /// Elements in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let e = rest.trailing_zeros() as usize + 1;
            rest &= rest - 1;
            Some(e)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Subset::from_elements(iter)
    }
}

/// `n choose k`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Binomial coefficient with the convention that it vanishes whenever the
/// upper index is smaller than the lower one or either is negative.
pub fn binomial_signed(n: i64, k: i64) -> u64 {
    if n < 0 || k < 0 || k > n {
        0
    } else {
        binomial(n as usize, k as usize)
    }
}

/// All size-`k` subsets of `{lo, ..., hi}` in lexicographic order.
pub fn subsets_of_range(lo: usize, hi: usize, k: usize) -> Vec<Subset> {
    if lo > hi {
        return if k == 0 { vec![Subset::EMPTY] } else { Vec::new() };
    }
    let pool: Vec<usize> = (lo..=hi).collect();
    subsets_of(&pool, k)
}

/// All size-`k` subsets of `{1, ..., n}` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Subset> {
    subsets_of_range(1, n, k)
}

/// All size-`k` subsets drawn from `pool` (assumed sorted), lexicographic.
pub fn subsets_of(pool: &[usize], k: usize) -> Vec<Subset> {
    let n = pool.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        // advance the rightmost index that still has room
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
