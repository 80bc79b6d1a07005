//! Multi-indices over at most four variables, with a graded ordering and
//! constant-time ranking.
//!
//! Within one total order the indices are sorted lexicographically with the
//! first exponent descending: `(2,0) < (1,1) < (0,2)`.

use std::fmt;

/// Maximum number of parametrisation variables (two master, two forcing).
pub const MAX_VARS: usize = 4;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    exps: [u16; MAX_VARS],
    d: u8,
}

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        assert!((1..=MAX_VARS).contains(&d), "dimension {d} out of range");
        MultiIndex { exps: [0; MAX_VARS], d: d as u8 }
    }

    pub fn new(exps: &[u16]) -> Self {
        let mut m = Self::zero(exps.len());
        m.exps[..exps.len()].copy_from_slice(exps);
        m
    }

    /// Unit index `e_i`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut m = Self::zero(d);
        m.exps[i] = 1;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn exps(&self) -> &[u16] {
        &self.exps[..self.d as usize]
    }

    #[inline]
    pub fn get(&self, i: usize) -> u16 {
        self.exps[i]
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    /// Exponent sum over the forcing variables (indices 2 and 3).
    #[inline]
    pub fn forcing_degree(&self) -> usize {
        self.exps[2] as usize + self.exps[3] as usize
    }

    pub fn with(&self, i: usize, e: u16) -> Self {
        let mut m = *self;
        m.exps[i] = e;
        m
    }

    pub fn add_unit(&self, i: usize) -> Self {
        let mut m = *self;
        m.exps[i] += 1;
        m
    }

    /// `self - other`, or `None` if some component would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut m = *self;
        for i in 0..self.dim() {
            m.exps[i] = self.exps[i].checked_sub(other.exps[i])?;
        }
        Some(m)
    }

    pub fn is_unit(&self) -> Option<usize> {
        if self.order() != 1 {
            return None;
        }
        self.exps().iter().position(|&e| e == 1)
    }

    /// The conjugate partner under the swaps `1 <-> 2` and `3 <-> 4`.
    pub fn conjugate(&self) -> Self {
        let mut m = *self;
        m.exps.swap(0, 1);
        if self.dim() == 4 {
            m.exps.swap(2, 3);
        }
        m
    }

    /// Calls `f` for every `b` with `0 <= b <= self` componentwise.
    pub fn for_each_sub(&self, mut f: impl FnMut(MultiIndex)) {
        let d = self.dim();
        let mut cur = Self::zero(d);
        loop {
            f(cur);
            let mut i = 0;
            loop {
                if i == d {
                    return;
                }
                if cur.exps[i] < self.exps[i] {
                    cur.exps[i] += 1;
                    break;
                }
                cur.exps[i] = 0;
                i += 1;
            }
        }
    }

    /// Monomial value `z^alpha`.
    pub fn eval(&self, z: &[num_complex::Complex64]) -> num_complex::Complex64 {
        let mut v = num_complex::Complex64::new(1.0, 0.0);
        for (i, &e) in self.exps().iter().enumerate() {
            if e > 0 {
                v *= z[i].powu(e as u32);
            }
        }
        v
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exps().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

/// Number of multi-indices of total order `p` in `d` variables.
pub fn count_of_order(d: usize, p: usize) -> usize {
    binomial(p + d - 1, d - 1)
}

/// Number of multi-indices of order `1..=p` in `d` variables.
pub fn count_up_to(d: usize, p: usize) -> usize {
    binomial(p + d, d) - 1
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Position of `alpha` among the indices of the same order.
pub fn rank_in_order(alpha: &MultiIndex) -> usize {
    let d = alpha.dim();
    let mut p = alpha.order();
    let mut rank = 0;
    for i in 0..d.saturating_sub(1) {
        let a = alpha.exps[i] as usize;
        let rest = d - i;
        if p > a {
            rank += count_of_order(rest, p - a - 1);
        }
        p -= a;
    }
    rank
}

/// Dense enumeration of every multi-index of order `1..=max_order`.
#[derive(Clone, Debug)]
pub struct MultiIndexTable {
    d: usize,
    max_order: usize,
    offsets: Vec<usize>,
    indices: Vec<MultiIndex>,
    // dense exponent -> id map, when small enough
    dense: Option<Vec<u32>>,
}

impl MultiIndexTable {
    pub fn new(d: usize, max_order: usize) -> Self {
        let mut offsets = vec![0; max_order + 2];
        let mut indices = Vec::with_capacity(count_up_to(d, max_order));
        for p in 1..=max_order {
            offsets[p] = indices.len();
            enumerate_order(d, p, &mut indices);
        }
        offsets[max_order + 1] = indices.len();
        let side = max_order + 1;
        let dense = side.checked_pow(d as u32).filter(|&n| n <= 1 << 24).map(|n| {
            let mut map = vec![u32::MAX; n];
            for (id, m) in indices.iter().enumerate() {
                map[dense_key(m, side)] = id as u32;
            }
            map
        });
        MultiIndexTable { d, max_order, offsets, indices, dense }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Global position of `alpha`; `None` for the zero index or out-of-range orders.
    #[inline]
    pub fn id(&self, alpha: &MultiIndex) -> Option<usize> {
        let p = alpha.order();
        if p == 0 || p > self.max_order {
            return None;
        }
        if let Some(map) = &self.dense {
            return Some(map[dense_key(alpha, self.max_order + 1)] as usize);
        }
        Some(self.offsets[p] + rank_in_order(alpha))
    }

    #[inline]
    pub fn get(&self, id: usize) -> MultiIndex {
        self.indices[id]
    }

    pub fn of_order(&self, p: usize) -> &[MultiIndex] {
        &self.indices[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn order_range(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }
}

#[inline]
fn dense_key(m: &MultiIndex, side: usize) -> usize {
    m.exps().iter().fold(0, |acc, &e| acc * side + e as usize)
}

fn enumerate_order(d: usize, p: usize, out: &mut Vec<MultiIndex>) {
    fn rec(d: usize, i: usize, left: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if i == d - 1 {
            cur.exps[i] = left as u16;
            out.push(*cur);
            return;
        }
        for a in (0..=left).rev() {
            cur.exps[i] = a as u16;
            rec(d, i + 1, left - a, cur, out);
        }
        cur.exps[i] = 0;
    }
    let mut cur = MultiIndex::zero(d);
    rec(d, 0, p, &mut cur, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(count_of_order(2, 3), 4);
        assert_eq!(count_of_order(4, 2), 10);
        assert_eq!(count_up_to(2, 35), 665);
        assert_eq!(MultiIndexTable::new(4, 6).len(), count_up_to(4, 6));
    }

    #[test]
    fn ordering_within_order() {
        let t = MultiIndexTable::new(2, 3);
        let names: Vec<String> = t.of_order(2).iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["(2,0)", "(1,1)", "(0,2)"]);
    }

    #[test]
    fn dense_and_combinatorial_ids_agree() {
        let t = MultiIndexTable::new(4, 7);
        for (id, m) in t.iter().enumerate() {
            assert_eq!(t.id(m), Some(id));
            assert_eq!(t.offsets[m.order()] + rank_in_order(m), id);
        }
    }

    #[test]
    fn sub_indices() {
        let mut n = 0;
        MultiIndex::new(&[2, 1]).for_each_sub(|_| n += 1);
        assert_eq!(n, 6);
    }
}
