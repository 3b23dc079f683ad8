//! Small combinatorial helpers shared across modules: permutations in
//! one-line notation, set partitions, and coordinate projections.

/// A permutation of `{0, ..., n-1}` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm(pub Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    pub fn order(&self) -> u64 {
        let mut p = self.clone();
        let mut k = 1u64;
        while !p.is_identity() {
            p = self.compose(&p);
            k += 1;
        }
        k
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Perm {
        let mut v: Vec<usize> = (0..n).collect();
        v.swap(a, b);
        Perm(v)
    }

    /// Validate one-line notation.
    pub fn from_one_line(v: Vec<usize>) -> Option<Perm> {
        let n = v.len();
        let mut seen = vec![false; n];
        for &x in &v {
            if x >= n || seen[x] {
                return None;
            }
            seen[x] = true;
        }
        Some(Perm(v))
    }
}

/// All permutations of `{0, ..., n-1}` in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Perm(cur.clone()));
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// All partitions of `{0, ..., n-1}` into nonempty blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mut sub in set_partitions(n - 1) {
        // new element in its own block
        let mut own = sub.clone();
        own.push(vec![n - 1]);
        out.push(own);
        // or joined to an existing block
        for b in 0..sub.len() {
            sub[b].push(n - 1);
            out.push(sub.clone());
            sub[b].pop();
        }
    }
    out
}

/// All projections `π : n → R` with `π(r) = r` for `r ∈ R ⊆ n`, `R ≠ ∅`,
/// returned in one-line notation (entry `i` is `π(i)`).
pub fn projections(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let range: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        // assign each non-range index to a range element
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut assign = vec![0usize; free.len()];
        loop {
            let mut pi: Vec<usize> = (0..n).collect();
            for (k, &f) in free.iter().enumerate() {
                pi[f] = range[assign[k]];
            }
            out.push(pi);
            // increment mixed-radix counter
            let mut k = 0;
            loop {
                if k == assign.len() {
                    break;
                }
                assign[k] += 1;
                if assign[k] < range.len() {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == assign.len() {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perm_basics() {
        assert_eq!(all_perms(3).len(), 6);
        assert_eq!(all_perms(4).len(), 24);
        let p = Perm(vec![1, 2, 0]);
        assert_eq!(p.order(), 3);
        assert!(p.compose(&p.inverse()).is_identity());
    }

    #[test]
    fn partitions_count() {
        // Bell numbers
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(2).len(), 2);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(5).len(), 52);
    }

    #[test]
    fn projection_count() {
        // n=1: 1; n=2: id + two collapses = 3; n=3: 1 + 6 + 3 = 10
        assert_eq!(projections(1).len(), 1);
        assert_eq!(projections(2).len(), 3);
        assert_eq!(projections(3).len(), 10);
        for pi in projections(3) {
            let range: Vec<usize> = {
                let mut r: Vec<usize> = pi.to_vec();
                r.sort_unstable();
                r.dedup();
                r
            };
            for &r in &range {
                assert_eq!(pi[r], r, "projection must fix its range");
            }
        }
    }
}
