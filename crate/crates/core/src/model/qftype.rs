use super::{Element, TruncatedModel};

/// Quantifier-free type of a tuple, in canonical form.
///
/// Pairwise wedges determine the type, so the type stores, for each pair
/// `i < j`, the antichain of maximal elements of `∧(x_i, x_j)` (the full
/// wedge is its downward closure), plus the equality pattern of the tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QfType {
    pub arity: usize,
    /// Row-major upper triangle: entry for (i, j), i < j.
    pub pair_wedges: Vec<Vec<usize>>,
    /// `eq[i]` = smallest index with the same element value.
    pub equality: Vec<usize>,
}

impl QfType {
    pub fn of(m: &TruncatedModel, tuple: &[Element]) -> QfType {
        let n = tuple.len();
        let mut pair_wedges = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let w = m.wedge(&tuple[i], &tuple[j]);
                pair_wedges.push(m.poset.maximal_elements(&w));
            }
        }
        let mut equality = vec![0usize; n];
        for i in 0..n {
            equality[i] = (0..=i).find(|&j| tuple[j] == tuple[i]).unwrap();
        }
        QfType { arity: n, pair_wedges, equality }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::FinitePoset;
    use std::sync::Arc;

    #[test]
    fn qftp_examples() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let e = |a: u32, b: u32| Element::new(vec![a, b]);

        // single 1-type: all singletons share a type
        let t1 = m.qftp(&[e(0, 0)]);
        let t2 = m.qftp(&[e(1, 1)]);
        assert_eq!(t1, t2);

        // diagonal type
        let d = m.qftp(&[e(0, 1), e(0, 1)]);
        assert_eq!(d.equality, vec![0, 0]);

        // wedge-equal pairs have equal types
        let a = m.qftp(&[e(0, 0), e(0, 1)]);
        let b = m.qftp(&[e(1, 0), e(1, 1)]);
        assert_eq!(a, b);
        let c = m.qftp(&[e(0, 0), e(1, 1)]);
        assert_ne!(a, c);
    }

    #[test]
    fn partial_iso_iff_equal_types() {
        // Fact: a bijection between finite subsets is a partial isomorphism
        // iff it preserves all pairwise wedges; cross-check equal qf types
        // against direct per-relation evaluation on a small full model.
        let p = Arc::new(FinitePoset::vee([2, 2, 3]));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let n = m.len();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % n as u64) as usize
        };
        for _ in 0..200 {
            let tup_a: Vec<Element> = (0..3).map(|_| m.elements[next()].clone()).collect();
            let tup_b: Vec<Element> = (0..3).map(|_| m.elements[next()].clone()).collect();
            let same_type = m.qftp(&tup_a) == m.qftp(&tup_b);
            // direct check: every relation and equality agree pointwise
            let mut direct = true;
            for i in 0..3 {
                for j in 0..3 {
                    if (tup_a[i] == tup_a[j]) != (tup_b[i] == tup_b[j]) {
                        direct = false;
                    }
                    for q in 0..m.poset.len() {
                        if m.related_at(q, &tup_a[i], &tup_a[j])
                            != m.related_at(q, &tup_b[i], &tup_b[j])
                        {
                            direct = false;
                        }
                    }
                }
            }
            assert_eq!(same_type, direct);
        }
    }
}
