use super::{Element, TruncatedModel};
use crate::{Error, Result};

/// Target quantifier-free type of one new element over a base set: the
/// desired wedge with each base element, as a downward-closed node set.
#[derive(Debug, Clone)]
pub struct TypeExtension {
    pub wedges: Vec<Vec<usize>>,
}

impl TypeExtension {
    pub fn new(wedges: Vec<Vec<usize>>) -> Self {
        TypeExtension { wedges }
    }
}

/// Realize a one-point extension of a quantifier-free type inside a full
/// model: find `f ∉ A` whose wedge with each `a ∈ A` is exactly the target.
///
/// Follows the embedding-extension argument: let `Q` be the union of the
/// target wedges with the forced value skeleton, let `R` be the minimal
/// elements of the complement, and at each `r ∈ R` pick a value avoiding
/// one representative per excluded `E_r`-class.  Fails with a capacity
/// error when `δ(r)` is too small, which can happen in truncations.
pub fn extend_embedding(
    m: &TruncatedModel,
    base: &[Element],
    target: &TypeExtension,
) -> Result<Element> {
    if !m.full {
        return Err(Error::Precondition("extend_embedding needs a full model".into()));
    }
    if target.wedges.len() != base.len() {
        return Err(Error::Contract("one target wedge per base element".into()));
    }
    let poset = &m.poset;
    let n = poset.len();

    for w in &target.wedges {
        if w.iter().any(|&q| q >= n) {
            return Err(Error::UnknownAddress("wedge node out of range".into()));
        }
        if !poset.is_downward_closed(w) {
            return Err(Error::NotDownwardClosed(
                "target wedge must be downward closed".into(),
            ));
        }
    }

    // consistency of the target with the base's own wedges
    for i in 0..base.len() {
        for j in 0..base.len() {
            if i == j {
                continue;
            }
            let wij = m.wedge(&base[i], &base[j]);
            for &q in &target.wedges[i] {
                if target.wedges[j].contains(&q) && !wij.contains(&q) {
                    return Err(Error::Contract(format!(
                        "inconsistent target: node {q} claimed for two base elements that disagree there"
                    )));
                }
                // transitivity: agreement with a_i at q plus a_i ≡ a_j below q
                // forces agreement with a_j
                if wij.contains(&q) && !target.wedges[j].contains(&q) {
                    return Err(Error::Contract(format!(
                        "inconsistent target: node {q} in wedge with one of two base elements that agree there"
                    )));
                }
            }
        }
        if target.wedges[i].len() == n {
            return Err(Error::Precondition(
                "target identifies the new element with a base element".into(),
            ));
        }
    }

    // Q and the value skeleton
    let mut in_q = vec![false; n];
    let mut skeleton: Vec<Option<u32>> = vec![None; n];
    for (i, w) in target.wedges.iter().enumerate() {
        for &q in w {
            in_q[q] = true;
            skeleton[q] = Some(base[i].coords[q]);
        }
    }

    // minimal elements of the complement of Q
    let complement: Vec<usize> = (0..n).filter(|&q| !in_q[q]).collect();
    let minimal_r: Vec<usize> = complement
        .iter()
        .copied()
        .filter(|&r| poset.strict_downset_idx(r).into_iter().all(|q| in_q[q]))
        .collect();

    let mut coords: Vec<u32> = (0..n)
        .map(|q| skeleton[q].unwrap_or(0))
        .collect();

    for &r in &minimal_r {
        // base elements whose target wedge covers everything strictly below r
        let strict = poset.strict_downset_idx(r);
        let candidates: Vec<usize> = (0..base.len())
            .filter(|&i| strict.iter().all(|q| target.wedges[i].contains(q)))
            .collect();
        // one representative value per E_r-class among them
        let mut avoid: Vec<u32> = Vec::new();
        for &i in &candidates {
            let v = base[i].coords[r];
            // two candidates are E_r-equivalent iff they agree on dc(r);
            // they already agree strictly below r with the skeleton, so the
            // class is determined by the value at r
            if !avoid.contains(&v) {
                avoid.push(v);
            }
        }
        let d = poset.delta_idx(r);
        match (0..d).find(|v| !avoid.contains(v)) {
            Some(v) => coords[r] = v,
            None => {
                return Err(Error::Capacity(format!(
                    "delta {} at node {} cannot avoid {} occupied classes",
                    d,
                    poset.nodes()[r],
                    avoid.len()
                )))
            }
        }
    }

    let f = Element::new(coords);

    debug_assert!(
        (0..base.len()).all(|i| m.wedge(&f, &base[i]) == target.wedges[i]),
        "extension must realize the target exactly"
    );
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::FinitePoset;
    use std::sync::Arc;

    #[test]
    fn empty_base() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let f = extend_embedding(&m, &[], &TypeExtension::new(vec![])).unwrap();
        assert_eq!(f.coords.len(), 2);
    }

    #[test]
    fn avoid_one_class_of_three() {
        let p = Arc::new(FinitePoset::antichain(1, 3));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let a = Element::new(vec![0]);
        // target: not E-related to a at the single node
        let f = extend_embedding(&m, &[a.clone()], &TypeExtension::new(vec![vec![]])).unwrap();
        assert_ne!(f.coords[0], 0);
    }

    #[test]
    fn capacity_error_when_classes_full() {
        // 2-chain δ=(2,2), A = {(0,0),(0,1)}, target: E_bottom to both but
        // E_top to neither — both top classes under bottom-class 0 are taken
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let a0 = Element::new(vec![0, 0]);
        let a1 = Element::new(vec![0, 1]);
        let err = extend_embedding(
            &m,
            &[a0, a1],
            &TypeExtension::new(vec![vec![0], vec![0]]),
        )
        .unwrap_err();
        assert_eq!(err.code(), "capacity-error");
    }

    #[test]
    fn realizes_target_exactly_on_random_instances() {
        // build targets from actual elements, erase them, re-realize
        let p = Arc::new(FinitePoset::vee([2, 3, 2]));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        for probe in 0..m.len() {
            let f0 = m.elements[probe].clone();
            let base: Vec<Element> = m
                .elements
                .iter()
                .filter(|e| **e != f0)
                .take(3)
                .cloned()
                .collect();
            let target = TypeExtension::new(
                base.iter().map(|a| m.wedge(&f0, a)).collect(),
            );
            let f = extend_embedding(&m, &base, &target).unwrap();
            for (i, a) in base.iter().enumerate() {
                assert_eq!(m.wedge(&f, a), target.wedges[i]);
            }
            assert!(!base.contains(&f));
        }
    }
}
