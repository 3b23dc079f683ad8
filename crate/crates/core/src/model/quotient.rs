use super::TruncatedModel;
use crate::{Error, Result};

/// Quotient of a model by `E_R` for a downward-closed node set `R`,
/// realized as the model of restrictions `f↾R` over the induced sub-poset.
pub fn quotient(m: &TruncatedModel, r: &[usize]) -> Result<TruncatedModel> {
    if !m.poset.is_downward_closed(r) {
        return Err(Error::NotDownwardClosed(format!("{r:?}")));
    }
    Ok(m.restrict_nodes(r))
}

/// An induced map between quotients: class of `x` ↦ class of `map(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientMap {
    /// `E_R`-classes of the source, as element index sets.
    pub src_classes: Vec<Vec<usize>>,
    /// `E_R`-classes of the target.
    pub dst_classes: Vec<Vec<usize>>,
    /// Class index → class index.
    pub map: Vec<usize>,
}

impl QuotientMap {
    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.dst_classes.len()];
        for &j in &self.map {
            if seen[j] {
                return false;
            }
            seen[j] = true;
        }
        self.map.len() == self.dst_classes.len()
    }

    /// Compose with another map on the same middle quotient.
    pub fn then(&self, other: &QuotientMap) -> QuotientMap {
        QuotientMap {
            src_classes: self.src_classes.clone(),
            dst_classes: other.dst_classes.clone(),
            map: self.map.iter().map(|&j| other.map[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Option<QuotientMap> {
        if !self.is_bijection() {
            return None;
        }
        let mut inv = vec![0usize; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Some(QuotientMap {
            src_classes: self.dst_classes.clone(),
            dst_classes: self.src_classes.clone(),
            map: inv,
        })
    }
}

/// The map induced on `E_R`-quotients by an embedding `f : M → N` given as
/// element index pairs.  Errors when `f` is not an embedding (wedge or
/// equality violation) or not well-defined on classes.
pub fn induced_map(
    m: &TruncatedModel,
    n: &TruncatedModel,
    f: &[usize],
    r: &[usize],
) -> Result<QuotientMap> {
    if f.len() != m.len() {
        return Err(Error::Contract("map must be total on the source".into()));
    }
    if !m.poset.is_downward_closed(r) {
        return Err(Error::NotDownwardClosed(format!("{r:?}")));
    }
    // embedding check: injective and wedge-preserving
    {
        let mut seen = vec![false; n.len()];
        for &j in f {
            if j >= n.len() || seen[j] {
                return Err(Error::Contract("map is not injective into the target".into()));
            }
            seen[j] = true;
        }
    }
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let w1 = m.wedge(&m.elements[i], &m.elements[j]);
            let w2 = n.wedge(&n.elements[f[i]], &n.elements[f[j]]);
            if w1 != w2 {
                return Err(Error::Contract(format!(
                    "not an embedding: wedge mismatch at elements {i},{j}"
                )));
            }
        }
    }

    let src_classes = m.classes_of(r);
    let dst_classes = n.classes_of(r);
    let mut map = Vec::with_capacity(src_classes.len());
    for class in &src_classes {
        let img = f[class[0]];
        let target = dst_classes
            .iter()
            .position(|c| c.contains(&img))
            .expect("image element belongs to some class");
        // well-definedness: all members land in the same class
        for &x in class {
            if !dst_classes[target].contains(&f[x]) {
                return Err(Error::Contract(
                    "map does not respect the class structure".into(),
                ));
            }
        }
        map.push(target);
    }
    Ok(QuotientMap { src_classes, dst_classes, map })
}

/// Check the universal axioms of the class-local theory on an arbitrary
/// element set: all elements `E_R`-related, `E`-collapse to equality,
/// refinement, and at most `δ(q)`-fold splitting of each `E_{<q}`-class.
pub fn check_phi_forall(m: &TruncatedModel, r: &[usize]) -> Result<bool> {
    if !m.poset.is_downward_closed(r) {
        return Err(Error::NotDownwardClosed(format!("{r:?}")));
    }
    let poset = &m.poset;
    let k = m.len();

    // one E_R-class
    for i in 0..k {
        for j in 0..k {
            for &q in r {
                if !rel(m, q, i, j) {
                    return Ok(false);
                }
            }
        }
    }

    // E_P collapse: full agreement implies equality (fails only for models
    // built from raw parts with duplicate entries)
    for i in 0..k {
        for j in i + 1..k {
            if (0..poset.len()).all(|q| rel(m, q, i, j)) && m.elements[i] == m.elements[j] {
                return Ok(false);
            }
        }
    }

    // refinement: q' ≤ q implies E_q ⊆ E_q'
    for q in 0..poset.len() {
        for qp in 0..poset.len() {
            if poset.leq_idx(qp, q) {
                for i in 0..k {
                    for j in 0..k {
                        if rel(m, q, i, j) && !rel(m, qp, i, j) {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }

    // each E_{<q}-class splits into at most δ(q) E_q-classes
    for q in 0..poset.len() {
        let below = poset.strict_downset_idx(q);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            let slot = classes
                .iter()
                .position(|c| below.iter().all(|&b| rel(m, b, c[0], i)));
            match slot {
                Some(s) => classes[s].push(i),
                None => classes.push(vec![i]),
            }
        }
        for members in &classes {
            let mut subreps: Vec<usize> = Vec::new();
            for &i in members {
                if !subreps.iter().any(|&x| rel(m, q, x, i)) {
                    subreps.push(i);
                }
            }
            if subreps.len() as u32 > poset.delta_idx(q) {
                return Ok(false);
            }
        }
    }

    Ok(true)
}

/// Raw relation on possibly out-of-range raw models: agreement on the
/// downset, by value.
fn rel(m: &TruncatedModel, q: usize, i: usize, j: usize) -> bool {
    m.poset
        .downset_idx(q)
        .into_iter()
        .all(|x| m.elements[i].coords[x] == m.elements[j].coords[x])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Element;
    use crate::poset::FinitePoset;
    use std::sync::Arc;

    #[test]
    fn quotient_examples() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        // whole poset: isomorphic copy
        let q_all = quotient(&m, &[0, 1]).unwrap();
        assert_eq!(q_all.len(), 4);
        // empty set: one-point model
        let q_none = quotient(&m, &[]).unwrap();
        assert_eq!(q_none.len(), 1);
        // bottom only: one class per bottom value
        let q_bot = quotient(&m, &[0]).unwrap();
        assert_eq!(q_bot.len(), 2);
        // non-downward-closed set is rejected
        assert!(quotient(&m, &[1]).is_err());
    }

    #[test]
    fn induced_map_examples() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let id: Vec<usize> = (0..m.len()).collect();
        let qm = induced_map(&m, &m, &id, &[0]).unwrap();
        assert!(qm.is_identity());

        // the automorphism swapping the bottom value induces the swap on
        // bottom classes
        let swap: Vec<usize> = (0..m.len())
            .map(|i| {
                let mut c = m.elements[i].coords.clone();
                c[0] = 1 - c[0];
                m.index_of(&Element::new(c)).unwrap()
            })
            .collect();
        let qm = induced_map(&m, &m, &swap, &[0]).unwrap();
        assert!(qm.is_bijection());
        assert!(!qm.is_identity());
        assert_eq!(qm.then(&qm).map, vec![0, 1]);

        // a non-embedding is rejected
        let collapse: Vec<usize> = vec![0; m.len()];
        assert!(induced_map(&m, &m, &collapse, &[0]).is_err());
    }

    #[test]
    fn phi_forall_checks() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p.clone(), 1 << 20).unwrap();

        // a single E_{bottom}-class of the full model validates w.r.t. R={0}
        let class: Vec<Element> = m
            .elements
            .iter()
            .filter(|e| e.coords[0] == 0)
            .cloned()
            .collect();
        let sub = TruncatedModel::new(p.clone(), class).unwrap();
        assert!(check_phi_forall(&sub, &[0]).unwrap());

        // union of two E_R-classes fails the single-class axiom
        assert!(!check_phi_forall(&m, &[0]).unwrap());

        // hand-built over-splitting: δ(top) = 2 but three top values appear
        let bad = TruncatedModel::from_raw_parts(
            p,
            vec![
                Element::new(vec![0, 0]),
                Element::new(vec![0, 1]),
                Element::new(vec![0, 2]),
            ],
        );
        assert!(!check_phi_forall(&bad, &[0]).unwrap());
    }
}
