//! Finite truncations of the canonical structure on `∏_{q∈P} δ(q)`.
//!
//! An element is a coordinate vector over the materialized nodes; virtual
//! coordinates beyond the truncation are implicitly 0.  Two elements are
//! `E_q`-related when they agree on the whole downset of `q`, so distinct
//! vectors are automatically separated by some relation and every
//! truncation models the finite fragment of the theory.

mod extend;
mod iso;
mod qftype;
mod quotient;

pub use extend::{extend_embedding, TypeExtension};
pub use iso::{find_colored_iso, find_iso, is_isomorphism};
pub use qftype::QfType;
pub use quotient::{check_phi_forall, induced_map, quotient, QuotientMap};

use std::sync::Arc;

use crate::poset::FinitePoset;
use crate::{Error, Result};

/// A point of the truncated structure: one value per materialized node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    pub coords: Vec<u32>,
}

impl Element {
    pub fn new(coords: Vec<u32>) -> Self {
        Element { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Element { coords: vec![0; n] }
    }

    /// Restriction to a node subset, as an element over the induced poset.
    pub fn restrict(&self, idxs: &[usize]) -> Element {
        let mut idxs = idxs.to_vec();
        idxs.sort_unstable();
        idxs.dedup();
        Element { coords: idxs.iter().map(|&i| self.coords[i]).collect() }
    }
}

/// A finite set of elements over a finite poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedModel {
    pub poset: Arc<FinitePoset>,
    pub elements: Vec<Element>,
    pub full: bool,
}

impl TruncatedModel {
    /// Build a model from distinct, range-respecting elements.
    pub fn new(poset: Arc<FinitePoset>, mut elements: Vec<Element>) -> Result<Self> {
        for e in &elements {
            if e.coords.len() != poset.len() {
                return Err(Error::Contract(format!(
                    "element has {} coordinates, poset has {} nodes",
                    e.coords.len(),
                    poset.len()
                )));
            }
            for (i, &v) in e.coords.iter().enumerate() {
                if v >= poset.delta_idx(i) {
                    return Err(Error::Contract(format!(
                        "coordinate {v} out of range at node {}",
                        poset.nodes()[i]
                    )));
                }
            }
        }
        elements.sort();
        let before = elements.len();
        elements.dedup();
        if elements.len() != before {
            return Err(Error::Contract("duplicate elements".into()));
        }
        let full = Self::product_size(&poset)
            .map(|n| n == elements.len() as u64)
            .unwrap_or(false);
        Ok(TruncatedModel { poset, elements, full })
    }

    /// Bypass validation.  Exists so that deliberately ill-formed inputs
    /// can be fed to the axiom checker.
    pub fn from_raw_parts(poset: Arc<FinitePoset>, elements: Vec<Element>) -> Self {
        TruncatedModel { poset, elements, full: false }
    }

    /// The full product model; errors if it would exceed `cap` elements.
    pub fn full_model(poset: Arc<FinitePoset>, cap: u64) -> Result<Self> {
        let size = Self::product_size(&poset)
            .ok_or_else(|| Error::Capacity("product size overflow".into()))?;
        if size > cap {
            return Err(Error::Capacity(format!(
                "full model has {size} elements, cap is {cap}"
            )));
        }
        let n = poset.len();
        let mut elements = vec![Element::zeros(n)];
        for i in 0..n {
            let d = poset.delta_idx(i);
            let mut next = Vec::with_capacity(elements.len() * d as usize);
            for e in &elements {
                for v in 0..d {
                    let mut c = e.coords.clone();
                    c[i] = v;
                    next.push(Element::new(c));
                }
            }
            elements = next;
        }
        elements.sort();
        Ok(TruncatedModel { poset, elements, full: true })
    }

    fn product_size(poset: &FinitePoset) -> Option<u64> {
        let mut size: u64 = 1;
        for i in 0..poset.len() {
            size = size.checked_mul(poset.delta_idx(i) as u64)?;
            if size > u64::MAX / 2 {
                return None;
            }
        }
        Some(size)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn index_of(&self, e: &Element) -> Option<usize> {
        self.elements.iter().position(|x| x == e)
    }

    /// `E_p(f, g)`: agreement on the downset of `p`.
    pub fn related_at(&self, p: usize, f: &Element, g: &Element) -> bool {
        self.poset
            .downset_idx(p)
            .into_iter()
            .all(|q| f.coords[q] == g.coords[q])
    }

    /// `E_p` with address + membership validation.
    pub fn eval_relation(
        &self,
        p: &crate::poset::NodeAddress,
        f: &Element,
        g: &Element,
    ) -> Result<bool> {
        let pi = self.poset.index_of(p)?;
        for e in [f, g] {
            if e.coords.len() != self.poset.len() {
                return Err(Error::Contract("element over a different poset".into()));
            }
        }
        Ok(self.related_at(pi, f, g))
    }

    /// The wedge `∧(f, g)`: all nodes `q` with `E_q(f, g)`, as a sorted,
    /// downward-closed index set.
    pub fn wedge(&self, f: &Element, g: &Element) -> Vec<usize> {
        let n = self.poset.len();
        let disagree: Vec<usize> =
            (0..n).filter(|&q| f.coords[q] != g.coords[q]).collect();
        (0..n)
            .filter(|&q| disagree.iter().all(|&d| !self.poset.leq_idx(d, q)))
            .collect()
    }

    /// `∧ A = ⋃ {∧(a, a′) : a ≠ a′ ∈ A}`.
    pub fn wedge_of_set(&self, a: &[Element]) -> Vec<usize> {
        let mut inset = vec![false; self.poset.len()];
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if a[i] != a[j] {
                    for q in self.wedge(&a[i], &a[j]) {
                        inset[q] = true;
                    }
                }
            }
        }
        (0..self.poset.len()).filter(|&q| inset[q]).collect()
    }

    /// Quantifier-free type of a tuple: pairwise wedges + equality pattern.
    pub fn qftp(&self, tuple: &[Element]) -> QfType {
        QfType::of(self, tuple)
    }

    /// Is `map` (element index → element index into `other`) a partial
    /// isomorphism?  By the wedge characterization this is equivalent to
    /// preserving every pairwise wedge.
    pub fn is_partial_iso(&self, other: &TruncatedModel, map: &[(usize, usize)]) -> bool {
        debug_assert_eq!(self.poset.nodes(), other.poset.nodes());
        for (a, (i, x)) in map.iter().enumerate() {
            for (j, y) in map[a..].iter() {
                let w1 = self.wedge(&self.elements[*i], &self.elements[*j]);
                let w2 = other.wedge(&other.elements[*x], &other.elements[*y]);
                if w1 != w2 {
                    return false;
                }
                if (self.elements[*i] == self.elements[*j]) != (other.elements[*x] == other.elements[*y]) {
                    return false;
                }
            }
        }
        true
    }

    /// Restriction of the whole model to a node subset (not necessarily
    /// downward closed): the induced sub-poset with restricted elements.
    pub fn restrict_nodes(&self, idxs: &[usize]) -> TruncatedModel {
        let sub = Arc::new(self.poset.restrict(idxs));
        let mut elements: Vec<Element> =
            self.elements.iter().map(|e| e.restrict(idxs)).collect();
        elements.sort();
        elements.dedup();
        let full = Self::product_size(&sub)
            .map(|n| n == elements.len() as u64)
            .unwrap_or(false);
        TruncatedModel { poset: sub, elements, full }
    }

    /// `E_R`-classes for a node index set `R`: vectors of element indices.
    pub fn classes_of(&self, r: &[usize]) -> Vec<Vec<usize>> {
        let mut classes: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
        // key: values on the downward closure of R
        let dc = self.poset.downward_closure(r);
        for (i, e) in self.elements.iter().enumerate() {
            let key: Vec<u32> = dc.iter().map(|&q| e.coords[q]).collect();
            match classes.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(i),
                None => classes.push((key, vec![i])),
            }
        }
        classes.into_iter().map(|(_, v)| v).collect()
    }
}

/// A model together with a total coloring of its elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredModel {
    pub model: TruncatedModel,
    pub colors: Vec<u32>,
}

impl ColoredModel {
    pub fn new(model: TruncatedModel, colors: Vec<u32>) -> Result<Self> {
        if colors.len() != model.len() {
            return Err(Error::Contract("coloring is not total".into()));
        }
        Ok(ColoredModel { model, colors })
    }

    pub fn color_of(&self, i: usize) -> u32 {
        self.colors[i]
    }
}

/// Verify the partition consistency law: `E_p(f, g)` holds iff, for every
/// block `Q_i` of a partition of the nodes, the restrictions agree at every
/// `q ∈ Q_i ∩ dc(p)` inside the block structure.
pub fn partition_consistency_holds(
    poset: &FinitePoset,
    partition: &[Vec<usize>],
    f: &Element,
    g: &Element,
    p: usize,
) -> Result<bool> {
    let mut seen = vec![false; poset.len()];
    for block in partition {
        for &i in block {
            if i >= poset.len() || seen[i] {
                return Err(Error::Partition("blocks must partition the nodes".into()));
            }
            seen[i] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Partition("blocks must cover the nodes".into()));
    }
    let lhs = poset
        .downset_idx(p)
        .into_iter()
        .all(|q| f.coords[q] == g.coords[q]);
    let mut rhs = true;
    for block in partition {
        let sub = poset.restrict(block);
        let fr = f.restrict(block);
        let gr = g.restrict(block);
        // Q_i ∩ dc(p), re-indexed into the block
        let mut sorted = block.clone();
        sorted.sort_unstable();
        for (bi, &orig) in sorted.iter().enumerate() {
            if poset.leq_idx(orig, p) {
                let agree = sub
                    .downset_idx(bi)
                    .into_iter()
                    .all(|q| fr.coords[q] == gr.coords[q]);
                if !agree {
                    rhs = false;
                }
            }
        }
    }
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::FinitePoset;

    fn full_chain2() -> TruncatedModel {
        let p = Arc::new(FinitePoset::chain(2, 2));
        TruncatedModel::full_model(p, 1 << 20).unwrap()
    }

    #[test]
    fn eval_relation_unfolds() {
        let m = full_chain2();
        let f = Element::new(vec![0, 0]);
        let g = Element::new(vec![0, 1]);
        // reflexivity at every node
        for p in 0..2 {
            assert!(m.related_at(p, &f, &f));
        }
        assert!(m.related_at(0, &f, &g));
        assert!(!m.related_at(1, &f, &g));
    }

    #[test]
    fn eval_relation_vee() {
        // V-poset a,b < r: agreement at a and r but not b refutes E_r
        let p = Arc::new(FinitePoset::vee([2, 2, 2]));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let f = Element::new(vec![0, 0, 0]);
        let g = Element::new(vec![0, 1, 0]);
        assert!(!m.related_at(2, &f, &g));
        assert!(m.related_at(0, &f, &g));
    }

    #[test]
    fn wedge_examples() {
        let m = full_chain2();
        let f = Element::new(vec![0, 0]);
        assert_eq!(m.wedge(&f, &f), vec![0, 1]);

        let a2 = Arc::new(FinitePoset::antichain(2, 2));
        let ma = TruncatedModel::full_model(a2, 1 << 20).unwrap();
        assert_eq!(
            ma.wedge(&Element::new(vec![0, 0]), &Element::new(vec![0, 1])),
            vec![0]
        );

        let c3 = Arc::new(FinitePoset::chain(3, 2));
        let mc = TruncatedModel::full_model(c3, 1 << 20).unwrap();
        assert_eq!(
            mc.wedge(&Element::new(vec![0, 1, 0]), &Element::new(vec![0, 1, 1])),
            vec![0, 1]
        );
    }

    #[test]
    fn wedge_symmetric_and_downward_closed() {
        let p = Arc::new(FinitePoset::vee([2, 3, 2]));
        let m = TruncatedModel::full_model(p.clone(), 1 << 20).unwrap();
        for f in &m.elements {
            for g in &m.elements {
                let w1 = m.wedge(f, g);
                let w2 = m.wedge(g, f);
                assert_eq!(w1, w2);
                assert!(p.is_downward_closed(&w1));
            }
        }
    }

    #[test]
    fn class_census_matches_product() {
        // the full model meets every ⋀_{q∈Q} E_q-class for each downward
        // closed Q, and the class count is the product of the deltas
        let p = Arc::new(FinitePoset::vee([2, 3, 2]));
        let m = TruncatedModel::full_model(p.clone(), 1 << 20).unwrap();
        for qmask in 0u32..8 {
            let q: Vec<usize> = (0..3).filter(|i| qmask & (1 << i) != 0).collect();
            if !p.is_downward_closed(&q) {
                continue;
            }
            let classes = m.classes_of(&q);
            let expected: u64 = p
                .downward_closure(&q)
                .iter()
                .map(|&i| p.delta_idx(i) as u64)
                .product();
            assert_eq!(classes.len() as u64, expected, "Q = {q:?}");
        }
    }

    #[test]
    fn restriction_examples() {
        let c2 = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(c2, 1 << 20).unwrap();
        // restriction to a non-downward-closed set can satisfy the top
        // relation even though the full model does not
        let f = Element::new(vec![0, 1]);
        let g = Element::new(vec![1, 1]);
        assert!(!m.related_at(1, &f, &g));
        let top_only = m.restrict_nodes(&[1]);
        let fr = f.restrict(&[1]);
        let gr = g.restrict(&[1]);
        assert!(top_only.related_at(0, &fr, &gr));
        // restriction to a downward-closed set reflects the relations
        let bot_only = m.restrict_nodes(&[0]);
        for x in &m.elements {
            for y in &m.elements {
                assert_eq!(
                    m.related_at(0, x, y),
                    bot_only.related_at(0, &x.restrict(&[0]), &y.restrict(&[0])),
                );
            }
        }
    }

    #[test]
    fn partition_consistency_exhaustive_small() {
        // every partition of every node set, every element pair, every p
        let posets = vec![
            FinitePoset::chain(3, 2),
            FinitePoset::antichain(3, 2),
            FinitePoset::vee([2, 2, 2]),
            FinitePoset::chain(4, 2),
        ];
        for poset in posets {
            let n = poset.len();
            let arc = Arc::new(poset);
            let m = TruncatedModel::full_model(arc.clone(), 1 << 20).unwrap();
            for partition in crate::perm::set_partitions(n) {
                for f in m.elements.iter().take(8) {
                    for g in m.elements.iter().take(8) {
                        for p in 0..n {
                            assert!(partition_consistency_holds(
                                &arc, &partition, f, g, p
                            )
                            .unwrap());
                        }
                    }
                }
            }
        }
    }
}
