//! Tame relations and the two-level encoder: fold a colored model with
//! relation expansions over `Q` into a plain coloring over `Q ∪ R`, using
//! an indiscernible family on the `R` side as a codebook carrier, and
//! recover the relation extensions from the output colors alone.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::indiscernibles::{verify_permutation, IndiscernibleFamily, LiftOutcome};
use crate::model::{ColoredModel, Element, TruncatedModel};
use crate::perm::{projections, Perm};
use crate::poset::{FinitePoset, NodeAddress};
use crate::{Error, Result};

/// An extensional relation over a model, invariant under `E_q` for a
/// declared node `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TameRelation {
    pub name: String,
    pub arity: usize,
    /// Invariance node, as a poset index of the carrier model.
    pub inv_node: usize,
    /// Tuples of element indices.
    pub tuples: BTreeSet<Vec<usize>>,
}

impl TameRelation {
    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.tuples.contains(tuple)
    }
}

/// Exhaustively verify `E_q`-invariance: membership depends only on the
/// tuple of `E_q`-classes.
pub fn check_tame(m: &TruncatedModel, rel: &TameRelation) -> bool {
    let classes = m.classes_of(&[rel.inv_node]);
    let class_of: Vec<usize> = {
        let mut v = vec![0usize; m.len()];
        for (ci, c) in classes.iter().enumerate() {
            for &x in c {
                v[x] = ci;
            }
        }
        v
    };
    use std::collections::HashMap;
    let mut seen: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut tuple = vec![0usize; rel.arity];
    loop {
        let key: Vec<usize> = tuple.iter().map(|&x| class_of[x]).collect();
        let member = rel.contains(&tuple);
        match seen.get(&key) {
            Some(&prev) if prev != member => return false,
            Some(_) => {}
            None => {
                seen.insert(key, member);
            }
        }
        // next tuple
        let mut k = 0;
        loop {
            if k == rel.arity {
                return true;
            }
            tuple[k] += 1;
            if tuple[k] < m.len() {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
    }
}

/// Is every tuple pairwise `E_q`-inequivalent?
pub fn is_irreflexive(m: &TruncatedModel, rel: &TameRelation) -> bool {
    rel.tuples.iter().all(|t| {
        (0..t.len()).all(|i| {
            (i + 1..t.len()).all(|j| !m.related_at(rel.inv_node, &m.elements[t[i]], &m.elements[t[j]]))
        })
    })
}

/// Split an invariant relation into `E_q`-irreflexive pieces, one per
/// coordinate-identification pattern.  The original is exactly the union,
/// over patterns, of "coordinates follow the pattern and the collapsed
/// tuple is in the piece".
pub fn make_irreflexive(m: &TruncatedModel, rel: &TameRelation) -> Vec<TameRelation> {
    let q = rel.inv_node;
    let mut out = Vec::new();
    for pi in projections(rel.arity) {
        let range: Vec<usize> = {
            let mut r = pi.clone();
            r.sort_unstable();
            r.dedup();
            r
        };
        let mut tuples = BTreeSet::new();
        // collapsed tuples: pairwise E_q-inequivalent assignments to the
        // range whose expansion lies in the relation
        let mut assign = vec![0usize; range.len()];
        loop {
            let pairwise_ok = (0..range.len()).all(|i| {
                (i + 1..range.len()).all(|j| {
                    !m.related_at(q, &m.elements[assign[i]], &m.elements[assign[j]])
                })
            });
            if pairwise_ok {
                let expanded: Vec<usize> = pi
                    .iter()
                    .map(|&p| assign[range.iter().position(|&r| r == p).unwrap()])
                    .collect();
                if rel.contains(&expanded) {
                    tuples.insert(assign.clone());
                }
            }
            let mut k = 0;
            loop {
                if k == range.len() {
                    break;
                }
                assign[k] += 1;
                if assign[k] < m.len() {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == range.len() {
                break;
            }
        }
        out.push(TameRelation {
            name: format!("{}_p{}", rel.name, pattern_tag(&pi)),
            arity: range.len(),
            inv_node: q,
            tuples,
        });
    }
    out
}

fn pattern_tag(pi: &[usize]) -> String {
    pi.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("")
}

/// Reconstruct the original relation from its irreflexive pieces: a tuple
/// belongs iff its `E_q`-identification pattern names a piece containing
/// the collapsed tuple.
pub fn reconstruct_from_pieces(
    m: &TruncatedModel,
    q: usize,
    arity: usize,
    pieces: &[TameRelation],
    tuple: &[usize],
) -> bool {
    // canonical projection of the tuple: map each coordinate to the least
    // coordinate E_q-equivalent to it
    let mut pi = vec![0usize; arity];
    for i in 0..arity {
        pi[i] = (0..=i)
            .find(|&j| m.related_at(q, &m.elements[tuple[j]], &m.elements[tuple[i]]))
            .unwrap();
    }
    let range: Vec<usize> = {
        let mut r = pi.clone();
        r.sort_unstable();
        r.dedup();
        r
    };
    let collapsed: Vec<usize> = range.iter().map(|&r| tuple[r]).collect();
    let tag = pattern_tag(&pi);
    pieces
        .iter()
        .find(|p| p.name.ends_with(&format!("_p{tag}")))
        .map(|p| p.contains(&collapsed))
        .unwrap_or(false)
}

/// The `Q`-side input: a small full model, irreflexive tame relations,
/// and a coloring.
#[derive(Debug, Clone)]
pub struct TwoLevelInput {
    pub q_model: TruncatedModel,
    pub relations: Vec<TameRelation>,
    pub coloring: Vec<u32>,
}

/// Which family class carries which index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassLabel {
    Star,
    Positive { rel: usize, pos_idx: usize },
}

/// Everything needed to decode an encoder output, serialized with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoLevelCodebook {
    pub q_len: usize,
    pub r_len: usize,
    /// Per relation: chosen representatives (element indices of the Q
    /// model), one per `E_{q_i}`-class.
    pub reps: Vec<Vec<usize>>,
    /// Per relation: the positive representative tuples.
    pub pos: Vec<Vec<Vec<usize>>>,
    pub inv_nodes: Vec<usize>,
    pub arities: Vec<usize>,
    /// Per relation: the reserved colors `m_{i,0}, ..., m_{i,n_i}`.
    pub y_blocks: Vec<Vec<u32>>,
    /// Label of each used family class, class 0 first.
    pub labels: Vec<ClassLabel>,
    pub seed: u64,
}

impl TwoLevelCodebook {
    /// The `X`-side color injection: plain colors live on even numbers.
    pub fn s_map(&self, c: u32) -> u32 {
        2 * c
    }

    pub fn s_unmap(&self, c: u32) -> Option<u32> {
        if c % 2 == 0 {
            Some(c / 2)
        } else {
            None
        }
    }
}

/// Encoder output: the colored model over `Q ⊔ R` plus its codebook.
#[derive(Debug, Clone)]
pub struct TwoLevelOutput {
    pub colored: ColoredModel,
    pub codebook: TwoLevelCodebook,
    /// element index ↦ (q element index, r element index)
    pub split: Vec<(usize, usize)>,
}

/// Build the union poset `Q ⊔ R` with `Q` nodes first.
fn union_poset(q: &FinitePoset, r: &FinitePoset) -> FinitePoset {
    let qn = q.len();
    let rn = r.len();
    let n = qn + rn;
    let mut nodes = Vec::with_capacity(n);
    for a in q.nodes() {
        nodes.push(NodeAddress::summand(0, a.clone()));
    }
    for a in r.nodes() {
        nodes.push(NodeAddress::summand(1, a.clone()));
    }
    let mut leq = vec![false; n * n];
    for i in 0..qn {
        for j in 0..qn {
            leq[i * n + j] = q.leq_idx(i, j);
        }
    }
    for i in 0..rn {
        for j in 0..rn {
            leq[(qn + i) * n + (qn + j)] = r.leq_idx(i, j);
        }
    }
    let mut delta = q.deltas().to_vec();
    delta.extend_from_slice(r.deltas());
    FinitePoset::from_parts(nodes, leq, delta).expect("block-diagonal order is a poset")
}

/// Encode a colored, relation-expanded `Q`-model into a plain coloring of
/// the product with an `R`-side family, per the two-case color rule.
pub fn encode_twolevel(
    input: &TwoLevelInput,
    r_model: &TruncatedModel,
    r_fam: &IndiscernibleFamily,
    seed: u64,
) -> Result<TwoLevelOutput> {
    let q_model = &input.q_model;
    if input.coloring.len() != q_model.len() {
        return Err(Error::Contract("coloring must be total on the Q model".into()));
    }
    for rel in &input.relations {
        if !check_tame(q_model, rel) {
            return Err(Error::Contract(format!("relation {} is not invariant", rel.name)));
        }
        if !is_irreflexive(q_model, rel) {
            return Err(Error::Contract(format!(
                "relation {} is not irreflexive; split it first",
                rel.name
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // representatives and positive tuples
    let mut reps: Vec<Vec<usize>> = Vec::new();
    let mut pos: Vec<Vec<Vec<usize>>> = Vec::new();
    for rel in &input.relations {
        let classes = q_model.classes_of(&[rel.inv_node]);
        let chosen: Vec<usize> = classes
            .iter()
            .map(|c| *c.choose(&mut rng).expect("classes are nonempty"))
            .collect();
        // all tuples over the representatives that satisfy the relation
        let mut positive = Vec::new();
        let mut idx = vec![0usize; rel.arity];
        loop {
            let tuple: Vec<usize> = idx.iter().map(|&k| chosen[k]).collect();
            if rel.contains(&tuple) {
                positive.push(tuple);
            }
            let mut k = 0;
            loop {
                if k == rel.arity {
                    break;
                }
                idx[k] += 1;
                if idx[k] < chosen.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == rel.arity {
                break;
            }
        }
        reps.push(chosen);
        pos.push(positive);
    }

    // index set J and class labels
    let mut labels = vec![ClassLabel::Star];
    for (i, p) in pos.iter().enumerate() {
        for t in 0..p.len() {
            labels.push(ClassLabel::Positive { rel: i, pos_idx: t });
        }
    }
    if r_fam.class_count() < labels.len() {
        return Err(Error::Capacity(format!(
            "family has {} classes, codebook needs {}",
            r_fam.class_count(),
            labels.len()
        )));
    }

    // reserved colors: odd numbers, block after block
    let mut y_blocks = Vec::new();
    let mut next = 0u32;
    for rel in &input.relations {
        let block: Vec<u32> = (0..=rel.arity as u32).map(|k| 2 * (next + k) + 1).collect();
        next += rel.arity as u32 + 1;
        y_blocks.push(block);
    }

    // the product model over Q ⊔ R, restricted to the used classes
    let poset = Arc::new(union_poset(&q_model.poset, &r_model.poset));
    let used: Vec<usize> = labels
        .iter()
        .enumerate()
        .flat_map(|(j, _)| r_fam.classes[j].clone())
        .collect();
    let mut elements = Vec::new();
    let mut split_raw = Vec::new();
    for (ai, a) in q_model.elements.iter().enumerate() {
        for &bi in &used {
            let mut coords = a.coords.clone();
            coords.extend_from_slice(&r_model.elements[bi].coords);
            elements.push(Element::new(coords));
            split_raw.push((ai, bi));
        }
    }
    let model = TruncatedModel::new(poset, elements.clone())?;
    // model sorts elements; rebuild the split map
    let mut split = vec![(0usize, 0usize); model.len()];
    for (e, s) in elements.iter().zip(split_raw) {
        split[model.index_of(e).expect("just inserted")] = s;
    }

    // class of each used r element, resolved up front
    let n_labels = labels.len();
    let class_of: Vec<usize> = split
        .iter()
        .map(|&(_, bi)| {
            (0..n_labels)
                .find(|&j| r_fam.classes[j].contains(&bi))
                .expect("used elements belong to used classes")
        })
        .collect();

    let codebook = TwoLevelCodebook {
        q_len: q_model.poset.len(),
        r_len: r_model.poset.len(),
        reps,
        pos,
        inv_nodes: input.relations.iter().map(|r| r.inv_node).collect(),
        arities: input.relations.iter().map(|r| r.arity).collect(),
        y_blocks,
        labels,
        seed,
    };

    // the color rule
    let mut colors = vec![0u32; model.len()];
    for e in 0..model.len() {
        let (ai, _bi) = split[e];
        let j = class_of[e];
        colors[e] = match &codebook.labels[j] {
            ClassLabel::Star => codebook.s_map(input.coloring[ai]),
            ClassLabel::Positive { rel, pos_idx } => {
                let rel_i = *rel;
                let rbar = &codebook.pos[rel_i][*pos_idx];
                let q_i = codebook.inv_nodes[rel_i];
                let n_i = codebook.arities[rel_i];
                let hits: Vec<usize> = (0..n_i)
                    .filter(|&k| {
                        q_model.related_at(
                            q_i,
                            &q_model.elements[ai],
                            &q_model.elements[rbar[k]],
                        )
                    })
                    .collect();
                match hits.len() {
                    0 => codebook.y_blocks[rel_i][n_i],
                    1 => codebook.y_blocks[rel_i][hits[0]],
                    _ => {
                        return Err(Error::Contract(
                            "irreflexivity violated: two codebook colors for one element".into(),
                        ))
                    }
                }
            }
        };
    }

    Ok(TwoLevelOutput {
        colored: ColoredModel::new(model, colors)?,
        codebook,
        split,
    })
}

/// Recover each relation's extension from the output coloring alone: a
/// tuple (in a single `E_R`-class) is positive iff witnesses with the
/// block colors `m_{i,0}, ..., m_{i,n_i-1}` exist in a single `E_R`-class,
/// coordinatewise `E_{q_i}`-related to it.
///
/// Returns, per relation, the extension over the `D_*` fiber as tuples of
/// `Q`-model element indices.
pub fn recover_relations(
    out: &ColoredModel,
    codebook: &TwoLevelCodebook,
    split: &[(usize, usize)],
) -> Result<Vec<BTreeSet<Vec<usize>>>> {
    let m = &out.model;
    // E_R-classes: same r-part, i.e. same b index in the split
    let mut fibers: Vec<(usize, Vec<usize>)> = Vec::new();
    for e in 0..m.len() {
        let (_, bi) = split[e];
        match fibers.iter_mut().find(|(b, _)| *b == bi) {
            Some((_, v)) => v.push(e),
            None => fibers.push((bi, vec![e])),
        }
    }
    // a D_* fiber: all colors even
    let star_fiber: &Vec<usize> = fibers
        .iter()
        .find(|(_, v)| v.iter().all(|&e| out.colors[e] % 2 == 0))
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Format("no star fiber found".into()))?;

    let mut recovered = Vec::new();
    for i in 0..codebook.arities.len() {
        let n_i = codebook.arities[i];
        let q_i = codebook.inv_nodes[i];
        let want: Vec<u32> = codebook.y_blocks[i][..n_i].to_vec();
        let mut ext = BTreeSet::new();
        // tuples from the star fiber
        let mut idx = vec![0usize; n_i];
        loop {
            let f_tuple: Vec<usize> = idx.iter().map(|&k| star_fiber[k]).collect();
            // witness search: a fiber and per-coordinate elements g_j with
            // E_{q_i}(f_j, g_j) and color m_{i,j}
            let mut found = false;
            'fiber: for (_, fiber) in &fibers {
                let mut ok = true;
                for j in 0..n_i {
                    let hit = fiber.iter().any(|&g| {
                        out.colors[g] == want[j]
                            && m.related_at(q_i, &m.elements[f_tuple[j]], &m.elements[g])
                    });
                    if !hit {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    found = true;
                    break 'fiber;
                }
            }
            if found {
                ext.insert(f_tuple.iter().map(|&e| split[e].0).collect::<Vec<usize>>());
            }
            let mut k = 0;
            loop {
                if k == n_i {
                    break;
                }
                idx[k] += 1;
                if idx[k] < star_fiber.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n_i {
                break;
            }
        }
        recovered.push(ext);
    }
    Ok(recovered)
}

/// Given an isomorphism `h` of the `Q`-side (preserving relations and
/// transporting `c1` to `c2`), construct the patched isomorphism between
/// the two encoder outputs: `h` on the `Q` part and the family lift of
/// the induced codebook permutation on the `R` part.
pub fn transport_isomorphism(
    input: &TwoLevelInput,
    h: &[usize],
    out1: &TwoLevelOutput,
    out2: &TwoLevelOutput,
    r_model: &TruncatedModel,
    r_fam: &IndiscernibleFamily,
) -> Result<Vec<usize>> {
    let q_model = &input.q_model;
    let cb = &out1.codebook;
    if out2.codebook != *cb {
        return Err(Error::Contract("outputs use different codebooks".into()));
    }

    // induced map on positive tuples: the image of each representative
    // tuple lands in unique representative classes
    let mut pi_vec: Vec<usize> = (0..r_fam.class_count()).collect();
    for (i, positives) in cb.pos.iter().enumerate() {
        let q_i = cb.inv_nodes[i];
        for (t, rbar) in positives.iter().enumerate() {
            let image: Vec<usize> = rbar.iter().map(|&r| h[r]).collect();
            // find the positive tuple classwise matching the image
            let t2 = positives
                .iter()
                .position(|cand| {
                    cand.iter().zip(&image).all(|(&c, &im)| {
                        q_model.related_at(q_i, &q_model.elements[c], &q_model.elements[im])
                    })
                })
                .ok_or_else(|| {
                    Error::Contract("h does not preserve the positive tuples".into())
                })?;
            // class index carrying (i, t) maps to the one carrying (i, t2)
            let from = cb
                .labels
                .iter()
                .position(|l| *l == ClassLabel::Positive { rel: i, pos_idx: t })
                .unwrap();
            let to = cb
                .labels
                .iter()
                .position(|l| *l == ClassLabel::Positive { rel: i, pos_idx: t2 })
                .unwrap();
            pi_vec[from] = to;
        }
    }
    let pi = Perm::from_one_line(pi_vec)
        .ok_or_else(|| Error::Contract("induced codebook map is not a permutation".into()))?;

    let sigma = match verify_permutation(r_model, r_fam, &pi) {
        LiftOutcome::Realized(map) => map,
        o => {
            return Err(Error::CapExceeded(format!(
                "family lift for the codebook permutation unavailable: {o:?}"
            )))
        }
    };

    // assemble τ(a, b) = (h(a), σ(b)) on the union model
    let m1 = &out1.colored.model;
    let m2 = &out2.colored.model;
    let mut tau = Vec::with_capacity(m1.len());
    for e in 0..m1.len() {
        let (ai, bi) = out1.split[e];
        let (ha, sb) = (h[ai], sigma[bi]);
        let mut coords = q_model.elements[ha].coords.clone();
        coords.extend_from_slice(&r_model.elements[sb].coords);
        let j = m2
            .index_of(&Element::new(coords))
            .ok_or_else(|| Error::Contract("patched image leaves the model".into()))?;
        tau.push(j);
    }
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indiscernibles::build_family;
    use crate::model::find_colored_iso;
    use crate::poset::{DeltaRule, FiniteSpec, Presentation};

    fn q_side() -> TruncatedModel {
        // 2-chain with δ = (2, 3): 6 elements
        let p = Arc::new(crate::poset::FinitePoset::chain_with_deltas(&[2, 3]));
        TruncatedModel::full_model(p, 1 << 20).unwrap()
    }

    #[test]
    fn tame_checks() {
        let m = q_side();
        // S = E_bottom itself is invariant at the bottom node
        let mut tuples = BTreeSet::new();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if m.related_at(0, &m.elements[i], &m.elements[j]) {
                    tuples.insert(vec![i, j]);
                }
            }
        }
        let s = TameRelation { name: "E0".into(), arity: 2, inv_node: 0, tuples };
        assert!(check_tame(&m, &s));
        assert!(!is_irreflexive(&m, &s));

        // a single (class0, class1) box at the bottom node
        let classes = m.classes_of(&[0]);
        let mut box_tuples = BTreeSet::new();
        for &x in &classes[0] {
            for &y in &classes[1] {
                box_tuples.insert(vec![x, y]);
            }
        }
        let b = TameRelation { name: "box".into(), arity: 2, inv_node: 0, tuples: box_tuples };
        assert!(check_tame(&m, &b));
        assert!(is_irreflexive(&m, &b));

        // one specific element × everything is not invariant when that
        // element shares its class
        let mut bad_tuples = BTreeSet::new();
        for j in 0..m.len() {
            bad_tuples.insert(vec![0, j]);
        }
        let bad = TameRelation { name: "bad".into(), arity: 2, inv_node: 0, tuples: bad_tuples };
        assert!(!check_tame(&m, &bad));
    }

    #[test]
    fn irreflexive_split_reconstructs() {
        let m = q_side();
        let mut tuples = BTreeSet::new();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if m.related_at(0, &m.elements[i], &m.elements[j]) {
                    tuples.insert(vec![i, j]);
                }
            }
        }
        let s = TameRelation { name: "E0".into(), arity: 2, inv_node: 0, tuples };
        let pieces = make_irreflexive(&m, &s);
        for p in &pieces {
            assert!(is_irreflexive(&m, p), "piece {} must be irreflexive", p.name);
            assert!(check_tame(&m, p));
        }
        for i in 0..m.len() {
            for j in 0..m.len() {
                assert_eq!(
                    s.contains(&[i, j]),
                    reconstruct_from_pieces(&m, 0, 2, &pieces, &[i, j]),
                );
            }
        }
    }

    fn r_side(classes: usize) -> (TruncatedModel, IndiscernibleFamily) {
        let pres = Arc::new(Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }));
        build_family(&pres, classes, 1, classes + 6).unwrap()
    }

    #[test]
    fn encode_no_relations() {
        let q = q_side();
        let input = TwoLevelInput {
            q_model: q.clone(),
            relations: vec![],
            coloring: (0..q.len() as u32).collect(),
        };
        let (rm, rf) = r_side(1);
        let out = encode_twolevel(&input, &rm, &rf, 7).unwrap();
        // J = {*}: every color is an s-image
        assert!(out.colored.colors.iter().all(|&c| c % 2 == 0));
        let recovered = recover_relations(&out.colored, &out.codebook, &out.split).unwrap();
        assert!(recovered.is_empty());
    }

    #[test]
    fn encode_recover_unary() {
        let q = q_side();
        // unary relation: one bottom class
        let classes = q.classes_of(&[0]);
        let tuples: BTreeSet<Vec<usize>> = classes[0].iter().map(|&x| vec![x]).collect();
        let s = TameRelation { name: "U".into(), arity: 1, inv_node: 0, tuples: tuples.clone() };
        assert!(check_tame(&q, &s) && is_irreflexive(&q, &s));
        let input = TwoLevelInput {
            q_model: q.clone(),
            relations: vec![s],
            coloring: vec![5; q.len()],
        };
        // |J| = 1 + |Pos| = 1 + 1
        let (rm, rf) = r_side(2);
        let out = encode_twolevel(&input, &rm, &rf, 3).unwrap();
        let recovered = recover_relations(&out.colored, &out.codebook, &out.split).unwrap();
        assert_eq!(recovered[0], tuples);
    }

    #[test]
    fn encode_recover_binary() {
        let q = q_side();
        // binary irreflexive at the bottom: a box between classes 0 and 1
        let classes = q.classes_of(&[0]);
        let mut tuples = BTreeSet::new();
        for &x in &classes[0] {
            for &y in &classes[1] {
                tuples.insert(vec![x, y]);
            }
        }
        let s = TameRelation { name: "B".into(), arity: 2, inv_node: 0, tuples: tuples.clone() };
        let input = TwoLevelInput {
            q_model: q.clone(),
            relations: vec![s],
            coloring: (0..q.len() as u32).collect(),
        };
        // reps per class: 2 classes at bottom: Pos = tuples of reps in S:
        // (r0, r1) only → |J| = 2
        let (rm, rf) = r_side(2);
        let out = encode_twolevel(&input, &rm, &rf, 3).unwrap();
        let recovered = recover_relations(&out.colored, &out.codebook, &out.split).unwrap();
        assert_eq!(recovered[0], tuples);
    }

    #[test]
    fn isomorphic_inputs_give_isomorphic_outputs() {
        let q = q_side();
        let classes = q.classes_of(&[0]);
        let mut tuples = BTreeSet::new();
        for &x in &classes[0] {
            for &y in &classes[1] {
                tuples.insert(vec![x, y]);
                tuples.insert(vec![y, x]);
            }
        }
        let s = TameRelation { name: "B".into(), arity: 2, inv_node: 0, tuples };
        // h: an automorphism preserving S; find one by brute force
        let autos = crate::dynamics::enumerate_automorphisms(&q, 24).unwrap();
        let h = autos
            .into_iter()
            .find(|h| {
                !h.iter().enumerate().all(|(i, &j)| i == j)
                    && s.tuples.iter().all(|t| {
                        s.contains(&t.iter().map(|&x| h[x]).collect::<Vec<_>>())
                    })
            })
            .expect("a nontrivial S-preserving automorphism exists");
        let c1: Vec<u32> = (0..q.len() as u32).map(|i| i % 3).collect();
        // c2 = c1 ∘ h^{-1}
        let mut c2 = vec![0u32; q.len()];
        for i in 0..q.len() {
            c2[h[i]] = c1[i];
        }
        let input1 = TwoLevelInput { q_model: q.clone(), relations: vec![s.clone()], coloring: c1 };
        let input2 = TwoLevelInput { q_model: q.clone(), relations: vec![s], coloring: c2 };
        let (rm, rf) = r_side(4);
        let out1 = encode_twolevel(&input1, &rm, &rf, 11).unwrap();
        let out2 = encode_twolevel(&input2, &rm, &rf, 11).unwrap();
        let tau = transport_isomorphism(&input1, &h, &out1, &out2, &rm, &rf).unwrap();
        // τ transports colors exactly
        for e in 0..out1.colored.model.len() {
            assert_eq!(out1.colored.colors[e], out2.colored.colors[tau[e]]);
        }
        // and is an isomorphism of the underlying models
        assert!(crate::model::is_isomorphism(
            &out1.colored.model,
            &out2.colored.model,
            &tau,
            None
        ));
        // independent confirmation by brute-force search
        assert!(find_colored_iso(&out1.colored, &out2.colored).is_some());
    }

    #[test]
    fn capacity_error_when_family_too_small() {
        let q = q_side();
        let classes = q.classes_of(&[0]);
        let tuples: BTreeSet<Vec<usize>> = classes[0].iter().map(|&x| vec![x]).collect();
        let s = TameRelation { name: "U".into(), arity: 1, inv_node: 0, tuples };
        let input = TwoLevelInput {
            q_model: q.clone(),
            relations: vec![s],
            coloring: vec![0; q.len()],
        };
        let (rm, rf) = r_side(1);
        let err = encode_twolevel(&input, &rm, &rf, 0).unwrap_err();
        assert_eq!(err.code(), "capacity-error");
    }

    #[test]
    fn union_poset_keeps_sides_independent() {
        let q = Arc::new(crate::poset::FinitePoset::chain(2, 2));
        let r = Arc::new(
            Arc::new(Presentation::FiniteExplicit(FiniteSpec::antichain(2, 3)))
                .truncate(2),
        );
        let u = union_poset(&q, &r);
        assert_eq!(u.len(), 4);
        assert!(u.leq_idx(0, 1));
        assert!(!u.leq_idx(0, 2));
        assert!(!u.leq_idx(2, 3));
        assert_eq!(u.deltas(), &[2, 2, 3, 3]);
    }
}
