//! Quantifier-free 1-embeddings and the leveled back-and-forth system.
//!
//! A 1-embedding is an embedding whose image is relatively saturated for
//! quantifier-free types.  On finite models the saturation condition is
//! decided exactly: a witness must match the profile of the new point
//! against the whole image, so the tuple-length cap reported by the
//! verdict is the image size itself.
//!
//! The back-and-forth state matches tuples coordinate by coordinate, each
//! coordinate carrying a witness embedding; witnesses of coordinates that
//! agree below chain level `n` must induce the same map on the
//! `Q_n`-quotient.  Extension follows the four-case split: fresh start,
//! reuse within an `E_R`-class, reuse when the point is in the witness's
//! domain, and otherwise a new witness whose quotient at the maximal
//! shared level inverts the old one.

use crate::model::{induced_map, ColoredModel, QuotientMap, TruncatedModel};
use crate::{Error, Result};

/// Verdict of the 1-embedding check.  `cap` records the tuple length the
/// saturation condition was decided at (the whole image, so the check is
/// exact rather than truncated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneEmbeddingVerdict {
    pub embedding_ok: bool,
    pub saturation_ok: bool,
    pub cap: usize,
}

impl OneEmbeddingVerdict {
    pub fn holds(&self) -> bool {
        self.embedding_ok && self.saturation_ok
    }
}

/// Check that `map` is an embedding `M → N` (injective, wedge- and
/// color-preserving) whose image is relatively qf-saturated in `N`.
pub fn check_one_embedding(
    m: &ColoredModel,
    n: &ColoredModel,
    map: &[usize],
) -> OneEmbeddingVerdict {
    let cap = m.model.len();
    let mut embedding_ok = map.len() == m.model.len();
    if embedding_ok {
        let mut used = vec![false; n.model.len()];
        for &j in map {
            if j >= n.model.len() || used[j] {
                embedding_ok = false;
                break;
            }
            used[j] = true;
        }
    }
    if embedding_ok {
        'outer: for i in 0..m.model.len() {
            if m.colors[i] != n.colors[map[i]] {
                embedding_ok = false;
                break;
            }
            for j in 0..m.model.len() {
                let w1 = m.model.wedge(&m.model.elements[i], &m.model.elements[j]);
                let w2 = n.model.wedge(&n.model.elements[map[i]], &n.model.elements[map[j]]);
                if w1 != w2 {
                    embedding_ok = false;
                    break 'outer;
                }
            }
        }
    }
    if !embedding_ok {
        return OneEmbeddingVerdict { embedding_ok, saturation_ok: false, cap };
    }

    // saturation: every b in N must have a profile twin inside the image,
    // the profile being wedges, colors and the equality pattern against
    // the whole image
    let image: Vec<usize> = map.to_vec();
    let profile = |x: usize| -> (u32, Vec<(Vec<usize>, bool)>) {
        (
            n.colors[x],
            image
                .iter()
                .map(|&a| {
                    (
                        n.model.wedge(&n.model.elements[a], &n.model.elements[x]),
                        a == x,
                    )
                })
                .collect(),
        )
    };
    let saturation_ok = (0..n.model.len()).all(|b| {
        let pb = profile(b);
        image.iter().any(|&a| profile(a) == pb)
    });
    OneEmbeddingVerdict { embedding_ok: true, saturation_ok, cap }
}

/// Least `k > 0` with `map^k = id`; errors when the self-map is not a
/// permutation.
pub fn self_embedding_order(map: &[usize]) -> Result<u64> {
    let n = map.len();
    let mut seen = vec![false; n];
    for &j in map {
        if j >= n || seen[j] {
            return Err(Error::Contract("self-map is not injective".into()));
        }
        seen[j] = true;
    }
    let mut order = 1u64;
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut x = start;
        loop {
            seen[x] = true;
            len += 1;
            x = map[x];
            if x == start {
                break;
            }
        }
        order = lcm(order, len);
    }
    Ok(order)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Given embeddings `f : M → N` and `g : N → M`, produce `h : N → M`
/// whose `Q_n`-quotient is inverse to that of `f`: with `k` the order of
/// the quotient of `g∘f`, take `h = (g∘f)^{k-1}∘g`.
pub fn inverse_mod_level(
    m: &TruncatedModel,
    n: &TruncatedModel,
    f: &[usize],
    g: &[usize],
    level_nodes: &[usize],
) -> Result<Vec<usize>> {
    let gf: Vec<usize> = (0..m.len()).map(|i| g[f[i]]).collect();
    let q_gf = induced_map(m, m, &gf, level_nodes)?;
    let k = self_embedding_order(&q_gf.map)?;
    let mut h: Vec<usize> = g.to_vec();
    for _ in 1..k {
        h = h.iter().map(|&i| gf[i]).collect();
    }
    // verify: [f] then [h] is the identity on the source quotient
    let q_f = induced_map(m, n, f, level_nodes)?;
    let q_h = induced_map(n, m, &h, level_nodes)?;
    if !q_f.then(&q_h).is_identity() {
        return Err(Error::Contract("quotient inverse verification failed".into()));
    }
    Ok(h)
}

/// Does `map` send the `E_R`-class of `a` onto the class of its image?
pub fn restriction_onto_check(
    m: &TruncatedModel,
    n: &TruncatedModel,
    map: &[usize],
    r_nodes: &[usize],
    a: usize,
) -> bool {
    let class_a: Vec<usize> = (0..m.len())
        .filter(|&x| r_nodes.iter().all(|&q| m.related_at(q, &m.elements[x], &m.elements[a])))
        .collect();
    let b = map[a];
    let class_b: Vec<usize> = (0..n.len())
        .filter(|&y| r_nodes.iter().all(|&q| n.related_at(q, &n.elements[y], &n.elements[b])))
        .collect();
    class_b
        .iter()
        .all(|&y| class_a.iter().any(|&x| map[x] == y))
}

/// A pool entry: a matched pair of maps, at least one side total.  `None`
/// marks points outside the partial side's domain.
#[derive(Debug, Clone)]
pub struct PoolEmbedding {
    pub fwd: Vec<Option<usize>>,
    pub bwd: Vec<Option<usize>>,
}

impl PoolEmbedding {
    /// Build from a total bijection `M → N`.
    pub fn from_bijection(map: &[usize], n_len: usize) -> Self {
        let fwd: Vec<Option<usize>> = map.iter().map(|&j| Some(j)).collect();
        let mut bwd = vec![None; n_len];
        for (i, &j) in map.iter().enumerate() {
            bwd[j] = Some(i);
        }
        PoolEmbedding { fwd, bwd }
    }

    /// Restrict the forward domain; exercises the partial-side cases.
    pub fn restrict_fwd(mut self, dom: &[usize]) -> Self {
        for i in 0..self.fwd.len() {
            if !dom.contains(&i) {
                self.fwd[i] = None;
            }
        }
        self
    }

    pub fn fwd_total(&self) -> bool {
        self.fwd.iter().all(|x| x.is_some())
    }

    fn total_fwd_map(&self) -> Option<Vec<usize>> {
        self.fwd.iter().copied().collect()
    }

    fn total_bwd_map(&self) -> Option<Vec<usize>> {
        self.bwd.iter().copied().collect()
    }
}

/// Leveled ambient data for a back-and-forth run over a shared poset with
/// a chosen chain.
pub struct SbContext {
    pub m: ColoredModel,
    pub n: ColoredModel,
    /// Chain node indices, in chain order.
    pub chain_idxs: Vec<usize>,
    /// `Q_n = {q : q ≯ p_n}` per level.
    pub levels: Vec<Vec<usize>>,
    /// `R` = downward closure of the chain, materialized.
    pub r_nodes: Vec<usize>,
    pub pool: Vec<PoolEmbedding>,
}

impl SbContext {
    pub fn new(m: ColoredModel, n: ColoredModel, chain_idxs: Vec<usize>) -> Result<SbContext> {
        if m.model.poset.nodes() != n.model.poset.nodes() {
            return Err(Error::Contract("models must share a poset".into()));
        }
        if m.model.len() != n.model.len() {
            return Err(Error::Contract(
                "mutually 1-embeddable finite models have equal size".into(),
            ));
        }
        let poset = &m.model.poset;
        let levels: Vec<Vec<usize>> =
            chain_idxs.iter().map(|&p| poset.level_set(p)).collect();
        let r_nodes = poset.downward_closure(&chain_idxs);
        Ok(SbContext { m, n, chain_idxs, levels, r_nodes, pool: Vec::new() })
    }

    /// Register a mutual pair of verified 1-embeddings.
    pub fn register(&mut self, f: &[usize], g: &[usize]) -> Result<()> {
        if !check_one_embedding(&self.m, &self.n, f).holds() {
            return Err(Error::Contract("f is not a 1-embedding".into()));
        }
        if !check_one_embedding(&self.n, &self.m, g).holds() {
            return Err(Error::Contract("g is not a 1-embedding".into()));
        }
        self.pool.push(PoolEmbedding::from_bijection(f, self.n.model.len()));
        // g registers as a pool entry with total backward side
        let gp = PoolEmbedding::from_bijection(g, self.m.model.len());
        self.pool.push(PoolEmbedding { fwd: gp.bwd, bwd: gp.fwd });
        Ok(())
    }

    /// Register a deliberately partial pair (testing hook).
    pub fn register_raw(&mut self, entry: PoolEmbedding) {
        self.pool.push(entry);
    }

    fn model(&self, forward: bool) -> &TruncatedModel {
        if forward {
            &self.m.model
        } else {
            &self.n.model
        }
    }

    fn e_r(&self, forward: bool, x: usize, y: usize) -> bool {
        let model = self.model(forward);
        self.r_nodes
            .iter()
            .all(|&q| model.related_at(q, &model.elements[x], &model.elements[y]))
    }

    /// Largest `n` with `x, y` agreeing at chain nodes `p_0, ..., p_{n-1}`.
    fn shared_level(&self, forward: bool, x: usize, y: usize) -> usize {
        let model = self.model(forward);
        let mut n = 0;
        for &p in &self.chain_idxs {
            if model.related_at(p, &model.elements[x], &model.elements[y]) {
                n += 1;
            } else {
                break;
            }
        }
        n
    }

    /// The induced `Q_n`-quotient map of a pool witness in the given
    /// direction, defined through whichever side is total.
    fn witness_quotient(&self, w: usize, level: usize, forward: bool) -> Result<QuotientMap> {
        let entry = &self.pool[w];
        let nodes = &self.levels[level];
        let (src, dst) = if forward {
            (&self.m.model, &self.n.model)
        } else {
            (&self.n.model, &self.m.model)
        };
        let fwd = if forward { &entry.fwd } else { &entry.bwd };
        let bwd = if forward { &entry.bwd } else { &entry.fwd };
        if let Some(total) = fwd.iter().copied().collect::<Option<Vec<usize>>>() {
            return induced_map(src, dst, &total, nodes);
        }
        let total_bwd: Vec<usize> = bwd
            .iter()
            .copied()
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| Error::Contract("pool entry has no total side".into()))?;
        induced_map(dst, src, &total_bwd, nodes)?
            .inverse()
            .ok_or_else(|| Error::Contract("total side is not a bijection on classes".into()))
    }
}

/// A back-and-forth state: matched element pairs with one witness per
/// coordinate.
#[derive(Debug, Clone, Default)]
pub struct BfState {
    /// matched (a, b) element index pairs
    pub matched: Vec<(usize, usize)>,
    /// pool index per coordinate
    pub witnesses: Vec<usize>,
}

impl BfState {
    pub fn len(&self) -> usize {
        self.matched.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matched.is_empty()
    }

    /// Validate the state: witness bookkeeping, the quotient-agreement
    /// clauses in both directions, and equality of the matched tuples'
    /// quantifier-free-and-color types.
    pub fn validate(&self, ctx: &SbContext) -> Result<()> {
        for (k, &(a, b)) in self.matched.iter().enumerate() {
            let w = &ctx.pool[self.witnesses[k]];
            if w.fwd[a] != Some(b) && w.bwd[b] != Some(a) {
                return Err(Error::Contract("witness does not match its pair".into()));
            }
            if let Some(img) = w.fwd[a] {
                if img != b {
                    return Err(Error::Contract("forward witness mismatch".into()));
                }
            }
            if let Some(pre) = w.bwd[b] {
                if pre != a {
                    return Err(Error::Contract("backward witness mismatch".into()));
                }
            }
        }
        // quotient agreement, both directions
        for i in 0..self.matched.len() {
            for j in i + 1..self.matched.len() {
                let (ai, bi) = self.matched[i];
                let (aj, bj) = self.matched[j];
                let (wi, wj) = (self.witnesses[i], self.witnesses[j]);
                if wi == wj {
                    continue;
                }
                for (forward, x, y) in [(true, ai, aj), (false, bi, bj)] {
                    let n = if ctx.e_r(forward, x, y) {
                        // full agreement forces equal witnesses
                        return Err(Error::Contract(
                            "E_R-related coordinates must share a witness".into(),
                        ));
                    } else {
                        ctx.shared_level(forward, x, y)
                    };
                    if n > 0 {
                        let qi = ctx.witness_quotient(wi, n - 1, forward)?;
                        let qj = ctx.witness_quotient(wj, n - 1, forward)?;
                        if qi.map != qj.map {
                            return Err(Error::Contract(format!(
                                "witnesses disagree on the level-{n} quotient"
                            )));
                        }
                    }
                }
            }
        }
        // matched tuples have the same quantifier-free-and-color type
        let tup_a: Vec<_> = self
            .matched
            .iter()
            .map(|&(a, _)| ctx.m.model.elements[a].clone())
            .collect();
        let tup_b: Vec<_> = self
            .matched
            .iter()
            .map(|&(_, b)| ctx.n.model.elements[b].clone())
            .collect();
        if ctx.m.model.qftp(&tup_a) != ctx.n.model.qftp(&tup_b) {
            return Err(Error::Contract("matched tuples differ in qf type".into()));
        }
        for (k, &(a, b)) in self.matched.iter().enumerate() {
            let _ = k;
            if ctx.m.colors[a] != ctx.n.colors[b] {
                return Err(Error::Contract("matched pair differs in color".into()));
            }
        }
        Ok(())
    }
}

/// Which side a new element is being added on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfDirection {
    Forth,
    Back,
}

/// Extend a state by one element, returning its match and the new state.
/// Implements the four-case split; the returned state always revalidates.
pub fn bf_extend(
    ctx: &mut SbContext,
    state: &BfState,
    new_elt: usize,
    dir: BfDirection,
) -> Result<(usize, BfState)> {
    let forward = dir == BfDirection::Forth;

    let push = |state: &BfState, pair: (usize, usize), w: usize| -> BfState {
        let mut s = state.clone();
        s.matched.push(pair);
        s.witnesses.push(w);
        s
    };
    let orient = |x: usize, y: usize| if forward { (x, y) } else { (y, x) };

    // Case 1: fresh start
    if state.is_empty() {
        let w = ctx
            .pool
            .iter()
            .position(|e| if forward { e.fwd.iter().all(|x| x.is_some()) } else { e.bwd.iter().all(|x| x.is_some()) })
            .ok_or_else(|| Error::PoolExhausted("no total embedding registered".into()))?;
        let img = if forward { ctx.pool[w].fwd[new_elt] } else { ctx.pool[w].bwd[new_elt] }
            .expect("chosen entry is total");
        let s = push(state, orient(new_elt, img), w);
        return Ok((img, s));
    }

    // Case 2: E_R-equivalent to a matched coordinate — reuse its witness
    for (k, &(a, b)) in state.matched.iter().enumerate() {
        let own = if forward { a } else { b };
        if ctx.e_r(forward, new_elt, own) {
            let w = state.witnesses[k];
            let entry = &ctx.pool[w];
            let side = if forward { &entry.fwd } else { &entry.bwd };
            if let Some(img) = side[new_elt] {
                let s = push(state, orient(new_elt, img), w);
                return Ok((img, s));
            }
            // partial on this side: the other side is total and maps the
            // image class onto ours
            let other = if forward { &entry.bwd } else { &entry.fwd };
            let anchor = if forward { b } else { a };
            let co_model = ctx.model(!forward);
            let img = (0..co_model.len())
                .find(|&y| {
                    ctx.e_r(!forward, y, anchor) && other[y] == Some(new_elt)
                })
                .ok_or_else(|| {
                    Error::Contract("restriction of the witness is not onto its class".into())
                })?;
            let s = push(state, orient(new_elt, img), w);
            return Ok((img, s));
        }
    }

    // maximal shared level and a coordinate attaining it
    let (mut n_max, mut idx) = (0usize, 0usize);
    for (k, &(a, b)) in state.matched.iter().enumerate() {
        let own = if forward { a } else { b };
        let n = ctx.shared_level(forward, new_elt, own);
        if n > n_max {
            n_max = n;
            idx = k;
        }
    }
    let w = state.witnesses[idx];
    {
        // Case 3: the witness already covers the new element
        let entry = &ctx.pool[w];
        let side = if forward { &entry.fwd } else { &entry.bwd };
        if let Some(img) = side[new_elt] {
            let s = push(state, orient(new_elt, img), w);
            return Ok((img, s));
        }
    }

    // Case 4: build a new embedding whose level-n quotient inverts the
    // witness's other side
    let entry = ctx.pool[w].clone();
    let back_total = if forward { entry.total_bwd_map() } else { entry.total_fwd_map() }
        .ok_or_else(|| Error::Contract("pool entry has no total side".into()))?;
    // a seed embedding in our direction
    let seed = ctx
        .pool
        .iter()
        .find_map(|e| if forward { e.total_fwd_map() } else { e.total_bwd_map() })
        .ok_or_else(|| Error::PoolExhausted("no total embedding in this direction".into()))?;

    let (src, dst) = if forward {
        (ctx.m.model.clone(), ctx.n.model.clone())
    } else {
        (ctx.n.model.clone(), ctx.m.model.clone())
    };
    // endo of dst: seed ∘ back
    let endo: Vec<usize> = (0..dst.len()).map(|j| seed[back_total[j]]).collect();
    let level_nodes = if n_max == 0 { vec![] } else { ctx.levels[n_max - 1].clone() };
    let q_endo = induced_map(&dst, &dst, &endo, &level_nodes)?;
    let k_ord = self_embedding_order(&q_endo.map)?;
    // f_new = endo^{k-1} ∘ seed
    let mut f_new: Vec<usize> = seed.clone();
    for _ in 1..k_ord {
        f_new = f_new.iter().map(|&j| endo[j]).collect();
    }
    // verify the inversion at this level
    let q_new = induced_map(&src, &dst, &f_new, &level_nodes)?;
    let q_back = induced_map(&dst, &src, &back_total, &level_nodes)?;
    if !q_back.then(&q_new).is_identity() || !q_new.then(&q_back).is_identity() {
        return Err(Error::Contract("level inversion failed in case 4".into()));
    }

    let new_entry = if forward {
        PoolEmbedding::from_bijection(&f_new, ctx.n.model.len())
    } else {
        let e = PoolEmbedding::from_bijection(&f_new, ctx.m.model.len());
        PoolEmbedding { fwd: e.bwd, bwd: e.fwd }
    };
    ctx.pool.push(new_entry);
    let w_new = ctx.pool.len() - 1;
    let img = f_new[new_elt];
    let s = push(state, orient(new_elt, img), w_new);
    Ok((img, s))
}

/// Run the full back-and-forth: alternate over enumerations of both
/// models until exhausted, validating the state at every step, and return
/// the resulting map `M → N`.
pub fn sb_isomorphism(ctx: &mut SbContext) -> Result<Vec<usize>> {
    let mut state = BfState::default();
    let size = ctx.m.model.len();
    loop {
        let matched_a: Vec<usize> = state.matched.iter().map(|&(a, _)| a).collect();
        let matched_b: Vec<usize> = state.matched.iter().map(|&(_, b)| b).collect();
        let next_a = (0..size).find(|a| !matched_a.contains(a));
        let next_b = (0..size).find(|b| !matched_b.contains(b));
        match (next_a, next_b) {
            (None, None) => break,
            (Some(a), _) => {
                let (_, s) = bf_extend(ctx, &state, a, BfDirection::Forth)?;
                s.validate(ctx)?;
                state = s;
            }
            (None, Some(b)) => {
                let (_, s) = bf_extend(ctx, &state, b, BfDirection::Back)?;
                s.validate(ctx)?;
                state = s;
            }
        }
        // after a forth step, immediately answer the back side
        let matched_b: Vec<usize> = state.matched.iter().map(|&(_, b)| b).collect();
        if let Some(b) = (0..size).find(|b| !matched_b.contains(b)) {
            let (_, s) = bf_extend(ctx, &state, b, BfDirection::Back)?;
            s.validate(ctx)?;
            state = s;
        }
    }
    let mut out = vec![usize::MAX; size];
    for &(a, b) in &state.matched {
        if out[a] != usize::MAX {
            return Err(Error::Contract("coordinate matched twice".into()));
        }
        out[a] = b;
    }
    if out.iter().any(|&b| b == usize::MAX) {
        return Err(Error::Contract("back-and-forth did not exhaust the model".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::enumerate_automorphisms;
    use crate::model::TruncatedModel;
    use crate::poset::{DeltaRule, Presentation};
    use std::sync::Arc;

    fn chain_model(depth: usize, colors: Vec<u32>) -> ColoredModel {
        let pres = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
        let poset = Arc::new(pres.truncate(depth));
        let m = TruncatedModel::full_model(poset, 1 << 20).unwrap();
        ColoredModel::new(m, colors).unwrap()
    }

    #[test]
    fn identity_is_a_one_embedding() {
        let m = chain_model(3, vec![0; 8]);
        let id: Vec<usize> = (0..8).collect();
        assert!(check_one_embedding(&m, &m, &id).holds());
    }

    #[test]
    fn automorphisms_are_one_embeddings() {
        let m = chain_model(2, vec![0; 4]);
        for a in enumerate_automorphisms(&m.model, 24).unwrap() {
            assert!(check_one_embedding(&m, &m, &a).holds());
        }
    }

    #[test]
    fn non_dense_submodel_fails() {
        // inclusion of a proper submodel misses an E-class: the class
        // census obstruction makes saturation fail
        let m = chain_model(2, vec![0; 4]);
        let sub = TruncatedModel::new(
            m.model.poset.clone(),
            m.model.elements[..3].to_vec(),
        )
        .unwrap();
        let sub = ColoredModel::new(sub, vec![0; 3]).unwrap();
        let incl: Vec<usize> = (0..3)
            .map(|i| m.model.index_of(&sub.model.elements[i]).unwrap())
            .collect();
        let verdict = check_one_embedding(&sub, &m, &incl);
        assert!(verdict.embedding_ok);
        assert!(!verdict.saturation_ok);
    }

    #[test]
    fn self_embedding_orders() {
        assert_eq!(self_embedding_order(&[0, 1, 2]).unwrap(), 1);
        assert_eq!(self_embedding_order(&[1, 0]).unwrap(), 2);
        assert_eq!(self_embedding_order(&[1, 2, 0, 3]).unwrap(), 3);
        assert!(self_embedding_order(&[0, 0]).is_err());
    }

    #[test]
    fn order_divides_exponent_bound_on_chain2() {
        let m = chain_model(2, vec![0; 4]);
        for a in enumerate_automorphisms(&m.model, 24).unwrap() {
            let k = self_embedding_order(&a).unwrap();
            assert_eq!(4 % k, 0, "order must divide (2!)^2 = 4");
        }
    }

    #[test]
    fn verified_one_self_embedding_is_automorphism() {
        // an injective self-map of a finite model passing the saturation
        // check is onto, hence an automorphism
        let m = chain_model(2, vec![0; 4]);
        for a in enumerate_automorphisms(&m.model, 24).unwrap() {
            let v = check_one_embedding(&m, &m, &a);
            assert!(v.holds());
            let mut seen = vec![false; 4];
            for &j in &a {
                seen[j] = true;
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn inverse_mod_level_of_mutually_inverse_isos_is_g() {
        // when f and g are mutually inverse, the quotient of g∘f is the
        // identity, so the construction returns g itself
        let m = chain_model(2, vec![0; 4]);
        let autos = enumerate_automorphisms(&m.model, 24).unwrap();
        let f = autos[3].clone();
        let mut g = vec![0usize; 4];
        for (i, &j) in f.iter().enumerate() {
            g[j] = i;
        }
        let levels = m.model.poset.level_set(0);
        let h = inverse_mod_level(&m.model, &m.model, &f, &g, &levels).unwrap();
        assert_eq!(h, g);
    }

    #[test]
    fn inverse_mod_level_on_mutual_isos() {
        let m = chain_model(2, vec![0; 4]);
        let autos = enumerate_automorphisms(&m.model, 24).unwrap();
        // f, g arbitrary (not mutually inverse)
        let f = autos[3].clone();
        let g = autos[5].clone();
        let levels = m.model.poset.level_set(0);
        let h = inverse_mod_level(&m.model, &m.model, &f, &g, &levels).unwrap();
        let qf = induced_map(&m.model, &m.model, &f, &levels).unwrap();
        let qh = induced_map(&m.model, &m.model, &h, &levels).unwrap();
        assert!(qf.then(&qh).is_identity());
    }

    #[test]
    fn restriction_onto_examples() {
        let m = chain_model(2, vec![0; 4]);
        let id: Vec<usize> = (0..4).collect();
        // singleton E_R-classes: trivially onto
        let all_nodes: Vec<usize> = (0..m.model.poset.len()).collect();
        for a in 0..4 {
            assert!(restriction_onto_check(&m.model, &m.model, &id, &all_nodes, a));
        }
        // automorphisms are onto every class
        for aut in enumerate_automorphisms(&m.model, 24).unwrap() {
            for a in 0..4 {
                assert!(restriction_onto_check(&m.model, &m.model, &aut, &[0], a));
            }
        }
    }

    #[test]
    fn sb_identity_run() {
        let m = chain_model(3, vec![0; 8]);
        let id: Vec<usize> = (0..8).collect();
        let mut ctx = SbContext::new(m.clone(), m.clone(), vec![0, 1, 2]).unwrap();
        ctx.register(&id, &id).unwrap();
        let h = sb_isomorphism(&mut ctx).unwrap();
        assert!(crate::model::is_isomorphism(
            &ctx.m.model,
            &ctx.n.model,
            &h,
            Some((&ctx.m.colors, &ctx.n.colors))
        ));
    }

    #[test]
    fn sb_with_non_inverse_isomorphisms() {
        // colorings equal up to automorphism; f, g distinct non-inverse isos
        let m = chain_model(3, vec![1, 1, 2, 2, 1, 1, 2, 2]);
        let autos = enumerate_automorphisms(&m.model, 24).unwrap();
        let color_ok = |a: &Vec<usize>| (0..8).all(|i| m.colors[i] == m.colors[a[i]]);
        let good: Vec<Vec<usize>> = autos.into_iter().filter(color_ok).collect();
        assert!(good.len() >= 3, "need a few color-preserving automorphisms");
        let f = good[1].clone();
        let g = good[2].clone();
        let mut ctx = SbContext::new(m.clone(), m.clone(), vec![0, 1, 2]).unwrap();
        ctx.register(&f, &g).unwrap();
        let h = sb_isomorphism(&mut ctx).unwrap();
        assert!(crate::model::is_isomorphism(
            &ctx.m.model,
            &ctx.n.model,
            &h,
            Some((&ctx.m.colors, &ctx.n.colors))
        ));
    }

    #[test]
    fn bf_case4_with_partial_witness() {
        // register a deliberately dom-restricted forward witness so the
        // extension must construct a level-inverse embedding
        let m = chain_model(3, vec![0; 8]);
        let autos = enumerate_automorphisms(&m.model, 24).unwrap();
        let f = autos[4].clone();
        let mut ctx = SbContext::new(m.clone(), m.clone(), vec![0, 1, 2]).unwrap();
        let id: Vec<usize> = (0..8).collect();
        ctx.register(&id, &id).unwrap();
        // partial entry: forward defined only on {0}
        let partial = PoolEmbedding::from_bijection(&f, 8).restrict_fwd(&[0]);
        ctx.register_raw(partial);
        let mut state = BfState::default();
        // seed the state through the partial witness
        let w = ctx.pool.len() - 1;
        state.matched.push((0, ctx.pool[w].fwd[0].unwrap()));
        state.witnesses.push(w);
        state.validate(&ctx).unwrap();
        // pick an element outside the partial domain that is not
        // E_R-related to 0 (all classes are singletons here)
        let a_new = 5usize;
        let before = ctx.pool.len();
        let (_, s) = bf_extend(&mut ctx, &state, a_new, BfDirection::Forth).unwrap();
        s.validate(&ctx).unwrap();
        assert!(ctx.pool.len() > before, "case 4 must mint a new embedding");
    }

    #[test]
    fn sb_on_chain_with_fibers_exercises_class_reuse() {
        // spine closure is a proper node subset, so E_R-classes are
        // nontrivial and case 2 fires
        use crate::poset::FiberSpec;
        let pres = Arc::new(Presentation::ChainWithFibers {
            fiber: FiberSpec::Finite(crate::poset::FiniteSpec::antichain(1, 2)),
            delta: DeltaRule::Const(2),
        });
        let poset = Arc::new(pres.truncate(5));
        let m = TruncatedModel::full_model(poset.clone(), 1 << 20).unwrap();
        let colors = vec![0; m.len()];
        let cm = ColoredModel::new(m, colors).unwrap();
        // chain node indices: the spine nodes
        let chain_idxs: Vec<usize> = (0..poset.len())
            .filter(|&i| matches!(poset.nodes()[i], crate::poset::NodeAddress::Spine(_)))
            .collect();
        let autos = enumerate_automorphisms(&cm.model, 64).unwrap();
        let f = autos[1].clone();
        let g = autos[autos.len() - 2].clone();
        let mut ctx = SbContext::new(cm.clone(), cm, chain_idxs).unwrap();
        ctx.register(&f, &g).unwrap();
        let h = sb_isomorphism(&mut ctx).unwrap();
        assert!(crate::model::is_isomorphism(
            &ctx.m.model,
            &ctx.n.model,
            &h,
            Some((&ctx.m.colors, &ctx.n.colors))
        ));
    }
}
