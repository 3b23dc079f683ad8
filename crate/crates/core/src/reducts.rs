//! Classification of reducts of chain-indexed refinement models.
//!
//! The carrier is a full product model with levels `0 < j_1 < ... < j_t`
//! plus a multiplicity coordinate: `E_0` is indiscrete, each finite `E_j`
//! is agreement on the coordinates up to `j`, and equality plays the role
//! of the top index `ω`.  Definability over a sublanguage is decided by
//! automorphism invariance; the automorphism groups of chain reducts are
//! iterated wreath products, generated by block swaps, and this is
//! cross-checked against brute force on tiny instances.
//!
//! `classify_reduct` runs the two-case recursion: compute the symmetric
//! swap formula φ = θ ∧ ψ from the relation, compare it with the
//! second-largest level, and either drop that level or decompose through
//! level-collapse projections and recurse, finally minimizing the output
//! against the two-way invariance oracle.  The top index is always kept:
//! equality is preserved by every bijection, so its removal can never be
//! detected by the oracle, while every worked classification includes it.

use std::collections::BTreeSet;

use crate::perm::{all_perms, projections};
use crate::{Error, Result};

/// Index into the chain `0 < 1 < ... < ω`; `Omega` is the equality level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Fin(u32),
    Omega,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Fin(j) => write!(f, "{j}"),
            Level::Omega => write!(f, "w"),
        }
    }
}

/// A full refinement model at finite scale: one coordinate per positive
/// finite level, plus a multiplicity coordinate realizing the 2-type
/// "top-related but distinct".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefModel {
    /// The declared index set, sorted, containing `Fin(0)` and `Omega`.
    pub levels: Vec<Level>,
    /// Positive finite levels in increasing order (the coordinates).
    pub coord_levels: Vec<u32>,
    /// δ per coordinate.
    pub coord_deltas: Vec<u32>,
    /// Multiplicity `s ≥ 2`.
    pub mult: u32,
    /// All elements: coordinate vectors + multiplicity value last.
    pub elements: Vec<Vec<u32>>,
}

impl RefModel {
    /// Build the full model for levels `{0} ∪ js ∪ {ω}` with constant or
    /// per-level δ and multiplicity `s`.
    pub fn new(js: &[u32], deltas: &[u32], mult: u32) -> Result<RefModel> {
        if js.is_empty() || deltas.len() != js.len() {
            return Err(Error::Contract("one delta per positive level".into()));
        }
        if mult < 2 || deltas.iter().any(|&d| d < 2) {
            return Err(Error::Contract("delta and multiplicity must be at least 2".into()));
        }
        let mut sorted = js.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != js.len() || sorted[0] == 0 {
            return Err(Error::Contract("levels must be distinct and positive".into()));
        }
        let mut levels = vec![Level::Fin(0)];
        levels.extend(sorted.iter().map(|&j| Level::Fin(j)));
        levels.push(Level::Omega);

        let mut elements = vec![vec![]];
        for &d in deltas.iter().chain(std::iter::once(&mult)) {
            let mut next = Vec::with_capacity(elements.len() * d as usize);
            for e in &elements {
                for v in 0..d {
                    let mut e2 = e.clone();
                    e2.push(v);
                    next.push(e2);
                }
            }
            elements = next;
        }
        Ok(RefModel {
            levels,
            coord_levels: sorted,
            coord_deltas: deltas.to_vec(),
            mult,
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `E_j(x, y)` by element index.
    pub fn related(&self, level: Level, x: usize, y: usize) -> bool {
        match level {
            Level::Fin(0) => true,
            Level::Fin(j) => {
                let upto = self.coord_levels.iter().filter(|&&l| l <= j).count();
                self.elements[x][..upto] == self.elements[y][..upto]
            }
            Level::Omega => x == y,
        }
    }

    /// Agreement level of two elements: the largest declared level
    /// relating them.
    pub fn agreement(&self, x: usize, y: usize) -> Level {
        *self
            .levels
            .iter()
            .rev()
            .find(|&&l| self.related(l, x, y))
            .expect("level 0 always relates")
    }
}

/// An extensional `n`-ary relation over a refinement model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinableSet {
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

impl DefinableSet {
    pub fn new(arity: usize, tuples: BTreeSet<Vec<usize>>) -> Self {
        DefinableSet { arity, tuples }
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        self.tuples.contains(t)
    }

    /// The extension of `E_j` as a binary definable set.
    pub fn of_relation(m: &RefModel, level: Level) -> DefinableSet {
        let mut tuples = BTreeSet::new();
        for x in 0..m.len() {
            for y in 0..m.len() {
                if m.related(level, x, y) {
                    tuples.insert(vec![x, y]);
                }
            }
        }
        DefinableSet { arity: 2, tuples }
    }

    /// Close a seed relation under a set of element maps.
    pub fn orbit_closure(&self, maps: &[Vec<usize>]) -> DefinableSet {
        let mut tuples = self.tuples.clone();
        let mut frontier: Vec<Vec<usize>> = tuples.iter().cloned().collect();
        while let Some(t) = frontier.pop() {
            for map in maps {
                let img: Vec<usize> = t.iter().map(|&x| map[x]).collect();
                if tuples.insert(img.clone()) {
                    frontier.push(img);
                }
            }
        }
        DefinableSet { arity: self.arity, tuples }
    }
}

/// Generators of the automorphism group of the reduct to the levels in
/// `v` (finite levels only matter; equality is always preserved): block
/// swaps at every slot of the induced level hierarchy plus element
/// transpositions inside the finest declared classes.
pub fn reduct_aut_generators(m: &RefModel, v: &[Level]) -> Vec<Vec<usize>> {
    let finite: Vec<u32> = {
        let mut f: Vec<u32> = v
            .iter()
            .filter_map(|l| match l {
                Level::Fin(j) if *j > 0 => Some(*j),
                _ => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    };
    let mut gens: Vec<Vec<usize>> = Vec::new();
    let n = m.len();

    // classes of E_j as element index sets
    let classes_at = |j: Option<u32>| -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let slot = classes.iter().position(|c| match j {
                Some(j) => m.related(Level::Fin(j), c[0], x),
                None => true,
            });
            match slot {
                Some(s) => classes[s].push(x),
                None => classes.push(vec![x]),
            }
        }
        classes
    };

    let mut prev: Option<u32> = None;
    for &j in &finite {
        // within each parent class, swap pairs of E_j-subclasses
        for parent in classes_at(prev) {
            // subclasses of the parent
            let mut subs: Vec<Vec<usize>> = Vec::new();
            for &x in &parent {
                match subs.iter().position(|c| m.related(Level::Fin(j), c[0], x)) {
                    Some(s) => subs[s].push(x),
                    None => subs.push(vec![x]),
                }
            }
            for a in 0..subs.len() {
                for b in a + 1..subs.len() {
                    // the structural swap: exchange the two blocks matching
                    // elements by their finer coordinates
                    let mut map: Vec<usize> = (0..n).collect();
                    for &x in &subs[a] {
                        let upto = m.coord_levels.iter().filter(|&&l| l <= j).count();
                        let y = subs[b]
                            .iter()
                            .copied()
                            .find(|&y| m.elements[y][upto..] == m.elements[x][upto..])
                            .expect("full product blocks are parallel");
                        map[x] = y;
                        map[y] = x;
                    }
                    gens.push(map);
                }
            }
        }
        prev = Some(j);
    }
    // transpositions within the finest declared classes
    for class in classes_at(prev) {
        for a in 0..class.len() {
            for b in a + 1..class.len() {
                let mut map: Vec<usize> = (0..n).collect();
                map[class[a]] = class[b];
                map[class[b]] = class[a];
                gens.push(map);
            }
        }
    }
    gens
}

/// Is `D` invariant under every automorphism of the reduct to `v`?
/// Invariance under the generators decides it.
pub fn is_invariant(m: &RefModel, d: &DefinableSet, v: &[Level]) -> bool {
    let gens = reduct_aut_generators(m, v);
    for map in &gens {
        for t in &d.tuples {
            let img: Vec<usize> = t.iter().map(|&x| map[x]).collect();
            if !d.contains(&img) {
                return false;
            }
        }
    }
    true
}

/// Every tuple pairwise unrelated at the top of `u`?
pub fn is_u_irreflexive(m: &RefModel, d: &DefinableSet, u: &[Level]) -> bool {
    let k = *u.iter().max().expect("nonempty index set");
    d.tuples.iter().all(|t| {
        (0..t.len()).all(|i| (i + 1..t.len()).all(|j| !m.related(k, t[i], t[j])))
    })
}

/// θ: symmetric swap stability of the first two arguments, over all
/// argument permutations and all fillers.
pub fn theta(m: &RefModel, d: &DefinableSet) -> DefinableSet {
    let n = d.arity;
    let size = m.len();
    let mut tuples = BTreeSet::new();
    let perms = all_perms(n);
    for x in 0..size {
        'pair: for y in 0..size {
            if n == 1 {
                if d.contains(&[x]) == d.contains(&[y]) {
                    tuples.insert(vec![x, y]);
                }
                continue;
            }
            // all fillers z_2..z_{n-1}
            let mut filler = vec![0usize; n - 2];
            loop {
                let mut w = vec![x, y];
                w.extend_from_slice(&filler);
                let mut w_sw = vec![y, x];
                w_sw.extend_from_slice(&filler);
                for rho in &perms {
                    let a: Vec<usize> = (0..n).map(|i| w[rho.apply(i)]).collect();
                    let b: Vec<usize> = (0..n).map(|i| w_sw[rho.apply(i)]).collect();
                    if d.contains(&a) != d.contains(&b) {
                        continue 'pair;
                    }
                }
                // advance filler
                let mut k = 0;
                loop {
                    if k == filler.len() {
                        break;
                    }
                    filler[k] += 1;
                    if filler[k] < size {
                        break;
                    }
                    filler[k] = 0;
                    k += 1;
                }
                if k == filler.len() {
                    break;
                }
            }
            tuples.insert(vec![x, y]);
        }
    }
    DefinableSet { arity: 2, tuples }
}

/// ψ: substitution stability of the first argument against fillers that
/// are top-unrelated to both arguments.
pub fn psi(m: &RefModel, d: &DefinableSet, top: Level) -> DefinableSet {
    let n = d.arity;
    let size = m.len();
    let mut tuples = BTreeSet::new();
    let perms = all_perms(n);
    for x in 0..size {
        'pair: for y in 0..size {
            if n == 1 {
                if d.contains(&[x]) == d.contains(&[y]) {
                    tuples.insert(vec![x, y]);
                }
                continue;
            }
            let mut filler = vec![0usize; n - 1];
            loop {
                let distinct = |anchor: usize, zs: &[usize]| -> bool {
                    let mut all = vec![anchor];
                    all.extend_from_slice(zs);
                    (0..all.len()).all(|i| {
                        (i + 1..all.len()).all(|j| !m.related(top, all[i], all[j]))
                    })
                };
                if distinct(x, &filler) && distinct(y, &filler) {
                    let mut wx = vec![x];
                    wx.extend_from_slice(&filler);
                    let mut wy = vec![y];
                    wy.extend_from_slice(&filler);
                    for rho in &perms {
                        let a: Vec<usize> = (0..n).map(|i| wx[rho.apply(i)]).collect();
                        let b: Vec<usize> = (0..n).map(|i| wy[rho.apply(i)]).collect();
                        if d.contains(&a) != d.contains(&b) {
                            continue 'pair;
                        }
                    }
                }
                let mut k = 0;
                loop {
                    if k == filler.len() {
                        break;
                    }
                    filler[k] += 1;
                    if filler[k] < size {
                        break;
                    }
                    filler[k] = 0;
                    k += 1;
                }
                if k == filler.len() {
                    break;
                }
            }
            tuples.insert(vec![x, y]);
        }
    }
    DefinableSet { arity: 2, tuples }
}

/// φ = θ ∧ ψ.
pub fn phi(m: &RefModel, d: &DefinableSet, top: Level) -> DefinableSet {
    let t = theta(m, d);
    let p = psi(m, d, top);
    DefinableSet {
        arity: 2,
        tuples: t.tuples.intersection(&p.tuples).cloned().collect(),
    }
}

/// The projection `D^π_k`: tuples over the range of π that extend to a
/// full tuple in `D` whose coordinates agree at level `k` exactly per π.
pub fn project(m: &RefModel, d: &DefinableSet, pi: &[usize], k: Level) -> DefinableSet {
    let n = d.arity;
    let range: Vec<usize> = {
        let mut r = pi.to_vec();
        r.sort_unstable();
        r.dedup();
        r
    };
    let mut tuples = BTreeSet::new();
    let size = m.len();
    let mut assign = vec![0usize; range.len()];
    loop {
        // witnesses ȳ with y_i free off the range, y_r = x_r on it
        let mut witness_idx = vec![0usize; n];
        let found = 'search: loop {
            // build candidate: coordinates in range are pinned
            let mut y = vec![0usize; n];
            let mut ok = true;
            for i in 0..n {
                if let Some(r) = range.iter().position(|&r| r == i) {
                    y[i] = assign[r];
                } else {
                    y[i] = witness_idx[i];
                }
            }
            // Δ^π_k: related iff π identifies
            for i in 0..n {
                for j in i + 1..n {
                    let want = pi[i] == pi[j];
                    if m.related(k, y[i], y[j]) != want {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok && d.contains(&y) {
                break 'search true;
            }
            // advance free coordinates
            let mut adv = 0;
            loop {
                if adv == n {
                    break 'search false;
                }
                if range.contains(&adv) {
                    adv += 1;
                    continue;
                }
                witness_idx[adv] += 1;
                if witness_idx[adv] < size {
                    break;
                }
                witness_idx[adv] = 0;
                adv += 1;
            }
        };
        if found {
            tuples.insert(assign.clone());
        }
        let mut kk = 0;
        loop {
            if kk == range.len() {
                break;
            }
            assign[kk] += 1;
            if assign[kk] < size {
                break;
            }
            assign[kk] = 0;
            kk += 1;
        }
        if kk == range.len() {
            break;
        }
    }
    DefinableSet { arity: range.len(), tuples }
}

/// Verify the top-level-drop law: a `w`-irreflexive `ℒ_u`-definable
/// relation is already `ℒ_w`-definable, `w = u ∖ {max}`.
pub fn drop_top(m: &RefModel, d: &DefinableSet, u: &[Level]) -> Result<bool> {
    let mut w = u.to_vec();
    w.sort_unstable();
    let _k = w.pop().expect("nonempty");
    if !is_invariant(m, d, u) {
        return Err(Error::Precondition("relation is not definable over u".into()));
    }
    if !is_u_irreflexive(m, d, &w) {
        return Err(Error::Precondition("relation is not irreflexive below the top".into()));
    }
    Ok(is_invariant(m, d, &w))
}

/// The core recursion: `d` must be `u`-irreflexive and `ℒ_u`-definable;
/// returns `F ⊆ u` with `{d, E_top}` definably equivalent to the levels
/// in `F`.
fn classify_core(m: &RefModel, d: &DefinableSet, u: &[Level]) -> Result<BTreeSet<Level>> {
    let mut sorted = u.to_vec();
    sorted.sort_unstable();
    let k = *sorted.last().expect("nonempty");
    if sorted.len() == 2 {
        return Ok([k].into_iter().collect());
    }
    let ell = sorted[sorted.len() - 2];

    let phi_rel = phi(m, d, k);
    let ell_rel = DefinableSet::of_relation(m, ell);
    // the symmetric formula always contains the second level
    debug_assert!(
        ell_rel.tuples.is_subset(&phi_rel.tuples),
        "E_l must entail the swap formula"
    );

    if phi_rel == ell_rel {
        // the second level is definable from {d, E_top}: decompose through
        // level-collapse projections and recurse below the top
        let w: Vec<Level> = sorted[..sorted.len() - 1].to_vec();
        let mut out: BTreeSet<Level> = [ell, k].into_iter().collect();
        for pi in projections(d.arity) {
            let piece = project(m, d, &pi, ell);
            debug_assert!(
                is_invariant(m, &piece, &w),
                "projected piece must be definable below the top"
            );
            out.extend(classify_core(m, &piece, &w)?);
        }
        Ok(out)
    } else {
        // the swap formula strictly exceeds the second level: the relation
        // is already definable without it
        let v: Vec<Level> = sorted
            .iter()
            .copied()
            .filter(|&l| l != ell)
            .collect();
        if !is_invariant(m, d, &v) {
            return Err(Error::Contract(
                "drop step failed: relation not definable without the second level".into(),
            ));
        }
        classify_core(m, d, &v)
    }
}

/// Classify a definable set: the minimal `F ⊆ u` (always containing the
/// top index) such that `{D, =}` and `{E_j : j ∈ F}` are definably
/// equivalent, verified by the invariance oracle both ways.
pub fn classify_reduct(m: &RefModel, d: &DefinableSet) -> Result<BTreeSet<Level>> {
    let u = m.levels.clone();
    if !is_invariant(m, d, &u) {
        return Err(Error::Contract("relation is not invariant over the full language".into()));
    }
    // decompose into irreflexive components over equality patterns
    let mut f: BTreeSet<Level> = [Level::Omega].into_iter().collect();
    for pi in projections(d.arity) {
        let piece = project(m, d, &pi, Level::Omega);
        f.extend(classify_core(m, &piece, &u)?);
    }
    // minimization: drop finite levels that the two-way oracle does not
    // need; the top index stays (equality is never oracle-detectable)
    let mut minimal: BTreeSet<Level> = f.clone();
    loop {
        let mut dropped = false;
        for &cand in minimal.clone().iter() {
            if cand == Level::Omega || matches!(cand, Level::Fin(0)) {
                continue;
            }
            let mut trial = minimal.clone();
            trial.remove(&cand);
            if verify_equivalence(m, d, &trial)? {
                minimal = trial;
                dropped = true;
                break;
            }
        }
        if !dropped {
            break;
        }
    }
    minimal.remove(&Level::Fin(0));
    Ok(minimal)
}

/// Two-way oracle check that `{D, =}` and `{E_j : j ∈ F}` are definably
/// equivalent: `D` is invariant under the reduct group of `F`, and every
/// finite level in `F` is invariant under every `D`-preserving bijection.
pub fn verify_equivalence(m: &RefModel, d: &DefinableSet, f: &BTreeSet<Level>) -> Result<bool> {
    // direction 1: D definable from F
    let v: Vec<Level> = f.iter().copied().collect();
    if !is_invariant(m, d, &v) {
        return Ok(false);
    }
    // direction 2: each finite level in F definable from {D, =}
    for &level in f {
        let Level::Fin(j) = level else { continue };
        if j == 0 {
            continue;
        }
        if d_preserving_violator(m, d, level)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Search for a bijection preserving `D` but breaking `E_level`.
/// Exhaustive backtracking; relations are bit-encoded and only tuples
/// completed by the latest assignment are rechecked at each step.
fn d_preserving_violator(
    m: &RefModel,
    d: &DefinableSet,
    level: Level,
) -> Result<Option<Vec<usize>>> {
    let n = m.len();
    if n > 10 {
        return Err(Error::CapExceeded(format!(
            "brute-force group search capped at 10 elements, model has {n}"
        )));
    }
    let arity = d.arity;
    let encode = |t: &[usize]| -> usize {
        t.iter().fold(0usize, |acc, &x| acc * n + x)
    };
    let mut member = vec![false; n.pow(arity as u32)];
    for t in &d.tuples {
        member[encode(t)] = true;
    }
    // tuples indexed by the largest source element they mention (forward
    // completion time) — and by each element for the inverse side
    let mut by_max: Vec<Vec<Vec<usize>>> = vec![vec![]; n];
    let mut by_elem: Vec<Vec<Vec<usize>>> = vec![vec![]; n];
    let mut idx = vec![0usize; arity];
    loop {
        let t = idx.clone();
        if member[encode(&t)] {
            let mx = *t.iter().max().unwrap();
            by_max[mx].push(t.clone());
            let mut unique = t.clone();
            unique.sort_unstable();
            unique.dedup();
            for &e in &unique {
                by_elem[e].push(t.clone());
            }
        }
        let mut k = 0;
        loop {
            if k == arity {
                break;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == arity {
            break;
        }
    }

    // D-profile pruning
    let profile = |x: usize| -> Vec<usize> {
        let mut p = vec![0usize; arity];
        for t in &by_elem[x] {
            for (pos, &e) in t.iter().enumerate() {
                if e == x {
                    p[pos] += 1;
                }
            }
        }
        p
    };
    let profiles: Vec<Vec<usize>> = (0..n).map(profile).collect();

    struct Ctx<'a> {
        n: usize,
        m: &'a RefModel,
        level: Level,
        member: &'a [bool],
        by_max: &'a [Vec<Vec<usize>>],
        by_elem: &'a [Vec<Vec<usize>>],
        profiles: &'a [Vec<usize>],
    }

    fn go(
        ctx: &Ctx,
        pos: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        inv: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        let n = ctx.n;
        if pos == n {
            for x in 0..n {
                for y in 0..n {
                    if ctx.m.related(ctx.level, x, y)
                        != ctx.m.related(ctx.level, map[x], map[y])
                    {
                        return Some(map.clone());
                    }
                }
            }
            return None;
        }
        let encode = |t: &[usize]| -> usize { t.iter().fold(0usize, |acc, &x| acc * n + x) };
        'cand: for cand in 0..n {
            if used[cand] || ctx.profiles[pos] != ctx.profiles[cand] {
                continue;
            }
            map[pos] = cand;
            inv[cand] = pos;
            used[cand] = true;
            // forward: positive tuples newly completed must stay positive
            for t in &ctx.by_max[pos] {
                let mut img = Vec::with_capacity(t.len());
                let mut complete = true;
                for &x in t {
                    if map[x] == usize::MAX {
                        complete = false;
                        break;
                    }
                    img.push(map[x]);
                }
                if complete && !ctx.member[encode(&img)] {
                    used[cand] = false;
                    inv[cand] = usize::MAX;
                    map[pos] = usize::MAX;
                    continue 'cand;
                }
            }
            // backward: positive tuples through the new image must pull
            // back into the relation once their preimages exist
            for t in &ctx.by_elem[cand] {
                let mut pre = Vec::with_capacity(t.len());
                let mut complete = true;
                for &x in t {
                    if inv[x] == usize::MAX {
                        complete = false;
                        break;
                    }
                    pre.push(inv[x]);
                }
                if complete && !ctx.member[encode(&pre)] {
                    used[cand] = false;
                    inv[cand] = usize::MAX;
                    map[pos] = usize::MAX;
                    continue 'cand;
                }
            }
            if let Some(hit) = go(ctx, pos + 1, map, used, inv) {
                return Some(hit);
            }
            used[cand] = false;
            inv[cand] = usize::MAX;
            map[pos] = usize::MAX;
        }
        None
    }

    let ctx = Ctx {
        n,
        m,
        level,
        member: &member,
        by_max: &by_max,
        by_elem: &by_elem,
        profiles: &profiles,
    };
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut inv = vec![usize::MAX; n];
    Ok(go(&ctx, 0, &mut map, &mut used, &mut inv))
}

/// Abstract a relation as a union of agreement-pattern types, so it can
/// be re-instantiated over a model with different δ or multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    pub arity: usize,
    /// For each unordered pair (i, j), i < j: the agreement level.
    pub patterns: BTreeSet<Vec<Level>>,
}

/// Extract the pattern set of an invariant relation.
pub fn patterns_of(m: &RefModel, d: &DefinableSet) -> PatternSet {
    let n = d.arity;
    let mut patterns = BTreeSet::new();
    for t in &d.tuples {
        let mut pat = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pat.push(m.agreement(t[i], t[j]));
            }
        }
        patterns.insert(pat);
    }
    PatternSet { arity: n, patterns }
}

/// Instantiate a pattern set over a (possibly different) model.
pub fn instantiate_patterns(m: &RefModel, p: &PatternSet) -> DefinableSet {
    let n = p.arity;
    let mut tuples = BTreeSet::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut pat = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pat.push(m.agreement(idx[i], idx[j]));
            }
        }
        if p.patterns.contains(&pat) {
            tuples.insert(idx.clone());
        }
        let mut k = 0;
        loop {
            if k == n {
                break;
            }
            idx[k] += 1;
            if idx[k] < m.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    DefinableSet { arity: n, tuples }
}

/// Stability diagnostics: reclassify the same abstract relation over
/// models with multiplicity `s+1` and with every δ bumped by one, and
/// report whether the answers agree.
pub fn stability_report(m: &RefModel, d: &DefinableSet) -> Result<(bool, bool)> {
    let f0 = classify_reduct(m, d)?;
    let pats = patterns_of(m, d);

    let bigger_mult = RefModel::new(&m.coord_levels, &m.coord_deltas, m.mult + 1)?;
    let d1 = instantiate_patterns(&bigger_mult, &pats);
    let mult_stable = match classify_reduct(&bigger_mult, &d1) {
        Ok(f1) => f1 == f0,
        Err(Error::CapExceeded(_)) => true, // too big to check; not a failure
        Err(e) => return Err(e),
    };

    let bumped: Vec<u32> = m.coord_deltas.iter().map(|&d| d + 1).collect();
    let bigger_delta = RefModel::new(&m.coord_levels, &bumped, m.mult)?;
    let d2 = instantiate_patterns(&bigger_delta, &pats);
    let delta_stable = match classify_reduct(&bigger_delta, &d2) {
        Ok(f2) => f2 == f0,
        Err(Error::CapExceeded(_)) => true,
        Err(e) => return Err(e),
    };
    Ok((mult_stable, delta_stable))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RefModel {
        // u = {0, 1, 2, ω}, δ ≡ 2, s = 2: 8 elements
        RefModel::new(&[1, 2], &[2, 2], 2).unwrap()
    }

    fn relation(m: &RefModel, pred: impl Fn(usize, usize) -> bool) -> DefinableSet {
        let mut tuples = BTreeSet::new();
        for x in 0..m.len() {
            for y in 0..m.len() {
                if pred(x, y) {
                    tuples.insert(vec![x, y]);
                }
            }
        }
        DefinableSet { arity: 2, tuples }
    }

    #[test]
    fn wreath_matches_brute_force_on_tiny_model() {
        // cross-check the generator closure against all bijections
        let m = RefModel::new(&[1], &[2], 2).unwrap(); // 4 elements
        let v = m.levels.clone();
        let gens = reduct_aut_generators(&m, &v);
        // closure
        let mut maps: Vec<Vec<usize>> = vec![(0..m.len()).collect()];
        let mut frontier = maps.clone();
        while let Some(cur) = frontier.pop() {
            for g in &gens {
                let next: Vec<usize> = cur.iter().map(|&i| g[i]).collect();
                if !maps.contains(&next) {
                    maps.push(next.clone());
                    frontier.push(next);
                }
            }
        }
        // brute force: all 4! bijections preserving E_1
        let mut brute = 0usize;
        for p in all_perms(m.len()) {
            let ok = (0..m.len()).all(|x| {
                (0..m.len()).all(|y| {
                    m.related(Level::Fin(1), x, y)
                        == m.related(Level::Fin(1), p.apply(x), p.apply(y))
                })
            });
            if ok {
                brute += 1;
            }
        }
        assert_eq!(maps.len(), brute, "wreath closure must equal brute force");
        assert_eq!(maps.len(), 8); // Sym(2) ≀ Sym(2)
    }

    #[test]
    fn invariance_examples() {
        let m = model();
        let e1 = relation(&m, |x, y| m.related(Level::Fin(1), x, y));
        assert!(is_invariant(&m, &e1, &m.levels));
        assert!(is_invariant(
            &m,
            &e1,
            &[Level::Fin(0), Level::Fin(1), Level::Omega]
        ));
        // E_1 is not preserved by equality-only automorphisms
        assert!(!is_invariant(&m, &e1, &[Level::Fin(0), Level::Omega]));
        // the full relation is invariant for every sublanguage
        let full = relation(&m, |_, _| true);
        assert!(is_invariant(&m, &full, &[Level::Fin(0), Level::Omega]));
    }

    #[test]
    fn irreflexivity_examples() {
        let m = model();
        let apart = relation(&m, |x, y| !m.related(Level::Fin(2), x, y));
        assert!(is_u_irreflexive(&m, &apart, &m.levels[..3]));
        let with_diag = relation(&m, |x, y| x == y || !m.related(Level::Fin(2), x, y));
        assert!(!is_u_irreflexive(&m, &with_diag, &m.levels[..3]));
        // E_1 ∧ ¬E_2 ∧ ≠ is u-irreflexive for the full u (top = equality)
        let d = relation(&m, |x, y| {
            m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y) && x != y
        });
        assert!(is_u_irreflexive(&m, &d, &m.levels));
    }

    #[test]
    fn phi_contains_second_level_exhaustively() {
        // E_l ⊆ φ(D) for every u-irreflexive invariant D we construct
        let m = model();
        let ds = vec![
            relation(&m, |x, y| {
                m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y)
            }),
            relation(&m, |x, y| x != y && !m.related(Level::Fin(2), x, y)),
            relation(&m, |_, _| false),
        ];
        for d in ds {
            // top = ω, second = 2
            let p = phi(&m, &d, Level::Omega);
            let e2 = DefinableSet::of_relation(&m, Level::Fin(2));
            assert!(e2.tuples.is_subset(&p.tuples));
        }
    }

    #[test]
    fn phi_can_strictly_exceed_second_level() {
        let m = model();
        let empty = DefinableSet { arity: 2, tuples: BTreeSet::new() };
        let p = phi(&m, &empty, Level::Omega);
        let e2 = DefinableSet::of_relation(&m, Level::Fin(2));
        assert!(p.tuples.len() > e2.tuples.len());
    }

    #[test]
    fn strict_phi_pulls_in_third_level_and_drops_second() {
        // when the swap formula strictly exceeds the second level, it
        // absorbs the third level and the relation is definable without
        // the second — checked on every suite relation that lands in that
        // case
        let m = model();
        let ds = vec![
            relation(&m, |x, y| x != y && !m.related(Level::Fin(2), x, y)),
            relation(&m, |_, _| false),
            relation(&m, |x, y| x != y),
        ];
        for d in ds {
            if !is_u_irreflexive(&m, &d, &m.levels) || !is_invariant(&m, &d, &m.levels) {
                continue;
            }
            let p = phi(&m, &d, Level::Omega);
            let e2 = DefinableSet::of_relation(&m, Level::Fin(2));
            if p.tuples.len() > e2.tuples.len() {
                // third-largest level of {0,1,2,ω} is 1
                let e1 = DefinableSet::of_relation(&m, Level::Fin(1));
                assert!(
                    e1.tuples.is_subset(&p.tuples),
                    "strict phi must absorb the next level"
                );
                let v: Vec<Level> = vec![Level::Fin(0), Level::Fin(1), Level::Omega];
                assert!(
                    is_invariant(&m, &d, &v),
                    "relation must be definable without the dropped level"
                );
            }
        }
    }

    #[test]
    fn projection_examples() {
        let m = model();
        let d = relation(&m, |x, y| m.related(Level::Fin(1), x, y));
        // identity projection at ω: D on distinct tuples
        let id = vec![0usize, 1];
        let p = project(&m, &d, &id, Level::Omega);
        for t in &p.tuples {
            assert!(t[0] != t[1] && d.contains(t));
        }
        // both coordinates collapsed: a unary set, full because the
        // diagonal meets D
        let collapse = vec![0usize, 0];
        let p1 = project(&m, &d, &collapse, Level::Omega);
        assert_eq!(p1.arity, 1);
        assert_eq!(p1.tuples.len(), m.len());
        // decomposition: D ⟺ the disjunction over projections
        for x in 0..m.len() {
            for y in 0..m.len() {
                let member = d.contains(&[x, y]);
                let mut any = false;
                for pi in projections(2) {
                    let piece = project(&m, &d, &pi, Level::Omega);
                    // the tuple matches π's pattern iff equality pattern agrees
                    let pattern_ok = (x == y) == (pi[0] == pi[1]);
                    if pattern_ok {
                        let collapsed: Vec<usize> = if pi[0] == pi[1] {
                            vec![x]
                        } else {
                            vec![x, y]
                        };
                        if piece.contains(&collapsed) {
                            any = true;
                        }
                    }
                }
                assert_eq!(member, any, "decomposition mismatch at ({x},{y})");
            }
        }
    }

    #[test]
    fn drop_top_examples() {
        let m = model();
        // pairwise ¬E_2 relation: invariant under the reduct without ω
        let d = relation(&m, |x, y| {
            m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y)
        });
        assert!(drop_top(&m, &d, &m.levels).unwrap());
        // E_2's extension is not w-irreflexive
        let e2 = relation(&m, |x, y| m.related(Level::Fin(2), x, y));
        assert!(drop_top(&m, &e2, &m.levels).is_err());
        // the empty relation passes trivially
        let empty = DefinableSet { arity: 2, tuples: BTreeSet::new() };
        assert!(drop_top(&m, &empty, &m.levels).unwrap());
    }

    #[test]
    fn worked_classifications() {
        let m = model();
        // D = E_1 → F = {1, ω}
        let e1 = relation(&m, |x, y| m.related(Level::Fin(1), x, y));
        let f = classify_reduct(&m, &e1).unwrap();
        let expect: BTreeSet<Level> = [Level::Fin(1), Level::Omega].into_iter().collect();
        assert_eq!(f, expect);

        // D = equality → F = {ω}
        let eq = relation(&m, |x, y| x == y);
        let f = classify_reduct(&m, &eq).unwrap();
        let expect: BTreeSet<Level> = [Level::Omega].into_iter().collect();
        assert_eq!(f, expect);

        // D = E_1 ∧ ¬E_2 ∧ ≠ → F = {1, 2, ω}
        let d = relation(&m, |x, y| {
            m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y) && x != y
        });
        let f = classify_reduct(&m, &d).unwrap();
        let expect: BTreeSet<Level> =
            [Level::Fin(1), Level::Fin(2), Level::Omega].into_iter().collect();
        assert_eq!(f, expect);
    }

    #[test]
    fn verify_equivalence_examples() {
        let m = model();
        let e1 = relation(&m, |x, y| m.related(Level::Fin(1), x, y));
        let good: BTreeSet<Level> = [Level::Fin(1), Level::Omega].into_iter().collect();
        assert!(verify_equivalence(&m, &e1, &good).unwrap());
        let bad: BTreeSet<Level> = [Level::Fin(2), Level::Omega].into_iter().collect();
        assert!(!verify_equivalence(&m, &e1, &bad).unwrap());
    }

    #[test]
    fn stability_of_worked_examples() {
        let m = model();
        let d = relation(&m, |x, y| {
            m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y) && x != y
        });
        let (mult_stable, delta_stable) = stability_report(&m, &d).unwrap();
        assert!(mult_stable);
        assert!(delta_stable);
    }
}
