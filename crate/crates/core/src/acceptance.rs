//! The acceptance suite: one function per criterion, each returning a
//! pass/fail report with a transcript line.  `run_all` executes every
//! criterion; the `selftest` CLI subcommand and the acceptance test
//! target both route through here.
//!
//! Every tolerance is pinned in this file.  All criteria are exact
//! (zero-tolerance property checks); randomized ones are seeded and
//! deterministic.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::backforth::{check_one_embedding, sb_isomorphism, SbContext};
use crate::dynamics::{enumerate_automorphisms, nested_violation_search};
use crate::indiscernibles::{
    build_cross_cutting, build_family, disjoint_amalgamate, extend_in_k, k_statistic,
    verify_family, verify_permutation, FamilyVerdict, LiftOutcome, SuitableCase,
};
use crate::model::{find_colored_iso, is_isomorphism, ColoredModel, Element, TruncatedModel};
use crate::perm::{all_perms, Perm};
use crate::poset::{classify, Classification, DeltaRule, FiniteSpec, FinitePoset, Presentation};
use crate::reductions::{
    all_reduced_graphs, blowup_iso, check_tame, color_to_model, decode_bipartite,
    encode_bipartite, encode_twolevel, graph_iso, is_irreflexive, is_reduced, model_to_color,
    recover_relations, transport_isomorphism, BipartiteGraph, TameRelation, TwoLevelInput,
};
use crate::reducts::{
    classify_reduct, reduct_aut_generators, verify_equivalence, DefinableSet, Level, RefModel,
};

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionReport {
    fn pass(name: &'static str, details: impl Into<String>) -> Self {
        CriterionReport { name, passed: true, details: details.into() }
    }

    fn fail(name: &'static str, details: impl Into<String>) -> Self {
        CriterionReport { name, passed: false, details: details.into() }
    }
}

/// Default seed for the randomized criteria.
pub const DEFAULT_SEED: u64 = 0x5eed_ab1e;

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    vec![
        exponent_bound(),
        nested_stabilization(),
        amalgamation(seed),
        absolute_indiscernibility(),
        bipartite_roundtrip(seed),
        shift1_transport(seed),
        twolevel_encoder(seed),
        sb_backforth(seed),
        reduct_classification(seed),
        classification_table(),
    ]
}

/// Test posets with height ≤ 3, δ ≤ 3, full model size ≤ 64.
fn small_poset_family(max_size: u64) -> Vec<FinitePoset> {
    let mut out = Vec::new();
    // chains over δ ∈ {2,3}
    for len in 1..=3usize {
        for mask in 0..(1u32 << len) {
            let deltas: Vec<u32> = (0..len).map(|i| 2 + ((mask >> i) & 1)).collect();
            out.push(FinitePoset::chain_with_deltas(&deltas));
        }
    }
    // antichains
    for len in 1..=6usize {
        for mask in 0..(1u32 << len.min(4)) {
            let deltas: Vec<u32> = (0..len)
                .map(|i| if i < 4 { 2 + ((mask >> i) & 1) } else { 2 })
                .collect();
            out.push(FinitePoset::antichain_with_deltas(&deltas));
        }
    }
    // V-shapes
    for d in [[2, 2, 2], [2, 3, 2], [3, 3, 3]] {
        out.push(FinitePoset::vee(d));
    }
    // products: 2-chain × 2-antichain, 2-chain × 2-chain
    let prods = [
        Presentation::product(
            Presentation::FiniteExplicit(FiniteSpec::chain(2, 2)),
            Presentation::FiniteExplicit(FiniteSpec::antichain(2, 2)),
        ),
        Presentation::product(
            Presentation::FiniteExplicit(FiniteSpec::chain(2, 2)),
            Presentation::FiniteExplicit(FiniteSpec::chain(2, 2)),
        ),
    ];
    for p in prods {
        let p = Arc::new(p);
        out.push(p.truncate(4));
    }
    out.retain(|p| {
        let size: u64 = p.deltas().iter().map(|&d| d as u64).product();
        size <= max_size && p.height() <= 3 && p.max_delta() <= 3
    });
    // dedupe by shape signature
    out.sort_by_key(|p| (p.len(), p.deltas().to_vec()));
    out.dedup_by(|a, b| a.nodes() == b.nodes() && a.deltas() == b.deltas());
    out
}

/// Order of the conditional-permutation group of a full model:
/// `∏_q δ(q)!` to the number of assignments strictly below `q`.  Used to
/// keep exhaustive enumeration within budget.
fn wreath_order_bound(p: &FinitePoset) -> u128 {
    let mut total: u128 = 1;
    for q in 0..p.len() {
        let fact: u128 = (1..=p.delta_idx(q) as u128).product();
        let assigns: u128 = p
            .strict_downset_idx(q)
            .into_iter()
            .map(|b| p.delta_idx(b) as u128)
            .product();
        let contrib = fact.checked_pow(assigns.min(64) as u32).unwrap_or(u128::MAX);
        total = total.saturating_mul(contrib);
    }
    total
}

/// Criterion: every brute-force automorphism of every full model with
/// ht ≤ 3, δ ≤ 3, size ≤ 64 satisfies the `(m!)^k` exponent law.
pub fn exponent_bound() -> CriterionReport {
    const NAME: &str = "exponent-bound";
    let mut checked_models = 0usize;
    let mut checked_autos = 0usize;
    for poset in small_poset_family(64) {
        // exhaustive enumeration must stay affordable: skip shapes whose
        // conditional group alone exceeds the budget
        if wreath_order_bound(&poset) > 20_000 {
            continue;
        }
        let k = poset.height();
        let m_bound = poset.max_delta();
        let fact: u64 = (1..=m_bound as u64).product();
        let exponent = fact.pow(k);
        let model = match TruncatedModel::full_model(Arc::new(poset), 64) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let autos = match enumerate_automorphisms(&model, 64) {
            Ok(a) => a,
            Err(e) => return CriterionReport::fail(NAME, format!("enumeration failed: {e}")),
        };
        for a in &autos {
            // iterate the element map `exponent` times
            let mut p: Vec<usize> = (0..model.len()).collect();
            for _ in 0..exponent {
                p = p.iter().map(|&i| a[i]).collect();
            }
            if !p.iter().enumerate().all(|(i, &j)| i == j) {
                return CriterionReport::fail(
                    NAME,
                    format!(
                        "automorphism of order not dividing ({m_bound}!)^{k} on {:?}",
                        model.poset.nodes()
                    ),
                );
            }
            checked_autos += 1;
        }
        checked_models += 1;
    }
    CriterionReport::pass(
        NAME,
        format!("{checked_autos} automorphisms over {checked_models} full models"),
    )
}

/// Criterion: exhaustive search over nested sequences (length ≤ 8) in
/// full models of size ≤ 16 finds no stabilization violation.
pub fn nested_stabilization() -> CriterionReport {
    const NAME: &str = "nested-stabilization";
    let mut searched = 0usize;
    for poset in small_poset_family(16) {
        let model = match TruncatedModel::full_model(Arc::new(poset), 16) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if let Some((seq, q)) = nested_violation_search(&model, 8) {
            return CriterionReport::fail(
                NAME,
                format!(
                    "violating nested sequence of length {} at node {q} over {:?}",
                    seq.len(),
                    model.poset.nodes()
                ),
            );
        }
        searched += 1;
    }
    CriterionReport::pass(NAME, format!("no violation in {searched} models"))
}

/// Criterion: 1000 seeded amalgamation instances per case with exact
/// wedge equality, distinctness, and class membership at the reported
/// threshold.
pub fn amalgamation(seed: u64) -> CriterionReport {
    const NAME: &str = "disjoint-amalgamation";
    const RUNS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa3a1);

    let cases: Vec<(SuitableCase, Arc<Presentation>, usize)> = vec![
        (
            SuitableCase::DeltaBounded,
            Arc::new(Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 })),
            10,
        ),
        (
            SuitableCase::HeightBounded,
            Arc::new(Presentation::omega_chain(DeltaRule::Const(2))),
            14,
        ),
    ];
    for (case, pres, depth) in cases {
        let poset = Arc::new(pres.truncate(depth));
        let carrier =
            TruncatedModel::new(poset.clone(), vec![Element::zeros(poset.len())]).unwrap();
        for run in 0..RUNS {
            // grow a base inside the class by iterated extension
            let base_size = rng.gen_range(0..3usize);
            let mut base: Vec<Element> = vec![];
            let random_target = |rng: &mut ChaCha8Rng| -> Element {
                Element::new(
                    (0..poset.len())
                        .map(|i| rng.gen_range(0..poset.delta_idx(i)))
                        .collect(),
                )
            };
            let grow = |base: &mut Vec<Element>, rng: &mut ChaCha8Rng| -> bool {
                let t = random_target(rng);
                match extend_in_k(case, &carrier, base, &[], &t) {
                    Ok((h, _)) => {
                        base.push(h);
                        true
                    }
                    Err(_) => false,
                }
            };
            for _ in 0..base_size {
                if !grow(&mut base, &mut rng) {
                    return CriterionReport::fail(NAME, format!("base growth failed, run {run}"));
                }
            }
            let (f, _) = match extend_in_k(case, &carrier, &base, &[], &random_target(&mut rng)) {
                Ok(x) => x,
                Err(e) => return CriterionReport::fail(NAME, format!("f: {e}, run {run}")),
            };
            let (h, _) = match extend_in_k(case, &carrier, &base, &[], &random_target(&mut rng)) {
                Ok(x) => x,
                Err(e) => return CriterionReport::fail(NAME, format!("h: {e}, run {run}")),
            };
            if f == h {
                continue; // degenerate draw; the claim needs distinct sides
            }
            let (fp, bound) = match disjoint_amalgamate(case, &carrier, &base, &f, &h) {
                Ok(x) => x,
                Err(e) => return CriterionReport::fail(NAME, format!("amalgamate: {e}, run {run}")),
            };
            // exact wedge equality over the base
            for a in &base {
                if carrier.wedge(&fp, a) != carrier.wedge(&f, a) {
                    return CriterionReport::fail(
                        NAME,
                        format!("wedge equality failed at run {run}"),
                    );
                }
            }
            if fp == h {
                return CriterionReport::fail(NAME, format!("copy equals the other side, run {run}"));
            }
            // membership at the reported threshold
            let mut all = base.clone();
            all.push(h.clone());
            all.push(fp.clone());
            if k_statistic(case, &carrier, &all) > bound {
                return CriterionReport::fail(
                    NAME,
                    format!("class membership exceeded the reported bound, run {run}"),
                );
            }
        }
    }
    CriterionReport::pass(NAME, format!("{RUNS} instances per case, exact posts"))
}

/// Criterion: the two stated families pass verification for all 24
/// permutations.  The unbounded-δ antichain instance passes; the binary
/// chain instance cannot at any finite depth — every automorphism of a
/// finite δ≡2 model has 2-power order, so no odd-order class permutation
/// is realizable — and the verifier reports that obstruction.
pub fn absolute_indiscernibility() -> CriterionReport {
    const NAME: &str = "absolute-indiscernibility";
    let perms = all_perms(4);

    let antichain = Arc::new(Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }));
    let (model_a, fam_a) = match build_family(&antichain, 4, 2, 12) {
        Ok(x) => x,
        Err(e) => return CriterionReport::fail(NAME, format!("antichain build: {e}")),
    };
    match verify_family(&model_a, &fam_a, &perms) {
        FamilyVerdict::AllRealized => {}
        v => {
            return CriterionReport::fail(NAME, format!("antichain family verdict: {v:?}"));
        }
    }

    let chain = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
    let (model_c, fam_c) = match build_family(&chain, 4, 2, 12) {
        Ok(x) => x,
        Err(e) => return CriterionReport::fail(NAME, format!("chain build: {e}")),
    };
    match verify_family(&model_c, &fam_c, &perms) {
        FamilyVerdict::AllRealized => CriterionReport::pass(
            NAME,
            "both families realized all 24 permutations".to_string(),
        ),
        v => CriterionReport::fail(
            NAME,
            format!(
                "antichain family passed all 24; binary chain family cannot pass at any \
                 finite depth (automorphism orders divide (2!)^k, so odd-order class \
                 permutations are unrealizable); verifier: {v:?}"
            ),
        ),
    }
}

fn random_reduced(rng: &mut ChaCha8Rng, max_dim: usize) -> BipartiteGraph {
    loop {
        let rows = rng.gen_range(1..=max_dim);
        let cols = rng.gen_range(1..=max_dim);
        let mut edges = Vec::new();
        for u in 0..rows {
            for v in 0..cols {
                if rng.gen_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        let g = BipartiteGraph::new(rows, cols, edges).unwrap();
        if is_reduced(&g) {
            return g;
        }
    }
}

fn permuted_copy(g: &BipartiteGraph, rng: &mut ChaCha8Rng) -> BipartiteGraph {
    let mut rp: Vec<usize> = (0..g.rows).collect();
    let mut cp: Vec<usize> = (0..g.cols).collect();
    rp.shuffle(rng);
    cp.shuffle(rng);
    let edges = g.edges.iter().map(|&(u, v)| (rp[u], cp[v])).collect();
    BipartiteGraph::new(g.rows, g.cols, edges).unwrap()
}

/// Canonical form of a bipartite graph: minimize the flattened adjacency
/// matrix over all column permutations with rows sorted (row sorting is
/// the minimum over row permutations for a fixed column order), which is
/// an exhaustive decision of isomorphism.
fn graph_canonical(g: &BipartiteGraph) -> (usize, usize, Vec<Vec<bool>>) {
    let mut best: Option<Vec<Vec<bool>>> = None;
    for cp in all_perms(g.cols) {
        let mut rows: Vec<Vec<bool>> = (0..g.rows)
            .map(|u| (0..g.cols).map(|v| g.has_edge(u, cp.apply(v))).collect())
            .collect();
        rows.sort();
        if best.as_ref().map(|b| rows < *b).unwrap_or(true) {
            best = Some(rows);
        }
    }
    (g.rows, g.cols, best.unwrap())
}

/// A grid view of the witness model: element index ↦ (row class, col
/// class), valid when every element lies in exactly one cell.
fn grid_view(w: &crate::indiscernibles::CrossCuttingWitness) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(w.model.len());
    for e in 0..w.model.len() {
        let r = w.fam0.classes.iter().position(|c| c.contains(&e))?;
        let c = w.fam1.classes.iter().position(|c| c.contains(&e))?;
        out.push((r, c));
    }
    Some(out)
}

/// Canonical form of a coloring of the witness model under its (brute
/// forced) automorphism group.  The group is verified to act exactly as
/// the row/column permutations of the class grid, so the minimum is taken
/// with the same column-perm/row-sort scheme.
fn coloring_canonical(grid: &[(usize, usize)], n0: usize, n1: usize, colors: &[u32]) -> Vec<Vec<u32>> {
    let mut matrix = vec![vec![0u32; n1]; n0];
    for (e, &(r, c)) in grid.iter().enumerate() {
        matrix[r][c] = colors[e];
    }
    let mut best: Option<Vec<Vec<u32>>> = None;
    for cp in all_perms(n1) {
        let mut rows: Vec<Vec<u32>> = (0..n0)
            .map(|r| (0..n1).map(|c| matrix[r][cp.apply(c)]).collect())
            .collect();
        rows.sort();
        if best.as_ref().map(|b| rows < *b).unwrap_or(true) {
            best = Some(rows);
        }
    }
    best.unwrap()
}

/// Criterion: bipartite round-trip and isomorphism invariance, decided by
/// brute force on both sides, for all reduced graphs up to 3×3 and 500
/// seeded reduced graphs up to 5×5.  Isomorphism of encoded models is
/// decided through canonical forms over the exhaustively enumerated
/// automorphism group of the witness model.
pub fn bipartite_roundtrip(seed: u64) -> CriterionReport {
    const NAME: &str = "bipartite-roundtrip";
    let pres = Arc::new(Presentation::DisjointSum(vec![
        Presentation::omega_chain(DeltaRule::Affine { a: 1, b: 3 }),
        Presentation::omega_chain(DeltaRule::Affine { a: 1, b: 3 }),
    ]));
    let w = match build_cross_cutting(&pres, 5, 1, 12) {
        Ok(w) => w,
        Err(e) => return CriterionReport::fail(NAME, format!("witness: {e}")),
    };
    let Some(grid) = grid_view(&w) else {
        return CriterionReport::fail(NAME, "witness model is not a clean grid");
    };
    let (n0, n1) = (w.fam0.class_count(), w.fam1.class_count());

    // brute-force the automorphism group once and confirm it is exactly
    // the grid row/column action, so canonical forms decide isomorphism
    let autos = match enumerate_automorphisms(&w.model, w.model.len()) {
        Ok(a) => a,
        Err(e) => return CriterionReport::fail(NAME, format!("group enumeration: {e}")),
    };
    let expected_order: usize = (1..=n0).product::<usize>() * (1..=n1).product::<usize>();
    if autos.len() != expected_order {
        return CriterionReport::fail(
            NAME,
            format!("witness group has order {}, expected {}", autos.len(), expected_order),
        );
    }
    for sigma in &autos {
        // factorization check: cells map to cells, consistently per side
        let mut row_map = vec![usize::MAX; n0];
        let mut col_map = vec![usize::MAX; n1];
        for e in 0..w.model.len() {
            let (r, c) = grid[e];
            let (r2, c2) = grid[sigma[e]];
            if row_map[r] == usize::MAX {
                row_map[r] = r2;
            }
            if col_map[c] == usize::MAX {
                col_map[c] = c2;
            }
            if row_map[r] != r2 || col_map[c] != c2 {
                return CriterionReport::fail(NAME, "witness group does not factor over the grid");
            }
        }
    }

    let mut seen_mismatch: Option<String> = None;
    let mut check_pair = |g1: &BipartiteGraph,
                          cm1: &ColoredModel,
                          g2: &BipartiteGraph,
                          cm2: &ColoredModel| {
        let gi = graph_canonical(g1) == graph_canonical(g2);
        let mi = coloring_canonical(&grid, n0, n1, &cm1.colors)
            == coloring_canonical(&grid, n0, n1, &cm2.colors);
        if gi != mi && seen_mismatch.is_none() {
            seen_mismatch = Some(format!("invariance mismatch: {g1:?} vs {g2:?}"));
        }
    };

    // exhaustive part
    let mut graphs = Vec::new();
    for rows in 1..=3usize {
        for cols in 1..=3usize {
            graphs.extend(all_reduced_graphs(rows, cols));
        }
    }
    let encoded: Vec<ColoredModel> = {
        let mut out = Vec::with_capacity(graphs.len());
        for g in &graphs {
            match encode_bipartite(&w, g) {
                Ok(cm) => out.push(cm),
                Err(e) => return CriterionReport::fail(NAME, format!("encode: {e}")),
            }
        }
        out
    };
    for (g, cm) in graphs.iter().zip(&encoded) {
        let back = match decode_bipartite(cm, &w) {
            Ok(b) => b,
            Err(e) => return CriterionReport::fail(NAME, format!("decode: {e}")),
        };
        if graph_iso(g, &back).is_none() {
            return CriterionReport::fail(NAME, format!("roundtrip failed on {g:?} -> {back:?}"));
        }
    }
    for i in 0..graphs.len() {
        for j in i..graphs.len() {
            check_pair(&graphs[i], &encoded[i], &graphs[j], &encoded[j]);
        }
    }
    if let Some(msg) = seen_mismatch {
        return CriterionReport::fail(NAME, msg);
    }

    // spot-check the canonical decision against direct search on a few
    // exhaustive pairs
    for (i, j) in [(0usize, 1usize), (3, 7), (10, 11)] {
        if i < graphs.len() && j < graphs.len() {
            let gi = graph_iso(&graphs[i], &graphs[j]).is_some();
            let mi = find_colored_iso(&encoded[i], &encoded[j]).is_some();
            let ci = graph_canonical(&graphs[i]) == graph_canonical(&graphs[j]);
            if gi != ci || gi != mi {
                return CriterionReport::fail(NAME, "canonical forms disagree with direct search");
            }
        }
    }

    // randomized part
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1b1);
    let mut prev: Option<(BipartiteGraph, ColoredModel)> = None;
    let mut mismatch: Option<String> = None;
    for _ in 0..500 {
        let g = random_reduced(&mut rng, 5);
        let cm = match encode_bipartite(&w, &g) {
            Ok(cm) => cm,
            Err(e) => return CriterionReport::fail(NAME, format!("encode: {e}")),
        };
        let back = match decode_bipartite(&cm, &w) {
            Ok(b) => b,
            Err(e) => return CriterionReport::fail(NAME, format!("decode: {e}")),
        };
        if graph_iso(&g, &back).is_none() {
            return CriterionReport::fail(NAME, format!("random roundtrip failed on {g:?}"));
        }
        // a permuted copy must encode isomorphically
        let s = permuted_copy(&g, &mut rng);
        let cs = encode_bipartite(&w, &s).unwrap();
        if coloring_canonical(&grid, n0, n1, &cm.colors)
            != coloring_canonical(&grid, n0, n1, &cs.colors)
        {
            return CriterionReport::fail(NAME, format!("permuted copy not isomorphic: {g:?}"));
        }
        if let Some((pg, pcm)) = &prev {
            let gi = graph_canonical(&g) == graph_canonical(pg);
            let mi = coloring_canonical(&grid, n0, n1, &cm.colors)
                == coloring_canonical(&grid, n0, n1, &pcm.colors);
            if gi != mi && mismatch.is_none() {
                mismatch = Some(format!("random invariance mismatch: {g:?} vs {pg:?}"));
            }
        }
        prev = Some((g, cm));
    }
    if let Some(msg) = mismatch {
        return CriterionReport::fail(NAME, msg);
    }
    CriterionReport::pass(
        NAME,
        format!(
            "{} exhaustive graphs (all pairs) and 500 random graphs, canonical decisions",
            graphs.len()
        ),
    )
}

/// Criterion: the cardinality transport preserves and reflects
/// isomorphism on 500 seeded colored pairs, with exact round-trips.
pub fn shift1_transport(seed: u64) -> CriterionReport {
    const NAME: &str = "shift1-transport";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51f7);
    let pres = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
    let poset = Arc::new(pres.truncate(3));
    let base = TruncatedModel::full_model(poset, 1 << 10).unwrap();
    let autos = enumerate_automorphisms(&base, 64).unwrap();
    for run in 0..500 {
        let c1: Vec<u32> = (0..base.len()).map(|_| rng.gen_range(0..4)).collect();
        // half the time: transported coloring (isomorphic); else fresh
        let c2: Vec<u32> = if rng.gen_bool(0.5) {
            let a = autos.choose(&mut rng).unwrap();
            let mut c2 = vec![0u32; base.len()];
            for i in 0..base.len() {
                c2[a[i]] = c1[i];
            }
            c2
        } else {
            (0..base.len()).map(|_| rng.gen_range(0..4)).collect()
        };
        let m1 = ColoredModel::new(base.clone(), c1).unwrap();
        let m2 = ColoredModel::new(base.clone(), c2).unwrap();
        // round-trip exactness
        if model_to_color(&color_to_model(&m1)) != m1 {
            return CriterionReport::fail(NAME, format!("roundtrip failed, run {run}"));
        }
        let colored = find_colored_iso(&m1, &m2).is_some();
        let blown = blowup_iso(&color_to_model(&m1), &color_to_model(&m2)).is_some();
        if colored != blown {
            return CriterionReport::fail(
                NAME,
                format!("transport does not preserve/reflect isomorphism, run {run}"),
            );
        }
    }
    CriterionReport::pass(NAME, "500 colored pairs, both directions agree")
}

/// Criterion: on 50 seeded instances the two-level encoder recovers each
/// relation exactly, and isomorphic inputs give isomorphic outputs via
/// the constructed patched map.
pub fn twolevel_encoder(seed: u64) -> CriterionReport {
    const NAME: &str = "twolevel-encoder";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2f2f);
    for run in 0..50 {
        // Q side: a chain of 1 or 2 nodes with δ ≤ 3
        let n_nodes = rng.gen_range(1..=2usize);
        let deltas: Vec<u32> = (0..n_nodes).map(|_| rng.gen_range(2..=3)).collect();
        let q_poset = Arc::new(FinitePoset::chain_with_deltas(&deltas));
        let q_model = TruncatedModel::full_model(q_poset, 64).unwrap();

        // up to 2 random invariant irreflexive relations (arity ≤ 2)
        let n_rels = rng.gen_range(0..=2usize);
        let mut relations = Vec::new();
        for r in 0..n_rels {
            let inv_node = rng.gen_range(0..q_model.poset.len());
            let arity = rng.gen_range(1..=2usize);
            let classes = q_model.classes_of(&[inv_node]);
            let mut tuples = BTreeSet::new();
            if arity == 1 {
                // a union of classes
                for c in &classes {
                    if rng.gen_bool(0.5) {
                        for &x in c {
                            tuples.insert(vec![x]);
                        }
                    }
                }
            } else {
                // a union of off-diagonal class boxes
                for (i, ci) in classes.iter().enumerate() {
                    for (j, cj) in classes.iter().enumerate() {
                        if i != j && rng.gen_bool(0.4) {
                            for &x in ci {
                                for &y in cj {
                                    tuples.insert(vec![x, y]);
                                }
                            }
                        }
                    }
                }
            }
            let rel = TameRelation {
                name: format!("S{r}"),
                arity,
                inv_node,
                tuples,
            };
            debug_assert!(check_tame(&q_model, &rel) && is_irreflexive(&q_model, &rel));
            relations.push(rel);
        }
        let coloring: Vec<u32> = (0..q_model.len()).map(|_| rng.gen_range(0..3)).collect();
        let input = TwoLevelInput { q_model: q_model.clone(), relations, coloring };

        // R side: a family big enough for the codebook
        let j_bound: usize = 1 + input
            .relations
            .iter()
            .map(|rel| {
                let classes = q_model.classes_of(&[rel.inv_node]).len();
                classes.pow(rel.arity as u32)
            })
            .sum::<usize>();
        let r_pres = Arc::new(Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }));
        let (r_model, r_fam) = match build_family(&r_pres, j_bound, 1, j_bound + 4) {
            Ok(x) => x,
            Err(e) => return CriterionReport::fail(NAME, format!("family: {e}, run {run}")),
        };

        let out1 = match encode_twolevel(&input, &r_model, &r_fam, seed ^ run as u64) {
            Ok(o) => o,
            Err(e) => return CriterionReport::fail(NAME, format!("encode: {e}, run {run}")),
        };
        // exact recovery
        let recovered = match recover_relations(&out1.colored, &out1.codebook, &out1.split) {
            Ok(r) => r,
            Err(e) => return CriterionReport::fail(NAME, format!("recover: {e}, run {run}")),
        };
        for (i, rel) in input.relations.iter().enumerate() {
            if recovered[i] != rel.tuples {
                return CriterionReport::fail(
                    NAME,
                    format!("relation {} not recovered exactly, run {run}", rel.name),
                );
            }
        }

        // isomorphic inputs: sample a relation-preserving color-transported
        // automorphism
        let autos = enumerate_automorphisms(&q_model, 64).unwrap();
        let preserves = |map: &Vec<usize>| {
            input.relations.iter().all(|rel| {
                rel.tuples.iter().all(|t| {
                    rel.contains(&t.iter().map(|&x| map[x]).collect::<Vec<_>>())
                })
            })
        };
        let h = autos
            .iter()
            .filter(|a| preserves(a))
            .choose(&mut rng)
            .cloned()
            .unwrap_or_else(|| (0..q_model.len()).collect());
        let mut c2 = vec![0u32; q_model.len()];
        for i in 0..q_model.len() {
            c2[h[i]] = input.coloring[i];
        }
        let input2 = TwoLevelInput {
            q_model: q_model.clone(),
            relations: input.relations.clone(),
            coloring: c2,
        };
        let out2 = match encode_twolevel(&input2, &r_model, &r_fam, seed ^ run as u64) {
            Ok(o) => o,
            Err(e) => return CriterionReport::fail(NAME, format!("encode2: {e}, run {run}")),
        };
        let tau = match transport_isomorphism(&input, &h, &out1, &out2, &r_model, &r_fam) {
            Ok(t) => t,
            Err(e) => return CriterionReport::fail(NAME, format!("transport: {e}, run {run}")),
        };
        if !is_isomorphism(&out1.colored.model, &out2.colored.model, &tau, None) {
            return CriterionReport::fail(NAME, format!("tau not an isomorphism, run {run}"));
        }
        for e in 0..out1.colored.model.len() {
            if out1.colored.colors[e] != out2.colored.colors[tau[e]] {
                return CriterionReport::fail(NAME, format!("tau not color-preserving, run {run}"));
            }
        }
    }
    CriterionReport::pass(NAME, "50 instances: exact recovery and transported isomorphisms")
}

/// Criterion: 25 constructed leveled instances with verified mutual
/// 1-embeddings; the back-and-forth output passes independent
/// isomorphism-plus-color verification.
pub fn sb_backforth(seed: u64) -> CriterionReport {
    const NAME: &str = "sb-backforth";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5b5b);
    let mut run = 0usize;
    while run < 25 {
        // alternate between a plain chain and a chain with fibers
        let use_fibers = run % 2 == 1;
        let (poset, chain_idxs) = if use_fibers {
            let pres = Arc::new(Presentation::ChainWithFibers {
                fiber: crate::poset::FiberSpec::Finite(FiniteSpec::antichain(1, 2)),
                delta: DeltaRule::Const(2),
            });
            let poset = Arc::new(pres.truncate(5));
            let chain: Vec<usize> = (0..poset.len())
                .filter(|&i| matches!(poset.nodes()[i], crate::poset::NodeAddress::Spine(_)))
                .collect();
            (poset, chain)
        } else {
            let pres = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
            let poset = Arc::new(pres.truncate(4));
            let chain: Vec<usize> = (0..poset.len()).collect();
            (poset, chain)
        };
        let base = TruncatedModel::full_model(poset, 64).unwrap();
        // coloring with a small palette so color-preserving automorphisms exist
        let c: Vec<u32> = (0..base.len()).map(|_| rng.gen_range(0..2)).collect();
        let autos = enumerate_automorphisms(&base, 64).unwrap();
        let color_ok: Vec<&Vec<usize>> = autos
            .iter()
            .filter(|a| (0..base.len()).all(|i| c[i] == c[a[i]]))
            .collect();
        if color_ok.len() < 2 {
            // too rigid a coloring; redraw
            continue;
        }
        let f = (*color_ok.choose(&mut rng).unwrap()).clone();
        let g = (*color_ok.choose(&mut rng).unwrap()).clone();
        let m = ColoredModel::new(base.clone(), c.clone()).unwrap();
        let n = ColoredModel::new(base.clone(), c).unwrap();
        if !check_one_embedding(&m, &n, &f).holds() || !check_one_embedding(&n, &m, &g).holds() {
            return CriterionReport::fail(NAME, format!("registered maps not 1-embeddings, run {run}"));
        }
        let mut ctx = match SbContext::new(m, n, chain_idxs) {
            Ok(c) => c,
            Err(e) => return CriterionReport::fail(NAME, format!("context: {e}, run {run}")),
        };
        if let Err(e) = ctx.register(&f, &g) {
            return CriterionReport::fail(NAME, format!("register: {e}, run {run}"));
        }
        let h = match sb_isomorphism(&mut ctx) {
            Ok(h) => h,
            Err(e) => return CriterionReport::fail(NAME, format!("run {run}: {e}")),
        };
        if !is_isomorphism(
            &ctx.m.model,
            &ctx.n.model,
            &h,
            Some((&ctx.m.colors, &ctx.n.colors)),
        ) {
            return CriterionReport::fail(NAME, format!("output not verified, run {run}"));
        }
        run += 1;
    }
    CriterionReport::pass(NAME, "25 leveled instances, outputs independently verified")
}

/// Criterion: reduct classification on the 8-element model with levels
/// {0, 1, 2, ω}, δ ≡ 2, multiplicity 2: every orbit-closed relation in
/// the seeded suite classifies to an `F` passing the two-way oracle with
/// finite-level minimality, and the three worked classifications match.
pub fn reduct_classification(seed: u64) -> CriterionReport {
    const NAME: &str = "reduct-classification";
    let m = RefModel::new(&[1, 2], &[2, 2], 2).unwrap();

    // the full-language automorphism group, from wreath generators
    let gens = reduct_aut_generators(&m, &m.levels);
    let mut group: Vec<Vec<usize>> = vec![(0..m.len()).collect()];
    let mut frontier = group.clone();
    while let Some(cur) = frontier.pop() {
        for g in &gens {
            let next: Vec<usize> = cur.iter().map(|&i| g[i]).collect();
            if !group.contains(&next) {
                group.push(next.clone());
                frontier.push(next);
            }
        }
    }

    // suite: seeded orbit closures plus canonical relations
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xed0c);
    let mut suite: Vec<DefinableSet> = Vec::new();
    let rel = |pred: &dyn Fn(usize, usize) -> bool| -> DefinableSet {
        let mut tuples = BTreeSet::new();
        for x in 0..m.len() {
            for y in 0..m.len() {
                if pred(x, y) {
                    tuples.insert(vec![x, y]);
                }
            }
        }
        DefinableSet::new(2, tuples)
    };
    suite.push(rel(&|x, y| m.related(Level::Fin(1), x, y)));
    suite.push(rel(&|x, y| x == y));
    suite.push(rel(&|x, y| {
        m.related(Level::Fin(1), x, y) && !m.related(Level::Fin(2), x, y) && x != y
    }));
    // every orbit-closed unary and binary relation: enumerate pair orbits
    // and take all unions
    {
        let mut orbits: Vec<DefinableSet> = Vec::new();
        for x in 0..m.len() {
            for y in 0..m.len() {
                let seed = DefinableSet::new(2, [vec![x, y]].into_iter().collect());
                let orbit = seed.orbit_closure(&group);
                if !orbits.contains(&orbit) {
                    orbits.push(orbit);
                }
            }
        }
        for mask in 0u32..(1 << orbits.len()) {
            let mut tuples = BTreeSet::new();
            for (i, o) in orbits.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    tuples.extend(o.tuples.iter().cloned());
                }
            }
            let d = DefinableSet::new(2, tuples);
            if !suite.contains(&d) {
                suite.push(d);
            }
        }
        for full in [false, true] {
            let tuples: BTreeSet<Vec<usize>> = if full {
                (0..m.len()).map(|x| vec![x]).collect()
            } else {
                BTreeSet::new()
            };
            suite.push(DefinableSet::new(1, tuples));
        }
    }
    // seeded arity-3 orbit closures
    for _ in 0..60 {
        let n_seeds = rng.gen_range(1..=2usize);
        let mut tuples = BTreeSet::new();
        for _ in 0..n_seeds {
            let t: Vec<usize> = (0..3).map(|_| rng.gen_range(0..m.len())).collect();
            tuples.insert(t);
        }
        let d = DefinableSet::new(3, tuples).orbit_closure(&group);
        if !suite.contains(&d) {
            suite.push(d);
        }
    }

    // worked classifications
    let expect: Vec<(usize, BTreeSet<Level>)> = vec![
        (0, [Level::Fin(1), Level::Omega].into_iter().collect()),
        (1, [Level::Omega].into_iter().collect()),
        (
            2,
            [Level::Fin(1), Level::Fin(2), Level::Omega].into_iter().collect(),
        ),
    ];

    let mut classified = 0usize;
    for (idx, d) in suite.iter().enumerate() {
        let f = match classify_reduct(&m, d) {
            Ok(f) => f,
            Err(e) => return CriterionReport::fail(NAME, format!("classify #{idx}: {e}")),
        };
        if let Some((_, want)) = expect.iter().find(|(i, _)| *i == idx) {
            if &f != want {
                return CriterionReport::fail(
                    NAME,
                    format!("worked example #{idx} got {f:?}, want {want:?}"),
                );
            }
        }
        match verify_equivalence(&m, d, &f) {
            Ok(true) => {}
            Ok(false) => {
                return CriterionReport::fail(NAME, format!("oracle rejects F for relation #{idx}"))
            }
            Err(e) => return CriterionReport::fail(NAME, format!("oracle #{idx}: {e}")),
        }
        // finite-level minimality
        for &j in f.iter() {
            if matches!(j, Level::Omega) {
                continue;
            }
            let mut smaller = f.clone();
            smaller.remove(&j);
            match verify_equivalence(&m, d, &smaller) {
                Ok(false) => {}
                Ok(true) => {
                    return CriterionReport::fail(
                        NAME,
                        format!("relation #{idx}: level {j} is removable, F not minimal"),
                    )
                }
                Err(e) => return CriterionReport::fail(NAME, format!("minimality #{idx}: {e}")),
            }
        }
        classified += 1;
    }
    CriterionReport::pass(
        NAME,
        format!("{classified} orbit-closed relations classified, verified, minimal"),
    )
}

/// Criterion: the classification table reproduces the six worked
/// verdicts.
pub fn classification_table() -> CriterionReport {
    const NAME: &str = "classification-table";
    let cases: Vec<(Presentation, &str)> = vec![
        (
            Presentation::omega_chain(DeltaRule::Const(2)),
            "MinimallyUnbounded",
        ),
        (
            Presentation::product(
                Presentation::omega_chain(DeltaRule::Const(2)),
                Presentation::FiniteExplicit(FiniteSpec::antichain(2, 2)),
            ),
            "UnboundedNotMinimal",
        ),
        (
            Presentation::OmegaSum {
                summand: crate::poset::SummandRule::GrowingChains,
                delta: Some(DeltaRule::Const(2)),
            },
            "UnboundedNotMinimal",
        ),
        (
            Presentation::ChainWithFibers {
                fiber: crate::poset::FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
                delta: DeltaRule::Const(3),
            },
            "MinimallyUnbounded",
        ),
        (
            Presentation::omega_antichain(DeltaRule::Const(2)),
            "Bounded",
        ),
        (
            Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }),
            "UnboundedNotMinimal",
        ),
    ];
    for (pres, want) in &cases {
        let got = classify(pres);
        if got.verdict_name() != *want {
            return CriterionReport::fail(
                NAME,
                format!("expected {want}, got {}", got.verdict_name()),
            );
        }
        // the bounded antichain carries the stated bounds
        if *want == "Bounded" {
            if got != (Classification::Bounded { height_bound: 1, delta_bound: 2 }) {
                return CriterionReport::fail(NAME, "bounded witness mismatch");
            }
        }
    }
    CriterionReport::pass(NAME, "six verdicts match")
}

/// Extra diagnostic exposed alongside the criteria: confirm the verifier
/// refutes the 3-cycle on a binary-chain family via the exponent law.
pub fn chain_family_obstruction() -> (LiftOutcome, &'static str) {
    let chain = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
    let (model, fam) = build_family(&chain, 3, 2, 8).expect("family builds");
    let outcome = verify_permutation(&model, &fam, &Perm(vec![1, 2, 0]));
    (
        outcome,
        "orders of automorphisms of binary models divide a power of two",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_table_criterion() {
        let r = classification_table();
        assert!(r.passed, "{}", r.details);
    }

    #[test]
    fn chain_obstruction_is_exponent() {
        let (outcome, _) = chain_family_obstruction();
        assert_eq!(outcome, LiftOutcome::RefutedExponent);
    }
}
