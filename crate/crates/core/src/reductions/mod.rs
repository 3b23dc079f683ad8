//! Encoders between combinatorial objects and colored models: reduced
//! bipartite graphs into colorings over a cross-cutting witness, and the
//! cardinality transport between colorings and models with nontrivial
//! `E`-classes.

mod twolevel;

pub use twolevel::{
    check_tame, encode_twolevel, is_irreflexive, make_irreflexive, reconstruct_from_pieces,
    recover_relations, transport_isomorphism, ClassLabel, TameRelation, TwoLevelCodebook,
    TwoLevelInput, TwoLevelOutput,
};

use crate::indiscernibles::CrossCuttingWitness;
use crate::model::{ColoredModel, TruncatedModel};
use crate::perm::Perm;
use crate::{Error, Result};

/// A finite bipartite graph on `rows × cols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(rows: usize, cols: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        if edges.iter().any(|&(u, v)| u >= rows || v >= cols) {
            return Err(Error::Contract("edge out of range".into()));
        }
        Ok(BipartiteGraph { rows, cols, edges })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    pub fn row_neighborhood(&self, u: usize) -> Vec<usize> {
        self.edges.iter().filter(|&&(a, _)| a == u).map(|&(_, b)| b).collect()
    }

    pub fn col_neighborhood(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|&&(_, b)| b == v).map(|&(a, _)| a).collect()
    }
}

/// Reduced: all row neighborhoods pairwise distinct, all column
/// neighborhoods pairwise distinct.
pub fn is_reduced(g: &BipartiteGraph) -> bool {
    for u in 0..g.rows {
        for u2 in u + 1..g.rows {
            if g.row_neighborhood(u) == g.row_neighborhood(u2) {
                return false;
            }
        }
    }
    for v in 0..g.cols {
        for v2 in v + 1..g.cols {
            if g.col_neighborhood(v) == g.col_neighborhood(v2) {
                return false;
            }
        }
    }
    true
}

/// Backtracking bipartite graph isomorphism: a pair of permutations
/// `(σ_rows, σ_cols)` with `(u, v) ∈ R ⟺ (σ_rows u, σ_cols v) ∈ S`.
pub fn graph_iso(r: &BipartiteGraph, s: &BipartiteGraph) -> Option<(Perm, Perm)> {
    if r.rows != s.rows || r.cols != s.cols || r.edges.len() != s.edges.len() {
        return None;
    }
    // degree pruning
    let rdeg: Vec<usize> = (0..r.rows).map(|u| r.row_neighborhood(u).len()).collect();
    let sdeg: Vec<usize> = (0..s.rows).map(|u| s.row_neighborhood(u).len()).collect();
    {
        let mut a = rdeg.clone();
        let mut b = sdeg.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return None;
        }
    }

    let mut row_map = vec![usize::MAX; r.rows];
    let mut row_used = vec![false; s.rows];

    fn try_cols(r: &BipartiteGraph, s: &BipartiteGraph, row_map: &[usize]) -> Option<Perm> {
        // with rows fixed, match columns by translated neighborhoods
        let mut col_map = vec![usize::MAX; r.cols];
        let mut used = vec![false; s.cols];
        fn go(
            v: usize,
            r: &BipartiteGraph,
            s: &BipartiteGraph,
            row_map: &[usize],
            col_map: &mut Vec<usize>,
            used: &mut Vec<bool>,
        ) -> bool {
            if v == r.cols {
                return true;
            }
            let want: Vec<usize> = {
                let mut w: Vec<usize> =
                    r.col_neighborhood(v).into_iter().map(|u| row_map[u]).collect();
                w.sort_unstable();
                w
            };
            for cand in 0..s.cols {
                if used[cand] {
                    continue;
                }
                let mut have = s.col_neighborhood(cand);
                have.sort_unstable();
                if have == want {
                    col_map[v] = cand;
                    used[cand] = true;
                    if go(v + 1, r, s, row_map, col_map, used) {
                        return true;
                    }
                    used[cand] = false;
                    col_map[v] = usize::MAX;
                }
            }
            false
        }
        if go(0, r, s, row_map, &mut col_map, &mut used) {
            Some(Perm(col_map))
        } else {
            None
        }
    }

    fn go_rows(
        u: usize,
        r: &BipartiteGraph,
        s: &BipartiteGraph,
        rdeg: &[usize],
        sdeg: &[usize],
        row_map: &mut Vec<usize>,
        row_used: &mut Vec<bool>,
    ) -> Option<(Perm, Perm)> {
        if u == r.rows {
            return try_cols(r, s, row_map).map(|cols| (Perm(row_map.clone()), cols));
        }
        for cand in 0..s.rows {
            if row_used[cand] || rdeg[u] != sdeg[cand] {
                continue;
            }
            row_map[u] = cand;
            row_used[cand] = true;
            if let Some(hit) = go_rows(u + 1, r, s, rdeg, sdeg, row_map, row_used) {
                return Some(hit);
            }
            row_used[cand] = false;
            row_map[u] = usize::MAX;
        }
        None
    }

    go_rows(0, r, s, &rdeg, &sdeg, &mut row_map, &mut row_used)
}

/// Grid colors: 0 off-grid, 1 on an edge cell, 2 on a non-edge cell.
pub const COLOR_OFF_GRID: u32 = 0;
pub const COLOR_EDGE: u32 = 1;
pub const COLOR_NON_EDGE: u32 = 2;

/// Encode a reduced bipartite graph as a coloring of the witness model:
/// grid points (elements lying in a class on both sides) in cell `(n, m)`
/// get color 1 or 2 by edge membership, everything else 0.  Only the
/// first `rows`/`cols` classes of each side are active.
pub fn encode_bipartite(w: &CrossCuttingWitness, g: &BipartiteGraph) -> Result<ColoredModel> {
    if !is_reduced(g) {
        return Err(Error::Contract("graph must be reduced".into()));
    }
    if w.fam0.class_count() < g.rows || w.fam1.class_count() < g.cols {
        return Err(Error::Capacity(format!(
            "witness has {}×{} classes, graph needs {}×{}",
            w.fam0.class_count(),
            w.fam1.class_count(),
            g.rows,
            g.cols
        )));
    }
    let m = &w.model;
    let mut colors = vec![COLOR_OFF_GRID; m.len()];
    for (n, class0) in w.fam0.classes.iter().enumerate().take(g.rows) {
        for (mm, class1) in w.fam1.classes.iter().enumerate().take(g.cols) {
            for &e in class0 {
                if class1.contains(&e) {
                    colors[e] = if g.has_edge(n, mm) { COLOR_EDGE } else { COLOR_NON_EDGE };
                }
            }
        }
    }
    ColoredModel::new(m.clone(), colors)
}

/// Decode a coloring in the encoder's image back to a bipartite graph,
/// reconstructing class identity from color profiles rather than trusting
/// the witness labels: two grid rows coincide iff they color every column
/// cell the same way.
pub fn decode_bipartite(cm: &ColoredModel, w: &CrossCuttingWitness) -> Result<BipartiteGraph> {
    if cm.colors.iter().any(|&c| c > COLOR_NON_EDGE) {
        return Err(Error::Format("colors outside {0,1,2}".into()));
    }
    let grid: Vec<usize> =
        (0..cm.model.len()).filter(|&i| cm.colors[i] != COLOR_OFF_GRID).collect();
    // E_0-classes and E_1-classes of grid points
    let e0_classes = group_by_relation(&grid, |x, y| w.e0(x, y));
    let e1_classes = group_by_relation(&grid, |x, y| w.e1(x, y));

    // cell color: every grid point in (a-class ∩ b-class) must agree
    let cell_color = |c0: &Vec<usize>, c1: &Vec<usize>| -> Result<Option<u32>> {
        let cells: Vec<u32> = c0
            .iter()
            .filter(|x| c1.contains(x))
            .map(|&x| cm.colors[x])
            .collect();
        match cells.split_first() {
            None => Ok(None),
            Some((first, rest)) => {
                if rest.iter().all(|c| c == first) {
                    Ok(Some(*first))
                } else {
                    Err(Error::Format("inconsistent cell coloring".into()))
                }
            }
        }
    };

    // group E_0-classes into rows by their color profile across E_1-classes
    let mut profiles0: Vec<Vec<Option<u32>>> = Vec::new();
    for c0 in &e0_classes {
        let mut prof = Vec::new();
        for c1 in &e1_classes {
            prof.push(cell_color(c0, c1)?);
        }
        profiles0.push(prof);
    }
    let mut rows: Vec<Vec<Option<u32>>> = Vec::new();
    let mut row_of: Vec<usize> = Vec::new();
    for prof in &profiles0 {
        match rows.iter().position(|r| r == prof) {
            Some(i) => row_of.push(i),
            None => {
                rows.push(prof.clone());
                row_of.push(rows.len() - 1);
            }
        }
    }
    let _ = row_of;
    // columns dually
    let mut profiles1: Vec<Vec<Option<u32>>> = Vec::new();
    for (j, _c1) in e1_classes.iter().enumerate() {
        let prof: Vec<Option<u32>> = profiles0.iter().map(|p| p[j]).collect();
        profiles1.push(prof);
    }
    let mut cols: Vec<Vec<Option<u32>>> = Vec::new();
    for prof in &profiles1 {
        if !cols.contains(prof) {
            cols.push(prof.clone());
        }
    }

    // edges between row-groups and col-groups
    let mut edges = Vec::new();
    for (ri, rprof) in rows.iter().enumerate() {
        for (cj, _cprof) in cols.iter().enumerate() {
            // find a representative cell: an E_1-class whose column profile
            // matches this column group
            let col_members: Vec<usize> = (0..e1_classes.len())
                .filter(|&j| profiles1[j] == cols[cj])
                .collect();
            let j = col_members[0];
            if rprof[j] == Some(COLOR_EDGE) {
                edges.push((ri, cj));
            }
        }
    }
    BipartiteGraph::new(rows.len(), cols.len(), edges)
}

fn group_by_relation(items: &[usize], related: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &x in items {
        match classes.iter_mut().find(|c| related(c[0], x)) {
            Some(c) => c.push(x),
            None => classes.push(vec![x]),
        }
    }
    classes
}

/// All reduced bipartite graphs with exactly `rows × cols` shape.
pub fn all_reduced_graphs(rows: usize, cols: usize) -> Vec<BipartiteGraph> {
    let cells = rows * cols;
    let mut out = Vec::new();
    for mask in 0u64..(1 << cells) {
        let edges: Vec<(usize, usize)> = (0..cells)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| (i / cols, i % cols))
            .collect();
        let g = BipartiteGraph::new(rows, cols, edges).unwrap();
        if is_reduced(&g) {
            out.push(g);
        }
    }
    out
}

/// Blow-up of a colored model: each element becomes a block of
/// pairwise-`E_P`-related points whose size is its color; color 0 encodes
/// an infinite class as a distinguished flagged block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlownUpModel {
    pub base: TruncatedModel,
    pub block_sizes: Vec<u32>,
    pub infinite_flags: Vec<bool>,
}

/// Realized size of an "infinite" block at finite scale.
pub const INFINITE_BLOCK_SIZE: u32 = 1;

/// Coloring → model with nontrivial classes.
pub fn color_to_model(cm: &ColoredModel) -> BlownUpModel {
    let block_sizes = cm
        .colors
        .iter()
        .map(|&c| if c == 0 { INFINITE_BLOCK_SIZE } else { c })
        .collect();
    let infinite_flags = cm.colors.iter().map(|&c| c == 0).collect();
    BlownUpModel { base: cm.model.clone(), block_sizes, infinite_flags }
}

/// Model with classes → coloring: the color of a class is its size, with
/// flagged blocks reading 0 ("infinite").
pub fn model_to_color(b: &BlownUpModel) -> ColoredModel {
    let colors = b
        .block_sizes
        .iter()
        .zip(&b.infinite_flags)
        .map(|(&s, &inf)| if inf { 0 } else { s })
        .collect();
    ColoredModel::new(b.base.clone(), colors).expect("parallel arrays")
}

/// Isomorphism search between blow-ups: a base bijection preserving
/// wedges and block labels `(size, flag)`.
pub fn blowup_iso(a: &BlownUpModel, b: &BlownUpModel) -> Option<Vec<usize>> {
    // encode the block label into a synthetic color and reuse the searcher
    let label = |m: &BlownUpModel, i: usize| -> u32 {
        m.block_sizes[i] * 2 + if m.infinite_flags[i] { 1 } else { 0 }
    };
    let ca: Vec<u32> = (0..a.base.len()).map(|i| label(a, i)).collect();
    let cb: Vec<u32> = (0..b.base.len()).map(|i| label(b, i)).collect();
    crate::model::find_iso(&a.base, &b.base, Some(&ca), Some(&cb))
}
