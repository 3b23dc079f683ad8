use std::collections::BTreeMap;

use super::{ColoredModel, TruncatedModel};

/// Backtracking search for an isomorphism between two models over the
/// same poset: a bijection preserving every relation (equivalently, all
/// pairwise wedges) and, when colors are supplied, colors.
///
/// Candidates are pruned by invariant profiles (color plus the multiset
/// of wedge/color pairs against all other elements), which keeps the
/// search shallow on the model sizes used here.
pub fn find_iso(
    a: &TruncatedModel,
    b: &TruncatedModel,
    colors_a: Option<&[u32]>,
    colors_b: Option<&[u32]>,
) -> Option<Vec<usize>> {
    if a.poset.nodes() != b.poset.nodes() || a.len() != b.len() {
        return None;
    }
    let n = a.len();
    let color = |cs: Option<&[u32]>, i: usize| cs.map(|c| c[i]).unwrap_or(0);

    // pairwise wedges, interned
    let mut intern: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
    let wid = |w: Vec<usize>, intern: &mut BTreeMap<Vec<usize>, u32>| -> u32 {
        let next = intern.len() as u32;
        *intern.entry(w).or_insert(next)
    };
    let mut wa = vec![vec![0u32; n]; n];
    let mut wb = vec![vec![0u32; n]; n];
    for i in 0..n {
        for j in 0..n {
            wa[i][j] = wid(a.wedge(&a.elements[i], &a.elements[j]), &mut intern);
            wb[i][j] = wid(b.wedge(&b.elements[i], &b.elements[j]), &mut intern);
        }
    }

    // profiles
    let profile = |w: &Vec<Vec<u32>>, cs: Option<&[u32]>, i: usize| -> (u32, Vec<(u32, u32, usize)>) {
        let mut multiset: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for j in 0..n {
            if j != i {
                *multiset.entry((w[i][j], color(cs, j))).or_insert(0) += 1;
            }
        }
        (
            color(cs, i),
            multiset.into_iter().map(|((x, y), c)| (x, y, c)).collect(),
        )
    };
    let pa: Vec<_> = (0..n).map(|i| profile(&wa, colors_a, i)).collect();
    let pb: Vec<_> = (0..n).map(|i| profile(&wb, colors_b, i)).collect();

    // order source elements by candidate count (most constrained first)
    let mut order: Vec<usize> = (0..n).collect();
    let cand_count =
        |i: usize| pb.iter().filter(|p| **p == pa[i]).count();
    order.sort_by_key(|&i| cand_count(i));

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn go(
        k: usize,
        order: &[usize],
        n: usize,
        wa: &Vec<Vec<u32>>,
        wb: &Vec<Vec<u32>>,
        pa: &[(u32, Vec<(u32, u32, usize)>)],
        pb: &[(u32, Vec<(u32, u32, usize)>)],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let i = order[k];
        for cand in 0..n {
            if used[cand] || pa[i] != pb[cand] {
                continue;
            }
            let consistent = order[..k]
                .iter()
                .all(|&p| wa[i][p] == wb[cand][map[p]]);
            if consistent {
                map[i] = cand;
                used[cand] = true;
                if go(k + 1, order, n, wa, wb, pa, pb, map, used) {
                    return true;
                }
                used[cand] = false;
                map[i] = usize::MAX;
            }
        }
        false
    }

    if go(0, &order, n, &wa, &wb, &pa, &pb, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

/// Colored isomorphism search.
pub fn find_colored_iso(a: &ColoredModel, b: &ColoredModel) -> Option<Vec<usize>> {
    find_iso(&a.model, &b.model, Some(&a.colors), Some(&b.colors))
}

/// Validate a claimed isomorphism independently of how it was found.
pub fn is_isomorphism(
    a: &TruncatedModel,
    b: &TruncatedModel,
    map: &[usize],
    colors: Option<(&[u32], &[u32])>,
) -> bool {
    if map.len() != a.len() || a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for &j in map {
        if j >= b.len() || used[j] {
            return false;
        }
        used[j] = true;
    }
    if let Some((ca, cb)) = colors {
        if !(0..a.len()).all(|i| ca[i] == cb[map[i]]) {
            return false;
        }
    }
    for i in 0..a.len() {
        for j in 0..a.len() {
            let w1 = a.wedge(&a.elements[i], &a.elements[j]);
            let w2 = b.wedge(&b.elements[map[i]], &b.elements[map[j]]);
            if w1 != w2 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Element, TruncatedModel};
    use crate::poset::FinitePoset;
    use std::sync::Arc;

    #[test]
    fn identity_iso_found() {
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let c = ColoredModel::new(m.clone(), vec![7; m.len()]).unwrap();
        let iso = find_colored_iso(&c, &c).unwrap();
        assert!(is_isomorphism(&m, &m, &iso, Some((&c.colors, &c.colors))));
    }

    #[test]
    fn distinguishing_colors_block_isomorphism() {
        let p = Arc::new(FinitePoset::antichain(1, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let c1 = ColoredModel::new(m.clone(), vec![1, 2]).unwrap();
        let c2 = ColoredModel::new(m.clone(), vec![1, 1]).unwrap();
        assert!(find_colored_iso(&c1, &c2).is_none());
        // same multiset of colors: the value swap is an isomorphism
        let c3 = ColoredModel::new(m.clone(), vec![2, 1]).unwrap();
        let iso = find_colored_iso(&c1, &c3).unwrap();
        assert_eq!(iso, vec![1, 0]);
    }

    #[test]
    fn wedge_structure_blocks_isomorphism() {
        // 2-chain: elements (0,0),(0,1) are E_bottom-related; a map pairing
        // them with an unrelated pair must be rejected
        let p = Arc::new(FinitePoset::chain(2, 2));
        let m = TruncatedModel::full_model(p, 1 << 20).unwrap();
        let pick = |coords: [u32; 2]| {
            m.index_of(&Element::new(coords.to_vec())).unwrap()
        };
        let sub1 = TruncatedModel::new(
            m.poset.clone(),
            vec![m.elements[pick([0, 0])].clone(), m.elements[pick([0, 1])].clone()],
        )
        .unwrap();
        let sub2 = TruncatedModel::new(
            m.poset.clone(),
            vec![m.elements[pick([0, 0])].clone(), m.elements[pick([1, 1])].clone()],
        )
        .unwrap();
        assert!(find_iso(&sub1, &sub2, None, None).is_none());
        assert!(find_iso(&sub1, &sub1, None, None).is_some());
    }
}
