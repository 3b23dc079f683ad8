//! Text formats for the artifacts that cross the CLI boundary: model
//! dumps (with optional color and class columns), automorphism tables,
//! bipartite graphs, refinement-model relations, and two-level codebooks.

use std::sync::Arc;

use crate::dynamics::ConditionalAutomorphism;
use crate::model::{ColoredModel, Element, TruncatedModel};
use crate::perm::Perm;
use crate::poset::FinitePoset;
use crate::reductions::{BipartiteGraph, ClassLabel, TwoLevelCodebook, TwoLevelOutput};
use crate::reducts::{DefinableSet, Level, RefModel};
use crate::{Error, Result};

/// A parsed model dump: the poset reference plus rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDump {
    pub poset_ref: String,
    pub depth: usize,
    pub rows: Vec<DumpRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRow {
    pub coords: Vec<u32>,
    pub color: Option<u32>,
    pub class: Option<usize>,
}

/// Serialize a model: one line per element with coordinate values in
/// canonical node order; a trailing color column and a class column when
/// supplied.
pub fn write_model_dump(
    poset_ref: &str,
    depth: usize,
    m: &TruncatedModel,
    colors: Option<&[u32]>,
    classes: Option<&[Option<usize>]>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("poset {poset_ref}\n"));
    out.push_str(&format!("depth {depth}\n"));
    for (i, e) in m.elements.iter().enumerate() {
        let coords: Vec<String> = e.coords.iter().map(|v| v.to_string()).collect();
        out.push_str(&coords.join(" "));
        if let Some(cs) = colors {
            out.push_str(&format!(" | {}", cs[i]));
        }
        if let Some(ks) = classes {
            match ks[i] {
                Some(k) => out.push_str(&format!(" | {k}")),
                None => out.push_str(" | -"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_model_dump(text: &str) -> Result<ModelDump> {
    let mut poset_ref = None;
    let mut depth = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("poset ") {
            poset_ref = Some(rest.trim().to_string());
            continue;
        }
        if let Some(rest) = line.strip_prefix("depth ") {
            depth = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad depth".into()))?,
            );
            continue;
        }
        let mut parts = line.split('|');
        let coords: Vec<u32> = parts
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        let color = match parts.next() {
            Some(c) => Some(
                c.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad color".into()))?,
            ),
            None => None,
        };
        let class = match parts.next() {
            Some(k) if k.trim() == "-" => None,
            Some(k) => Some(
                k.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad class index".into()))?,
            ),
            None => None,
        };
        rows.push(DumpRow { coords, color, class });
    }
    Ok(ModelDump {
        poset_ref: poset_ref.ok_or_else(|| Error::Parse("missing poset header".into()))?,
        depth: depth.ok_or_else(|| Error::Parse("missing depth header".into()))?,
        rows,
    })
}

/// Build a model (plus optional colors/classes) from a dump over a poset.
pub fn model_from_dump(
    dump: &ModelDump,
    poset: Arc<FinitePoset>,
) -> Result<(TruncatedModel, Option<Vec<u32>>, Option<Vec<Option<usize>>>)> {
    let elements: Vec<Element> = dump
        .rows
        .iter()
        .map(|r| Element::new(r.coords.clone()))
        .collect();
    let model = TruncatedModel::new(poset, elements.clone())?;
    // the model sorts its elements; realign the columns
    let mut colors = vec![0u32; model.len()];
    let mut classes = vec![None; model.len()];
    let has_colors = dump.rows.iter().all(|r| r.color.is_some());
    let has_classes = dump.rows.iter().any(|r| r.class.is_some());
    for (row, e) in dump.rows.iter().zip(&elements) {
        let i = model.index_of(e).expect("just inserted");
        if let Some(c) = row.color {
            colors[i] = c;
        }
        classes[i] = row.class;
    }
    Ok((
        model,
        if has_colors { Some(colors) } else { None },
        if has_classes { Some(classes) } else { None },
    ))
}

/// Automorphism table: one rule per line.
pub fn write_automorphism(sigma: &ConditionalAutomorphism) -> String {
    let mut out = String::new();
    for q in 0..sigma.poset.len() {
        let addr = &sigma.poset.nodes()[q];
        let mut rules: Vec<_> = sigma.rules_at(q).iter().collect();
        rules.sort_by_key(|(k, _)| (*k).clone());
        for (lower, perm) in rules {
            let key: Vec<String> = lower.iter().map(|v| v.to_string()).collect();
            let images: Vec<String> = perm.0.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "node {addr} | {} -> {}\n",
                if key.is_empty() { "-".to_string() } else { key.join(" ") },
                images.join(" ")
            ));
        }
    }
    out
}

pub fn parse_automorphism(
    text: &str,
    poset: Arc<FinitePoset>,
) -> Result<ConditionalAutomorphism> {
    let mut sigma = ConditionalAutomorphism::identity(poset.clone());
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rest = line
            .strip_prefix("node ")
            .ok_or_else(|| Error::Parse(format!("bad automorphism line `{line}`")))?;
        let (addr_str, rest) = rest
            .split_once('|')
            .ok_or_else(|| Error::Parse("missing `|`".into()))?;
        let (key_str, perm_str) = rest
            .split_once("->")
            .ok_or_else(|| Error::Parse("missing `->`".into()))?;
        let addr: crate::poset::NodeAddress = addr_str.trim().parse()?;
        let q = poset.index_of(&addr)?;
        let key: Vec<u32> = if key_str.trim() == "-" || key_str.trim() == "*" {
            vec![]
        } else {
            key_str
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad assignment".into())))
                .collect::<Result<_>>()?
        };
        let images: Vec<usize> = perm_str
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse("bad permutation".into())))
            .collect::<Result<_>>()?;
        let perm = Perm::from_one_line(images)
            .ok_or_else(|| Error::Parse("not a permutation".into()))?;
        if key_str.trim() == "*" {
            sigma.set_unconditional(q, perm)?;
        } else {
            sigma.set_rule(q, key, perm)?;
        }
    }
    Ok(sigma)
}

/// Bipartite graph: `rows cols` then one `u v` per line.
pub fn write_graph(g: &BipartiteGraph) -> String {
    let mut out = format!("{} {}\n", g.rows, g.cols);
    for &(u, v) in &g.edges {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn parse_graph(text: &str) -> Result<BipartiteGraph> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse("bad dimension".into())))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse("header must be `rows cols`".into()));
    }
    let mut edges = Vec::new();
    for line in lines {
        let uv: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse("bad edge".into())))
            .collect::<Result<_>>()?;
        if uv.len() != 2 {
            return Err(Error::Parse("edge lines are `u v`".into()));
        }
        edges.push((uv[0], uv[1]));
    }
    BipartiteGraph::new(dims[0], dims[1], edges)
}

/// Refinement model: `refmodel` / `levels j1 j2 ...` / `delta d1 d2 ...`
/// / `mult s`.
pub fn write_refmodel(m: &RefModel) -> String {
    let levels: Vec<String> = m.coord_levels.iter().map(|j| j.to_string()).collect();
    let deltas: Vec<String> = m.coord_deltas.iter().map(|d| d.to_string()).collect();
    format!(
        "refmodel\nlevels {}\ndelta {}\nmult {}\n",
        levels.join(" "),
        deltas.join(" "),
        m.mult
    )
}

pub fn parse_refmodel(text: &str) -> Result<RefModel> {
    let mut levels: Option<Vec<u32>> = None;
    let mut deltas: Option<Vec<u32>> = None;
    let mut mult: Option<u32> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line == "refmodel" || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("levels ") {
            levels = Some(parse_u32s(rest)?);
        } else if let Some(rest) = line.strip_prefix("delta ") {
            deltas = Some(parse_u32s(rest)?);
        } else if let Some(rest) = line.strip_prefix("mult ") {
            mult = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::Parse("bad mult".into()))?,
            );
        } else {
            return Err(Error::Parse(format!("unknown refmodel line `{line}`")));
        }
    }
    RefModel::new(
        &levels.ok_or_else(|| Error::Parse("missing levels".into()))?,
        &deltas.ok_or_else(|| Error::Parse("missing delta".into()))?,
        mult.ok_or_else(|| Error::Parse("missing mult".into()))?,
    )
}

fn parse_u32s(s: &str) -> Result<Vec<u32>> {
    s.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad number `{t}`"))))
        .collect()
}

/// Definable set: `arity n` then one tuple of element indices per line.
pub fn write_defset(d: &DefinableSet) -> String {
    let mut out = format!("arity {}\n", d.arity);
    for t in &d.tuples {
        let items: Vec<String> = t.iter().map(|x| x.to_string()).collect();
        out.push_str(&items.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_defset(text: &str) -> Result<DefinableSet> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty set file".into()))?;
    let arity: usize = header
        .strip_prefix("arity ")
        .ok_or_else(|| Error::Parse("missing arity header".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::Parse("bad arity".into()))?;
    let mut tuples = std::collections::BTreeSet::new();
    for line in lines {
        let t: Vec<usize> = line
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::Parse("bad element index".into())))
            .collect::<Result<_>>()?;
        if t.len() != arity {
            return Err(Error::Parse("tuple arity mismatch".into()));
        }
        tuples.insert(t);
    }
    Ok(DefinableSet::new(arity, tuples))
}

pub fn level_to_string(l: Level) -> String {
    l.to_string()
}

/// Serialize a two-level encoder output: the colored model rows (with a
/// split column) followed by the codebook section.
pub fn write_twolevel(out: &TwoLevelOutput) -> String {
    let cb = &out.codebook;
    let mut s = String::new();
    s.push_str(&format!("twolevel qlen {} rlen {}\n", cb.q_len, cb.r_len));
    for (i, e) in out.colored.model.elements.iter().enumerate() {
        let coords: Vec<String> = e.coords.iter().map(|v| v.to_string()).collect();
        let (qa, rb) = out.split[i];
        s.push_str(&format!(
            "{} | {} | {} {}\n",
            coords.join(" "),
            out.colored.colors[i],
            qa,
            rb
        ));
    }
    s.push_str("codebook\n");
    s.push_str(&format!("seed {}\n", cb.seed));
    for i in 0..cb.arities.len() {
        let reps: Vec<String> = cb.reps[i].iter().map(|r| r.to_string()).collect();
        let ys: Vec<String> = cb.y_blocks[i].iter().map(|y| y.to_string()).collect();
        s.push_str(&format!(
            "relation {i} | arity {} | node {} | reps {} | y {}\n",
            cb.arities[i],
            cb.inv_nodes[i],
            reps.join(" "),
            ys.join(" ")
        ));
        for (t, tuple) in cb.pos[i].iter().enumerate() {
            let items: Vec<String> = tuple.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("pos {i} {t} | {}\n", items.join(" ")));
        }
    }
    for (j, label) in cb.labels.iter().enumerate() {
        match label {
            ClassLabel::Star => s.push_str(&format!("label {j} *\n")),
            ClassLabel::Positive { rel, pos_idx } => {
                s.push_str(&format!("label {j} {rel} {pos_idx}\n"))
            }
        }
    }
    s
}

/// Parse the codebook section back (the model part is carried separately
/// by the caller; this recovers colors, split and the codebook).
pub struct TwoLevelDump {
    pub q_len: usize,
    pub r_len: usize,
    pub rows: Vec<(Vec<u32>, u32, (usize, usize))>,
    pub codebook: TwoLevelCodebook,
}

pub fn parse_twolevel(text: &str) -> Result<TwoLevelDump> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "twolevel" {
        return Err(Error::Parse("bad twolevel header".into()));
    }
    let q_len: usize = parts[2].parse().map_err(|_| Error::Parse("bad qlen".into()))?;
    let r_len: usize = parts[4].parse().map_err(|_| Error::Parse("bad rlen".into()))?;
    let mut rows = Vec::new();
    let mut seed = 0u64;
    let mut arities = Vec::new();
    let mut inv_nodes = Vec::new();
    let mut reps: Vec<Vec<usize>> = Vec::new();
    let mut y_blocks: Vec<Vec<u32>> = Vec::new();
    let mut pos: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut labels: Vec<ClassLabel> = Vec::new();
    let mut in_codebook = false;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "codebook" {
            in_codebook = true;
            continue;
        }
        if !in_codebook {
            let cols: Vec<&str> = line.split('|').collect();
            if cols.len() != 3 {
                return Err(Error::Parse("model rows are `coords | color | q r`".into()));
            }
            let coords = parse_u32s(cols[0])?;
            let color: u32 = cols[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse("bad color".into()))?;
            let qr: Vec<usize> = cols[2]
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad split".into())))
                .collect::<Result<_>>()?;
            rows.push((coords, color, (qr[0], qr[1])));
        } else if let Some(rest) = line.strip_prefix("seed ") {
            seed = rest.trim().parse().map_err(|_| Error::Parse("bad seed".into()))?;
        } else if let Some(rest) = line.strip_prefix("relation ") {
            let fields: Vec<&str> = rest.split('|').map(str::trim).collect();
            let arity: usize = fields[1]
                .strip_prefix("arity ")
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("bad arity field".into()))?;
            let node: usize = fields[2]
                .strip_prefix("node ")
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("bad node field".into()))?;
            let rep_vals: Vec<usize> = fields[3]
                .strip_prefix("reps ")
                .ok_or_else(|| Error::Parse("bad reps field".into()))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad rep".into())))
                .collect::<Result<_>>()?;
            let ys: Vec<u32> = fields[4]
                .strip_prefix("y ")
                .ok_or_else(|| Error::Parse("bad y field".into()))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad y color".into())))
                .collect::<Result<_>>()?;
            arities.push(arity);
            inv_nodes.push(node);
            reps.push(rep_vals);
            y_blocks.push(ys);
            pos.push(Vec::new());
        } else if let Some(rest) = line.strip_prefix("pos ") {
            let (idx_part, tuple_part) = rest
                .split_once('|')
                .ok_or_else(|| Error::Parse("bad pos line".into()))?;
            let idxs: Vec<usize> = idx_part
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad pos index".into())))
                .collect::<Result<_>>()?;
            let tuple: Vec<usize> = tuple_part
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse("bad pos tuple".into())))
                .collect::<Result<_>>()?;
            let rel = idxs[0];
            if pos.len() <= rel {
                return Err(Error::Parse("pos before relation".into()));
            }
            pos[rel].push(tuple);
        } else if let Some(rest) = line.strip_prefix("label ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.get(1) {
                Some(&"*") => labels.push(ClassLabel::Star),
                Some(r) => {
                    let rel: usize =
                        r.parse().map_err(|_| Error::Parse("bad label".into()))?;
                    let pos_idx: usize = fields
                        .get(2)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Parse("bad label".into()))?;
                    labels.push(ClassLabel::Positive { rel, pos_idx });
                }
                None => return Err(Error::Parse("bad label".into())),
            }
        } else {
            return Err(Error::Parse(format!("unknown line `{line}`")));
        }
    }
    Ok(TwoLevelDump {
        q_len,
        r_len,
        rows,
        codebook: TwoLevelCodebook {
            q_len,
            r_len,
            reps,
            pos,
            inv_nodes,
            arities,
            y_blocks,
            labels,
            seed,
        },
    })
}

/// Parse a colored model dump back into a colored model over a poset.
pub fn colored_model_from_dump(
    dump: &ModelDump,
    poset: Arc<FinitePoset>,
) -> Result<ColoredModel> {
    let (model, colors, _) = model_from_dump(dump, poset)?;
    let colors = colors.ok_or_else(|| Error::Parse("dump has no color column".into()))?;
    ColoredModel::new(model, colors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{DeltaRule, Presentation};

    #[test]
    fn model_dump_roundtrip() {
        let pres = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
        let poset = Arc::new(pres.truncate(3));
        let m = TruncatedModel::full_model(poset.clone(), 1 << 20).unwrap();
        let colors: Vec<u32> = (0..m.len() as u32).collect();
        let text = write_model_dump("chain.poset", 3, &m, Some(&colors), None);
        let dump = parse_model_dump(&text).unwrap();
        assert_eq!(dump.poset_ref, "chain.poset");
        assert_eq!(dump.depth, 3);
        let (m2, c2, _) = model_from_dump(&dump, poset).unwrap();
        assert_eq!(m2, m);
        assert_eq!(c2, Some(colors));
    }

    #[test]
    fn automorphism_roundtrip() {
        let pres = Arc::new(Presentation::omega_chain(DeltaRule::Const(2)));
        let poset = Arc::new(pres.truncate(2));
        let mut sigma = ConditionalAutomorphism::identity(poset.clone());
        sigma.set_rule(1, vec![1], Perm(vec![1, 0])).unwrap();
        sigma.set_unconditional(0, Perm(vec![1, 0])).unwrap();
        let text = write_automorphism(&sigma);
        let back = parse_automorphism(&text, poset.clone()).unwrap();
        let m = TruncatedModel::full_model(poset, 1 << 20).unwrap();
        for f in &m.elements {
            assert_eq!(sigma.apply(f), back.apply(f));
        }
    }

    #[test]
    fn graph_roundtrip() {
        let g = BipartiteGraph::new(3, 2, vec![(0, 0), (2, 1)]).unwrap();
        let text = write_graph(&g);
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn refmodel_and_defset_roundtrip() {
        let m = RefModel::new(&[1, 2], &[2, 3], 2).unwrap();
        let text = write_refmodel(&m);
        assert_eq!(parse_refmodel(&text).unwrap(), m);

        let d = DefinableSet::of_relation(&m, Level::Fin(1));
        let text = write_defset(&d);
        assert_eq!(parse_defset(&text).unwrap(), d);
    }
}
