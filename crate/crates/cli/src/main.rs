//! Command-line front end: each subcommand wraps one library operation
//! and emits a report with a provenance block (input hash, seed, caps).
//! Exit codes: 0 ok, 1 property violation, 2 usage error.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use refposet::acceptance;
use refposet::backforth::{check_one_embedding, sb_isomorphism, SbContext};
use refposet::dynamics::{enumerate_automorphisms, nested_violation_search};
use refposet::indiscernibles::{
    build_cross_cutting, build_family, disjoint_amalgamate, extend_in_k, verify_cross_cutting,
    verify_family, CrossCuttingVerdict, FamilyVerdict, SuitableCase,
};
use refposet::io;
use refposet::model::{is_isomorphism, ColoredModel, Element, TruncatedModel};
use refposet::perm::{all_perms, Perm};
use refposet::poset::{
    classify, omega_chain_gen, parse_presentation, Classification, FinitePoset, NodeAddress,
    Presentation,
};
use refposet::reductions::{
    color_to_model, decode_bipartite, encode_bipartite, encode_twolevel, model_to_color,
    recover_relations, TameRelation, TwoLevelInput,
};
use refposet::reducts::{classify_reduct, verify_equivalence, Level};
use refposet::Error;

#[derive(Parser)]
#[command(
    name = "refposet",
    version,
    about = "Finite-scale toolkit for poset-indexed refining equivalence relations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Args)]
struct Common {
    /// Truncation depth.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Seed for randomized constructions.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Search / enumeration cap.
    #[arg(long, default_value_t = 4096)]
    cap: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a poset presentation.
    Classify { poset: PathBuf },
    /// Materialize a truncation and print its structure.
    Truncate {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the automorphism exponent law on a full truncated model.
    AutExponent {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Search for nested sequences violating the stabilization law.
    NestedSearch {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Maximal sequence length.
        #[arg(long, default_value_t = 6)]
        len: usize,
    },
    /// Run seeded disjoint-amalgamation instances and check the posts.
    Amalgamate {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Which unboundedness resource the class draws on.
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 100)]
        runs: usize,
    },
    /// Build an indiscernible family and verify the permutation lifts.
    BuildFamily {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        size: usize,
        /// Write the family dump here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Build a cross-cutting witness and verify its clauses.
    CrossCutting {
        poset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 1)]
        size: usize,
    },
    /// Encode a reduced bipartite graph as a colored model.
    EncodeBipartite {
        poset: PathBuf,
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Decode a colored model back to a bipartite graph.
    DecodeBipartite {
        poset: PathBuf,
        dump: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        classes: usize,
    },
    /// Transport a coloring to a model with class sizes and back.
    Shift1 {
        poset: PathBuf,
        dump: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Encode a colored, relation-expanded model into a plain coloring.
    EncodeTwolevel {
        /// Poset of the relation-carrying side.
        #[arg(long)]
        q_poset: PathBuf,
        #[arg(long, default_value_t = 2)]
        q_depth: usize,
        /// Relations file.
        #[arg(long)]
        relations: PathBuf,
        /// One color per element, in canonical element order.
        #[arg(long)]
        colors: PathBuf,
        /// Poset of the carrier side.
        #[arg(long)]
        r_poset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Recover relation extensions from an encoder output.
    Recover {
        /// The encoder output file.
        input: PathBuf,
        /// Poset of the relation-carrying side (for its downsets).
        #[arg(long)]
        q_poset: PathBuf,
        #[arg(long, default_value_t = 2)]
        q_depth: usize,
    },
    /// Run the leveled back-and-forth between two colored models.
    SbIso {
        poset: PathBuf,
        /// Colored model dumps.
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Embedding files: one `i j` pair per line.
        #[arg(long)]
        fwd: PathBuf,
        #[arg(long)]
        bwd: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a definable set over a refinement model.
    ReductClassify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        set: PathBuf,
    },
    /// Run the acceptance suite.
    Selftest {
        #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    Delta,
    Height,
}

/// FNV-1a over the canonical input text: stable provenance hash.
fn fnv64(data: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in data.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

struct Report {
    format: Format,
    lines: Vec<(String, String)>,
}

impl Report {
    fn new(format: Format) -> Self {
        Report { format, lines: vec![] }
    }

    fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn provenance(&mut self, input_text: &str, seed: Option<u64>, cap: Option<u64>) {
        self.field("input-hash", format!("{:016x}", fnv64(input_text)));
        if let Some(s) = seed {
            self.field("seed", s);
        }
        if let Some(c) = cap {
            self.field("cap", c);
        }
    }

    fn print(&self) {
        for (k, v) in &self.lines {
            match self.format {
                Format::Machine => println!("{k}\t{v}"),
                Format::Text => println!("{k}: {v}"),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn load_poset(path: &Path) -> Result<(Arc<Presentation>, String), Error> {
    let text = read(path)?;
    let pres = parse_presentation(&text)?;
    Ok((Arc::new(pres), text))
}

fn classification_summary(c: &Classification) -> String {
    match c {
        Classification::Bounded { height_bound, delta_bound } => {
            format!("Bounded height<={height_bound} delta<={delta_bound}")
        }
        Classification::MinimallyUnbounded { .. } => "MinimallyUnbounded".into(),
        Classification::UnboundedNotMinimal { orthogonal, .. } => format!(
            "UnboundedNotMinimal orthogonal-pair={}",
            if orthogonal.is_some() { "yes" } else { "no" }
        ),
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let format = cli.format;
    match cli.command {
        Command::Classify { poset } => {
            let (pres, text) = load_poset(&poset)?;
            let verdict = classify(&pres);
            let mut r = Report::new(format);
            r.provenance(&text, None, None);
            r.field("verdict", verdict.verdict_name());
            r.field("summary", classification_summary(&verdict));
            let (narrow, _) = refposet::poset::is_narrow(&pres);
            r.field("narrow", narrow);
            r.print();
            Ok(true)
        }
        Command::Truncate { poset, common } => {
            let (pres, text) = load_poset(&poset)?;
            let t = pres.truncate(common.depth);
            let mut r = Report::new(format);
            r.provenance(&text, None, None);
            r.field("depth", common.depth);
            r.field("nodes", t.len());
            r.field("height", t.height());
            r.field("max-delta", t.max_delta());
            r.print();
            let hts = t.heights();
            for i in 0..t.len() {
                println!(
                    "{} delta={} height={} below=[{}]",
                    t.nodes()[i],
                    t.delta_idx(i),
                    hts[i],
                    t.strict_downset_idx(i)
                        .iter()
                        .map(|&j| t.nodes()[j].to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
            }
            Ok(true)
        }
        Command::AutExponent { poset, common } => {
            let (pres, text) = load_poset(&poset)?;
            let t = Arc::new(pres.truncate(common.depth));
            let model = TruncatedModel::full_model(t, common.cap)?;
            let autos = enumerate_automorphisms(&model, common.cap as usize)?;
            let k = model.poset.height();
            let m_bound = model.poset.max_delta();
            let exponent = refposet::dynamics::exponent_bound(m_bound, k);
            let mut ok = true;
            for a in &autos {
                let mut p: Vec<usize> = (0..model.len()).collect();
                for _ in 0..exponent {
                    p = p.iter().map(|&i| a[i]).collect();
                }
                if !p.iter().enumerate().all(|(i, &j)| i == j) {
                    ok = false;
                    break;
                }
            }
            let mut r = Report::new(format);
            r.provenance(&text, None, Some(common.cap));
            r.field("model-size", model.len());
            r.field("automorphisms", autos.len());
            r.field("exponent", exponent);
            r.field("law-holds", ok);
            r.print();
            Ok(ok)
        }
        Command::NestedSearch { poset, common, len } => {
            let (pres, text) = load_poset(&poset)?;
            let t = Arc::new(pres.truncate(common.depth));
            let model = TruncatedModel::full_model(t, common.cap)?;
            let hit = nested_violation_search(&model, len);
            let mut r = Report::new(format);
            r.provenance(&text, None, Some(common.cap));
            r.field("model-size", model.len());
            r.field("max-length", len);
            r.field("violation-found", hit.is_some());
            r.print();
            Ok(hit.is_none())
        }
        Command::Amalgamate { poset, common, case, runs } => {
            let (pres, text) = load_poset(&poset)?;
            let case = match case {
                CaseArg::Delta => SuitableCase::DeltaBounded,
                CaseArg::Height => SuitableCase::HeightBounded,
            };
            let t = Arc::new(pres.truncate(common.depth));
            let carrier = TruncatedModel::new(t.clone(), vec![Element::zeros(t.len())])?;
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed);
            let mut verified = 0usize;
            let mut skipped = 0usize;
            for _ in 0..runs {
                let random_target = |rng: &mut rand_chacha::ChaCha8Rng| {
                    Element::new(
                        (0..t.len()).map(|i| rng.gen_range(0..t.delta_idx(i))).collect(),
                    )
                };
                let base_size = rng.gen_range(0..3usize);
                let mut base: Vec<Element> = vec![];
                let mut failed = false;
                for _ in 0..base_size {
                    let tgt = random_target(&mut rng);
                    match extend_in_k(case, &carrier, &base, &[], &tgt) {
                        Ok((h, _)) => base.push(h),
                        Err(_) => {
                            failed = true;
                            break;
                        }
                    }
                }
                if failed {
                    skipped += 1;
                    continue;
                }
                let f = extend_in_k(case, &carrier, &base, &[], &random_target(&mut rng));
                let h = extend_in_k(case, &carrier, &base, &[], &random_target(&mut rng));
                let (Ok((f, _)), Ok((h, _))) = (f, h) else {
                    skipped += 1;
                    continue;
                };
                if f == h {
                    skipped += 1;
                    continue;
                }
                let (fp, _) = disjoint_amalgamate(case, &carrier, &base, &f, &h)?;
                let exact =
                    base.iter().all(|a| carrier.wedge(&fp, a) == carrier.wedge(&f, a));
                if exact && fp != h {
                    verified += 1;
                } else {
                    let mut r = Report::new(format);
                    r.provenance(&text, Some(common.seed), None);
                    r.field("violation", "amalgamation post failed");
                    r.print();
                    return Ok(false);
                }
            }
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), None);
            r.field("runs", runs);
            r.field("verified", verified);
            r.field("skipped", skipped);
            r.print();
            Ok(true)
        }
        Command::BuildFamily { poset, common, classes, size, output } => {
            let (pres, text) = load_poset(&poset)?;
            let (model, fam) = build_family(&pres, classes, size, common.depth)?;
            let verdict = if classes <= 5 {
                verify_family(&model, &fam, &all_perms(classes))
            } else {
                FamilyVerdict::AllRealized
            };
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), Some(common.cap));
            r.field("classes", classes);
            r.field("size", size);
            r.field("depth", common.depth);
            if let Some(spec) = fam.class_spec {
                r.field("class-threshold", format!("{:?} {}", spec.case, spec.bound));
            }
            let ok = match &verdict {
                FamilyVerdict::AllRealized => {
                    r.field("verified", "all permutations realized");
                    true
                }
                FamilyVerdict::Refuted { perm, outcome } => {
                    r.field("refuted", format!("{:?} by {:?}", perm.0, outcome));
                    false
                }
                FamilyVerdict::Inconclusive { perm } => {
                    r.field("inconclusive", format!("{:?}", perm.0));
                    false
                }
            };
            if let Some(path) = output {
                let mut class_col: Vec<Option<usize>> = vec![None; model.len()];
                for (k, c) in fam.classes.iter().enumerate() {
                    for &e in c {
                        class_col[e] = Some(k);
                    }
                }
                let dump = io::write_model_dump(
                    &poset.display().to_string(),
                    common.depth,
                    &model,
                    None,
                    Some(&class_col),
                );
                std::fs::write(&path, dump)
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                r.field("written", path.display());
            }
            r.print();
            Ok(ok)
        }
        Command::CrossCutting { poset, common, classes, size } => {
            let (pres, text) = load_poset(&poset)?;
            let w = build_cross_cutting(&pres, classes, size, common.depth)?;
            let perms = all_perms(classes.min(3));
            let pairs: Vec<(Perm, Perm)> = perms
                .iter()
                .flat_map(|p| perms.iter().map(move |q| (p.clone(), q.clone())))
                .collect();
            let verdict = verify_cross_cutting(&w, &pairs);
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), Some(common.cap));
            r.field("model-size", w.model.len());
            r.field("pairs-checked", pairs.len());
            let ok = verdict == CrossCuttingVerdict::Verified;
            r.field("verdict", format!("{verdict:?}"));
            r.print();
            Ok(ok)
        }
        Command::EncodeBipartite { poset, graph, common, classes, output } => {
            let (pres, text) = load_poset(&poset)?;
            let g = io::parse_graph(&read(&graph)?)?;
            let w = build_cross_cutting(&pres, classes, 1, common.depth)?;
            let cm = encode_bipartite(&w, &g)?;
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), None);
            r.field("graph", format!("{}x{} {} edges", g.rows, g.cols, g.edges.len()));
            r.field("model-size", cm.model.len());
            if let Some(path) = output {
                let dump = io::write_model_dump(
                    &poset.display().to_string(),
                    common.depth,
                    &cm.model,
                    Some(&cm.colors),
                    None,
                );
                std::fs::write(&path, dump)
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                r.field("written", path.display());
            }
            r.print();
            Ok(true)
        }
        Command::DecodeBipartite { poset, dump, common, classes } => {
            let (pres, text) = load_poset(&poset)?;
            let w = build_cross_cutting(&pres, classes, 1, common.depth)?;
            let parsed = io::parse_model_dump(&read(&dump)?)?;
            let cm = io::colored_model_from_dump(&parsed, w.model.poset.clone())?;
            if cm.model != w.model {
                return Err(Error::Contract(
                    "dump does not match the witness model; check depth/classes".into(),
                ));
            }
            let g = decode_bipartite(&cm, &w)?;
            let mut r = Report::new(format);
            r.provenance(&text, None, None);
            r.field("graph", format!("{}x{}", g.rows, g.cols));
            r.print();
            print!("{}", io::write_graph(&g));
            Ok(true)
        }
        Command::Shift1 { poset, dump, common } => {
            let (pres, text) = load_poset(&poset)?;
            let t = Arc::new(pres.truncate(common.depth));
            let parsed = io::parse_model_dump(&read(&dump)?)?;
            let cm = io::colored_model_from_dump(&parsed, t)?;
            let blown = color_to_model(&cm);
            let back = model_to_color(&blown);
            let mut r = Report::new(format);
            r.provenance(&text, None, None);
            r.field("elements", cm.model.len());
            r.field(
                "blown-points",
                blown.block_sizes.iter().map(|&s| s as u64).sum::<u64>(),
            );
            r.field(
                "infinite-blocks",
                blown.infinite_flags.iter().filter(|&&f| f).count(),
            );
            r.field("roundtrip-exact", back == cm);
            r.print();
            for i in 0..cm.model.len() {
                println!(
                    "block {} size={}{}",
                    i,
                    blown.block_sizes[i],
                    if blown.infinite_flags[i] { " (marks an infinite class)" } else { "" }
                );
            }
            Ok(back == cm)
        }
        Command::EncodeTwolevel {
            q_poset,
            q_depth,
            relations,
            colors,
            r_poset,
            common,
            output,
        } => {
            let (qp, text) = load_poset(&q_poset)?;
            let q_trunc = Arc::new(qp.truncate(q_depth));
            let q_model = TruncatedModel::full_model(q_trunc, common.cap)?;
            let rels = parse_relations(&read(&relations)?, &q_model)?;
            let color_list: Vec<u32> = read(&colors)?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad color `{t}`"))))
                .collect::<Result<_, _>>()?;
            let input = TwoLevelInput { q_model, relations: rels, coloring: color_list };
            let j_bound: usize = 1 + input
                .relations
                .iter()
                .map(|rel| {
                    input
                        .q_model
                        .classes_of(&[rel.inv_node])
                        .len()
                        .pow(rel.arity as u32)
                })
                .sum::<usize>();
            let (rp, _) = load_poset(&r_poset)?;
            let (r_model, r_fam) =
                build_family(&rp, j_bound, 1, common.depth.max(j_bound + 4))?;
            let out = encode_twolevel(&input, &r_model, &r_fam, common.seed)?;
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), Some(common.cap));
            r.field("codebook-classes", out.codebook.labels.len());
            r.field("output-size", out.colored.model.len());
            if let Some(path) = output {
                std::fs::write(&path, io::write_twolevel(&out))
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                r.field("written", path.display());
            }
            r.print();
            Ok(true)
        }
        Command::Recover { input, q_poset, q_depth } => {
            let dump = io::parse_twolevel(&read(&input)?)?;
            let (qp, text) = load_poset(&q_poset)?;
            let q_trunc = qp.truncate(q_depth);
            if q_trunc.len() != dump.q_len {
                return Err(Error::Contract(format!(
                    "q poset at depth {q_depth} has {} nodes, dump says {}",
                    q_trunc.len(),
                    dump.q_len
                )));
            }
            let recovered = recover_from_dump(&dump, &q_trunc)?;
            let mut r = Report::new(format);
            r.provenance(&text, None, None);
            r.field("relations", dump.codebook.arities.len());
            for (i, ext) in recovered.iter().enumerate() {
                r.field(&format!("relation-{i}-tuples"), ext.len());
            }
            r.print();
            for (i, ext) in recovered.iter().enumerate() {
                for t in ext {
                    println!(
                        "S{i} {}",
                        t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
                    );
                }
            }
            Ok(true)
        }
        Command::SbIso { poset, left, right, fwd, bwd, common } => {
            let (pres, text) = load_poset(&poset)?;
            let t = Arc::new(pres.truncate(common.depth));
            let ld = io::parse_model_dump(&read(&left)?)?;
            let rd = io::parse_model_dump(&read(&right)?)?;
            let m = io::colored_model_from_dump(&ld, t.clone())?;
            let n = io::colored_model_from_dump(&rd, t.clone())?;
            let f = parse_pairs(&read(&fwd)?, m.model.len())?;
            let g = parse_pairs(&read(&bwd)?, n.model.len())?;
            let chain = omega_chain_gen(&pres)?;
            let chain_idxs: Vec<usize> = (0..)
                .map(|k| chain.node(k))
                .take_while(|a| t.contains(a))
                .map(|a| t.index_of(&a).unwrap())
                .collect();
            let fv = check_one_embedding(&m, &n, &f);
            let gv = check_one_embedding(&n, &m, &g);
            let mut r = Report::new(format);
            r.provenance(&text, Some(common.seed), Some(common.cap));
            r.field("fwd-one-embedding", fv.holds());
            r.field("bwd-one-embedding", gv.holds());
            if !fv.holds() || !gv.holds() {
                r.print();
                return Ok(false);
            }
            let mut ctx = SbContext::new(m, n, chain_idxs)?;
            ctx.register(&f, &g)?;
            let h = sb_isomorphism(&mut ctx)?;
            let verified = is_isomorphism(
                &ctx.m.model,
                &ctx.n.model,
                &h,
                Some((&ctx.m.colors, &ctx.n.colors)),
            );
            r.field("isomorphism-verified", verified);
            r.print();
            for (i, &j) in h.iter().enumerate() {
                println!("{i} {j}");
            }
            Ok(verified)
        }
        Command::ReductClassify { model, set } => {
            let m = io::parse_refmodel(&read(&model)?)?;
            let d = io::parse_defset(&read(&set)?)?;
            let f = classify_reduct(&m, &d)?;
            let mut r = Report::new(format);
            r.field("model-size", m.len());
            r.field("arity", d.arity);
            r.field("tuples", d.tuples.len());
            let fstr: Vec<String> = f.iter().map(|l| l.to_string()).collect();
            r.field("levels", fstr.join(" "));
            let ok = verify_equivalence(&m, &d, &f)?;
            r.field("equivalence-verified", ok);
            for &j in &f {
                if matches!(j, Level::Omega) {
                    continue;
                }
                let mut smaller: BTreeSet<Level> = f.clone();
                smaller.remove(&j);
                let still = verify_equivalence(&m, &d, &smaller)?;
                r.field(
                    &format!("without-{j}"),
                    if still { "still-equivalent" } else { "breaks" },
                );
            }
            r.print();
            Ok(ok)
        }
        Command::Selftest { seed } => {
            let reports = acceptance::run_all(seed);
            let mut all = true;
            for rep in &reports {
                println!(
                    "[{}] {} — {}",
                    if rep.passed { "PASS" } else { "FAIL" },
                    rep.name,
                    rep.details
                );
                all &= rep.passed;
            }
            Ok(all)
        }
    }
}

/// Relations file: `relation <name> | arity <n> | node <idx>` headers with
/// tuple lines below each.
fn parse_relations(text: &str, q_model: &TruncatedModel) -> Result<Vec<TameRelation>, Error> {
    let mut out: Vec<TameRelation> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("relation ") {
            let fields: Vec<&str> = rest.split('|').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse("relation header needs name | arity | node".into()));
            }
            let arity: usize = fields[1]
                .strip_prefix("arity ")
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("bad arity".into()))?;
            let node: usize = fields[2]
                .strip_prefix("node ")
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("bad node".into()))?;
            if node >= q_model.poset.len() {
                return Err(Error::UnknownAddress(format!("node index {node}")));
            }
            out.push(TameRelation {
                name: fields[0].to_string(),
                arity,
                inv_node: node,
                tuples: BTreeSet::new(),
            });
        } else {
            let rel = out
                .last_mut()
                .ok_or_else(|| Error::Parse("tuple before any relation header".into()))?;
            let t: Vec<usize> = line
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| Error::Parse("bad tuple entry".into())))
                .collect::<Result<_, _>>()?;
            if t.len() != rel.arity {
                return Err(Error::Parse("tuple arity mismatch".into()));
            }
            if t.iter().any(|&x| x >= q_model.len()) {
                return Err(Error::Parse("tuple element out of range".into()));
            }
            rel.tuples.insert(t);
        }
    }
    Ok(out)
}

fn parse_pairs(text: &str, len: usize) -> Result<Vec<usize>, Error> {
    let mut map = vec![usize::MAX; len];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let xs: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse("bad index".into())))
            .collect::<Result<_, _>>()?;
        if xs.len() != 2 || xs[0] >= len {
            return Err(Error::Parse("embedding lines are `i j`".into()));
        }
        map[xs[0]] = xs[1];
    }
    if map.iter().any(|&j| j == usize::MAX) {
        return Err(Error::Parse("embedding not total".into()));
    }
    Ok(map)
}

/// Rebuild enough structure from a parsed encoder dump to run recovery:
/// the `Q` block gets its true truncation order (recovery reads downsets
/// of the invariance nodes there); the `R` block's internal order is
/// never consulted, so it is laid out as an antichain.
fn recover_from_dump(
    dump: &io::TwoLevelDump,
    q_trunc: &FinitePoset,
) -> Result<Vec<BTreeSet<Vec<usize>>>, Error> {
    let n = dump.q_len + dump.r_len;
    let mut nodes = Vec::with_capacity(n);
    for a in q_trunc.nodes() {
        nodes.push(NodeAddress::summand(0, a.clone()));
    }
    for i in 0..dump.r_len {
        nodes.push(NodeAddress::summand(1, NodeAddress::Finite(i as u32)));
    }
    let mut leq = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            leq[i * n + j] = if i < dump.q_len && j < dump.q_len {
                q_trunc.leq_idx(i, j)
            } else {
                i == j
            };
        }
    }
    let max_coord = |i: usize| {
        dump.rows
            .iter()
            .map(|(c, _, _)| c[i])
            .max()
            .unwrap_or(0)
            .max(1)
            + 1
    };
    let delta: Vec<u32> = (0..n).map(max_coord).map(|d| d.max(2)).collect();
    let poset = Arc::new(FinitePoset::from_parts(nodes, leq, delta)?);
    let elements: Vec<Element> = dump
        .rows
        .iter()
        .map(|(c, _, _)| Element::new(c.clone()))
        .collect();
    let model = TruncatedModel::from_raw_parts(poset, elements.clone());
    let mut colors = vec![0u32; model.len()];
    let mut split = vec![(0usize, 0usize); model.len()];
    for ((_, color, sp), e) in dump.rows.iter().zip(&elements) {
        let i = model
            .elements
            .iter()
            .position(|x| x == e)
            .expect("element present");
        colors[i] = *color;
        split[i] = *sp;
    }
    let cm = ColoredModel::new(model, colors)?;
    recover_relations(&cm, &dump.codebook, &split)
}

fn main() -> ExitCode {
    // die quietly when downstream pipes close early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
