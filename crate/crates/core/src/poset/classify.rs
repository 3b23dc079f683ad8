use super::{FiberSpec, FinitePoset, NodeAddress, Presentation, SummandRule};
use crate::{Error, Result};

/// Symbolic generator for an infinite node set, checkable at any depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetGen {
    /// Every node.
    All,
    /// A single explicit node.
    Singleton(NodeAddress),
    /// Antichain nodes with index ≡ parity (mod 2).
    AntichainMod2(u8),
    /// All nodes of summand `i`.
    SummandSet(u32),
    /// All nodes of summands with index ≡ parity (mod 2).
    SummandsMod2(u8),
    /// Nodes of summand `i` matching the inner generator.
    InSummand(u32, Box<SetGen>),
    /// `{(a, b0) : a ∈ inner}` for a fixed right-factor node.
    ProductLeft(Box<SetGen>, NodeAddress),
    /// `{(a0, b) : b ∈ inner}` for a fixed left-factor node.
    ProductRight(NodeAddress, Box<SetGen>),
    /// Chain nodes `gen(n)` for `n ≥ from`.
    ChainTail(ChainGen, u32),
    /// In a chain-with-fibers: antichain-fiber nodes above spine node
    /// `spine` with fiber index ≡ parity (mod 2).
    FiberMod2(u32, u8),
    /// Union of generators.
    Union(Vec<SetGen>),
}

impl SetGen {
    pub fn contains(&self, addr: &NodeAddress) -> bool {
        match self {
            SetGen::All => true,
            SetGen::Singleton(a) => a == addr,
            SetGen::AntichainMod2(r) => {
                matches!(addr, NodeAddress::Antichain(i) if (i % 2) as u8 == *r)
            }
            SetGen::SummandSet(i) => matches!(addr, NodeAddress::Summand(j, _) if j == i),
            SetGen::SummandsMod2(r) => {
                matches!(addr, NodeAddress::Summand(j, _) if (j % 2) as u8 == *r)
            }
            SetGen::InSummand(i, inner) => {
                matches!(addr, NodeAddress::Summand(j, x) if j == i && inner.contains(x))
            }
            SetGen::ProductLeft(inner, b0) => {
                matches!(addr, NodeAddress::Pair(l, r) if inner.contains(l) && **r == *b0)
            }
            SetGen::ProductRight(a0, inner) => {
                matches!(addr, NodeAddress::Pair(l, r) if **l == *a0 && inner.contains(r))
            }
            SetGen::ChainTail(gen, from) => gen.position_of(addr).map(|n| n >= *from).unwrap_or(false),
            SetGen::FiberMod2(spine, r) => matches!(
                addr,
                NodeAddress::Fiber(i, inner)
                    if i == spine
                        && matches!(**inner, NodeAddress::Antichain(j) if (j % 2) as u8 == *r)
            ),
            SetGen::Union(gens) => gens.iter().any(|g| g.contains(addr)),
        }
    }

    /// Indices of member nodes within a truncation.
    pub fn materialize(&self, poset: &FinitePoset) -> Vec<usize> {
        (0..poset.len())
            .filter(|&i| self.contains(&poset.nodes()[i]))
            .collect()
    }

    /// Complement within a truncation.
    pub fn materialize_complement(&self, poset: &FinitePoset) -> Vec<usize> {
        (0..poset.len())
            .filter(|&i| !self.contains(&poset.nodes()[i]))
            .collect()
    }
}

/// Deterministic generator of an ω-chain: `n ↦ node(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainGen {
    /// The chain of an omega-chain presentation.
    ChainNodes,
    /// The spine of a chain-with-fibers.
    SpineNodes,
    /// A chain inside summand `i`.
    InSummand(u32, Box<ChainGen>),
    /// `n ↦ (gen(n), b0)` inside a product.
    ProductLeft(Box<ChainGen>, NodeAddress),
    /// `n ↦ (a0, gen(n))` inside a product.
    ProductRight(NodeAddress, Box<ChainGen>),
}

impl ChainGen {
    pub fn node(&self, n: u32) -> NodeAddress {
        match self {
            ChainGen::ChainNodes => NodeAddress::Chain(n),
            ChainGen::SpineNodes => NodeAddress::Spine(n),
            ChainGen::InSummand(i, inner) => NodeAddress::summand(*i, inner.node(n)),
            ChainGen::ProductLeft(inner, b0) => NodeAddress::pair(inner.node(n), b0.clone()),
            ChainGen::ProductRight(a0, inner) => NodeAddress::pair(a0.clone(), inner.node(n)),
        }
    }

    /// Inverse of `node`: which position, if any, does `addr` occupy?
    pub fn position_of(&self, addr: &NodeAddress) -> Option<u32> {
        match (self, addr) {
            (ChainGen::ChainNodes, NodeAddress::Chain(n)) => Some(*n),
            (ChainGen::SpineNodes, NodeAddress::Spine(n)) => Some(*n),
            (ChainGen::InSummand(i, inner), NodeAddress::Summand(j, x)) if i == j => {
                inner.position_of(x)
            }
            (ChainGen::ProductLeft(inner, b0), NodeAddress::Pair(l, r)) if **r == *b0 => {
                inner.position_of(l)
            }
            (ChainGen::ProductRight(a0, inner), NodeAddress::Pair(l, r)) if **l == *a0 => {
                inner.position_of(r)
            }
            _ => None,
        }
    }
}

/// Taxonomy verdict for a triple `(P, ≤, δ)` with structural witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// Bounded height and bounded δ, with the bounds.
    Bounded { height_bound: u32, delta_bound: u32 },
    /// Unbounded, but every downward-closed split has a bounded side.
    MinimallyUnbounded { chain: ChainGen },
    /// Unbounded with a downward-closed `Q` such that both `Q` and `P∖Q`
    /// are unbounded; an orthogonal unbounded pair is attached when one
    /// exists structurally.
    UnboundedNotMinimal {
        split: SetGen,
        orthogonal: Option<(SetGen, SetGen)>,
    },
}

impl Classification {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Classification::Bounded { .. })
    }

    pub fn is_unbounded(&self) -> bool {
        !self.is_bounded()
    }

    pub fn verdict_name(&self) -> &'static str {
        match self {
            Classification::Bounded { .. } => "Bounded",
            Classification::MinimallyUnbounded { .. } => "MinimallyUnbounded",
            Classification::UnboundedNotMinimal { .. } => "UnboundedNotMinimal",
        }
    }
}

/// `Some(bound)` when the poset's height is bounded.
pub(crate) fn height_bound(p: &Presentation) -> Option<u32> {
    match p {
        Presentation::FiniteExplicit(f) => {
            Some(finite_spec_height(f))
        }
        Presentation::OmegaChain { .. } => None,
        Presentation::OmegaAntichain { .. } => Some(1),
        Presentation::Product(a, b) => Some(height_bound(a)? + height_bound(b)? - 1),
        Presentation::DisjointSum(parts) => {
            parts.iter().map(height_bound).collect::<Option<Vec<_>>>().map(|v| {
                v.into_iter().max().unwrap_or(0)
            })
        }
        Presentation::OmegaSum { summand, .. } => match summand {
            SummandRule::Constant(f) => Some(finite_spec_height(f)),
            SummandRule::GrowingChains => None,
        },
        Presentation::ChainWithFibers { .. } => None,
    }
}

fn finite_spec_height(f: &super::FiniteSpec) -> u32 {
    let n = f.len();
    if n == 0 {
        return 0;
    }
    let leq = f.leq_matrix();
    let mut ht = vec![1u32; n];
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[j * n + i] && ht[j] + 1 > ht[i] {
                    ht[i] = ht[j] + 1;
                    changed = true;
                }
            }
        }
    }
    ht.into_iter().max().unwrap()
}

/// `Some(bound)` when δ is bounded over the whole poset.
pub(crate) fn delta_bound(p: &Presentation) -> Option<u32> {
    match p {
        Presentation::FiniteExplicit(f) => f.delta.iter().copied().max(),
        Presentation::OmegaChain { delta } | Presentation::OmegaAntichain { delta } => {
            delta.bound()
        }
        Presentation::Product(a, b) => Some(delta_bound(a)?.max(delta_bound(b)?)),
        Presentation::DisjointSum(parts) => parts
            .iter()
            .map(delta_bound)
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().max().unwrap_or(2)),
        Presentation::OmegaSum { summand, delta } => match delta {
            Some(rule) => rule.bound(),
            None => match summand {
                SummandRule::Constant(f) => f.delta.iter().copied().max(),
                SummandRule::GrowingChains => unreachable!(),
            },
        },
        Presentation::ChainWithFibers { fiber, delta } => {
            let spine = delta.bound()?;
            let fib = match fiber {
                FiberSpec::Finite(f) => f.delta.iter().copied().max().unwrap_or(2),
                FiberSpec::OmegaAntichain { delta } => delta.bound()?,
            };
            Some(spine.max(fib))
        }
    }
}

/// δ bound over the fibers only (chain-with-fibers).
fn fiber_delta_bound(fiber: &FiberSpec) -> Option<u32> {
    match fiber {
        FiberSpec::Finite(f) => f.delta.iter().copied().max(),
        FiberSpec::OmegaAntichain { delta } => delta.bound(),
    }
}

/// Is the whole poset a chain (every two nodes comparable)?
pub(crate) fn is_chain(p: &Presentation) -> bool {
    match p {
        Presentation::FiniteExplicit(f) => {
            let n = f.len();
            let leq = f.leq_matrix();
            (0..n).all(|i| (0..n).all(|j| leq[i * n + j] || leq[j * n + i]))
        }
        Presentation::OmegaChain { .. } => true,
        Presentation::OmegaAntichain { .. } => false,
        Presentation::Product(a, b) => {
            (a.node_count() == Some(1) && is_chain(b))
                || (b.node_count() == Some(1) && is_chain(a))
        }
        Presentation::DisjointSum(parts) => {
            let nonempty: Vec<_> = parts
                .iter()
                .filter(|p| p.node_count().map(|n| n > 0).unwrap_or(true))
                .collect();
            nonempty.len() == 1 && is_chain(nonempty[0])
        }
        Presentation::OmegaSum { .. } => false,
        Presentation::ChainWithFibers { .. } => false,
    }
}

/// Structural ω-chain, when one exists.
pub(crate) fn chain_gen(p: &Presentation) -> Option<ChainGen> {
    match p {
        Presentation::FiniteExplicit(_) | Presentation::OmegaAntichain { .. } => None,
        Presentation::OmegaChain { .. } => Some(ChainGen::ChainNodes),
        Presentation::ChainWithFibers { .. } => Some(ChainGen::SpineNodes),
        Presentation::DisjointSum(parts) => parts.iter().enumerate().find_map(|(i, q)| {
            chain_gen(q).map(|g| ChainGen::InSummand(i as u32, Box::new(g)))
        }),
        Presentation::OmegaSum { .. } => None,
        Presentation::Product(a, b) => {
            if let Some(g) = chain_gen(a) {
                let b0 = b.nth_node(0)?;
                Some(ChainGen::ProductLeft(Box::new(g), b0))
            } else if let Some(g) = chain_gen(b) {
                let a0 = a.nth_node(0)?;
                Some(ChainGen::ProductRight(a0, Box::new(g)))
            } else {
                None
            }
        }
    }
}

/// First node incomparable to the first enumerated node, scanning a finite
/// prefix of the enumeration.
fn incomparable_mate(p: &Presentation, scan: u64) -> Option<(NodeAddress, NodeAddress)> {
    let first = p.nth_node(0)?;
    for k in 1..scan {
        if let Some(cand) = p.nth_node(k) {
            if !p.leq_unchecked(&first, &cand) && !p.leq_unchecked(&cand, &first) {
                return Some((first, cand));
            }
        } else {
            break;
        }
    }
    None
}

/// Classify a presentation per the structural taxonomy rules.
///
/// The verdict depends only on the AST, so it is stable under truncation
/// depth by construction.
pub fn classify(p: &Presentation) -> Classification {
    match p {
        Presentation::FiniteExplicit(f) => Classification::Bounded {
            height_bound: finite_spec_height(f),
            delta_bound: f.delta.iter().copied().max().unwrap_or(2),
        },
        Presentation::OmegaChain { .. } => {
            Classification::MinimallyUnbounded { chain: ChainGen::ChainNodes }
        }
        Presentation::OmegaAntichain { delta } => match delta.bound() {
            Some(b) => Classification::Bounded { height_bound: 1, delta_bound: b },
            // δ is affine increasing: both parity halves carry unbounded δ
            None => Classification::UnboundedNotMinimal {
                split: SetGen::AntichainMod2(0),
                orthogonal: Some((SetGen::AntichainMod2(0), SetGen::AntichainMod2(1))),
            },
        },
        Presentation::DisjointSum(parts) => {
            let verdicts: Vec<Classification> = parts.iter().map(classify).collect();
            let unbounded: Vec<usize> = verdicts
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_unbounded())
                .map(|(i, _)| i)
                .collect();
            match unbounded.len() {
                0 => {
                    let (mut hb, mut db) = (0, 2);
                    for v in &verdicts {
                        if let Classification::Bounded { height_bound, delta_bound } = v {
                            hb = hb.max(*height_bound);
                            db = db.max(*delta_bound);
                        }
                    }
                    Classification::Bounded { height_bound: hb, delta_bound: db }
                }
                1 => {
                    let i = unbounded[0];
                    match verdicts[i].clone() {
                        Classification::MinimallyUnbounded { chain } => {
                            Classification::MinimallyUnbounded {
                                chain: ChainGen::InSummand(i as u32, Box::new(chain)),
                            }
                        }
                        Classification::UnboundedNotMinimal { split, orthogonal } => {
                            Classification::UnboundedNotMinimal {
                                split: SetGen::InSummand(i as u32, Box::new(split)),
                                orthogonal: orthogonal.map(|(a, b)| {
                                    (
                                        SetGen::InSummand(i as u32, Box::new(a)),
                                        SetGen::InSummand(i as u32, Box::new(b)),
                                    )
                                }),
                            }
                        }
                        Classification::Bounded { .. } => unreachable!(),
                    }
                }
                _ => {
                    let (i, j) = (unbounded[0] as u32, unbounded[1] as u32);
                    Classification::UnboundedNotMinimal {
                        split: SetGen::SummandSet(i),
                        orthogonal: Some((SetGen::SummandSet(i), SetGen::SummandSet(j))),
                    }
                }
            }
        }
        Presentation::OmegaSum { .. } => {
            let hb = height_bound(p);
            let db = delta_bound(p);
            match (hb, db) {
                (Some(h), Some(d)) => Classification::Bounded { height_bound: h, delta_bound: d },
                // heights or δ grow across summands while each summand stays
                // bounded: the even/odd summand split has two unbounded sides
                _ => Classification::UnboundedNotMinimal {
                    split: SetGen::SummandsMod2(0),
                    orthogonal: Some((SetGen::SummandsMod2(0), SetGen::SummandsMod2(1))),
                },
            }
        }
        Presentation::Product(a, b) => {
            if a.node_count() == Some(1) {
                let a0 = a.nth_node(0).unwrap();
                return lift_into_product_right(classify(b), a0);
            }
            if b.node_count() == Some(1) {
                let b0 = b.nth_node(0).unwrap();
                return lift_into_product_left(classify(a), b0);
            }
            let ca = classify(a);
            let cb = classify(b);
            match (&ca, &cb) {
                (
                    Classification::Bounded { height_bound: ha, delta_bound: da },
                    Classification::Bounded { height_bound: hb, delta_bound: db },
                ) => Classification::Bounded {
                    height_bound: ha + hb - 1,
                    delta_bound: *da.max(db),
                },
                _ => {
                    // some factor unbounded and the other has ≥ 2 nodes:
                    // Q = A × {b0} for a minimal b0 splits with both sides
                    // unbounded
                    if ca.is_unbounded() {
                        let b0 = b.nth_node(0).unwrap();
                        let orth = incomparable_mate(b, 64).map(|(x, y)| {
                            (
                                SetGen::ProductLeft(Box::new(SetGen::All), x),
                                SetGen::ProductLeft(Box::new(SetGen::All), y),
                            )
                        });
                        Classification::UnboundedNotMinimal {
                            split: SetGen::ProductLeft(Box::new(SetGen::All), b0),
                            orthogonal: orth,
                        }
                    } else {
                        let a0 = a.nth_node(0).unwrap();
                        let orth = incomparable_mate(a, 64).map(|(x, y)| {
                            (
                                SetGen::ProductRight(x, Box::new(SetGen::All)),
                                SetGen::ProductRight(y, Box::new(SetGen::All)),
                            )
                        });
                        Classification::UnboundedNotMinimal {
                            split: SetGen::ProductRight(a0, Box::new(SetGen::All)),
                            orthogonal: orth,
                        }
                    }
                }
            }
        }
        Presentation::ChainWithFibers { fiber, .. } => match fiber_delta_bound(fiber) {
            // bounded fiber heights and fiber δ: any downward-closed set
            // missing cofinally many spine nodes is bounded, and the
            // complement of a spine-containing set avoids the spine
            Some(_) => Classification::MinimallyUnbounded { chain: ChainGen::SpineNodes },
            // unbounded δ inside a single (antichain) fiber
            None => Classification::UnboundedNotMinimal {
                split: SetGen::Union(vec![
                    SetGen::Singleton(NodeAddress::Spine(0)),
                    SetGen::FiberMod2(0, 0),
                ]),
                orthogonal: Some((SetGen::FiberMod2(0, 0), SetGen::FiberMod2(0, 1))),
            },
        },
    }
}

fn lift_into_product_left(c: Classification, b0: NodeAddress) -> Classification {
    match c {
        Classification::Bounded { .. } => c,
        Classification::MinimallyUnbounded { chain } => Classification::MinimallyUnbounded {
            chain: ChainGen::ProductLeft(Box::new(chain), b0),
        },
        Classification::UnboundedNotMinimal { split, orthogonal } => {
            Classification::UnboundedNotMinimal {
                split: SetGen::ProductLeft(Box::new(split), b0.clone()),
                orthogonal: orthogonal.map(|(x, y)| {
                    (
                        SetGen::ProductLeft(Box::new(x), b0.clone()),
                        SetGen::ProductLeft(Box::new(y), b0),
                    )
                }),
            }
        }
    }
}

fn lift_into_product_right(c: Classification, a0: NodeAddress) -> Classification {
    match c {
        Classification::Bounded { .. } => c,
        Classification::MinimallyUnbounded { chain } => Classification::MinimallyUnbounded {
            chain: ChainGen::ProductRight(a0, Box::new(chain)),
        },
        Classification::UnboundedNotMinimal { split, orthogonal } => {
            Classification::UnboundedNotMinimal {
                split: SetGen::ProductRight(a0.clone(), Box::new(split)),
                orthogonal: orthogonal.map(|(x, y)| {
                    (
                        SetGen::ProductRight(a0.clone(), Box::new(x)),
                        SetGen::ProductRight(a0, Box::new(y)),
                    )
                }),
            }
        }
    }
}

/// Narrowness: whenever `Q ⊥ R`, at least one of `Q, R` has bounded height.
/// Returns a pair of unbounded-height orthogonal generators when false.
pub fn is_narrow(p: &Presentation) -> (bool, Option<(SetGen, SetGen)>) {
    match p {
        Presentation::FiniteExplicit(_)
        | Presentation::OmegaChain { .. }
        | Presentation::OmegaAntichain { .. }
        | Presentation::ChainWithFibers { .. } => (true, None),
        Presentation::DisjointSum(parts) => {
            let tall: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|(_, q)| height_bound(q).is_none())
                .map(|(i, _)| i)
                .collect();
            match tall.len() {
                0 => (true, None),
                1 => {
                    let i = tall[0];
                    let (n, w) = is_narrow(&parts[i]);
                    (
                        n,
                        w.map(|(x, y)| {
                            (
                                SetGen::InSummand(i as u32, Box::new(x)),
                                SetGen::InSummand(i as u32, Box::new(y)),
                            )
                        }),
                    )
                }
                _ => (
                    false,
                    Some((
                        SetGen::SummandSet(tall[0] as u32),
                        SetGen::SummandSet(tall[1] as u32),
                    )),
                ),
            }
        }
        Presentation::OmegaSum { summand, .. } => match summand {
            SummandRule::Constant(_) => (true, None),
            SummandRule::GrowingChains => (
                false,
                Some((SetGen::SummandsMod2(0), SetGen::SummandsMod2(1))),
            ),
        },
        Presentation::Product(a, b) => {
            let ha = height_bound(a);
            let hb = height_bound(b);
            match (ha, hb) {
                (Some(_), Some(_)) => (true, None),
                (None, None) => {
                    // tails of a chain in each factor, pinned at the other
                    // factor's bottom, are orthogonal with unbounded height
                    let (ga, gb) = (chain_gen(a), chain_gen(b));
                    match (ga, gb) {
                        (Some(ga), Some(gb)) => {
                            let a0 = ga.node(0);
                            let b0 = gb.node(0);
                            (
                                false,
                                Some((
                                    SetGen::ProductLeft(
                                        Box::new(SetGen::ChainTail(ga, 1)),
                                        b0,
                                    ),
                                    SetGen::ProductRight(
                                        a0,
                                        Box::new(SetGen::ChainTail(gb, 1)),
                                    ),
                                )),
                            )
                        }
                        // a factor of unbounded height without an ω-chain is
                        // itself not narrow; lift its witness
                        _ => lift_product_witness(p, a, b),
                    }
                }
                (None, Some(_)) => {
                    let (n, w) = is_narrow(a);
                    if !n {
                        let b0 = b.nth_node(0).unwrap();
                        return (
                            false,
                            w.map(|(x, y)| {
                                (
                                    SetGen::ProductLeft(Box::new(x), b0.clone()),
                                    SetGen::ProductLeft(Box::new(y), b0),
                                )
                            }),
                        );
                    }
                    if is_chain(b) {
                        (true, None)
                    } else {
                        let ga = chain_gen(a).expect("narrow unbounded-height factor has a chain");
                        let (b0, b1) = incomparable_mate(b, 64)
                            .expect("non-chain factor has an incomparable pair");
                        (
                            false,
                            Some((
                                SetGen::ProductLeft(Box::new(SetGen::ChainTail(ga.clone(), 0)), b0),
                                SetGen::ProductLeft(Box::new(SetGen::ChainTail(ga, 0)), b1),
                            )),
                        )
                    }
                }
                (Some(_), None) => {
                    let (n, w) = is_narrow(b);
                    if !n {
                        let a0 = a.nth_node(0).unwrap();
                        return (
                            false,
                            w.map(|(x, y)| {
                                (
                                    SetGen::ProductRight(a0.clone(), Box::new(x)),
                                    SetGen::ProductRight(a0, Box::new(y)),
                                )
                            }),
                        );
                    }
                    if is_chain(a) {
                        (true, None)
                    } else {
                        let gb = chain_gen(b).expect("narrow unbounded-height factor has a chain");
                        let (a0, a1) = incomparable_mate(a, 64)
                            .expect("non-chain factor has an incomparable pair");
                        (
                            false,
                            Some((
                                SetGen::ProductRight(a0, Box::new(SetGen::ChainTail(gb.clone(), 0))),
                                SetGen::ProductRight(a1, Box::new(SetGen::ChainTail(gb, 0))),
                            )),
                        )
                    }
                }
            }
        }
    }
}

fn lift_product_witness(
    _p: &Presentation,
    a: &Presentation,
    b: &Presentation,
) -> (bool, Option<(SetGen, SetGen)>) {
    let (na, wa) = is_narrow(a);
    if !na {
        let b0 = b.nth_node(0).unwrap();
        return (
            false,
            wa.map(|(x, y)| {
                (
                    SetGen::ProductLeft(Box::new(x), b0.clone()),
                    SetGen::ProductLeft(Box::new(y), b0),
                )
            }),
        );
    }
    let (nb, wb) = is_narrow(b);
    if !nb {
        let a0 = a.nth_node(0).unwrap();
        return (
            false,
            wb.map(|(x, y)| {
                (
                    SetGen::ProductRight(a0.clone(), Box::new(x)),
                    SetGen::ProductRight(a0, Box::new(y)),
                )
            }),
        );
    }
    // both factors narrow with unbounded height but no structural chain
    // cannot arise in this algebra
    (true, None)
}

/// First `k` nodes of the structural ω-chain.  Deterministic: repeated
/// calls extend the same chain.
pub fn omega_chain(p: &Presentation, k: usize) -> Result<Vec<NodeAddress>> {
    match chain_gen(p) {
        Some(gen) => Ok((0..k as u32).map(|n| gen.node(n)).collect()),
        None => Err(Error::NoChain(
            "presentation has no structural omega-chain".into(),
        )),
    }
}

/// The structural ω-chain generator, when one exists.
pub fn omega_chain_gen(p: &Presentation) -> Result<ChainGen> {
    chain_gen(p).ok_or_else(|| Error::NoChain("presentation has no structural omega-chain".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{DeltaRule, FiniteSpec};
    use std::sync::Arc;

    fn chain2() -> Presentation {
        Presentation::omega_chain(DeltaRule::Const(2))
    }

    #[test]
    fn classification_table() {
        // the six worked verdicts
        let omega_chain_c2 = classify(&chain2());
        assert!(matches!(omega_chain_c2, Classification::MinimallyUnbounded { .. }));

        let product = classify(&Presentation::product(
            chain2(),
            Presentation::FiniteExplicit(FiniteSpec::antichain(2, 2)),
        ));
        assert!(matches!(product, Classification::UnboundedNotMinimal { .. }));

        let omega_sum = classify(&Presentation::OmegaSum {
            summand: SummandRule::GrowingChains,
            delta: Some(DeltaRule::Const(2)),
        });
        assert!(matches!(omega_sum, Classification::UnboundedNotMinimal { .. }));

        let cwf = classify(&Presentation::ChainWithFibers {
            fiber: FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
            delta: DeltaRule::Const(3),
        });
        assert!(matches!(cwf, Classification::MinimallyUnbounded { .. }));

        let antichain_bounded = classify(&Presentation::omega_antichain(DeltaRule::Const(2)));
        assert_eq!(
            antichain_bounded,
            Classification::Bounded { height_bound: 1, delta_bound: 2 }
        );

        let antichain_unbounded =
            classify(&Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }));
        assert!(matches!(
            antichain_unbounded,
            Classification::UnboundedNotMinimal { .. }
        ));
    }

    #[test]
    fn split_witness_validates_at_depth() {
        // for UnboundedNotMinimal verdicts, the split is downward closed at
        // any truncation depth and both sides keep growing in height or δ
        let pres = Arc::new(Presentation::OmegaSum {
            summand: SummandRule::GrowingChains,
            delta: Some(DeltaRule::Const(2)),
        });
        let Classification::UnboundedNotMinimal { split, orthogonal } = classify(&pres) else {
            panic!("expected UnboundedNotMinimal");
        };
        for depth in [6, 14, 30] {
            let t = pres.truncate(depth);
            let q = split.materialize(&t);
            assert!(t.is_downward_closed(&q), "split must be downward closed");
            let (a, b) = orthogonal.as_ref().unwrap();
            let (qa, qb) = (a.materialize(&t), b.materialize(&t));
            assert!(t.is_orthogonal(&qa, &qb));
        }
        // heights grow with depth on both sides
        let t1 = pres.truncate(12);
        let t2 = pres.truncate(40);
        let (a, b) = classify(&pres)
            .clone()
            .into_orthogonal()
            .expect("orthogonal witness");
        for side in [a, b] {
            let h1 = side
                .materialize(&t1)
                .into_iter()
                .map(|i| t1.height_of_idx(i))
                .max()
                .unwrap_or(0);
            let h2 = side
                .materialize(&t2)
                .into_iter()
                .map(|i| t2.height_of_idx(i))
                .max()
                .unwrap_or(0);
            assert!(h2 > h1, "witness side height must grow with depth");
        }
    }

    #[test]
    fn narrowness() {
        assert!(is_narrow(&chain2()).0);
        let (narrow, witness) = is_narrow(&Presentation::DisjointSum(vec![chain2(), chain2()]));
        assert!(!narrow);
        let (x, y) = witness.unwrap();
        assert_eq!(x, SetGen::SummandSet(0));
        assert_eq!(y, SetGen::SummandSet(1));

        let cwf = Presentation::ChainWithFibers {
            fiber: FiberSpec::Finite(FiniteSpec::antichain(2, 2)),
            delta: DeltaRule::Const(2),
        };
        assert!(is_narrow(&cwf).0);
    }

    #[test]
    fn narrow_chain_with_fibers_exhaustive_at_depth() {
        // exhaustive certificate at small scale: any two orthogonal subsets
        // of a chain-with-fibers truncation cannot both contain long chains
        let pres = Arc::new(Presentation::ChainWithFibers {
            fiber: FiberSpec::Finite(FiniteSpec::antichain(1, 2)),
            delta: DeltaRule::Const(2),
        });
        let t = pres.truncate(20);
        // every unbounded-height subset must meet the spine; two spine nodes
        // are always comparable, so orthogonal pairs have a side of fiber
        // nodes only, which form an antichain of height 1
        let spine: Vec<usize> = (0..t.len())
            .filter(|&i| matches!(t.nodes()[i], NodeAddress::Spine(_)))
            .collect();
        let fibers: Vec<usize> = (0..t.len())
            .filter(|&i| matches!(t.nodes()[i], NodeAddress::Fiber(_, _)))
            .collect();
        assert!(t.restrict(&fibers).height() <= 2);
        assert!(t.restrict(&spine).height() >= 9);
    }

    #[test]
    fn omega_chain_examples() {
        let p = chain2();
        assert_eq!(
            omega_chain(&p, 3).unwrap(),
            vec![NodeAddress::Chain(0), NodeAddress::Chain(1), NodeAddress::Chain(2)]
        );
        let cwf = Presentation::ChainWithFibers {
            fiber: FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
            delta: DeltaRule::Const(3),
        };
        assert_eq!(
            omega_chain(&cwf, 2).unwrap(),
            vec![NodeAddress::Spine(0), NodeAddress::Spine(1)]
        );
        assert!(omega_chain(&Presentation::omega_antichain(DeltaRule::Const(2)), 2).is_err());
        // successive calls extend the same chain
        assert_eq!(omega_chain(&p, 5).unwrap()[..3], omega_chain(&p, 3).unwrap()[..]);
    }

    #[test]
    fn product_orthogonality_example() {
        // Product(omega-chain, {x,y} antichain): spine×{x} vs spine×{y}
        let pres = Arc::new(Presentation::product(
            chain2(),
            Presentation::FiniteExplicit(FiniteSpec::antichain(2, 2)),
        ));
        let t = pres.truncate(12);
        let q: Vec<usize> = (0..t.len())
            .filter(|&i| matches!(&t.nodes()[i], NodeAddress::Pair(_, r) if **r == NodeAddress::Finite(0)))
            .collect();
        let r: Vec<usize> = (0..t.len())
            .filter(|&i| matches!(&t.nodes()[i], NodeAddress::Pair(_, r) if **r == NodeAddress::Finite(1)))
            .collect();
        assert!(t.is_orthogonal(&q, &r));
    }

    #[test]
    fn level_sets_on_chain_with_fibers() {
        // Q_1 = {q : q not > p_1}: the spine prefix plus the fiber above
        // p_0 only — fibers above later spine nodes dominate p_1
        let pres = Arc::new(Presentation::ChainWithFibers {
            fiber: FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
            delta: DeltaRule::Const(3),
        });
        let t = pres.truncate(8);
        let p1 = t.index_of(&NodeAddress::Spine(1)).unwrap();
        let q1 = t.level_set(p1);
        for &i in &q1 {
            match &t.nodes()[i] {
                NodeAddress::Spine(k) => assert!(*k <= 1),
                NodeAddress::Fiber(k, _) => assert!(*k == 0, "fiber above p_{k} is above p_1"),
                other => panic!("unexpected node {other}"),
            }
        }
        assert!(t.is_downward_closed(&q1));
        // the level sets are nested and eventually cover the truncation
        let p0 = t.index_of(&NodeAddress::Spine(0)).unwrap();
        let q0 = t.level_set(p0);
        assert!(q0.iter().all(|i| q1.contains(i)));
        let top_spine = (0..t.len())
            .filter(|&i| matches!(t.nodes()[i], NodeAddress::Spine(_)))
            .max_by_key(|&i| t.height_of_idx(i))
            .unwrap();
        assert_eq!(t.level_set(top_spine).len(), t.len());
    }

    #[test]
    fn antichain_delta_bound_from_comparable_excess() {
        // when δ exceeds B only at pairwise-comparable nodes, every
        // antichain keeps δ ≤ B
        let pres = Arc::new(Presentation::ChainWithFibers {
            fiber: FiberSpec::Finite(FiniteSpec::antichain(2, 2)),
            delta: DeltaRule::Affine { a: 1, b: 2 }, // spine δ grows, fibers stay at 2
        });
        let t = pres.truncate(12);
        let bound = 2u32;
        let excess: Vec<usize> =
            (0..t.len()).filter(|&i| t.delta_idx(i) > bound).collect();
        // the high-δ nodes (spine) are pairwise comparable
        for (a, &i) in excess.iter().enumerate() {
            for &j in &excess[a + 1..] {
                assert!(t.comparable_idx(i, j));
            }
        }
        // so no antichain carries a δ above the bound twice
        for i in 0..t.len() {
            for j in 0..t.len() {
                if i != j && !t.comparable_idx(i, j) {
                    assert!(
                        t.delta_idx(i) <= bound || t.delta_idx(j) <= bound,
                        "antichain pair with two high deltas"
                    );
                }
            }
        }
    }

    #[test]
    fn classification_is_ast_stable() {
        // classify depends only on the AST; it never consults a truncation
        let presentations = vec![
            chain2(),
            Presentation::omega_antichain(DeltaRule::Affine { a: 2, b: 2 }),
            Presentation::product(chain2(), chain2()),
        ];
        for p in presentations {
            let v1 = classify(&p);
            let v2 = classify(&p);
            assert_eq!(v1, v2);
        }
    }
}

impl Classification {
    /// Convenience accessor for the orthogonal witness pair.
    pub fn into_orthogonal(self) -> Option<(SetGen, SetGen)> {
        match self {
            Classification::UnboundedNotMinimal { orthogonal, .. } => orthogonal,
            _ => None,
        }
    }
}
