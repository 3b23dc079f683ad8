use std::collections::BTreeSet;
use std::sync::Arc;

use super::{FinitePoset, NodeAddress};
use crate::{Error, Result};

/// Rule assigning a splitting value `δ(n) ≥ 2` to an index `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeltaRule {
    Const(u32),
    /// Explicit values for a finite prefix, `default` beyond it.
    Table { values: Vec<u32>, default: u32 },
    /// `n ↦ a·n + b`.
    Affine { a: u32, b: u32 },
}

impl DeltaRule {
    pub fn eval(&self, n: u32) -> u32 {
        match self {
            DeltaRule::Const(c) => *c,
            DeltaRule::Table { values, default } => {
                values.get(n as usize).copied().unwrap_or(*default)
            }
            DeltaRule::Affine { a, b } => a * n + b,
        }
    }

    /// `Some(bound)` when the rule is bounded over all of `ω`.
    pub fn bound(&self) -> Option<u32> {
        match self {
            DeltaRule::Const(c) => Some(*c),
            DeltaRule::Table { values, default } => {
                Some(values.iter().copied().max().unwrap_or(0).max(*default))
            }
            DeltaRule::Affine { a, b } => {
                if *a == 0 {
                    Some(*b)
                } else {
                    None
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            DeltaRule::Const(c) => *c >= 2,
            DeltaRule::Table { values, default } => {
                *default >= 2 && values.iter().all(|v| *v >= 2)
            }
            DeltaRule::Affine { b, .. } => *b >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Contract("delta rule takes a value below 2".into()))
        }
    }
}

/// An explicit finite poset: nodes by index, cover pairs, per-node δ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpec {
    pub names: Vec<String>,
    pub covers: Vec<(u32, u32)>,
    pub delta: Vec<u32>,
}

impl FiniteSpec {
    pub fn new(names: Vec<String>, covers: Vec<(u32, u32)>, delta: Vec<u32>) -> Self {
        FiniteSpec { names, covers, delta }
    }

    /// Antichain of `k` isolated nodes, all with the same δ.
    pub fn antichain(k: u32, delta: u32) -> Self {
        FiniteSpec {
            names: (0..k).map(|i| format!("x{i}")).collect(),
            covers: vec![],
            delta: vec![delta; k as usize],
        }
    }

    /// Chain `x0 < x1 < ... < x_{k-1}`, constant δ.
    pub fn chain(k: u32, delta: u32) -> Self {
        FiniteSpec {
            names: (0..k).map(|i| format!("x{i}")).collect(),
            covers: (1..k).map(|i| (i - 1, i)).collect(),
            delta: vec![delta; k as usize],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Reflexive-transitive closure of the cover relation, row-major.
    pub(crate) fn leq_matrix(&self) -> Vec<bool> {
        let n = self.len();
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for &(a, b) in &self.covers {
            leq[a as usize * n + b as usize] = true;
        }
        // Floyd-Warshall style closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        leq
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.delta.len() != n {
            return Err(Error::Contract(format!(
                "finite poset has {n} nodes but {} delta entries",
                self.delta.len()
            )));
        }
        if let Some(v) = self.delta.iter().find(|v| **v < 2) {
            return Err(Error::Contract(format!("delta value {v} below 2")));
        }
        for &(a, b) in &self.covers {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Contract(format!("cover ({a},{b}) out of range")));
            }
        }
        let leq = self.leq_matrix();
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i * n + j] && leq[j * n + i] {
                    return Err(Error::Contract(format!(
                        "relation is not antisymmetric at nodes {i},{j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Topological enumeration order: by height, ties by declared index.
    pub(crate) fn topo_order(&self) -> Vec<u32> {
        let n = self.len();
        let leq = self.leq_matrix();
        let mut ht = vec![1u32; n];
        // heights via longest-path DP over the closure
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
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&i| (ht[i as usize], i));
        order
    }
}

/// Summand rule for an omega-indexed disjoint sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SummandRule {
    /// Every summand is a copy of the same finite poset.
    Constant(FiniteSpec),
    /// Summand `n` is a chain of length `n + 1`.
    GrowingChains,
}

/// Fiber placed strictly above each spine node of a chain-with-fibers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiberSpec {
    Finite(FiniteSpec),
    OmegaAntichain { delta: DeltaRule },
}

/// Combinator presentation of a countable down-finite poset with δ ≥ 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Presentation {
    FiniteExplicit(FiniteSpec),
    OmegaChain { delta: DeltaRule },
    OmegaAntichain { delta: DeltaRule },
    Product(Box<Presentation>, Box<Presentation>),
    DisjointSum(Vec<Presentation>),
    OmegaSum { summand: SummandRule, delta: Option<DeltaRule> },
    ChainWithFibers { fiber: FiberSpec, delta: DeltaRule },
}

impl Presentation {
    pub fn omega_chain(delta: DeltaRule) -> Self {
        Presentation::OmegaChain { delta }
    }

    pub fn omega_antichain(delta: DeltaRule) -> Self {
        Presentation::OmegaAntichain { delta }
    }

    pub fn product(a: Presentation, b: Presentation) -> Self {
        Presentation::Product(Box::new(a), Box::new(b))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Presentation::FiniteExplicit(f) => {
                if f.is_empty() {
                    return Err(Error::Contract("empty finite poset".into()));
                }
                f.validate()
            }
            Presentation::OmegaChain { delta } | Presentation::OmegaAntichain { delta } => {
                delta.validate()
            }
            Presentation::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
            Presentation::DisjointSum(parts) => {
                if parts.is_empty() {
                    return Err(Error::Contract("empty disjoint sum".into()));
                }
                for p in parts {
                    p.validate()?;
                }
                Ok(())
            }
            Presentation::OmegaSum { summand, delta } => {
                if let Some(d) = delta {
                    d.validate()?;
                }
                match summand {
                    SummandRule::Constant(f) => {
                        if f.is_empty() {
                            return Err(Error::Contract("empty omega-sum fiber".into()));
                        }
                        f.validate()
                    }
                    SummandRule::GrowingChains => {
                        if delta.is_none() {
                            return Err(Error::Contract(
                                "growing-chains omega-sum needs a :delta rule".into(),
                            ));
                        }
                        Ok(())
                    }
                }
            }
            Presentation::ChainWithFibers { fiber, delta } => {
                delta.validate()?;
                match fiber {
                    FiberSpec::Finite(f) => {
                        if f.is_empty() {
                            return Err(Error::Contract("empty fiber poset".into()));
                        }
                        f.validate()
                    }
                    FiberSpec::OmegaAntichain { delta } => delta.validate(),
                }
            }
        }
    }

    /// Total number of nodes, when finite.
    pub fn node_count(&self) -> Option<u64> {
        match self {
            Presentation::FiniteExplicit(f) => Some(f.len() as u64),
            Presentation::OmegaChain { .. }
            | Presentation::OmegaAntichain { .. }
            | Presentation::OmegaSum { .. }
            | Presentation::ChainWithFibers { .. } => None,
            Presentation::Product(a, b) => Some(a.node_count()? * b.node_count()?),
            Presentation::DisjointSum(parts) => {
                parts.iter().map(|p| p.node_count()).sum::<Option<u64>>()
            }
        }
    }

    /// Does the given address denote a node of this poset?
    pub fn contains(&self, addr: &NodeAddress) -> bool {
        match (self, addr) {
            (Presentation::FiniteExplicit(f), NodeAddress::Finite(i)) => (*i as usize) < f.len(),
            (Presentation::OmegaChain { .. }, NodeAddress::Chain(_)) => true,
            (Presentation::OmegaAntichain { .. }, NodeAddress::Antichain(_)) => true,
            (Presentation::Product(a, b), NodeAddress::Pair(l, r)) => {
                a.contains(l) && b.contains(r)
            }
            (Presentation::DisjointSum(parts), NodeAddress::Summand(i, inner)) => parts
                .get(*i as usize)
                .map(|p| p.contains(inner))
                .unwrap_or(false),
            (Presentation::OmegaSum { summand, .. }, NodeAddress::Summand(i, inner)) => {
                match summand {
                    SummandRule::Constant(f) => {
                        matches!(**inner, NodeAddress::Finite(j) if (j as usize) < f.len())
                    }
                    SummandRule::GrowingChains => {
                        matches!(**inner, NodeAddress::Finite(j) if j <= *i)
                    }
                }
            }
            (Presentation::ChainWithFibers { .. }, NodeAddress::Spine(_)) => true,
            (Presentation::ChainWithFibers { fiber, .. }, NodeAddress::Fiber(_, inner)) => {
                match fiber {
                    FiberSpec::Finite(f) => {
                        matches!(**inner, NodeAddress::Finite(j) if (j as usize) < f.len())
                    }
                    FiberSpec::OmegaAntichain { .. } => {
                        matches!(**inner, NodeAddress::Antichain(_))
                    }
                }
            }
            _ => false,
        }
    }

    /// The partial order, decided structurally.
    pub fn leq(&self, x: &NodeAddress, y: &NodeAddress) -> Result<bool> {
        if !self.contains(x) {
            return Err(Error::UnknownAddress(x.to_string()));
        }
        if !self.contains(y) {
            return Err(Error::UnknownAddress(y.to_string()));
        }
        Ok(self.leq_unchecked(x, y))
    }

    pub(crate) fn leq_unchecked(&self, x: &NodeAddress, y: &NodeAddress) -> bool {
        match self {
            Presentation::FiniteExplicit(f) => match (x, y) {
                (NodeAddress::Finite(i), NodeAddress::Finite(j)) => {
                    let n = f.len();
                    f.leq_matrix()[*i as usize * n + *j as usize]
                }
                _ => false,
            },
            Presentation::OmegaChain { .. } => match (x, y) {
                (NodeAddress::Chain(i), NodeAddress::Chain(j)) => i <= j,
                _ => false,
            },
            Presentation::OmegaAntichain { .. } => x == y,
            Presentation::Product(a, b) => match (x, y) {
                (NodeAddress::Pair(xl, xr), NodeAddress::Pair(yl, yr)) => {
                    a.leq_unchecked(xl, yl) && b.leq_unchecked(xr, yr)
                }
                _ => false,
            },
            Presentation::DisjointSum(parts) => match (x, y) {
                (NodeAddress::Summand(i, xi), NodeAddress::Summand(j, yj)) => {
                    i == j && parts[*i as usize].leq_unchecked(xi, yj)
                }
                _ => false,
            },
            Presentation::OmegaSum { summand, .. } => match (x, y) {
                (NodeAddress::Summand(i, xi), NodeAddress::Summand(j, yj)) => {
                    if i != j {
                        return false;
                    }
                    match (summand, &**xi, &**yj) {
                        (SummandRule::Constant(f), NodeAddress::Finite(a), NodeAddress::Finite(b)) => {
                            let n = f.len();
                            f.leq_matrix()[*a as usize * n + *b as usize]
                        }
                        (SummandRule::GrowingChains, NodeAddress::Finite(a), NodeAddress::Finite(b)) => {
                            a <= b
                        }
                        _ => false,
                    }
                }
                _ => false,
            },
            Presentation::ChainWithFibers { fiber, .. } => match (x, y) {
                (NodeAddress::Spine(i), NodeAddress::Spine(j)) => i <= j,
                // every fiber node above p_j dominates the spine prefix p_0..p_j
                (NodeAddress::Spine(i), NodeAddress::Fiber(j, _)) => i <= j,
                (NodeAddress::Fiber(_, _), NodeAddress::Spine(_)) => false,
                (NodeAddress::Fiber(i, xi), NodeAddress::Fiber(j, yj)) => {
                    if i != j {
                        return false;
                    }
                    match (fiber, &**xi, &**yj) {
                        (FiberSpec::Finite(f), NodeAddress::Finite(a), NodeAddress::Finite(b)) => {
                            let n = f.len();
                            f.leq_matrix()[*a as usize * n + *b as usize]
                        }
                        (FiberSpec::OmegaAntichain { .. }, a, b) => a == b,
                        _ => false,
                    }
                }
                _ => false,
            },
        }
    }

    /// Splitting value at a node.
    pub fn delta(&self, addr: &NodeAddress) -> Result<u32> {
        if !self.contains(addr) {
            return Err(Error::UnknownAddress(addr.to_string()));
        }
        Ok(self.delta_unchecked(addr))
    }

    pub(crate) fn delta_unchecked(&self, addr: &NodeAddress) -> u32 {
        match (self, addr) {
            (Presentation::FiniteExplicit(f), NodeAddress::Finite(i)) => f.delta[*i as usize],
            (Presentation::OmegaChain { delta }, NodeAddress::Chain(i)) => delta.eval(*i),
            (Presentation::OmegaAntichain { delta }, NodeAddress::Antichain(i)) => delta.eval(*i),
            (Presentation::Product(a, b), NodeAddress::Pair(l, r)) => {
                a.delta_unchecked(l).max(b.delta_unchecked(r))
            }
            (Presentation::DisjointSum(parts), NodeAddress::Summand(i, inner)) => {
                parts[*i as usize].delta_unchecked(inner)
            }
            (Presentation::OmegaSum { summand, delta }, NodeAddress::Summand(i, inner)) => {
                if let Some(rule) = delta {
                    rule.eval(*i)
                } else {
                    match (summand, &**inner) {
                        (SummandRule::Constant(f), NodeAddress::Finite(j)) => {
                            f.delta[*j as usize]
                        }
                        _ => unreachable!("growing chains require a delta rule"),
                    }
                }
            }
            (Presentation::ChainWithFibers { delta, .. }, NodeAddress::Spine(i)) => delta.eval(*i),
            (Presentation::ChainWithFibers { fiber, .. }, NodeAddress::Fiber(_, inner)) => {
                match (fiber, &**inner) {
                    (FiberSpec::Finite(f), NodeAddress::Finite(j)) => f.delta[*j as usize],
                    (FiberSpec::OmegaAntichain { delta }, NodeAddress::Antichain(j)) => {
                        delta.eval(*j)
                    }
                    _ => unreachable!(),
                }
            }
            _ => unreachable!("contains() was checked"),
        }
    }

    /// Finite principal downset of a node.
    pub fn downset(&self, addr: &NodeAddress) -> Result<Vec<NodeAddress>> {
        if !self.contains(addr) {
            return Err(Error::UnknownAddress(addr.to_string()));
        }
        Ok(self.downset_unchecked(addr))
    }

    fn downset_unchecked(&self, addr: &NodeAddress) -> Vec<NodeAddress> {
        match (self, addr) {
            (Presentation::FiniteExplicit(f), NodeAddress::Finite(i)) => {
                let n = f.len();
                let leq = f.leq_matrix();
                (0..n)
                    .filter(|j| leq[j * n + *i as usize])
                    .map(|j| NodeAddress::Finite(j as u32))
                    .collect()
            }
            (Presentation::OmegaChain { .. }, NodeAddress::Chain(i)) => {
                (0..=*i).map(NodeAddress::Chain).collect()
            }
            (Presentation::OmegaAntichain { .. }, a @ NodeAddress::Antichain(_)) => {
                vec![a.clone()]
            }
            (Presentation::Product(a, b), NodeAddress::Pair(l, r)) => {
                let dl = a.downset_unchecked(l);
                let dr = b.downset_unchecked(r);
                let mut out = Vec::with_capacity(dl.len() * dr.len());
                for x in &dl {
                    for y in &dr {
                        out.push(NodeAddress::pair(x.clone(), y.clone()));
                    }
                }
                out
            }
            (Presentation::DisjointSum(parts), NodeAddress::Summand(i, inner)) => parts
                [*i as usize]
                .downset_unchecked(inner)
                .into_iter()
                .map(|x| NodeAddress::summand(*i, x))
                .collect(),
            (Presentation::OmegaSum { summand, .. }, NodeAddress::Summand(i, inner)) => {
                let inner_ds: Vec<NodeAddress> = match (summand, &**inner) {
                    (SummandRule::Constant(f), NodeAddress::Finite(j)) => {
                        let n = f.len();
                        let leq = f.leq_matrix();
                        (0..n)
                            .filter(|k| leq[k * n + *j as usize])
                            .map(|k| NodeAddress::Finite(k as u32))
                            .collect()
                    }
                    (SummandRule::GrowingChains, NodeAddress::Finite(j)) => {
                        (0..=*j).map(NodeAddress::Finite).collect()
                    }
                    _ => unreachable!(),
                };
                inner_ds
                    .into_iter()
                    .map(|x| NodeAddress::summand(*i, x))
                    .collect()
            }
            (Presentation::ChainWithFibers { .. }, NodeAddress::Spine(i)) => {
                (0..=*i).map(NodeAddress::Spine).collect()
            }
            (Presentation::ChainWithFibers { fiber, .. }, NodeAddress::Fiber(i, inner)) => {
                let mut out: Vec<NodeAddress> = (0..=*i).map(NodeAddress::Spine).collect();
                match (fiber, &**inner) {
                    (FiberSpec::Finite(f), NodeAddress::Finite(j)) => {
                        let n = f.len();
                        let leq = f.leq_matrix();
                        for k in 0..n {
                            if leq[k * n + *j as usize] {
                                out.push(NodeAddress::fiber(*i, NodeAddress::Finite(k as u32)));
                            }
                        }
                    }
                    (FiberSpec::OmegaAntichain { .. }, a @ NodeAddress::Antichain(_)) => {
                        out.push(NodeAddress::fiber(*i, a.clone()));
                    }
                    _ => unreachable!(),
                }
                out
            }
            _ => unreachable!(),
        }
    }

    /// Canonical enumeration of all nodes: fixed breadth-first dovetailing,
    /// always a linear extension of the order.
    pub fn enumerate(&self) -> NodeEnum<'_> {
        NodeEnum { pres: self, next: 0 }
    }

    /// The `k`-th node of the canonical enumeration, if it exists.
    pub(crate) fn nth_node(&self, k: u64) -> Option<NodeAddress> {
        match self {
            Presentation::FiniteExplicit(f) => {
                let order = f.topo_order();
                order.get(k as usize).map(|i| NodeAddress::Finite(*i))
            }
            Presentation::OmegaChain { .. } => Some(NodeAddress::Chain(k as u32)),
            Presentation::OmegaAntichain { .. } => Some(NodeAddress::Antichain(k as u32)),
            Presentation::Product(a, b) => {
                // anti-diagonal pairing over factor enumeration indices
                let na = a.node_count();
                let nb = b.node_count();
                let mut seen = 0u64;
                for d in 0u64.. {
                    let mut any = false;
                    for i in 0..=d {
                        let j = d - i;
                        if na.map(|n| i < n).unwrap_or(true) && nb.map(|n| j < n).unwrap_or(true) {
                            any = true;
                            if seen == k {
                                return Some(NodeAddress::pair(a.nth_node(i)?, b.nth_node(j)?));
                            }
                            seen += 1;
                        }
                    }
                    if !any && na.is_some() && nb.is_some() {
                        return None;
                    }
                    // safety for finite × finite exhaustion
                    if let (Some(n), Some(m)) = (na, nb) {
                        if d > n + m {
                            return None;
                        }
                    }
                }
                None
            }
            Presentation::DisjointSum(parts) => {
                // round-robin over summands, skipping exhausted ones
                let sizes: Vec<Option<u64>> = parts.iter().map(|p| p.node_count()).collect();
                let mut seen = 0u64;
                for round in 0u64.. {
                    let mut any = false;
                    for (idx, p) in parts.iter().enumerate() {
                        if sizes[idx].map(|n| round < n).unwrap_or(true) {
                            any = true;
                            if seen == k {
                                return Some(NodeAddress::summand(
                                    idx as u32,
                                    p.nth_node(round)?,
                                ));
                            }
                            seen += 1;
                        }
                    }
                    if !any {
                        return None;
                    }
                }
                None
            }
            Presentation::OmegaSum { summand, .. } => {
                let size = |n: u64| -> u64 {
                    match summand {
                        SummandRule::Constant(f) => f.len() as u64,
                        SummandRule::GrowingChains => n + 1,
                    }
                };
                let inner = |_n: u64, j: u64| -> NodeAddress {
                    match summand {
                        SummandRule::Constant(f) => {
                            NodeAddress::Finite(f.topo_order()[j as usize])
                        }
                        SummandRule::GrowingChains => NodeAddress::Finite(j as u32),
                    }
                };
                let mut seen = 0u64;
                for d in 0u64.. {
                    for n in 0..=d {
                        let j = d - n;
                        if j < size(n) {
                            if seen == k {
                                return Some(NodeAddress::summand(n as u32, inner(n, j)));
                            }
                            seen += 1;
                        }
                    }
                }
                None
            }
            Presentation::ChainWithFibers { fiber, .. } => {
                // column n = [Spine(n), fiber_n[0], fiber_n[1], ...]
                let fiber_size: Option<u64> = match fiber {
                    FiberSpec::Finite(f) => Some(f.len() as u64),
                    FiberSpec::OmegaAntichain { .. } => None,
                };
                let fiber_node = |j: u64| -> NodeAddress {
                    match fiber {
                        FiberSpec::Finite(f) => NodeAddress::Finite(f.topo_order()[j as usize]),
                        FiberSpec::OmegaAntichain { .. } => NodeAddress::Antichain(j as u32),
                    }
                };
                let mut seen = 0u64;
                for d in 0u64.. {
                    for n in 0..=d {
                        let t = d - n;
                        let exists = t == 0 || fiber_size.map(|s| t - 1 < s).unwrap_or(true);
                        if exists {
                            if seen == k {
                                return Some(if t == 0 {
                                    NodeAddress::Spine(n as u32)
                                } else {
                                    NodeAddress::fiber(n as u32, fiber_node(t - 1))
                                });
                            }
                            seen += 1;
                        }
                    }
                }
                None
            }
        }
    }

    /// Materialize the downward closure of the first `n` canonically
    /// enumerated nodes as a finite poset.  Monotone in `n`.
    pub fn truncate(self: &Arc<Self>, n: usize) -> FinitePoset {
        let mut picked: Vec<NodeAddress> = Vec::with_capacity(n);
        for k in 0..n as u64 {
            match self.nth_node(k) {
                Some(a) => picked.push(a),
                None => break,
            }
        }
        // close downward (the enumeration is a linear extension, so this is
        // normally a no-op, but it keeps the invariant unconditional)
        let mut closure: BTreeSet<NodeAddress> = BTreeSet::new();
        for a in &picked {
            for d in self.downset_unchecked(a) {
                closure.insert(d);
            }
        }
        // order the closure by enumeration position
        let mut ordered: Vec<NodeAddress> = Vec::with_capacity(closure.len());
        let mut k = 0u64;
        while ordered.len() < closure.len() {
            match self.nth_node(k) {
                Some(a) => {
                    if closure.contains(&a) {
                        ordered.push(a);
                    }
                }
                None => break,
            }
            k += 1;
        }
        debug_assert_eq!(ordered.len(), closure.len());
        FinitePoset::from_presentation(Arc::clone(self), ordered)
    }
}

/// Iterator over the canonical node enumeration.
pub struct NodeEnum<'a> {
    pres: &'a Presentation,
    next: u64,
}

impl Iterator for NodeEnum<'_> {
    type Item = NodeAddress;

    fn next(&mut self) -> Option<NodeAddress> {
        let item = self.pres.nth_node(self.next);
        if item.is_some() {
            self.next += 1;
        }
        item
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(p: Presentation) -> Arc<Presentation> {
        Arc::new(p)
    }

    #[test]
    fn chain_truncation_is_a_chain() {
        let p = arc(Presentation::omega_chain(DeltaRule::Const(2)));
        let t = p.truncate(3);
        assert_eq!(t.len(), 3);
        assert_eq!(t.height(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.leq_idx(i, j), i <= j);
            }
        }
    }

    #[test]
    fn antichain_truncation() {
        let p = arc(Presentation::omega_antichain(DeltaRule::Const(2)));
        let t = p.truncate(4);
        assert_eq!(t.len(), 4);
        assert_eq!(t.height(), 1);
    }

    #[test]
    fn product_enumeration_truncation() {
        // first 4 enumerated pairs of (omega-chain) x (2-antichain), closed downward
        let p = arc(Presentation::product(
            Presentation::omega_chain(DeltaRule::Const(2)),
            Presentation::FiniteExplicit(FiniteSpec::antichain(2, 2)),
        ));
        let t = p.truncate(4);
        let expect: Vec<NodeAddress> = vec![
            NodeAddress::pair(NodeAddress::Chain(0), NodeAddress::Finite(0)),
            NodeAddress::pair(NodeAddress::Chain(0), NodeAddress::Finite(1)),
            NodeAddress::pair(NodeAddress::Chain(1), NodeAddress::Finite(0)),
            NodeAddress::pair(NodeAddress::Chain(1), NodeAddress::Finite(1)),
        ];
        assert_eq!(t.nodes().to_vec(), expect);
    }

    #[test]
    fn product_order_and_delta() {
        let p = Presentation::product(
            Presentation::omega_chain(DeltaRule::Affine { a: 1, b: 2 }),
            Presentation::FiniteExplicit(FiniteSpec::antichain(2, 3)),
        );
        let x = NodeAddress::pair(NodeAddress::Chain(0), NodeAddress::Finite(0));
        let y = NodeAddress::pair(NodeAddress::Chain(2), NodeAddress::Finite(0));
        let z = NodeAddress::pair(NodeAddress::Chain(2), NodeAddress::Finite(1));
        assert!(p.leq(&x, &y).unwrap());
        assert!(!p.leq(&y, &z).unwrap());
        assert!(!p.leq(&z, &y).unwrap());
        // delta of a pair is the max of the factor deltas
        assert_eq!(p.delta(&y).unwrap(), 4);
        assert_eq!(p.delta(&x).unwrap(), 3);
    }

    #[test]
    fn chain_with_fibers_order() {
        let p = Presentation::ChainWithFibers {
            fiber: FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
            delta: DeltaRule::Const(3),
        };
        let p0 = NodeAddress::Spine(0);
        let p1 = NodeAddress::Spine(1);
        let q00 = NodeAddress::fiber(0, NodeAddress::Antichain(0));
        let q01 = NodeAddress::fiber(0, NodeAddress::Antichain(1));
        let q10 = NodeAddress::fiber(1, NodeAddress::Antichain(0));
        assert!(p.leq(&p0, &q00).unwrap());
        assert!(!p.leq(&p1, &q00).unwrap());
        assert!(p.leq(&p0, &q10).unwrap());
        assert!(p.leq(&p1, &q10).unwrap());
        assert!(!p.leq(&q00, &q01).unwrap());
        assert!(!p.leq(&q00, &p1).unwrap());
        assert!(!p.leq(&q00, &q10).unwrap());
    }

    #[test]
    fn growing_chains_shape() {
        let p = arc(Presentation::OmegaSum {
            summand: SummandRule::GrowingChains,
            delta: Some(DeltaRule::Const(2)),
        });
        let t = p.truncate(10);
        // summand n is a chain of length n+1; check a couple of heights
        let s2_top = NodeAddress::summand(2, NodeAddress::Finite(2));
        if let Ok(i) = t.index_of(&s2_top) {
            assert_eq!(t.height_of_idx(i), 3);
        }
        assert!(t.is_downward_closed(&(0..t.len()).collect::<Vec<_>>()));
    }

    #[test]
    fn truncations_are_monotone_and_downward_closed() {
        let presentations = vec![
            Presentation::omega_chain(DeltaRule::Const(2)),
            Presentation::omega_antichain(DeltaRule::Affine { a: 1, b: 2 }),
            Presentation::product(
                Presentation::omega_chain(DeltaRule::Const(2)),
                Presentation::omega_chain(DeltaRule::Const(3)),
            ),
            Presentation::DisjointSum(vec![
                Presentation::omega_chain(DeltaRule::Const(2)),
                Presentation::omega_chain(DeltaRule::Const(2)),
            ]),
            Presentation::OmegaSum {
                summand: SummandRule::GrowingChains,
                delta: Some(DeltaRule::Const(2)),
            },
            Presentation::ChainWithFibers {
                fiber: FiberSpec::OmegaAntichain { delta: DeltaRule::Const(3) },
                delta: DeltaRule::Const(3),
            },
        ];
        for pres in presentations {
            let pres = arc(pres);
            let mut prev: Vec<NodeAddress> = vec![];
            for n in [0usize, 1, 3, 7, 12] {
                let t = pres.truncate(n);
                let all: Vec<usize> = (0..t.len()).collect();
                assert!(t.is_downward_closed(&all), "truncation not dc");
                let nodes = t.nodes().to_vec();
                assert!(
                    prev.iter().all(|a| nodes.contains(a)),
                    "truncation not monotone"
                );
                prev = nodes;
            }
        }
    }
}
