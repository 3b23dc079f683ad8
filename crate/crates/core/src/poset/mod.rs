//! Countable down-finite posets presented by a closed combinator algebra.
//!
//! A presentation denotes a countable poset `(P, ≤)` together with a
//! splitting function `δ : P → {2, 3, ...}`.  Every principal downset is
//! finite, so arbitrary finite downward-closed fragments can be
//! materialized exactly.  Order-theoretic classification (bounded /
//! minimally unbounded / unbounded-not-minimal) is decided by structural
//! rules on the combinator AST, with witnesses that can be checked against
//! any truncation.

mod classify;
mod finite;
mod presentation;
mod sexpr;

pub use classify::{
    ChainGen, Classification, SetGen, classify, is_narrow, omega_chain, omega_chain_gen,
};
pub use finite::FinitePoset;
pub use presentation::{DeltaRule, FiberSpec, FiniteSpec, Presentation, SummandRule};
pub use sexpr::{parse_presentation, print_presentation};

use std::fmt;

/// Address of a node inside a combinator tree.
///
/// Addresses are stable across truncation depths: the same node keeps the
/// same address no matter how much of the poset has been materialized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeAddress {
    /// Node of a `FiniteExplicit` poset, by declared index.
    Finite(u32),
    /// `p_n` on an omega-chain.
    Chain(u32),
    /// `a_n` in an omega-antichain.
    Antichain(u32),
    /// Spine node `p_n` of a chain-with-fibers.
    Spine(u32),
    /// Node inside the fiber sitting strictly above spine node `p_n`.
    Fiber(u32, Box<NodeAddress>),
    /// Node inside summand `i` of a (finite or omega) disjoint sum.
    Summand(u32, Box<NodeAddress>),
    /// Node of a product: a pair of factor nodes.
    Pair(Box<NodeAddress>, Box<NodeAddress>),
}

impl NodeAddress {
    pub fn summand(i: u32, inner: NodeAddress) -> Self {
        NodeAddress::Summand(i, Box::new(inner))
    }

    pub fn fiber(i: u32, inner: NodeAddress) -> Self {
        NodeAddress::Fiber(i, Box::new(inner))
    }

    pub fn pair(left: NodeAddress, right: NodeAddress) -> Self {
        NodeAddress::Pair(Box::new(left), Box::new(right))
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeAddress::Finite(i) => write!(f, "n{i}"),
            NodeAddress::Chain(i) => write!(f, "c{i}"),
            NodeAddress::Antichain(i) => write!(f, "a{i}"),
            NodeAddress::Spine(i) => write!(f, "p{i}"),
            NodeAddress::Fiber(i, inner) => write!(f, "f{i}.{inner}"),
            NodeAddress::Summand(i, inner) => write!(f, "s{i}.{inner}"),
            NodeAddress::Pair(l, r) => write!(f, "({l},{r})"),
        }
    }
}

impl std::str::FromStr for NodeAddress {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        fn parse(s: &str) -> Option<(NodeAddress, &str)> {
            let rest = s;
            match rest.as_bytes().first()? {
                b'(' => {
                    let (l, rest) = parse(&rest[1..])?;
                    let rest = rest.strip_prefix(',')?;
                    let (r, rest) = parse(rest)?;
                    let rest = rest.strip_prefix(')')?;
                    Some((NodeAddress::pair(l, r), rest))
                }
                c @ (b'n' | b'c' | b'a' | b'p' | b'f' | b's') => {
                    let digits: String = rest[1..]
                        .chars()
                        .take_while(|ch| ch.is_ascii_digit())
                        .collect();
                    if digits.is_empty() {
                        return None;
                    }
                    let i: u32 = digits.parse().ok()?;
                    let rest2 = &rest[1 + digits.len()..];
                    match c {
                        b'n' => Some((NodeAddress::Finite(i), rest2)),
                        b'c' => Some((NodeAddress::Chain(i), rest2)),
                        b'a' => Some((NodeAddress::Antichain(i), rest2)),
                        b'p' => Some((NodeAddress::Spine(i), rest2)),
                        b'f' | b's' => {
                            let rest3 = rest2.strip_prefix('.')?;
                            let (inner, rest4) = parse(rest3)?;
                            let addr = if *c == b'f' {
                                NodeAddress::fiber(i, inner)
                            } else {
                                NodeAddress::summand(i, inner)
                            };
                            Some((addr, rest4))
                        }
                        _ => unreachable!(),
                    }
                }
                _ => None,
            }
        }
        match parse(s.trim()) {
            Some((addr, "")) => Ok(addr),
            _ => Err(crate::Error::Parse(format!("bad node address `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_roundtrip() {
        let samples = [
            NodeAddress::Chain(3),
            NodeAddress::Antichain(0),
            NodeAddress::Finite(7),
            NodeAddress::Spine(12),
            NodeAddress::fiber(2, NodeAddress::Antichain(5)),
            NodeAddress::summand(1, NodeAddress::Chain(4)),
            NodeAddress::pair(
                NodeAddress::Chain(2),
                NodeAddress::summand(0, NodeAddress::Finite(1)),
            ),
        ];
        for a in samples {
            let s = a.to_string();
            let back: NodeAddress = s.parse().unwrap();
            assert_eq!(a, back, "roundtrip through `{s}`");
        }
    }
}
