//! Finite-scale toolkit for poset-indexed families of refining
//! equivalence relations.
//!
//! Given a countable down-finite poset `(P, ≤)` and a splitting function
//! `δ : P → {2, 3, ...}`, the canonical structure on `∏_{q∈P} δ(q)`
//! carries one equivalence relation per node: two points are `E_q`-related
//! when they agree on the whole downset of `q`.  This crate materializes
//! finite downward-closed fragments of these structures and makes the
//! classical constructions on them executable and checkable: taxonomy
//! classification of `(P, ≤, δ)`, wreath-style automorphisms and their
//! exponent bounds, absolutely indiscernible families, encoders between
//! bipartite graphs / colorings / models, a Schröder–Bernstein
//! back-and-forth, and reduct classification for chain-indexed models.

pub mod acceptance;
pub mod backforth;
pub mod error;
pub mod dynamics;
pub mod io;
pub mod indiscernibles;
pub mod model;
pub mod perm;
pub mod poset;
pub mod reductions;
pub mod reducts;

pub use error::{Error, Result};
