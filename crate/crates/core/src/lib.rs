//! First-order statistics of finite relational structures.
//!
//! The crate is organised around the Stone pairing `<phi, A>`: the probability
//! that a uniformly random tuple of elements of a finite structure `A`
//! satisfies a first-order formula `phi`. On top of exact and sampled pairing
//! evaluation it provides
//!
//! * [`folang`]: formula syntax, parser, printer and syntactic metadata,
//! * [`eval`]: model checking, pairings, homomorphism and induced densities,
//! * [`equiv`]: Ehrenfeucht-Fraisse games, elementary distances and capped
//!   isomorphism types of rooted trees,
//! * [`seqan`]: analysis of sequences of structures (spectra, clips, comb
//!   decompositions, neighbourhood statistics, mass transport checks),
//! * [`treelim`]: finite-rank statistics of bounded-height colored rooted
//!   trees and builders realising them,
//! * [`interp`]: basic interpretation schemes and tree-depth decompositions.

pub mod equiv;
pub mod eval;
pub mod folang;
pub mod interp;
pub mod json;
pub mod seqan;
pub mod structure;
pub mod treelim;

pub use equiv::{CapType, EncodeTuple};
pub use eval::{PairingEstimate, StoneValue};
pub use folang::{Formula, Fragment, Var};
pub use structure::{RelationSymbol, RootedTree, Signature, Structure};
pub use treelim::TreeStatistic;
