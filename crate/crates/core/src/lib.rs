//! Finite presheaf toposes and the machinery needed to check Łoś-style
//! transfer theorems on enumerable instances.
//!
//! The crate is organised bottom-up:
//!
//! * [`cat`]: finite categories, presheaves, natural transformations, products.
//! * [`sub`]: subobject lattices as Heyting algebras, quantifiers along maps,
//!   generators and the subobject classifier.
//! * [`fol`]: signatures, contexts, terms and Σ-structures in presheaves.
//! * [`formula`]: formulas, their interpretation and the quantifier registry.
//! * [`modal`]: coalgebras for set functors and predicate liftings.
//! * [`filter`]: filters on finite index sets and filtered products.
//! * [`los`]: hypothesis checks and the end-to-end transfer check.
//!
//! [`oracle`] holds brute-force reference implementations used for
//! cross-checking, [`laws`] exhaustive algebraic law suites, and [`corpus`]
//! deterministic random instance generators.

pub mod bound;
pub mod cat;
pub mod corpus;
pub mod error;
pub mod filter;
pub mod fol;
pub mod formula;
pub mod internal;
pub mod laws;
pub mod los;
pub mod modal;
pub mod oracle;
pub mod par;
pub mod report;
pub mod sub;

pub use error::{Error, Result};
