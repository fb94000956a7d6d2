//! Generalized-quantifier toolkit.
//!
//! * [`semantics`]: truth conditions of the eleven quantifier categories.
//! * [`formula`], [`region`], [`oracle`]: a small formula language over finite
//!   models and a bounded three-way entailment oracle.
//! * [`conllu`], [`corpus`]: ingestion of dependency annotations and NLI pair files.
//! * [`detect`], [`numeral`]: pattern-based quantifier detection.
//! * [`stats`], [`agreement`]: corpus statistics, stratified evaluation, Fleiss' kappa.
//! * [`generate`]: template-based generation of labeled NLI items.

pub mod agreement;
pub mod conllu;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod formula;
pub mod generate;
pub mod numeral;
pub mod oracle;
pub mod region;
pub mod semantics;
pub mod stats;

pub use error::{Error, Result};
pub use formula::{satisfies, CardOp, Formula, SetExpr, Signature};
pub use oracle::{is_satisfiable, nli_label, Label, LabelTask, NliLabel, Oracle};
pub use region::{enumerate_region_vectors, satisfies_region, RegionVector};
pub use semantics::{eval_model, CardinalityPair, Comparator, FiniteModel, Quantifier, QuantifierKind};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quantifiers.md")]
    mod quantifiers {}
    #[doc = include_str!("../../../book/src/entailment.md")]
    mod entailment {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
}
