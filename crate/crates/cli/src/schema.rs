//! Serde mirror of the workspace document. Everything refers to other
//! objects by name; resolution and validation happen in [`crate::workspace`].
//!
//! Maps are `BTreeMap` so that iteration (and hence every report) follows
//! key order rather than file order.

use std::collections::BTreeMap;

use serde::Deserialize;

/// Current schema version; documents with another value are rejected.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub version: u32,
    pub base: BaseSpec,
    pub signature: SignatureSpec,
    #[serde(default)]
    pub models: BTreeMap<String, ModelSpec>,
    #[serde(default)]
    pub morphisms: BTreeMap<String, MorphismSpec>,
    #[serde(default)]
    pub formulas: BTreeMap<String, String>,
    #[serde(default)]
    pub filters: BTreeMap<String, FilterSpec>,
    #[serde(default)]
    pub generators: BTreeMap<String, GeneratorSpec>,
    #[serde(default)]
    pub quantifiers: Vec<QuantifierSpec>,
    #[serde(default)]
    pub duals: Vec<DualSpec>,
    #[serde(default)]
    pub instances: BTreeMap<String, InstanceSpec>,
    #[serde(default)]
    pub coalgebras: BTreeMap<String, CoalgebraSpec>,
}

/// Either a built-in name (`terminal`, `graph`, `chain3`) or explicit tables.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Builtin(String),
    Poset(PosetSpec),
    Table(CategorySpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetSpec {
    pub poset: Vec<String>,
    /// Pairs `[a, b]` with `a <= b`; closed transitively.
    #[serde(default)]
    pub leq: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub objects: Vec<String>,
    pub morphisms: Vec<MorphismDecl>,
    /// Object to its identity morphism.
    pub identities: BTreeMap<String, String>,
    /// Triples `[g, f, g∘f]`.
    pub compose: Vec<(String, String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismDecl {
    pub name: String,
    pub dom: String,
    pub cod: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    pub sorts: Vec<String>,
    #[serde(default)]
    pub functions: BTreeMap<String, FunctionDecl>,
    /// Relation name to argument sorts.
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<String>>,
    /// Power sort to element sort.
    #[serde(default)]
    pub power_sorts: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDecl {
    #[serde(default)]
    pub args: Vec<String>,
    pub result: String,
}

/// A presheaf: elements per object and, per non-identity morphism
/// `f: a -> b`, the restriction map from elements at `b` to elements at `a`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresheafSpec {
    pub elements: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub maps: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub carriers: BTreeMap<String, PresheafSpec>,
    /// Function name to its graph: one entry per object and argument tuple.
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<FunctionEntry>>,
    /// Relation name to the tuples it contains, per object.
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<RelationEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionEntry {
    pub at: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub at: String,
    pub args: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismSpec {
    pub src: String,
    pub dst: String,
    /// Sort to object to element map.
    pub components: BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>,
}

/// Exactly one of the generating fields may be set; none means the
/// trivial filter `{I}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub index: Vec<String>,
    #[serde(default)]
    pub principal: Option<Vec<String>>,
    #[serde(default)]
    pub generated_by: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub members: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub frechet: bool,
}

/// Generators of the product context `|∏_I M|(σ)` of an instance. Each
/// member is the subobject generated by the listed `[object, element]` pairs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub members: Vec<Vec<(String, String)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum QuantifierSpec {
    Box { name: String, relation: String },
    Diamond { name: String, relation: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    pub quantifier: String,
    pub dual: String,
    pub signs: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub models: Vec<String>,
    pub filter: String,
    pub formula: String,
    #[serde(default)]
    pub generators: Option<String>,
}

/// A Kripke coalgebra: successor lists and proposition labels by name.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoalgebraSpec {
    pub states: Vec<String>,
    #[serde(default)]
    pub props: Vec<String>,
    #[serde(default)]
    pub successors: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
}
