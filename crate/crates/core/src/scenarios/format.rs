//! The scenario file format.
//!
//! A scenario is a TOML document with a chart, a list of named bindings
//! resolved top to bottom (each may refer to earlier ones by name), and a
//! list of assertions. Every binding and assertion is a table whose `kind`
//! (resp. `probe`) key selects the constructor (resp. check):
//!
//! ```toml
//! name = "prop_4_1"
//! doc = "Minus the identity differentiates to the connection."
//! instances = 1              # optional; repeats with fresh random bindings
//!
//! [chart]
//! coords = ["x", "y"]
//! bounds = [[-2.0, 2.0], [-2.0, 2.0]]
//! constraints = ["x^2 + y^2 > 0.01"]   # optional
//! standoff = 0.001                      # optional
//!
//! [context]
//! connection = "nabla"       # optional; defaults to the coordinate connection
//!
//! [[bind]]
//! name = "nabla"
//! kind = "pullback_flat"
//! map = ["x", "y + x^2"]
//!
//! [[bind]]
//! name = "minus_id"
//! kind = "linear"
//! terms = [[-1.0, "id"]]
//!
//! [[assert]]
//! name = "minus_identity_is_connection"
//! probe = "cochain_equal"
//! lhs = "d_minus_id"
//! rhs = "nabla_cochain"
//! tolerance = 1e-12          # optional override
//! expected = "pass"          # or "fail": passes only if witnessed (residual ≥ 1e-3)
//! reference = "d_KV(-Id) = nabla"
//! ```
//!
//! Binding and probe kinds are the variants of [`BindingKind`] and
//! [`Check`], in snake case.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub doc: String,
    #[serde(default = "one")]
    pub instances: usize,
    pub chart: ChartSpec,
    #[serde(default)]
    pub context: ContextSpec,
    #[serde(default, rename = "bind")]
    pub bindings: Vec<Binding>,
    #[serde(default, rename = "assert")]
    pub assertions: Vec<Assertion>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standoff: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    #[serde(flatten)]
    pub kind: BindingKind,
}

/// Constructors available to `[[bind]]` tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BindingKind {
    // Scalar functions.
    Function { expr: String },
    /// `Δ_g f`.
    Laplacian { metric: String, function: String },
    RandomFunction { degree: u32 },

    // Vector fields and 1-forms.
    Vector { components: Vec<String> },
    Coordinate { index: usize },
    RandomVector { degree: u32 },
    OneForm { components: Vec<String> },
    /// `df`.
    Differential { function: String },
    RandomOneForm { degree: u32 },

    // Metrics.
    EuclideanMetric,
    DiagonalMetric { entries: Vec<String> },
    Metric { rows: Vec<Vec<String>> },
    HessianMetric { potential: String },
    /// `e^{2f} g`.
    ConformalMetric { function: String, metric: String },

    // Connections.
    FlatConnection,
    /// Flat connection with affine coordinates `map`.
    PullbackFlat { map: Vec<String> },
    LeviCivita { metric: String },
    Conjugate { connection: String, metric: String },
    Midpoint { a: String, b: String },
    /// `D_X Y = ∇_X Y + θ(X, Y)` for a tensorial 2-cochain `θ`.
    Deformed { connection: String, cochain: String },

    // Cochains.
    Identity,
    Scalar { function: String },
    Ad { vector: String },
    Projective { form: String },
    DualProjective { metric: String, vector: String },
    Conformal { metric: String, function: String },
    /// `∇ − D` with `∇` the context connection.
    ConnDiff { connection: String },
    /// `(X, Y) ↦ D_X Y`.
    ConnectionCochain { connection: String },
    /// `(X, Y, Z) ↦ R^D(X, Y) Z`.
    Curvature { connection: String },
    /// `(X, Y) ↦ ∇_X∇_Y Z − ∇_{∇_X Y} Z`.
    Coboundary { vector: String },
    DKv { of: String },
    Linear { terms: Vec<(f64, String)> },
    Permuted { of: String, order: Vec<usize> },
    /// `θ(X, Y) − θ(Y, X)`.
    Antisymmetric { of: String },
    /// `(X, Y) ↦ [Y, X]`.
    ReversedBracket,
    /// `(X, Y) ↦ −∇_X(f Y)`.
    MinusNablaOfScaled { function: String },
    /// `(X, Y) ↦ −∇_X(f Y) + f ∇_X Y − ∇_{f X} Y`.
    ScalarExpanded { function: String },
    /// `(X, Y, Z) ↦ (∇_Y θ)(X, Z) − (∇_X θ)(Y, Z)`.
    SymmetricDifferential { of: String },
    RandomTensor { rank: usize, degree: u32 },

    // Tangent-valued forms.
    /// Sum of `value · dx^{indices} ⊗ ∂_target`.
    Twisted { degree: usize, entries: Vec<(Vec<usize>, usize, String)> },
    /// A vector field as a 0-form.
    Section { vector: String },
    RandomTwisted { degree: usize, poly_degree: u32 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    #[default]
    Pass,
    /// The identity must fail at some sample by at least the witness threshold.
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// The identity under test, as text.
    pub reference: String,
    #[serde(default)]
    pub expected: Expected,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(flatten)]
    pub check: Check,
}

/// Probes available to `[[assert]]` tables. Cochain probes run in the KV
/// context; the rest only need their arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Check {
    CochainZero { cochain: String },
    CochainEqual { lhs: String, rhs: String },
    D2 { cochain: String },
    Symmetric { cochain: String },
    Tensorial { cochain: String },
    Multilinear { cochain: String },
    Derivation { cochain: String },
    Jacobi { vector: String },
    Flat { connection: String },
    TorsionFree { connection: String },
    ConnectionEqual { lhs: String, rhs: String },
    Codazzi { metric: String, connection: String },
    ParallelVector { connection: String, vector: String },
    ParallelForm { connection: String, form: String },
    /// `Z g(X, Y) = g(∇_Z X, Y) + g(X, ∇*_Z Y)`.
    ConjugateIdentity { connection: String, conjugate: String, metric: String },
    FunctionZero { function: String },
    FunctionEqual { lhs: String, rhs: String },
    /// `g(θ(e_{slots}), e_against) = value` on the coordinate frame.
    FrameComponent { cochain: String, metric: String, slots: Vec<usize>, against: usize, value: String },
    DnablaConsistency { connection: String, form: String },
    DnablaDisplay { connection: String, form: String },
    /// `d^∇ d^∇ θ = R^∇ ∧ θ` (against zero for flat connections).
    DnablaSquare { connection: String, form: String },
    DnablaAntisymmetric { connection: String, form: String },
    FlatDecomposition { connection: String, form: String },
    Commuting { vector: String, stage: CommutingStage },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutingStage {
    /// `[X, ∂_j] = 0` for all `j`.
    Coordinate,
    /// `[X, x^j ∂_j] = 0`.
    Euler,
    /// `X = 0`.
    Vanishes,
    /// `[X, x^j ∂_j] = X`.
    EulerIdentity,
    /// Passing both stages forces `X = 0`; residual is 0 when consistent.
    Lemma,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<ScenarioFile> {
        toml::from_str(text).map_err(|e| Error::Scenario {
            scenario: "<file>".into(),
            msg: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario {
            scenario: self.name.clone(),
            msg: e.to_string(),
        })
    }

    /// Structural checks: unique binding names, references to earlier
    /// bindings only, and assertion arguments that exist.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Error::Scenario {
            scenario: self.name.clone(),
            msg,
        };
        if self.instances == 0 {
            return Err(fail("instances must be at least 1".into()));
        }
        let mut known: Vec<&str> = Vec::new();
        for b in &self.bindings {
            if known.contains(&b.name.as_str()) {
                return Err(fail(format!("binding `{}` is defined twice", b.name)));
            }
            for r in b.kind.references() {
                if !known.contains(&r) {
                    return Err(fail(format!(
                        "binding `{}` refers to `{r}`, which is not bound above it",
                        b.name
                    )));
                }
            }
            known.push(&b.name);
        }
        if let Some(c) = &self.context.connection {
            if !known.contains(&c.as_str()) {
                return Err(fail(format!("context connection `{c}` is not bound")));
            }
        }
        let mut names: Vec<&str> = Vec::new();
        for a in &self.assertions {
            if names.contains(&a.name.as_str()) {
                return Err(fail(format!("assertion `{}` is defined twice", a.name)));
            }
            names.push(&a.name);
            for r in a.check.references() {
                if !known.contains(&r) {
                    return Err(fail(format!("assertion `{}` refers to unbound `{r}`", a.name)));
                }
            }
        }
        Ok(())
    }
}

impl BindingKind {
    /// Names of other bindings this one refers to.
    pub fn references(&self) -> Vec<&str> {
        use BindingKind::*;
        match self {
            Laplacian { metric, function } | ConformalMetric { function, metric } | Conformal { metric, function } => {
                vec![metric, function]
            }
            Differential { function } | Scalar { function } | MinusNablaOfScaled { function } | ScalarExpanded { function } => {
                vec![function]
            }
            LeviCivita { metric } => vec![metric],
            Conjugate { connection, metric } => vec![connection, metric],
            Midpoint { a, b } => vec![a, b],
            Deformed { connection, cochain } => vec![connection, cochain],
            Ad { vector } | Coboundary { vector } | Section { vector } => vec![vector],
            Projective { form } => vec![form],
            DualProjective { metric, vector } => vec![metric, vector],
            ConnDiff { connection } | ConnectionCochain { connection } | Curvature { connection } => vec![connection],
            DKv { of } | Permuted { of, .. } | Antisymmetric { of } | SymmetricDifferential { of } => vec![of],
            Linear { terms } => terms.iter().map(|(_, n)| n.as_str()).collect(),
            Function { .. } | RandomFunction { .. } | Vector { .. } | Coordinate { .. } | RandomVector { .. }
            | OneForm { .. } | RandomOneForm { .. } | EuclideanMetric | DiagonalMetric { .. } | Metric { .. }
            | HessianMetric { .. } | FlatConnection | PullbackFlat { .. } | Identity | ReversedBracket
            | RandomTensor { .. } | Twisted { .. } | RandomTwisted { .. } => vec![],
        }
    }
}

impl Check {
    pub fn references(&self) -> Vec<&str> {
        use Check::*;
        match self {
            CochainZero { cochain } | D2 { cochain } | Symmetric { cochain } | Tensorial { cochain }
            | Multilinear { cochain } | Derivation { cochain } => vec![cochain],
            CochainEqual { lhs, rhs } | ConnectionEqual { lhs, rhs } | FunctionEqual { lhs, rhs } => vec![lhs, rhs],
            Jacobi { vector } | Commuting { vector, .. } => vec![vector],
            Flat { connection } | TorsionFree { connection } => vec![connection],
            Codazzi { metric, connection } => vec![metric, connection],
            ParallelVector { connection, vector } => vec![connection, vector],
            ParallelForm { connection, form } => vec![connection, form],
            ConjugateIdentity { connection, conjugate, metric } => vec![connection, conjugate, metric],
            FunctionZero { function } => vec![function],
            FrameComponent { cochain, metric, value, .. } => vec![cochain, metric, value],
            DnablaConsistency { connection, form }
            | DnablaDisplay { connection, form }
            | DnablaSquare { connection, form }
            | DnablaAntisymmetric { connection, form }
            | FlatDecomposition { connection, form } => vec![connection, form],
        }
    }
}
