//! Symbolic-numeric tensor calculus on flat coordinate charts.
//!
//! The crate is layered bottom-up:
//!
//! * [`expr`]: closed-form scalar expressions with a parser, exact partial
//!   derivatives and checked evaluation, plus [`Chart`]s with sampling domains.
//! * [`fields`]: vector fields, 1-forms, metrics and general tensor fields,
//!   together with the seeded sampling probes every identity check rests on.
//! * [`connection`]: affine connections given by Christoffel symbols, torsion,
//!   curvature, Levi-Civita and conjugate connections, Codazzi residuals.
//! * [`kv`]: Koszul-Vinberg cochains of a flat torsion-free connection and the
//!   KV differential, with structural probes.
//! * [`derham`]: tangent-valued differential forms and the exterior covariant
//!   derivative.
//! * [`scenarios`]: declarative TOML scenarios, a registry of built-in
//!   verifications, and the report format used by the `kvgeom` binary.



mod error;
pub mod connection;
pub mod derham;
pub mod expr;
pub mod fields;
pub mod kv;
pub mod scenarios;





pub use connection::Connection;
pub use error::{Error, Result};
pub use expr::{Chart, Expr};
pub use kv::{Cochain, KvContext};
pub use fields::{
    EqualityReport, MetricField, OneForm, ProbeConfig, TangentTensor, Tensor02, VectorField,
};



/// Deterministic 64-bit mixer (splitmix64 finalizer). Used for structural
/// hashes and for deriving sub-seeds, so results never depend on the std hasher.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(mix64(seed ^ 0xA076_1D64_78BD_642F), |h, b| {
            mix64(h ^ u64::from(b))
        })
}
