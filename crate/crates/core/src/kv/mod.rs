//! Koszul-Vinberg cochains of a flat torsion-free connection and the KV
//! differential.
//!
//! Cochains are evaluators: a degree-`n` cochain maps `n` vector fields to a
//! vector field, so non-tensorial cochains such as `ad_Z` or the connection
//! itself are represented exactly. The differential is
//!
//! ```text
//! (d X)(Y) = [X, Y]                                            (degree 0)
//! (d θ)(X_1, …, X_{n+1}) = Σ_{i=1}^{n} (−1)^i [ (∇_{X_i} θ)(X_1, …, X̂_i, …, X_{n+1})
//!                                         + ∇_{θ(X_1, …, X̂_i, …, X_n, X_i)} X_{n+1} ]
//! ```
//!
//! with `(∇_X θ)(X_1, …, X_n) = ∇_X(θ(X_1, …, X_n)) − Σ_s θ(…, ∇_X X_s, …)`.

mod cochain;
pub mod fuzz;
mod probes;

pub use cochain::{Cochain, CochainKind};
pub use probes::{
    d2_probe, derivation_probe, equal_probe, jacobi_probe, multilinearity_probe, symmetry_probe,
    tensoriality_probe, tensoriality_probe_slots, zero_probe,
};

use std::sync::Arc;

use crate::connection::Connection;
use crate::expr::Chart;
use crate::fields::{ProbeConfig, VectorField};
use crate::{Error, Result};

/// Largest cochain degree accepted by [`KvContext::d_kv`].
pub const MAX_INPUT_DEGREE: usize = 3;

/// The KV algebra of a connection that passed the flatness and torsion probes.
#[derive(Clone, Debug)]
pub struct KvContext {
    connection: Connection,
    cfg: ProbeConfig,
}

impl KvContext {
    /// Checks flatness and torsion-freeness at sampled points before
    /// accepting the connection.
    pub fn new(connection: Connection, cfg: &ProbeConfig) -> Result<KvContext> {
        let flat = connection.flatness_probe(&cfg.derive("context/flat"))?;
        if !flat.passed {
            return Err(Error::Setup(format!(
                "connection is not flat (max curvature residual {:e})",
                flat.max_residual
            )));
        }
        let torsion = connection.torsion_tensor_probe(&cfg.derive("context/torsion"))?;
        if !torsion.passed {
            return Err(Error::Setup(format!(
                "connection has torsion (max residual {:e})",
                torsion.max_residual
            )));
        }
        Ok(KvContext {
            connection,
            cfg: cfg.clone(),
        })
    }

    /// The coordinate connection on `chart`.
    pub fn flat(chart: &Arc<Chart>, cfg: &ProbeConfig) -> Result<KvContext> {
        KvContext::new(Connection::flat(chart), cfg)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.connection.chart()
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.cfg
    }

    /// Same connection, sampled on another chart with the same coordinates.
    pub fn on_chart(&self, chart: &Arc<Chart>) -> Result<KvContext> {
        Ok(KvContext {
            connection: self.connection.on_chart(chart)?,
            cfg: self.cfg.clone(),
        })
    }

    /// `∇_X Y`.
    pub fn nabla(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        self.connection.cov_deriv_vf(x, y)
    }

    /// The KV differential of `theta`.
    pub fn d_kv(&self, theta: &Cochain) -> Result<Cochain> {
        if theta.degree() > MAX_INPUT_DEGREE {
            return Err(Error::Degree(format!(
                "d_KV accepts cochains of degree at most {MAX_INPUT_DEGREE}, got {}",
                theta.degree()
            )));
        }
        Ok(Cochain::differential(theta.clone()))
    }

    /// `∇_X θ` for `θ` of degree ≥ 1.
    pub fn nabla_cochain(&self, x: &VectorField, theta: &Cochain) -> Result<Cochain> {
        if theta.degree() == 0 {
            return Err(Error::Degree("∇_X θ needs a cochain of degree at least 1".into()));
        }
        Ok(Cochain::covariant(x.clone(), theta.clone()))
    }

    /// Admits `z` as a degree-0 cochain after a Jacobi probe.
    pub fn jacobi_element(&self, z: &VectorField, cfg: &ProbeConfig) -> Result<Cochain> {
        let r = jacobi_probe(self, z, cfg)?;
        if !r.passed {
            return Err(Error::Setup(format!(
                "field is not a Jacobi element (max residual {:e})",
                r.max_residual
            )));
        }
        Ok(Cochain::field(z.clone()))
    }

    /// `θ = ∇ − D` for a connection `D` on the same chart.
    pub fn conn_diff(&self, d: &Connection) -> Result<Cochain> {
        Cochain::conn_diff(&self.connection, d)
    }

    /// `θ(X, Y) = ∇_X∇_Y Z − ∇_{∇_X Y} Z`.
    pub fn coboundary_candidate(&self, z: &VectorField) -> Cochain {
        Cochain::coboundary(z.clone())
    }

    pub(crate) fn eval_differential(&self, theta: &Cochain, args: &[VectorField]) -> Result<VectorField> {
        let n = theta.degree();
        if n == 0 {
            let z = theta.eval(self, &[])?;
            return z.bracket(&args[0]);
        }
        let last = &args[n];
        let mut total = VectorField::zero(self.chart());
        for i in 0..n {
            let rest: Vec<VectorField> = args
                .iter()
                .enumerate()
                .filter(|(s, _)| *s != i)
                .map(|(_, a)| a.clone())
                .collect();
            let covariant = self.eval_covariant(&args[i], theta, &rest)?;
            // θ(X_1, …, X̂_i, …, X_n, X_i): the first n arguments with X_i moved last.
            let mut moved: Vec<VectorField> = args[..n]
                .iter()
                .enumerate()
                .filter(|(s, _)| *s != i)
                .map(|(_, a)| a.clone())
                .collect();
            moved.push(args[i].clone());
            let direction = theta.eval(self, &moved)?;
            let term = covariant + self.nabla(&direction, last)?;
            // (−1)^i with i counted from 1.
            total = if i % 2 == 0 { total - term } else { total + term };
        }
        Ok(total)
    }

    pub(crate) fn eval_covariant(
        &self,
        x: &VectorField,
        theta: &Cochain,
        args: &[VectorField],
    ) -> Result<VectorField> {
        let mut out = self.nabla(x, &theta.eval(self, args)?)?;
        for s in 0..args.len() {
            let mut shifted = args.to_vec();
            shifted[s] = self.nabla(x, &args[s])?;
            out = out - theta.eval(self, &shifted)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
