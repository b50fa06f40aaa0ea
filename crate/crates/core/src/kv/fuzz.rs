//! Randomized `d_KV ∘ d_KV = 0` checks on randomly sheared flat charts.
//!
//! Each case draws a chart of dimension 2 or 3 whose flat structure has
//! affine coordinates `u^a = x^a + p_a(x^1, …, x^{a−1})` with random
//! polynomial `p_a`. The Jacobian is unipotent, so the Christoffel symbols
//! stay polynomial while being far from zero.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{d2_probe, Cochain, KvContext};
use crate::connection::Connection;
use crate::expr::{Chart, Expr};
use crate::fields::{
    random_function, random_one_form, random_polynomial, random_vector_field, ProbeConfig,
    TangentTensor, VectorField,
};
use crate::{derive_seed, Error, Result};

/// Tolerance for the d² residual.
pub const D2_TOLERANCE: f64 = 1e-9;

/// One fuzz case.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzCase {
    pub index: usize,
    pub dim: usize,
    /// Structure of the random cochain, e.g. `1*tensor + 1*ad + 1*scalar`.
    pub cochain: String,
    pub max_residual: f64,
    pub passed: bool,
}

/// Summary over all cases of one degree.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub degree: usize,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub cases: Vec<FuzzCase>,
    pub max_residual: f64,
    pub passed: bool,
    /// Wall time; excluded from deterministic output by the caller.
    #[serde(skip)]
    pub elapsed_ms: u128,
}

const COORDS: [&str; 3] = ["x", "y", "z"];

/// A random chart of dimension 2 or 3 with a sheared flat connection,
/// together with its affine coordinates `u^a(x)`.
pub fn random_sheared_context(rng: &mut ChaCha8Rng, cfg: &ProbeConfig) -> Result<(KvContext, Vec<Expr>)> {
    let dim = rng.gen_range(2..=3);
    let chart = Arc::new(Chart::boxed(&COORDS[..dim], &vec![(-1.0, 1.0); dim])?);
    let map: Vec<Expr> = (0..dim)
        .map(|a| {
            let shear = if a == 0 {
                Expr::zero()
            } else {
                // Variables of the smaller chart carry the same indices as
                // the leading coordinates of the full one.
                let lower = Chart::boxed(&COORDS[..a], &vec![(-1.0, 1.0); a])?;
                random_polynomial(&lower, 2, rng)
            };
            Ok(chart.var(a) + shear)
        })
        .collect::<Result<_>>()?;
    let conn = Connection::pullback_flat(&chart, &map)?.labeled("sheared");
    Ok((KvContext::new(conn, cfg)?, map))
}

fn random_tensor(ctx: &KvContext, rank: usize, degree: u32, rng: &mut ChaCha8Rng) -> TangentTensor {
    let chart = ctx.chart();
    let n = chart.dim();
    let comps: Vec<Expr> = (0..n * n.pow(rank as u32))
        .map(|_| random_polynomial(chart, degree, rng))
        .collect();
    TangentTensor::new(chart, rank, comps).expect("component count matches")
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
fn unipotent_inverse(jac: &[Expr], n: usize) -> Vec<Expr> {
    let mut inv = vec![Expr::zero(); n * n];
    for col in 0..n {
        inv[col * n + col] = Expr::one();
        for row in col + 1..n {
            let acc = Expr::sum((col..row).map(|m| &jac[row * n + m] * &inv[m * n + col]));
            inv[row * n + col] = -acc;
        }
    }
    inv
}

/// A Jacobi field: the pushforward `J⁻¹(A u + b)` of a random affine field
/// in the flat coordinates `u`.
fn random_jacobi_field(ctx: &KvContext, u: &[Expr], rng: &mut ChaCha8Rng) -> Result<VectorField> {
    let chart = ctx.chart();
    let n = chart.dim();
    let jac: Vec<Expr> = (0..n * n).map(|k| u[k / n].diff(k % n)).collect();
    let inv = unipotent_inverse(&jac, n);
    let mut dyadic = || f64::from(rng.gen_range(-8i32..=8)) / 8.0;
    let affine: Vec<Expr> = (0..n)
        .map(|_| {
            let b = Expr::constant(dyadic());
            Expr::sum(std::iter::once(b).chain(u.iter().map(|ub| ub * dyadic())))
        })
        .collect();
    let comps = (0..n)
        .map(|k| Expr::sum((0..n).map(|a| &inv[k * n + a] * &affine[a])))
        .collect();
    VectorField::new(chart, comps)
}

fn random_cochain(
    ctx: &KvContext,
    degree: usize,
    affine_coords: &[Expr],
    rng: &mut ChaCha8Rng,
    field_degree: u32,
) -> Result<Cochain> {
    let chart = ctx.chart();
    match degree {
        0 => Ok(Cochain::field(random_jacobi_field(ctx, affine_coords, rng)?)),
        1 => Cochain::linear(vec![
            (1.0, Cochain::tensor(random_tensor(ctx, 1, field_degree, rng))),
            (1.0, Cochain::ad(random_vector_field(chart, field_degree, rng))),
            (1.0, Cochain::scalar(random_function(chart, field_degree, rng))),
        ]),
        2 => Cochain::linear(vec![
            (1.0, Cochain::tensor(random_tensor(ctx, 2, field_degree, rng))),
            (1.0, Cochain::projective(random_one_form(chart, field_degree, rng))),
        ]),
        d => Err(Error::Degree(format!("d² fuzzing covers degrees 0 to 2, got {d}"))),
    }
}

/// Runs `trials` random cases of the given degree, in parallel.
pub fn d2_fuzz(degree: usize, trials: usize, seed: u64, samples: usize) -> Result<FuzzReport> {
    if degree > 2 {
        return Err(Error::Degree(format!("d² fuzzing covers degrees 0 to 2, got {degree}")));
    }
    let start = Instant::now();
    let base = ProbeConfig {
        samples,
        tolerance: D2_TOLERANCE,
        seed,
        trials: 1,
        field_degree: 1,
    };
    let cases: Vec<FuzzCase> = (0..trials)
        .into_par_iter()
        .map(|index| {
            let label = format!("d2/{degree}/{index}");
            let cfg = base.derive(&label);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &label));
            let (ctx, affine_coords) = random_sheared_context(&mut rng, &cfg)?;
            let theta = random_cochain(&ctx, degree, &affine_coords, &mut rng, 2)?;
            let report = d2_probe(&ctx, &theta, &cfg)?;
            Ok(FuzzCase {
                index,
                dim: ctx.chart().dim(),
                cochain: theta.describe(),
                max_residual: report.max_residual,
                passed: report.passed,
            })
        })
        .collect::<Result<_>>()?;
    let max_residual = cases.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    Ok(FuzzReport {
        degree,
        seed,
        samples,
        tolerance: D2_TOLERANCE,
        passed: cases.iter().all(|c| c.passed),
        max_residual,
        cases,
        elapsed_ms: start.elapsed().as_millis(),
    })
}
