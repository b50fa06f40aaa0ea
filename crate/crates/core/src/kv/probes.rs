//! Sampled structural checks on cochains. Every probe draws fresh random
//! polynomial arguments per trial (degree `cfg.field_degree`) and compares
//! the resulting fields at the shared sample points.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Cochain, KvContext};
use crate::expr::Expr;
use crate::fields::{probe_trials, random_polynomial, random_vector_field, EqualityReport, Field, ProbeConfig, VectorField};
use crate::{Error, Result};

fn random_args(ctx: &KvContext, n: usize, cfg: &ProbeConfig, rng: &mut ChaCha8Rng) -> Vec<VectorField> {
    (0..n)
        .map(|_| random_vector_field(ctx.chart(), cfg.field_degree, rng))
        .collect()
}

/// A random function that is never constant: a random polynomial plus a
/// random nonzero linear term.
fn random_multiplier(ctx: &KvContext, cfg: &ProbeConfig, rng: &mut ChaCha8Rng) -> Expr {
    let chart = ctx.chart();
    let slot = rng.gen_range(0..chart.dim());
    let c = f64::from(rng.gen_range(1i32..=8)) / 4.0;
    random_polynomial(chart, cfg.field_degree.max(1), rng) + chart.var(slot) * c
}

fn components(v: VectorField) -> Vec<Expr> {
    v.components().to_vec()
}

fn concat(parts: Vec<VectorField>) -> Vec<Expr> {
    parts.into_iter().flat_map(components).collect()
}

fn build_pair<F>(ctx: &KvContext, cfg: &ProbeConfig, build: F) -> Result<EqualityReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<(Vec<Expr>, Vec<Expr>)> + Sync,
{
    probe_trials(ctx.chart(), cfg, |rng, _| build(rng))
}

/// `θ ≡ 0` on random argument tuples.
pub fn zero_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    build_pair(ctx, cfg, |rng| {
        let args = random_args(ctx, theta.degree(), cfg, rng);
        let v = theta.eval(ctx, &args)?;
        let zeros = vec![Expr::zero(); v.dim()];
        Ok((components(v), zeros))
    })
}

/// `a ≡ b` on random argument tuples.
pub fn equal_probe(ctx: &KvContext, a: &Cochain, b: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    if a.degree() != b.degree() {
        return Err(Error::Degree(format!(
            "cannot compare cochains of degree {} and {}",
            a.degree(),
            b.degree()
        )));
    }
    build_pair(ctx, cfg, |rng| {
        let args = random_args(ctx, a.degree(), cfg, rng);
        Ok((components(a.eval(ctx, &args)?), components(b.eval(ctx, &args)?)))
    })
}

/// `d_KV(d_KV θ) ≡ 0`.
pub fn d2_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    if theta.degree() > 2 {
        return Err(Error::Degree(format!(
            "d² probe takes cochains of degree at most 2, got {}",
            theta.degree()
        )));
    }
    let dd = ctx.d_kv(&ctx.d_kv(theta)?)?;
    zero_probe(ctx, &dd, cfg)
}

/// `θ(X, Y) ≡ θ(Y, X)` for a degree-2 cochain.
pub fn symmetry_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    zero_probe(ctx, &theta.antisymmetric_part()?, cfg)
}

/// One report per slot: `θ(…, f X_s, …) ≡ f θ(…, X_s, …)` for a random
/// non-constant polynomial `f`.
pub fn tensoriality_probe_slots(
    ctx: &KvContext,
    theta: &Cochain,
    cfg: &ProbeConfig,
) -> Result<Vec<EqualityReport>> {
    (0..theta.degree())
        .map(|slot| {
            let cfg = cfg.derive(&format!("tensoriality/{slot}"));
            build_pair(ctx, &cfg, |rng| {
                let args = random_args(ctx, theta.degree(), &cfg, rng);
                let f = random_multiplier(ctx, &cfg, rng);
                let mut scaled = args.clone();
                scaled[slot] = args[slot].scale(&f);
                Ok((
                    components(theta.eval(ctx, &scaled)?),
                    components(theta.eval(ctx, &args)?.scale(&f)),
                ))
            })
        })
        .collect()
}

/// C^∞-linearity in every slot; degree-0 cochains pass vacuously.
pub fn tensoriality_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    if theta.degree() == 0 {
        return zero_probe(ctx, &Cochain::zero(0), cfg);
    }
    let reports = tensoriality_probe_slots(ctx, theta, cfg)?;
    Ok(EqualityReport::combine(reports, cfg.tolerance))
}

/// Additivity and real homogeneity in every slot.
pub fn multilinearity_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let n = theta.degree();
    build_pair(ctx, cfg, |rng| {
        let args = random_args(ctx, n, cfg, rng);
        let base = theta.eval(ctx, &args)?;
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for slot in 0..n {
            let other = random_vector_field(ctx.chart(), cfg.field_degree, rng);
            let c = f64::from(rng.gen_range(-8i32..=8)) / 4.0;
            let mut summed = args.clone();
            summed[slot] = args[slot].clone() + other.clone();
            let mut swapped = args.clone();
            swapped[slot] = other;
            lhs.push(theta.eval(ctx, &summed)?);
            rhs.push(base.clone() + theta.eval(ctx, &swapped)?);
            let mut scaled = args.clone();
            scaled[slot] = args[slot].scale_const(c);
            lhs.push(theta.eval(ctx, &scaled)?);
            rhs.push(base.scale_const(c));
        }
        Ok((concat(lhs), concat(rhs)))
    })
}

/// `∇_X∇_Y Z − ∇_{∇_X Y} Z ≡ 0` for random `X, Y`.
pub fn jacobi_probe(ctx: &KvContext, z: &VectorField, cfg: &ProbeConfig) -> Result<EqualityReport> {
    zero_probe(ctx, &Cochain::coboundary(z.clone()), cfg)
}

/// `θ([X, Y]) ≡ [θX, Y] + [X, θY]` for a degree-1 cochain.
pub fn derivation_probe(ctx: &KvContext, theta: &Cochain, cfg: &ProbeConfig) -> Result<EqualityReport> {
    if theta.degree() != 1 {
        return Err(Error::Degree("derivation probe needs a 1-cochain".into()));
    }
    build_pair(ctx, cfg, |rng| {
        let args = random_args(ctx, 2, cfg, rng);
        let (x, y) = (&args[0], &args[1]);
        let lhs = theta.eval(ctx, &[x.bracket(y)?])?;
        let tx = theta.eval(ctx, std::slice::from_ref(x))?;
        let ty = theta.eval(ctx, std::slice::from_ref(y))?;
        let rhs = tx.bracket(y)? + x.bracket(&ty)?;
        Ok((components(lhs), components(rhs)))
    })
}
