//! The punctured-plane 2-cocycle that is not a coboundary.
//!
//! `f = ½ ln(x² + y²)` is harmonic, so its conformal cochain `θ` is closed.
//! A primitive would be a field `Z = u ∂x + v ∂y` with
//! `θ(X, Y) = ∇_X∇_Y Z − ∇_{∇_X Y} Z`; on the half planes `y ≷ 0` the
//! candidate `u = (x/2) ln(x² + y²) + y atan(x/y)` solves the resulting
//! Hessian system, but `u_y(2, t) = atan(2/t)` jumps by π across `t = 0`.
//!
//! With this sign convention for the coboundary the system reads
//! `(x² + y²) Hess(u) = [[x, y], [y, −x]]`. The form with the opposite sign
//! is also evaluated and expected to fail.

use std::sync::Arc;

use super::format::Expected;
use super::{judge, AssertionReport};
use crate::connection::Connection;
use crate::expr::{Chart, Expr};
use crate::fields::{probe_exprs, EqualityReport, MetricField, ProbeConfig, VectorField};
use crate::kv::{equal_probe, zero_probe, Cochain, KvContext};
use crate::Result;

const PUNCTURE: &str = "x^2 + y^2 > 0.01";
const U: &str = "x/2*ln(x^2 + y^2) + y*atan(x/y)";
/// The second component of a primitive on each half plane (derived, not printed).
const V: &str = "y/2*ln(x^2 + y^2) - x*atan(x/y)";
const JUMP_TOLERANCE: f64 = 1e-6;

fn punctured_box() -> Result<Chart> {
    Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)], &[PUNCTURE], crate::expr::DEFAULT_STANDOFF)
}

fn branch(upper: bool) -> Result<Arc<Chart>> {
    Ok(Arc::new(punctured_box()?.restrict(if upper { "y > 0" } else { "y < 0" })?))
}

fn entry(name: &str, reference: &str, expected: Expected, report: EqualityReport, note: Option<String>) -> AssertionReport {
    AssertionReport {
        name: name.to_string(),
        reference: reference.to_string(),
        max_residual: report.max_residual,
        tolerance: report.tolerance,
        expected,
        verdict: judge(&report, expected),
        note,
    }
}

/// Probes `sign · (x² + y²) Hess(u)` against `[[x, y], [y, −x]]`.
fn hessian_system(chart: &Chart, u: &Expr, sign: f64, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let (x, y) = (chart.var(0), chart.var(1));
    let r2 = &x * &x + &y * &y;
    let lhs: Vec<Expr> = [(0, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(i, j)| &r2 * &u.diff(i).diff(j) * sign)
        .collect();
    let rhs = vec![x.clone(), y, -x];
    probe_exprs(chart, cfg, &lhs, &rhs)
}

/// `θ = coboundary(Z)` (or its negative) on one half plane.
fn coboundary_check(upper: bool, sign: f64, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let chart = branch(upper)?;
    let g = MetricField::euclidean(&chart);
    let ctx = KvContext::new(Connection::levi_civita(&g)?, cfg)?;
    let theta = Cochain::conformal(g, chart.parse("ln(x^2 + y^2)/2")?)?;
    let z = VectorField::parse(&chart, &[U, V])?;
    equal_probe(&ctx, &ctx.coboundary_candidate(&z).scale(sign), &theta, cfg)
}

/// One-sided limit at 0 from the side of `side` (±1) by linear Richardson
/// extrapolation from `t = side·1e-5` and `t = side·1e-6`.
fn one_sided_limit(g: &Expr, side: f64) -> Result<f64> {
    let (t1, t2) = (side * 1e-5, side * 1e-6);
    let (f1, f2) = (g.eval(&[2.0, t1])?, g.eval(&[2.0, t2])?);
    Ok((t1 * f2 - t2 * f1) / (t1 - t2))
}

/// Jump of `u_y(2, ·)` across 0, with the raw values at `t = ±10^{-k}`.
fn jump(u: &Expr) -> Result<(f64, String)> {
    let uy = u.diff(1);
    let upper = one_sided_limit(&uy, 1.0)?;
    let lower = one_sided_limit(&uy, -1.0)?;
    let mut trace = Vec::new();
    for k in 1..=6 {
        let t = 10f64.powi(-k);
        trace.push(format!(
            "t=±1e-{k}: {:.9} / {:.9}",
            uy.eval(&[2.0, t])?,
            uy.eval(&[2.0, -t])?
        ));
    }
    Ok((
        upper - lower,
        format!("limits {upper:.12} and {lower:.12}; {}", trace.join("; ")),
    ))
}

/// The three-part obstruction check: Hessian system on both branches, the
/// jump of `u_y(2, ·)`, and the resulting non-extendability verdict.
pub fn punctured_plane_obstruction(cfg: &ProbeConfig) -> Result<Vec<AssertionReport>> {
    let mut out = Vec::new();
    let sub = |label: &str| cfg.derive(label);

    // (a) the Hessian system.
    for upper in [true, false] {
        let chart = branch(upper)?;
        let u = chart.parse(U)?;
        let side = if upper { "upper" } else { "lower" };
        out.push(entry(
            &format!("hessian_system_{side}"),
            "(x^2 + y^2) Hess(u) = [[x, y], [y, -x]]",
            Expected::Pass,
            hessian_system(&chart, &u, 1.0, &sub(&format!("hessian/{side}")))?,
            None,
        ));
    }
    let upper = branch(true)?;
    out.push(entry(
        "hessian_system_as_printed",
        "-(x^2 + y^2) Hess(u) = [[x, y], [y, -x]]",
        Expected::Fail,
        hessian_system(&upper, &upper.parse(U)?, -1.0, &sub("hessian/printed"))?,
        Some("the candidate u satisfies the system with the opposite overall sign".into()),
    ));
    for up in [true, false] {
        let side = if up { "upper" } else { "lower" };
        out.push(entry(
            &format!("coboundary_{side}"),
            "theta(X,Y) = nabla_X nabla_Y Z - nabla_{nabla_X Y} Z with Z = (u, v)",
            Expected::Pass,
            coboundary_check(up, 1.0, &sub(&format!("coboundary/{side}")))?,
            Some(format!("v = {V}")),
        ));
    }
    out.push(entry(
        "coboundary_opposite_sign",
        "nabla_{nabla_X Y} Z - nabla_X nabla_Y Z = theta(X,Y)",
        Expected::Fail,
        coboundary_check(true, -1.0, &sub("coboundary/opposite"))?,
        None,
    ));

    // (b) the jump of u_y(2, t) across t = 0.
    let chart = punctured_box()?;
    let (j, trace) = jump(&chart.parse(U)?)?;
    out.push(entry(
        "u_y_jump_is_pi",
        "lim u_y(2,t) at 0+ minus lim at 0- = pi",
        Expected::Pass,
        EqualityReport::scalar((j - std::f64::consts::PI).abs(), JUMP_TOLERANCE),
        Some(trace),
    ));
    let shifted = chart.parse(&format!("{U} + 0.75*x - 1.25*y + 2"))?;
    let (js, _) = jump(&shifted)?;
    out.push(entry(
        "u_y_jump_ignores_affine_part",
        "u + (a x + b y + c) has the same jump pi",
        Expected::Pass,
        EqualityReport::scalar((js - std::f64::consts::PI).abs(), JUMP_TOLERANCE),
        Some("a = 0.75, b = -1.25, c = 2".into()),
    ));

    // (c) a nonzero jump means u_y(2, ·) has no continuous extension to 0.
    out.push(entry(
        "u_y_extends_continuously",
        "t -> u_y(2,t) cannot be extended continuously to R",
        Expected::Fail,
        EqualityReport::scalar(j.abs(), JUMP_TOLERANCE),
        Some("residual is the size of the jump; expected to fail, so theta is not a coboundary".into()),
    ));

    // The cochain is a cocycle on the whole punctured box.
    let chart = Arc::new(chart);
    let g = MetricField::euclidean(&chart);
    let ctx = KvContext::new(Connection::levi_civita(&g)?, cfg)?;
    let theta = Cochain::conformal(g, chart.parse("ln(x^2 + y^2)/2")?)?;
    out.push(entry(
        "cocycle",
        "d_KV theta = 0",
        Expected::Pass,
        zero_probe(&ctx, &ctx.d_kv(&theta)?, &sub("cocycle"))?,
        None,
    ));
    Ok(out)
}
