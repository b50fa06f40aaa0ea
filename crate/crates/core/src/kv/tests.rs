use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fuzz::{d2_fuzz, random_sheared_context};
use super::*;
use crate::connection::codazzi_probe;
use crate::expr::Expr;
use crate::fields::{probe_trials, random_vector_field, Field, MetricField, OneForm, TangentTensor};

fn chart(coords: &[&str], lo: f64, hi: f64) -> Arc<Chart> {
    Arc::new(Chart::boxed(coords, &vec![(lo, hi); coords.len()]).unwrap())
}

fn plane() -> Arc<Chart> {
    chart(&["x", "y"], -2.0, 2.0)
}

fn space() -> Arc<Chart> {
    chart(&["x", "y", "z"], -2.0, 2.0)
}

fn cfg() -> ProbeConfig {
    ProbeConfig::default()
}

fn sheared(seed: u64) -> KvContext {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_sheared_context(&mut rng, &cfg()).unwrap().0
}

fn vf(c: &Arc<Chart>, texts: &[&str]) -> VectorField {
    VectorField::parse(c, texts).unwrap()
}

fn at(v: &VectorField, p: &[f64]) -> Vec<f64> {
    v.eval(p).unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())), "{a:?} vs {b:?}");
    }
}

/// Compares two cochain-valued closures on the same random arguments.
fn probe_fn<F, G>(ctx: &KvContext, n: usize, lhs: F, rhs: G) -> fields::EqualityReport
where
    F: Fn(&[VectorField]) -> Result<VectorField> + Sync,
    G: Fn(&[VectorField]) -> Result<VectorField> + Sync,
{
    let cfg = cfg();
    probe_trials(ctx.chart(), &cfg, |rng, _| {
        let args: Vec<VectorField> = (0..n).map(|_| random_vector_field(ctx.chart(), 2, rng)).collect();
        Ok((
            lhs(&args)?.components().to_vec(),
            rhs(&args)?.components().to_vec(),
        ))
    })
    .unwrap()
}

use crate::fields;

#[test]
fn degree_one_expansion_matches_direct_formula() {
    for seed in 0..3 {
        let ctx = sheared(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let z = random_vector_field(ctx.chart(), 2, &mut rng);
        let t = TangentTensor::from_fn(ctx.chart(), 1, |k, idx| {
            ctx.chart().var(k) * ctx.chart().var(idx[0]) + 1.0
        });
        let theta = Cochain::ad(z).add(&Cochain::tensor(t)).unwrap();
        let d = ctx.d_kv(&theta).unwrap();
        let r = probe_fn(
            &ctx,
            2,
            |a| d.eval(&ctx, a),
            |a| {
                let (x, y) = (&a[0], &a[1]);
                let first = ctx.nabla(x, &theta.eval(&ctx, std::slice::from_ref(y))?)?;
                let second = theta.eval(&ctx, &[ctx.nabla(x, y)?])?;
                let third = ctx.nabla(&theta.eval(&ctx, std::slice::from_ref(x))?, y)?;
                Ok(second - first - third)
            },
        );
        assert!(r.passed, "{}", r.max_residual);
    }
}

#[test]
fn degree_two_expansion_matches_direct_formula() {
    let ctx = sheared(7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = fields::random_one_form(ctx.chart(), 1, &mut rng);
    let t = TangentTensor::from_fn(ctx.chart(), 2, |k, idx| {
        ctx.chart().var(idx[0]) * (k + 1) as f64 - ctx.chart().var(idx[1]) * ctx.chart().var(k)
    });
    // Not symmetric, so the last term does not drop out.
    let theta = Cochain::projective(w).add(&Cochain::tensor(t)).unwrap();
    let d = ctx.d_kv(&theta).unwrap();
    let r = probe_fn(
        &ctx,
        3,
        |a| d.eval(&ctx, a),
        |a| {
            let (x, y, z) = (&a[0], &a[1], &a[2]);
            let nyt = ctx.nabla_cochain(y, &theta)?.eval(&ctx, &[x.clone(), z.clone()])?;
            let nxt = ctx.nabla_cochain(x, &theta)?.eval(&ctx, &[y.clone(), z.clone()])?;
            let skew = theta.eval(&ctx, &[x.clone(), y.clone()])? - theta.eval(&ctx, &[y.clone(), x.clone()])?;
            Ok(nyt - nxt + ctx.nabla(&skew, z)?)
        },
    );
    assert!(r.passed, "{}", r.max_residual);
}

#[test]
fn degree_zero_differential_is_the_bracket() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let z = vf(&c, &["2*x + 3", "y - x"]);
    let d = ctx.d_kv(&Cochain::field(z.clone())).unwrap();
    let y = vf(&c, &["x*y", "x^2"]);
    let got = d.eval(&ctx, &[y.clone()]).unwrap();
    // Oracle: [Z, Y]^k = Z(Y^k) − Y(Z^k), by hand.
    // Z(xy) = (2x+3)y + (y−x)x, Y(2x+3) = 2xy; Z(x²) = 2x(2x+3), Y(y−x) = x² − xy.
    let p = [0.7, -1.1];
    let (x, yy) = (p[0], p[1]);
    let want = [
        (2.0 * x + 3.0) * yy + (yy - x) * x - 2.0 * x * yy,
        2.0 * x * (2.0 * x + 3.0) - (x * x - x * yy),
    ];
    assert_close(&at(&got, &p), &want, 1e-12);
}

#[test]
fn scalar_cochain_differential_both_forms() {
    let ctx = sheared(3);
    let f = ctx.chart().parse("x^2 - x*y + 1").unwrap();
    let theta = Cochain::scalar(f.clone());
    let d = ctx.d_kv(&theta).unwrap();
    let short = probe_fn(&ctx, 2, |a| d.eval(&ctx, a), |a| Ok(-ctx.nabla(&a[0], &a[1].scale(&f))?));
    assert!(short.passed, "{}", short.max_residual);
    let long = probe_fn(
        &ctx,
        2,
        |a| d.eval(&ctx, a),
        |a| {
            let (x, y) = (&a[0], &a[1]);
            Ok(ctx.nabla(x, y)?.scale(&f) - ctx.nabla(x, &y.scale(&f))? - ctx.nabla(&x.scale(&f), y)?)
        },
    );
    assert!(long.passed, "{}", long.max_residual);
}

#[test]
fn ad_differential_is_the_coboundary_candidate_and_symmetric_tensorial() {
    for seed in 0..3 {
        let ctx = sheared(seed + 20);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_vector_field(ctx.chart(), 2, &mut rng);
        let d = ctx.d_kv(&Cochain::ad(z.clone())).unwrap();
        assert!(equal_probe(&ctx, &d, &ctx.coboundary_candidate(&z), &cfg()).unwrap().passed);
        assert!(symmetry_probe(&ctx, &d, &cfg()).unwrap().passed);
        assert!(tensoriality_probe(&ctx, &d, &cfg()).unwrap().passed);
        assert!(multilinearity_probe(&ctx, &d, &cfg()).unwrap().passed);
    }
}

#[test]
fn ad_is_not_tensorial() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let r = tensoriality_probe(&ctx, &Cochain::ad(vf(&c, &["1", "x"])), &cfg()).unwrap();
    assert!(r.witnessed());
}

#[test]
fn identity_differential_has_bracket_antisymmetric_part() {
    let ctx = sheared(5);
    let d = ctx.d_kv(&Cochain::identity()).unwrap();
    let anti = d.antisymmetric_part().unwrap();
    let yx = Cochain::custom("[Y,X]", 2, |_, a| a[1].bracket(&a[0]));
    assert!(equal_probe(&ctx, &anti, &yx, &cfg().with_tolerance(1e-10)).unwrap().passed);
    assert!(symmetry_probe(&ctx, &d, &cfg()).unwrap().witnessed());
}

#[test]
fn minus_identity_differential_is_the_connection() {
    for seed in [0, 1, 2, 3] {
        let ctx = sheared(seed + 40);
        let d = ctx.d_kv(&Cochain::identity().scale(-1.0)).unwrap();
        let conn = Cochain::connection(ctx.connection().clone());
        assert!(equal_probe(&ctx, &d, &conn, &cfg().with_tolerance(1e-12)).unwrap().passed);
        assert!(zero_probe(&ctx, &ctx.d_kv(&conn).unwrap(), &cfg().with_tolerance(1e-12)).unwrap().passed);
    }
}

#[test]
fn connection_difference_differential_matches_symmetric_form() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let g = MetricField::diagonal(&c, vec![c.parse("1 + y^2").unwrap(), c.parse("exp(x)").unwrap()]).unwrap();
    let d = Connection::levi_civita(&g).unwrap();
    let theta = ctx.conn_diff(&d).unwrap();
    assert!(tensoriality_probe(&ctx, &theta, &cfg()).unwrap().passed);
    assert!(symmetry_probe(&ctx, &theta, &cfg()).unwrap().passed);
    let dtheta = ctx.d_kv(&theta).unwrap();
    let r = probe_fn(
        &ctx,
        3,
        |a| dtheta.eval(&ctx, a),
        |a| {
            let (x, y, z) = (&a[0], &a[1], &a[2]);
            Ok(ctx.nabla_cochain(y, &theta)?.eval(&ctx, &[x.clone(), z.clone()])?
                - ctx.nabla_cochain(x, &theta)?.eval(&ctx, &[y.clone(), z.clone()])?)
        },
    );
    assert!(r.passed, "{}", r.max_residual);
}

#[test]
fn projective_cocycle_iff_parallel_form() {
    let c = space();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let parallel = Cochain::projective(OneForm::parse(&c, &["1", "0", "0"]).unwrap());
    assert!(zero_probe(&ctx, &ctx.d_kv(&parallel).unwrap(), &cfg()).unwrap().passed);
    let bent = Cochain::projective(OneForm::parse(&c, &["0", "x", "0"]).unwrap());
    assert!(zero_probe(&ctx, &ctx.d_kv(&bent).unwrap(), &cfg()).unwrap().witnessed());
}

#[test]
fn projective_covariant_derivative() {
    let ctx = sheared(9);
    let c = ctx.chart().clone();
    let w = OneForm::parse(&c, &vec!["x*y"; c.dim()]).unwrap();
    let theta = Cochain::projective(w.clone());
    let r = probe_fn(
        &ctx,
        3,
        |a| ctx.nabla_cochain(&a[0], &theta)?.eval(&ctx, &a[1..]),
        |a| {
            let nw = ctx.connection().cov_deriv_oneform(&a[0], &w)?;
            Ok(a[2].scale(&nw.apply(&a[1])) + a[1].scale(&nw.apply(&a[2])))
        },
    );
    assert!(r.passed, "{}", r.max_residual);
}

#[test]
fn dual_projective_cocycle_iff_codazzi() {
    let c = space();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let v = vf(&c, &["1", "0", "0"]);
    assert!(ctx.connection().parallel_field_probe(&v, &cfg()).unwrap().passed);
    let codazzi = MetricField::hessian(&c, &c.parse("x^4/12 + x^2/2 + y^2/2 + exp(z) + x*y*z").unwrap());
    assert!(codazzi_probe(&codazzi, ctx.connection(), &cfg()).unwrap().passed);
    let theta = Cochain::dual_projective(codazzi, v.clone()).unwrap();
    assert!(zero_probe(&ctx, &ctx.d_kv(&theta).unwrap(), &cfg()).unwrap().passed);

    let one = Expr::one();
    let other = MetricField::diagonal(&c, vec![c.parse("1 + y^2").unwrap(), one.clone(), one]).unwrap();
    assert!(codazzi_probe(&other, ctx.connection(), &cfg()).unwrap().witnessed());
    let theta = Cochain::dual_projective(other, v).unwrap();
    assert!(zero_probe(&ctx, &ctx.d_kv(&theta).unwrap(), &cfg()).unwrap().witnessed());
}

#[test]
fn conjugate_differential_is_minus_four_curvature() {
    let c = chart(&["x", "y"], -1.0, 1.0);
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let g = MetricField::hessian(&c, &c.parse("exp(x + y) + exp(x) + exp(y)").unwrap());
    let conj = ctx.connection().conjugate(&g).unwrap();
    let lc = Connection::levi_civita(&g).unwrap();
    let d = ctx.d_kv(&Cochain::connection(conj.clone())).unwrap();
    let r4 = Cochain::curvature(lc.clone()).scale(4.0);
    let tol = cfg().with_tolerance(1e-8);
    assert!(equal_probe(&ctx, &d, &r4.scale(-1.0), &tol).unwrap().passed);
    // The curvature is genuinely nonzero, so the opposite sign is refuted.
    assert!(equal_probe(&ctx, &d, &r4, &tol).unwrap().witnessed());
    // The curvature cochain is closed.
    let dr = ctx.d_kv(&Cochain::curvature(lc.clone())).unwrap();
    assert!(zero_probe(&ctx, &dr, &tol.with_trials(1)).unwrap().passed);
    assert!(lc.equal_probe(&ctx.connection().midpoint(&conj).unwrap(), &cfg().with_tolerance(1e-10)).unwrap().passed);
}

#[test]
fn conformal_cochain_cocycle_iff_harmonic() {
    let c = chart(&["x", "y"], 0.5, 2.0);
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let g = MetricField::euclidean(&c);
    for (text, harmonic) in [("x*y", true), ("x^2 - y^2", true), ("ln(x^2 + y^2)/2", true), ("x^2", false)] {
        let f = c.parse(text).unwrap();
        let theta = Cochain::conformal(g.clone(), f).unwrap();
        assert!(symmetry_probe(&ctx, &theta, &cfg()).unwrap().passed);
        let r = zero_probe(&ctx, &ctx.d_kv(&theta).unwrap(), &cfg()).unwrap();
        if harmonic {
            assert!(r.passed, "{text}: {}", r.max_residual);
        } else {
            assert!(r.witnessed(), "{text}");
        }
    }
}

#[test]
fn conformal_component_identities() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let g = MetricField::euclidean(&c);
    let f = c.parse("x^2 + x*y^2").unwrap();
    let lap = crate::connection::laplacian(&f, &g).unwrap();
    let d = ctx.d_kv(&Cochain::conformal(g.clone(), f).unwrap()).unwrap();
    let e = [VectorField::coordinate(&c, 0), VectorField::coordinate(&c, 1)];
    let p = [0.3, -0.8];
    let lap_p = lap.eval(&p).unwrap();
    for (i, j) in [(0, 1), (1, 0)] {
        let jij = d.eval(&ctx, &[e[i].clone(), e[j].clone(), e[i].clone()]).unwrap();
        let ijj = d.eval(&ctx, &[e[i].clone(), e[j].clone(), e[j].clone()]).unwrap();
        assert_close(&[g.apply(&jij, &e[j]).eval(&p).unwrap()], &[-lap_p], 1e-12);
        assert_close(&[g.apply(&ijj, &e[j]).eval(&p).unwrap()], &[0.0], 1e-12);
        assert_close(&[g.apply(&ijj, &e[i]).eval(&p).unwrap()], &[lap_p], 1e-12);
    }
}

#[test]
fn jacobi_probe_examples() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    assert!(jacobi_probe(&ctx, &vf(&c, &["2*x + 3", "0"]), &cfg()).unwrap().passed);
    assert!(jacobi_probe(&ctx, &VectorField::zero(&c), &cfg()).unwrap().passed);
    assert!(jacobi_probe(&ctx, &vf(&c, &["x^2", "0"]), &cfg()).unwrap().witnessed());
    assert!(ctx.jacobi_element(&vf(&c, &["x^2", "0"]), &cfg()).is_err());
    assert!(ctx.jacobi_element(&vf(&c, &["y - 1", "x"]), &cfg()).is_ok());
}

#[test]
fn constructor_values() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let (ex, ey) = (VectorField::coordinate(&c, 0), VectorField::coordinate(&c, 1));
    let p = [0.4, 1.3];
    let proj = Cochain::projective(OneForm::coordinate(&c, 0));
    assert_close(&at(&proj.eval(&ctx, &[ex.clone(), ey.clone()]).unwrap(), &p), &[0.0, 1.0], 0.0);
    let dual = Cochain::dual_projective(MetricField::euclidean(&c), ex.clone()).unwrap();
    assert_close(&at(&dual.eval(&ctx, &[ey.clone(), ey.clone()]).unwrap(), &p), &[-1.0, 0.0], 0.0);

    // −g(X,Y) grad f + (Xf)Y + (Yf)X at (1, 0) for f = ½ ln(x² + y²):
    // f_x = x/r² = 1, f_y = 0, so θ(∂x,∂x) = −∂x + 2∂x = ∂x and θ(∂y,∂y) = −∂x.
    let f = c.parse("ln(x^2 + y^2)/2").unwrap();
    let conf = Cochain::conformal(MetricField::euclidean(&c), f).unwrap();
    let q = [1.0, 0.0];
    assert_close(&at(&conf.eval(&ctx, &[ex.clone(), ex.clone()]).unwrap(), &q), &[1.0, 0.0], 1e-15);
    assert_close(&at(&conf.eval(&ctx, &[ey.clone(), ey.clone()]).unwrap(), &q), &[-1.0, 0.0], 1e-15);
    assert_close(&at(&conf.eval(&ctx, &[ex, ey]).unwrap(), &q), &[0.0, 1.0], 1e-15);
}

#[test]
fn derivation_probe_separates_ad_from_scalars() {
    let ctx = sheared(11);
    let c = ctx.chart().clone();
    let z = random_vector_field(&c, 2, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(derivation_probe(&ctx, &Cochain::ad(z), &cfg()).unwrap().passed);
    assert!(derivation_probe(&ctx, &Cochain::scalar(c.parse("x").unwrap()), &cfg()).unwrap().witnessed());
}

#[test]
fn multilinearity_rejects_nonlinear_custom() {
    let ctx = KvContext::flat(&plane(), &cfg()).unwrap();
    let square = Cochain::custom("square", 1, |_, a| Ok(a[0].scale(a[0].component(0))));
    assert!(multilinearity_probe(&ctx, &square, &cfg()).unwrap().witnessed());
    assert!(multilinearity_probe(&ctx, &Cochain::identity(), &cfg()).unwrap().passed);
}

#[test]
fn covariant_of_identity_vanishes() {
    let ctx = sheared(13);
    let x = random_vector_field(ctx.chart(), 1, &mut ChaCha8Rng::seed_from_u64(2));
    let n = ctx.nabla_cochain(&x, &Cochain::identity()).unwrap();
    assert!(zero_probe(&ctx, &n, &cfg().with_tolerance(1e-12)).unwrap().passed);
}

#[test]
fn tensor_covariant_derivative_is_leibniz() {
    // On a flat chart with Γ = 0 the covariant derivative of a tensor is the
    // componentwise directional derivative.
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let t = TangentTensor::from_fn(&c, 2, |k, idx| c.var(k) * c.var(idx[0]) * c.var(idx[1]) + c.var(idx[1]));
    let theta = Cochain::tensor(t.clone());
    let x = vf(&c, &["y", "1 + x^2"]);
    let dt = TangentTensor::from_fn(&c, 2, |k, idx| x.apply(t.component(k, idx)));
    let got = ctx.nabla_cochain(&x, &theta).unwrap();
    assert!(equal_probe(&ctx, &got, &Cochain::tensor(dt), &cfg()).unwrap().passed);
}

#[test]
fn d2_vanishes_for_each_constructor() {
    let ctx = sheared(17);
    let c = ctx.chart().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = random_vector_field(&c, 2, &mut rng);
    let w = fields::random_one_form(&c, 2, &mut rng);
    let cases = vec![
        Cochain::identity().scale(-1.0),
        Cochain::scalar(c.parse("x*y + 1").unwrap()),
        Cochain::ad(z.clone()),
        Cochain::projective(w),
        Cochain::coboundary(z),
        Cochain::connection(ctx.connection().clone()),
    ];
    for theta in cases {
        let r = d2_probe(&ctx, &theta, &cfg()).unwrap();
        assert!(r.passed, "{}: {}", theta.describe(), r.max_residual);
    }
}

#[test]
fn d2_fuzz_small() {
    for degree in 0..=2 {
        let r = d2_fuzz(degree, 3, 5, 30).unwrap();
        assert!(r.passed, "degree {degree}: {}", r.max_residual);
        assert_eq!(r.cases.len(), 3);
    }
}

#[test]
fn degree_errors() {
    let c = plane();
    let ctx = KvContext::flat(&c, &cfg()).unwrap();
    let r = ctx.connection().curvature(&VectorField::coordinate(&c, 0), &VectorField::coordinate(&c, 0), &VectorField::coordinate(&c, 0));
    assert!(r.is_ok());
    let high = Cochain::custom("four", 4, |ctx, _| Ok(VectorField::zero(ctx.chart())));
    assert!(matches!(ctx.d_kv(&high), Err(Error::Degree(_))));
    assert!(matches!(ctx.nabla_cochain(&VectorField::zero(&c), &Cochain::field(VectorField::zero(&c))), Err(Error::Degree(_))));
    assert!(matches!(Cochain::identity().eval(&ctx, &[]), Err(Error::Degree(_))));
    assert!(Cochain::identity().add(&Cochain::projective(OneForm::zero(&c))).is_err());
    assert!(d2_probe(&ctx, &Cochain::curvature(ctx.connection().clone()), &cfg()).is_err());
}

#[test]
fn context_rejects_curved_connections() {
    let c = chart(&["x", "y"], 0.5, 1.5);
    let g = MetricField::diagonal(&c, vec![Expr::one(), c.parse("x^2 + y^2").unwrap()]).unwrap();
    let lc = Connection::levi_civita(&g).unwrap();
    assert!(matches!(KvContext::new(lc, &cfg()), Err(Error::Setup(_))));
}

#[test]
fn chart_mismatch_is_reported() {
    let ctx = KvContext::flat(&plane(), &cfg()).unwrap();
    let other = chart(&["u", "v"], -1.0, 1.0);
    let x = VectorField::coordinate(&other, 0);
    assert!(matches!(Cochain::identity().eval(&ctx, &[x]), Err(Error::ChartMismatch(_))));
}
