//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances are the ones fixed by the
//! acceptance list and are not configurable here.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use kvgeom::connection::{codazzi_probe, laplacian};
use kvgeom::derham::{self, TwistedForm};
use kvgeom::fields::{probe_exprs, random_function, random_polynomial, random_vector_field};
use kvgeom::kv::fuzz::{d2_fuzz, random_sheared_context};
use kvgeom::kv::{equal_probe, symmetry_probe, tensoriality_probe, zero_probe};
use kvgeom::scenarios::{punctured_plane_obstruction, Verdict};
use kvgeom::{Chart, Cochain, Connection, Expr, KvContext, MetricField, OneForm, ProbeConfig, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

/// Outcome of one criterion: pass flag plus a one-line summary.
struct Line {
    ok: bool,
    detail: String,
}

impl Line {
    fn new() -> Line {
        Line { ok: true, detail: String::new() }
    }

    /// Records a measured quantity and whether it met its bound.
    fn check(&mut self, label: &str, value: f64, ok: bool) {
        self.ok &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&format!("{label} {value:.2e}{}", if ok { "" } else { " (!)" }));
    }

    fn at_most(&mut self, label: &str, value: f64, bound: f64) {
        self.check(label, value, value <= bound);
    }

    fn witnessed(&mut self, label: &str, value: f64) {
        self.check(label, value, value >= 1e-3);
    }
}

type Outcome = kvgeom::Result<Line>;

fn cfg(tolerance: f64) -> ProbeConfig {
    ProbeConfig {
        samples: 100,
        tolerance,
        seed: SEED,
        ..ProbeConfig::default()
    }
}

fn square(lo: f64, hi: f64) -> Arc<Chart> {
    Arc::new(Chart::boxed(&["x", "y"], &[(lo, hi), (lo, hi)]).unwrap())
}

fn cube() -> Arc<Chart> {
    Arc::new(Chart::boxed(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap())
}

fn d2_zero() -> Outcome {
    let start = Instant::now();
    let mut line = Line::new();
    for degree in 0..=2 {
        let r = d2_fuzz(degree, 20, SEED, 100)?;
        line.check(&format!("deg {degree} ({} cases) max", r.cases.len()), r.max_residual, r.passed && r.max_residual <= 1e-9 && r.cases.len() == 20);
    }
    line.at_most("total seconds", start.elapsed().as_secs_f64(), 60.0);
    Ok(line)
}

fn minus_identity_is_connection() -> Outcome {
    let mut line = Line::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..3 {
        let (ctx, _) = random_sheared_context(&mut rng, &cfg(1e-12))?;
        let conn = Cochain::connection(ctx.connection().clone());
        let d = ctx.d_kv(&Cochain::identity().scale(-1.0))?;
        line.at_most("d(-Id) - nabla", equal_probe(&ctx, &d, &conn, &cfg(1e-12))?.max_residual, 1e-12);
        line.at_most("d nabla", zero_probe(&ctx, &ctx.d_kv(&conn)?, &cfg(1e-12))?.max_residual, 1e-12);
    }
    Ok(line)
}

fn adjoint_symmetric_tensorial() -> Outcome {
    let c = square(-1.0, 1.0);
    let ctx = KvContext::flat(&c, &cfg(1e-9))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut sym, mut ten) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let z = random_vector_field(&c, 3, &mut rng);
        let d = ctx.d_kv(&Cochain::ad(z))?;
        sym = sym.max(symmetry_probe(&ctx, &d, &cfg(1e-9))?.max_residual);
        ten = ten.max(tensoriality_probe(&ctx, &d, &cfg(1e-9))?.max_residual);
    }
    let mut line = Line::new();
    line.at_most("symmetry (10 Z)", sym, 1e-9);
    line.at_most("tensoriality (10 Z)", ten, 1e-9);
    let (ctx, _) = random_sheared_context(&mut rng, &cfg(1e-10))?;
    let anti = ctx.d_kv(&Cochain::identity())?.antisymmetric_part()?;
    let yx = Cochain::custom("[Y,X]", 2, |_, a| a[1].bracket(&a[0]));
    line.at_most("antisym d(Id) - [Y,X]", equal_probe(&ctx, &anti, &yx, &cfg(1e-10))?.max_residual, 1e-10);
    Ok(line)
}

fn projective_cocycle() -> Outcome {
    let c = cube();
    let ctx = KvContext::flat(&c, &cfg(1e-9))?;
    let mut line = Line::new();
    let dx = Cochain::projective(OneForm::parse(&c, &["1", "0", "0"])?);
    line.at_most("dx", zero_probe(&ctx, &ctx.d_kv(&dx)?, &cfg(1e-9))?.max_residual, 1e-9);
    let xdy = Cochain::projective(OneForm::parse(&c, &["0", "x", "0"])?);
    line.witnessed("x dy", zero_probe(&ctx, &ctx.d_kv(&xdy)?, &cfg(1e-9))?.max_residual);
    Ok(line)
}

fn dual_projective_codazzi() -> Outcome {
    let c = square(-1.0, 1.0);
    let ctx = KvContext::flat(&c, &cfg(1e-9))?;
    let v = VectorField::coordinate(&c, 0);
    let mut line = Line::new();
    let h = MetricField::hessian(&c, &c.parse("exp(x) + exp(y)")?);
    let theta = Cochain::dual_projective(h, v.clone())?;
    line.at_most("Hess(e^x+e^y), d/dx", zero_probe(&ctx, &ctx.d_kv(&theta)?, &cfg(1e-9))?.max_residual, 1e-9);
    // The stated non-Codazzi example, checked literally.
    let h = MetricField::diagonal(&c, vec![c.parse("1 + x^2")?, Expr::one()])?;
    line.witnessed("diag(1+x^2,1) Codazzi residual", codazzi_probe(&h, ctx.connection(), &cfg(1e-9))?.max_residual);
    let theta = Cochain::dual_projective(h, v)?;
    line.witnessed("diag(1+x^2,1) d theta", zero_probe(&ctx, &ctx.d_kv(&theta)?, &cfg(1e-9))?.max_residual);
    Ok(line)
}

fn conjugate_curvature() -> Outcome {
    let c = square(-1.0, 1.0);
    let ctx = KvContext::flat(&c, &cfg(1e-8))?;
    let g = MetricField::hessian(&c, &c.parse("exp(x) + exp(y)")?);
    let conj = ctx.connection().conjugate(&g)?;
    let lc = Connection::levi_civita(&g)?;
    let r = Cochain::curvature(lc.clone());
    let d = ctx.d_kv(&Cochain::connection(conj.clone()))?;
    let mut line = Line::new();
    line.at_most("d nabla* - 4R", equal_probe(&ctx, &d, &r.scale(4.0), &cfg(1e-8))?.max_residual, 1e-8);
    let mid = ctx.connection().midpoint(&conj)?;
    line.at_most("midpoint - LC", mid.equal_probe(&lc, &cfg(1e-10))?.max_residual, 1e-10);
    line.at_most("d R", zero_probe(&ctx, &ctx.d_kv(&r)?, &cfg(1e-8).with_trials(1))?.max_residual, 1e-8);
    Ok(line)
}

fn conformal_harmonic() -> Outcome {
    let mut line = Line::new();
    let c = square(0.5, 2.0);
    let ctx = KvContext::flat(&c, &cfg(1e-9))?;
    let g = MetricField::euclidean(&c);
    for text in ["x*y", "x^2 - y^2", "ln(x^2 + y^2)/2"] {
        let f = c.parse(text)?;
        let lap = laplacian(&f, &g)?;
        line.at_most(&format!("[{text}] lap"), probe_exprs(&c, &cfg(1e-10), &[lap], &[Expr::zero()])?.max_residual, 1e-10);
        let theta = Cochain::conformal(g.clone(), f)?;
        line.at_most("d theta", zero_probe(&ctx, &ctx.d_kv(&theta)?, &cfg(1e-9))?.max_residual, 1e-9);
        let deformed = deform(&ctx, &theta)?;
        line.at_most("R(nabla+theta)", deformed.flatness_probe(&cfg(1e-9))?.max_residual, 1e-9);
    }
    // f = x^2
    let c = square(-1.0, 1.0);
    let ctx = KvContext::flat(&c, &cfg(1e-9))?;
    let g = MetricField::euclidean(&c);
    let f = c.parse("x^2")?;
    let lap = laplacian(&f, &g)?;
    let theta = Cochain::conformal(g.clone(), f)?;
    let d = ctx.d_kv(&theta)?;
    let e = [VectorField::coordinate(&c, 0), VectorField::coordinate(&c, 1)];
    let comp = g.apply(&d.eval(&ctx, &[e[0].clone(), e[1].clone(), e[1].clone()])?, &e[0]);
    let (mut exact, mut identity) = (0.0f64, 0.0f64);
    for p in c.sample(100, SEED)? {
        let l = lap.eval(&p)?;
        exact = exact.max((l - 2.0).abs());
        identity = identity.max((comp.eval(&p)?.abs() - l.abs()).abs());
    }
    line.check("[x^2] lap - 2", exact, exact == 0.0);
    line.at_most("|g(d theta(e1,e2,e2),e1)| - |lap|", identity, 1e-9);
    line.witnessed("R(nabla+theta)", deform(&ctx, &theta)?.flatness_probe(&cfg(1e-9))?.max_residual);
    Ok(line)
}

/// `Γ^k_ij = θ(∂_i, ∂_j)^k` on top of the flat coordinate connection.
fn deform(ctx: &KvContext, theta: &Cochain) -> kvgeom::Result<Connection> {
    let c = ctx.chart();
    let n = c.dim();
    let mut gamma = vec![Expr::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            let v = theta.eval(ctx, &[VectorField::coordinate(c, i), VectorField::coordinate(c, j)])?;
            for k in 0..n {
                gamma[k * n * n + i * n + j] = v.component(k).clone();
            }
        }
    }
    Connection::new(c, gamma)
}

fn obstruction_on_punctured_plane() -> Outcome {
    let reports = punctured_plane_obstruction(&cfg(1e-9))?;
    let get = |name: &str| reports.iter().find(|a| a.name == name).expect(name);
    let mut line = Line::new();
    line.at_most("Hessian system y>0", get("hessian_system_upper").max_residual, 1e-9);
    line.at_most("Hessian system y<0", get("hessian_system_lower").max_residual, 1e-9);
    line.at_most("|jump - pi|", get("u_y_jump_is_pi").max_residual, 1e-6);
    let ext = get("u_y_extends_continuously");
    line.check("non-extendable (jump)", ext.max_residual, ext.verdict == Verdict::Pass);
    line.at_most("d theta", get("cocycle").max_residual, 1e-9);
    Ok(line)
}

fn exterior_covariant() -> Outcome {
    let mut line = Line::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut flat_max = 0.0f64;
    for i in 0..10 {
        let (ctx, _) = random_sheared_context(&mut rng, &cfg(1e-9))?;
        let c = ctx.chart().clone();
        let degree = i % 2;
        let count = derham::increasing_tuples(c.dim(), degree).len() * c.dim();
        let comps = (0..count).map(|_| random_polynomial(&c, 2, &mut rng)).collect();
        let form = TwistedForm::new(&c, degree, comps)?;
        let dd = derham::d_nabla(ctx.connection(), &derham::d_nabla(ctx.connection(), &form)?)?;
        let zeros = vec![Expr::zero(); dd.components().len()];
        flat_max = flat_max.max(probe_exprs(&c, &cfg(1e-9), dd.components(), &zeros)?.max_residual);
    }
    line.at_most("flat d d (10 forms)", flat_max, 1e-9);

    let c = square(-1.0, 1.0);
    let g = MetricField::conformal(&c.parse("x^2")?, &MetricField::euclidean(&c));
    let lc = Connection::levi_civita(&g)?;
    let s = TwistedForm::from_section(&VectorField::parse(&c, &["x*y", "sin(y)"])?);
    line.at_most("d d s - R s", derham::curvature_identity_probe(&lc, &s, &cfg(1e-8))?.max_residual, 1e-8);
    let rs = derham::curvature_wedge(&lc, &s)?;
    let zeros = vec![Expr::zero(); rs.components().len()];
    line.witnessed("R s (nonzero)", probe_exprs(&c, &cfg(1e-8), rs.components(), &zeros)?.max_residual);

    let p = Arc::new(Chart::new(&["x", "y"], &[(-2.0, 2.0); 2], &["x^2 + y^2 > 0.01"], kvgeom::expr::DEFAULT_STANDOFF)?);
    let w = TwistedForm::from_entries(
        &p,
        1,
        &[
            (vec![0], 0, p.parse("ln(x^2 + y^2)")?),
            (vec![1], 1, p.parse("-x/(x^2 + y^2)")?),
            (vec![0], 1, p.parse("x*y")?),
        ],
    )?;
    line.at_most(
        "d = d + d",
        derham::flat_decomposition_probe(&Connection::flat(&p), &w, &cfg(1e-12))?.max_residual,
        1e-12,
    );

    let mut consistent = true;
    for comps in [["0", "0"], ["1", "0"], ["0", "-2"], ["y", "0"], ["x", "y"]] {
        let x = VectorField::parse(&c, &comps)?;
        consistent &= derham::commuting_lemma_probe(&x, &cfg(1e-9))?.consistent();
    }
    line.check("commuting lemma inconsistencies", if consistent { 0.0 } else { 1.0 }, consistent);
    Ok(line)
}

fn cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_kvgeom")).args(args).output().expect("spawn kvgeom");
    (out.status.code(), out.stdout)
}

fn determinism_and_cli() -> Outcome {
    let mut line = Line::new();
    let (code_a, a) = cli(&["run", "all", "--format", "json", "--seed", "42"]);
    let (_, b) = cli(&["run", "all", "--format", "json", "--seed", "42"]);
    line.check("run all JSON bytes differing", if a == b && !a.is_empty() { 0.0 } else { 1.0 }, a == b && !a.is_empty());
    line.check("run all exit", code_a.unwrap_or(-1) as f64, code_a.is_some());

    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(
        dir.path().join("always_fails.toml"),
        r#"
name = "always_fails"
[chart]
coords = ["x"]
bounds = [[0.0, 1.0]]
[[bind]]
name = "f"
kind = "function"
expr = "x"
[[assert]]
name = "x_is_zero"
probe = "function_zero"
function = "f"
reference = "x = 0"
"#,
    )
    .expect("write scenario");
    let dir_arg = dir.path().to_str().expect("utf-8 path");
    for (args, want) in [
        (vec!["run", "prop_4_1"], 0),
        (vec!["list"], 0),
        (vec!["--scenario-dir", dir_arg, "run", "always_fails"], 1),
        (vec!["run", "nonexistent"], 2),
        (vec!["run", "prop_4_1", "--bogus"], 2),
        (vec!["d2", "--degree", "3"], 2),
    ] {
        let (code, _) = cli(&args);
        let got = code.unwrap_or(-1);
        line.check(&format!("exit[{}]", args.last().unwrap()), got as f64, got == want);
    }

    // Symbolic derivatives against central differences.
    let c = Chart::boxed(&["x", "y"], &[(-1.0, 1.0), (-1.0, 1.0)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut exprs: Vec<Expr> = [
        "sin(x*y) + exp(x)*y^2",
        "ln(2 + x^2 + y)*cos(y)",
        "sqrt(3 + x*y)/(1 + y^2)",
        "atan(x/(y + 2)) - x^3*y",
        "exp(sin(x) - cos(y))",
    ]
    .iter()
    .map(|t| c.parse(t))
    .collect::<kvgeom::Result<_>>()?;
    exprs.extend((0..20).map(|_| random_function(&c, 3, &mut rng)));
    let h = 1e-5;
    let mut worst = 0.0f64;
    for e in &exprs {
        for i in 0..2 {
            let d = e.diff(i);
            for p in c.sample(50, SEED)? {
                let (mut hi, mut lo) = (p.clone(), p.clone());
                hi[i] += h;
                lo[i] -= h;
                let fd = (e.eval(&hi)? - e.eval(&lo)?) / (2.0 * h);
                let sym = d.eval(&p)?;
                worst = worst.max((sym - fd).abs() / sym.abs().max(1.0));
            }
        }
    }
    line.at_most("symbolic vs finite difference (rel)", worst, 1e-5);
    Ok(line)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("d_KV o d_KV = 0 fuzzing, degrees 0-2", d2_zero),
        ("minus identity differentiates to the connection", minus_identity_is_connection),
        ("adjoint differential symmetric/tensorial; identity antisymmetric part", adjoint_symmetric_tensorial),
        ("projective cochain cocycle iff parallel form", projective_cocycle),
        ("dual-projective cochain and the Codazzi condition", dual_projective_codazzi),
        ("conjugate connection, curvature and midpoint", conjugate_curvature),
        ("conformal cochain and harmonicity", conformal_harmonic),
        ("punctured-plane obstruction", obstruction_on_punctured_plane),
        ("exterior covariant derivative", exterior_covariant),
        ("determinism, exit codes, derivative cross-check", determinism_and_cli),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(line) => (line.ok, line.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name} [{:.1}s] {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
