//! Tangent-valued differential forms and the exterior covariant derivative.
//!
//! A [`TwistedForm`] of degree `k` stores `θ^m_{i_1…i_k}` on strictly
//! increasing index tuples only, so antisymmetry holds by construction. Two
//! independent routes to `d^∇` are provided: a component formula on the
//! coordinate frame ([`d_nabla`]) and the invariant formula with bracket
//! terms evaluated on arbitrary fields ([`d_nabla_eval`]).

use std::sync::Arc;

use rand::Rng;

use crate::connection::Connection;
use crate::expr::{Chart, Expr};
use crate::fields::{
    probe_trials, random_vector_field, same_chart, EqualityReport, Field, ProbeConfig, VectorField,
};
use crate::{Error, Result};

/// Strictly increasing `k`-tuples from `0..n`, in lexicographic order.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Sorts `idx` and returns the permutation sign, or `None` on a repeat.
fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    // Insertion sort counts transpositions.
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    if k == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        // Insert k−1 at every position; each step right-to-left is a transposition.
        for pos in (0..=p.len()).rev() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
            out.push((q, sign));
        }
    }
    out
}

/// A `TM`-valued `k`-form.
#[derive(Clone, Debug)]
pub struct TwistedForm {
    chart: Arc<Chart>,
    degree: usize,
    tuples: Vec<Vec<usize>>,
    /// `comps[t * n + m] = θ^m_{tuples[t]}`.
    comps: Vec<Expr>,
}

impl TwistedForm {
    /// Builds the form from its values on increasing tuples.
    pub fn from_fn(chart: &Arc<Chart>, degree: usize, f: impl Fn(usize, &[usize]) -> Expr) -> Result<TwistedForm> {
        let n = chart.dim();
        if degree > n {
            return Err(Error::Degree(format!("{degree}-form on a {n}-dimensional chart")));
        }
        Ok(TwistedForm::build(chart, degree, f))
    }

    /// Like [`TwistedForm::from_fn`] but allows `degree > n`, giving the
    /// form with no components. Results of `d^∇` and `R ∧` land there.
    fn build(chart: &Arc<Chart>, degree: usize, f: impl Fn(usize, &[usize]) -> Expr) -> TwistedForm {
        let n = chart.dim();
        let tuples = increasing_tuples(n, degree);
        let comps = tuples
            .iter()
            .flat_map(|t| (0..n).map(move |m| (m, t)))
            .map(|(m, t)| f(m, t))
            .collect();
        TwistedForm {
            chart: chart.clone(),
            degree,
            tuples,
            comps,
        }
    }

    /// From components in storage order: `comps[t * n + m] = θ^m_{tuples[t]}`.
    pub fn new(chart: &Arc<Chart>, degree: usize, comps: Vec<Expr>) -> Result<TwistedForm> {
        let n = chart.dim();
        let want = increasing_tuples(n, degree).len() * n;
        if comps.len() != want || degree > n {
            return Err(Error::Degree(format!(
                "{degree}-form on a {n}-dimensional chart needs {want} components, got {}",
                comps.len()
            )));
        }
        let mut it = comps.into_iter();
        TwistedForm::from_fn(chart, degree, |_, _| Expr::zero()).map(|mut f| {
            f.comps = f.comps.iter().map(|_| it.next().expect("counted")).collect();
            f
        })
    }

    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Result<TwistedForm> {
        TwistedForm::from_fn(chart, degree, |_, _| Expr::zero())
    }

    /// Sums `value · dx^{I} ⊗ ∂_target` over entries; `I` may be in any
    /// order and is antisymmetrized.
    pub fn from_entries(chart: &Arc<Chart>, degree: usize, entries: &[(Vec<usize>, usize, Expr)]) -> Result<TwistedForm> {
        let n = chart.dim();
        let mut form = TwistedForm::zero(chart, degree)?;
        for (idx, target, value) in entries {
            if idx.len() != degree || *target >= n || idx.iter().any(|&i| i >= n) {
                return Err(Error::Degree(format!(
                    "entry {idx:?} -> {target} does not fit a {degree}-form on a {n}-dimensional chart"
                )));
            }
            let Some((sorted, sign)) = sort_with_sign(idx) else {
                return Err(Error::Degree(format!("repeated index in {idx:?}")));
            };
            let t = form.tuple_index(&sorted);
            let slot = &mut form.comps[t * n + target];
            *slot = slot.clone() + value * sign;
        }
        Ok(form)
    }

    /// A section viewed as a 0-form.
    pub fn from_section(s: &VectorField) -> TwistedForm {
        TwistedForm::from_fn(s.chart(), 0, |m, _| s.component(m).clone()).expect("degree 0 always fits")
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    fn tuple_index(&self, sorted: &[usize]) -> usize {
        self.tuples
            .binary_search(&sorted.to_vec())
            .expect("sorted tuple is stored")
    }

    /// `θ^m_{idx}` for any index order; zero on repeats.
    pub fn component(&self, m: usize, idx: &[usize]) -> Expr {
        match sort_with_sign(idx) {
            None => Expr::zero(),
            Some((sorted, sign)) => {
                let n = self.chart.dim();
                &self.comps[self.tuple_index(&sorted) * n + m] * sign
            }
        }
    }

    /// Scalar component forms: `out[m][t]` is the coefficient of `dx^{tuples[t]}` in `θ^m`.
    pub fn scalar_parts(&self) -> Vec<Vec<Expr>> {
        let n = self.chart.dim();
        (0..n)
            .map(|m| (0..self.tuples.len()).map(|t| self.comps[t * n + m].clone()).collect())
            .collect()
    }

    /// `θ(X_1, …, X_k) = Σ_I θ^m_I det(X_a^{I_b}) ∂_m`.
    pub fn eval(&self, args: &[VectorField]) -> Result<VectorField> {
        if args.len() != self.degree {
            return Err(Error::Degree(format!(
                "{}-form evaluated on {} fields",
                self.degree,
                args.len()
            )));
        }
        for a in args {
            same_chart(&self.chart, a.chart())?;
        }
        let n = self.chart.dim();
        let perms = permutations(self.degree);
        let dets: Vec<Expr> = self
            .tuples
            .iter()
            .map(|t| {
                Expr::sum(perms.iter().map(|(p, s)| {
                    Expr::product(
                        std::iter::once(Expr::constant(*s))
                            .chain(p.iter().enumerate().map(|(a, &b)| args[a].component(t[b]).clone())),
                    )
                }))
            })
            .collect();
        let comps = (0..n)
            .map(|m| Expr::sum(dets.iter().enumerate().map(|(t, d)| d * &self.comps[t * n + m])))
            .collect();
        VectorField::new(&self.chart, comps)
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn sub(&self, other: &TwistedForm) -> Result<TwistedForm> {
        same_chart(&self.chart, &other.chart)?;
        if self.degree != other.degree {
            return Err(Error::Degree("forms of different degree".into()));
        }
        Ok(TwistedForm {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }
}

/// `d^∇θ` on the coordinate frame:
/// `(d^∇θ)^m_J = Σ_a (−1)^a (∂_{j_a} θ^m_{J∖j_a} + Γ^m_{j_a p} θ^p_{J∖j_a})`.
pub fn d_nabla(conn: &Connection, theta: &TwistedForm) -> Result<TwistedForm> {
    same_chart(conn.chart(), &theta.chart)?;
    let n = theta.chart.dim();
    Ok(TwistedForm::build(&theta.chart, theta.degree + 1, |m, j| {
        Expr::sum((0..j.len()).map(|a| {
            let rest: Vec<usize> = j.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, &i)| i).collect();
            let ja = j[a];
            let transport = Expr::sum((0..n).map(|p| conn.christoffel(m, ja, p) * &theta.component(p, &rest)));
            let term = theta.component(m, &rest).diff(ja) + transport;
            if a % 2 == 0 {
                term
            } else {
                -term
            }
        }))
    }))
}

/// The invariant formula for `d^∇θ` evaluated directly on `args`, bracket
/// terms included. Independent of [`d_nabla`].
pub fn d_nabla_eval(conn: &Connection, theta: &TwistedForm, args: &[VectorField]) -> Result<VectorField> {
    let k = theta.degree;
    if args.len() != k + 1 {
        return Err(Error::Degree(format!("d^∇ of a {k}-form takes {} fields", k + 1)));
    }
    let omit = |skip: &[usize]| -> Vec<VectorField> {
        args.iter()
            .enumerate()
            .filter(|(s, _)| !skip.contains(s))
            .map(|(_, a)| a.clone())
            .collect()
    };
    let mut total = VectorField::zero(&theta.chart);
    for i in 0..=k {
        let term = conn.cov_deriv_vf(&args[i], &theta.eval(&omit(&[i]))?)?;
        total = if i % 2 == 0 { total + term } else { total - term };
    }
    for i in 0..=k {
        for j in i + 1..=k {
            let mut inner = vec![args[i].bracket(&args[j])?];
            inner.extend(omit(&[i, j]));
            let term = theta.eval(&inner)?;
            total = if (i + j) % 2 == 0 { total + term } else { total - term };
        }
    }
    Ok(total)
}

/// `R^∇ ∧ θ`: `(R∧θ)^m_J = Σ_{a<b} (−1)^{a+b−1} R^m_{p j_a j_b} θ^p_{J∖{j_a,j_b}}`,
/// the sum over (2, k)-shuffles of the frame.
pub fn curvature_wedge(conn: &Connection, theta: &TwistedForm) -> Result<TwistedForm> {
    same_chart(conn.chart(), &theta.chart)?;
    let n = theta.chart.dim();
    let r = conn.riemann();
    Ok(TwistedForm::build(&theta.chart, theta.degree + 2, |m, j| {
        let mut terms = Vec::new();
        for a in 0..j.len() {
            for b in a + 1..j.len() {
                let rest: Vec<usize> = j
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| *c != a && *c != b)
                    .map(|(_, &i)| i)
                    .collect();
                let sign = if (a + b) % 2 == 1 { 1.0 } else { -1.0 };
                for p in 0..n {
                    terms.push(r.component(m, &[j[a], j[b], p]) * &theta.component(p, &rest) * sign);
                }
            }
        }
        Expr::sum(terms)
    }))
}

fn random_args(chart: &Arc<Chart>, count: usize, cfg: &ProbeConfig, rng: &mut impl Rng) -> Vec<VectorField> {
    (0..count).map(|_| random_vector_field(chart, cfg.field_degree, rng)).collect()
}

/// Component formula against the invariant formula on random fields.
pub fn d_nabla_consistency_probe(conn: &Connection, theta: &TwistedForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let d = d_nabla(conn, theta)?;
    probe_trials(&theta.chart, cfg, |rng, _| {
        let args = random_args(&theta.chart, theta.degree + 1, cfg, rng);
        Ok((
            d.eval(&args)?.components().to_vec(),
            d_nabla_eval(conn, theta, &args)?.components().to_vec(),
        ))
    })
}

/// `(d^∇θ)(X, Y) = ∇_X(θ(Y)) − ∇_Y(θ(X)) − θ([X, Y])` for a 1-form.
pub fn one_form_display_probe(conn: &Connection, theta: &TwistedForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
    if theta.degree != 1 {
        return Err(Error::Degree("the two-argument display is for 1-forms".into()));
    }
    let d = d_nabla(conn, theta)?;
    probe_trials(&theta.chart, cfg, |rng, _| {
        let args = random_args(&theta.chart, 2, cfg, rng);
        let (x, y) = (&args[0], &args[1]);
        let rhs = conn.cov_deriv_vf(x, &theta.eval(std::slice::from_ref(y))?)?
            - conn.cov_deriv_vf(y, &theta.eval(std::slice::from_ref(x))?)?
            - theta.eval(&[x.bracket(y)?])?;
        Ok((d.eval(&args)?.components().to_vec(), rhs.components().to_vec()))
    })
}

/// `d^∇ d^∇ θ` against `R^∇ ∧ θ`, or against zero when `conn` passes the
/// flatness probe.
pub fn curvature_identity_probe(conn: &Connection, theta: &TwistedForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let dd = d_nabla(conn, &d_nabla(conn, theta)?)?;
    let flat = conn.flatness_probe(&cfg.derive("flatness"))?.passed;
    let rhs = if flat {
        TwistedForm::build(&theta.chart, theta.degree + 2, |_, _| Expr::zero())
    } else {
        curvature_wedge(conn, theta)?
    };
    crate::fields::probe_exprs(&theta.chart, cfg, &dd.comps, &rhs.comps)
}

/// Swapping any two adjacent arguments of the invariant `d^∇` formula flips the sign.
pub fn antisymmetry_probe(conn: &Connection, theta: &TwistedForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let k = theta.degree + 1;
    if k < 2 {
        return Err(Error::Degree("antisymmetry needs at least two slots".into()));
    }
    probe_trials(&theta.chart, cfg, |rng, _| {
        let args = random_args(&theta.chart, k, cfg, rng);
        let base = d_nabla_eval(conn, theta, &args)?;
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        for s in 0..k - 1 {
            let mut swapped = args.clone();
            swapped.swap(s, s + 1);
            lhs.extend(d_nabla_eval(conn, theta, &swapped)?.components().to_vec());
            rhs.extend((-base.clone()).components().to_vec());
        }
        Ok((lhs, rhs))
    })
}

/// Scalar exterior derivative on the wedge basis:
/// `d(f dx^I) = Σ_i ∂_i f dx^i ∧ dx^I`, with `dx^i ∧ dx^I` reordered by insertion.
/// `coeffs[t]` multiplies `dx^{increasing_tuples(n, k)[t]}`.
pub fn exterior_derivative(chart: &Chart, degree: usize, coeffs: &[Expr]) -> Result<Vec<Expr>> {
    let n = chart.dim();
    let from = increasing_tuples(n, degree);
    let to = increasing_tuples(n, degree + 1);
    if coeffs.len() != from.len() {
        return Err(Error::ChartMismatch(format!(
            "{degree}-form on a {n}-dimensional chart needs {} coefficients",
            from.len()
        )));
    }
    let mut out = vec![Vec::new(); to.len()];
    for (t, tuple) in from.iter().enumerate() {
        for i in 0..n {
            // dx^i ∧ dx^I: i moves past every smaller index of I.
            if tuple.contains(&i) {
                continue;
            }
            let passes = tuple.iter().filter(|&&j| j < i).count();
            let mut merged = tuple.clone();
            merged.insert(passes, i);
            let sign = if passes % 2 == 0 { 1.0 } else { -1.0 };
            let slot = to.binary_search(&merged).expect("merged tuple is increasing");
            out[slot].push(coeffs[t].diff(i) * sign);
        }
    }
    Ok(out.into_iter().map(Expr::sum).collect())
}

/// For a connection with vanishing Christoffel symbols in effect, `d^∇` acts
/// as the scalar `d` on each target component. Compares the two.
pub fn flat_decomposition_probe(conn: &Connection, theta: &TwistedForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let d = d_nabla(conn, theta)?;
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for (ours, part) in d.scalar_parts().into_iter().zip(theta.scalar_parts()) {
        lhs.extend(ours);
        rhs.extend(exterior_derivative(&theta.chart, theta.degree, &part)?);
    }
    crate::fields::probe_exprs(&theta.chart, cfg, &lhs, &rhs)
}

/// The two stages of the argument that a field commuting with every field
/// vanishes, run on a candidate `X`.
#[derive(Clone, Debug)]
pub struct CommutingReport {
    /// `[X, ∂_j] ≡ 0` for every `j` (forces constant components).
    pub coordinate_stage: EqualityReport,
    /// `[X, E] ≡ 0` for the Euler field `E = x^j ∂_j`.
    pub euler_stage: EqualityReport,
    /// `X ≡ 0`.
    pub vanishes: EqualityReport,
    /// `[X, E] ≡ X`, the identity the second stage rests on (constant `X` only).
    pub euler_identity: Option<EqualityReport>,
}

impl CommutingReport {
    /// The lemma's implication, checked on this candidate: passing both
    /// stages must force `X ≡ 0`.
    pub fn consistent(&self) -> bool {
        !(self.coordinate_stage.passed && self.euler_stage.passed) || self.vanishes.passed
    }
}

pub fn commuting_lemma_probe(x: &VectorField, cfg: &ProbeConfig) -> Result<CommutingReport> {
    let chart = x.chart();
    let n = chart.dim();
    let mut brackets = Vec::new();
    for j in 0..n {
        brackets.extend(x.bracket(&VectorField::coordinate(chart, j))?.components().to_vec());
    }
    let zeros = vec![Expr::zero(); brackets.len()];
    let coordinate_stage = crate::fields::probe_exprs(chart, cfg, &brackets, &zeros)?;
    let euler = VectorField::position(chart);
    let xe = x.bracket(&euler)?;
    let euler_stage = crate::fields::zero_probe(&xe, cfg)?;
    let vanishes = crate::fields::zero_probe(x, cfg)?;
    let euler_identity = if coordinate_stage.passed {
        Some(crate::fields::fields_equal_probe(&xe, x, cfg)?)
    } else {
        None
    };
    Ok(CommutingReport {
        coordinate_stage,
        euler_stage,
        vanishes,
        euler_identity,
    })
}
