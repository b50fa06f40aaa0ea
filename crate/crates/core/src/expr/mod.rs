//! Closed-form scalar expressions over chart coordinates.
//!
//! Expressions are immutable, reference counted trees kept in a normal form by
//! the smart constructors ([`Expr::sum`], [`Expr::product`], [`Expr::func`]):
//!
//! * sums are `c + Σ kᵢ·mᵢ` with distinct, sorted, unscaled monomials `mᵢ`;
//! * products are `c · Π bⱼ^eⱼ` with distinct, sorted bases and integer
//!   exponents; sums raised to positive powers are multiplied out, `exp`
//!   factors are merged into a single `exp`, and even powers of `sqrt` are
//!   reduced;
//! * functions of constants are folded when the value is finite and defined.
//!
//! The normal form is sound but not complete: equal functions may have
//! different trees (rational functions are not brought to a common
//! denominator). Semantic equality is decided by the sampling probes in
//! [`crate::fields`].

mod chart;
mod diff;
mod eval;
mod parse;
mod print;
mod tape;

pub use chart::{Chart, Constraint, DEFAULT_STANDOFF};
pub use parse::{parse, parse_with_coords};
pub use tape::Tape;

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::mix64;

/// Unary elementary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Atan,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function, or `None` outside its domain.
    pub(crate) fn apply(self, v: f64) -> Option<f64> {
        match self {
            Func::Exp => Some(v.exp()),
            Func::Ln => (v > 0.0).then(|| v.ln()),
            Func::Sqrt => (v >= 0.0).then(|| v.sqrt()),
            Func::Sin => Some(v.sin()),
            Func::Cos => Some(v.cos()),
            Func::Atan => Some(v.atan()),
        }
    }
}

/// Node payload of an [`Expr`].
#[derive(Debug)]
pub enum Kind {
    Const(f64),
    Pi,
    /// Chart coordinate: index into the chart's coordinate list, and its name.
    Var(usize, Arc<str>),
    /// `constant + Σ coeff · monomial`.
    Add(f64, Vec<(f64, Expr)>),
    /// `coeff · Π base ^ exponent`.
    Mul(f64, Vec<(Expr, i32)>),
    Func(Func, Expr),
    /// `atan2(y, x)`.
    Atan2(Expr, Expr),
}

struct Node {
    kind: Kind,
    hash: u64,
    /// Bit `i` set when the expression may depend on coordinate `i` (bit 63 covers `i >= 63`).
    deps: u64,
}

/// A scalar expression. Cheap to clone; safe to share across threads.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn canon(c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c
    }
}

fn bits(c: f64) -> u64 {
    canon(c).to_bits()
}

fn fold(h: u64, v: u64) -> u64 {
    mix64(h.rotate_left(17) ^ v)
}

fn var_bit(i: usize) -> u64 {
    1u64 << i.min(63)
}

impl Expr {
    fn from_kind(kind: Kind) -> Expr {
        let (hash, deps) = match &kind {
            Kind::Const(c) => (fold(1, bits(*c)), 0),
            Kind::Pi => (fold(2, 0), 0),
            Kind::Var(i, name) => {
                let h = name.bytes().fold(fold(3, *i as u64), |h, b| fold(h, b as u64));
                (h, var_bit(*i))
            }
            Kind::Add(c, ts) => ts.iter().fold((fold(4, bits(*c)), 0), |(h, d), (k, t)| {
                (fold(fold(h, bits(*k)), t.hash()), d | t.deps())
            }),
            Kind::Mul(c, fs) => fs.iter().fold((fold(5, bits(*c)), 0), |(h, d), (b, k)| {
                (fold(fold(h, b.hash()), *k as u64), d | b.deps())
            }),
            Kind::Func(f, a) => (fold(fold(6, *f as u64), a.hash()), a.deps()),
            Kind::Atan2(y, x) => (fold(fold(7, y.hash()), x.hash()), y.deps() | x.deps()),
        };
        Expr(Arc::new(Node { kind, hash, deps }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Structural hash; equal expressions have equal hashes.
    pub fn hash(&self) -> u64 {
        self.0.hash
    }

    fn deps(&self) -> u64 {
        self.0.deps
    }

    /// `false` only if the expression certainly does not involve coordinate `i`.
    pub fn depends_on(&self, i: usize) -> bool {
        self.deps() & var_bit(i) != 0
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_kind(Kind::Const(canon(c)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn pi() -> Expr {
        Expr::from_kind(Kind::Pi)
    }

    pub fn var(index: usize, name: impl Into<Arc<str>>) -> Expr {
        Expr::from_kind(Kind::Var(index, name.into()))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind() {
            Kind::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Normalized sum of `items`.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for e in items {
            collect_term(&mut constant, &mut terms, 1.0, &e);
        }
        build_sum(constant, terms)
    }

    /// Normalized product of `items`.
    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut coeff = 1.0;
        let mut factors = Vec::new();
        for e in items {
            collect_factor(&mut coeff, &mut factors, &e, 1);
        }
        build_product(coeff, factors)
    }

    pub fn powi(&self, k: i32) -> Expr {
        let mut coeff = 1.0;
        let mut factors = Vec::new();
        collect_factor(&mut coeff, &mut factors, self, k);
        build_product(coeff, factors)
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn scale(&self, c: f64) -> Expr {
        if c == 1.0 {
            return self.clone();
        }
        let mut constant = 0.0;
        let mut terms = Vec::new();
        collect_term(&mut constant, &mut terms, c, self);
        build_sum(constant, terms)
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if let Some(c) = a.as_const() {
            if let Some(v) = f.apply(c).filter(|v| v.is_finite()) {
                return Expr::constant(v);
            }
        }
        if f == Func::Ln {
            if let Kind::Func(Func::Exp, inner) = a.kind() {
                return inner.clone();
            }
        }
        Expr::from_kind(Kind::Func(f, a))
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Ln, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self.clone())
    }

    pub fn atan(&self) -> Expr {
        Expr::func(Func::Atan, self.clone())
    }

    pub fn atan2(y: Expr, x: Expr) -> Expr {
        if let (Some(a), Some(b)) = (y.as_const(), x.as_const()) {
            if a != 0.0 || b != 0.0 {
                return Expr::constant(a.atan2(b));
            }
        }
        Expr::from_kind(Kind::Atan2(y, x))
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        1 + match self.kind() {
            Kind::Const(_) | Kind::Pi | Kind::Var(..) => 0,
            Kind::Add(_, ts) => ts.iter().map(|(_, t)| t.size()).sum(),
            Kind::Mul(_, fs) => fs.iter().map(|(b, _)| b.size()).sum(),
            Kind::Func(_, a) => a.size(),
            Kind::Atan2(y, x) => y.size() + x.size(),
        }
    }

    /// Calls `f` on every coordinate node.
    pub fn visit_vars(&self, f: &mut impl FnMut(usize, &str)) {
        match self.kind() {
            Kind::Var(i, name) => f(*i, name),
            Kind::Const(_) | Kind::Pi => {}
            Kind::Add(_, ts) => ts.iter().for_each(|(_, t)| t.visit_vars(f)),
            Kind::Mul(_, fs) => fs.iter().for_each(|(b, _)| b.visit_vars(f)),
            Kind::Func(_, a) => a.visit_vars(f),
            Kind::Atan2(y, x) => {
                y.visit_vars(f);
                x.visit_vars(f);
            }
        }
    }
}

fn collect_term(constant: &mut f64, terms: &mut Vec<(f64, Expr)>, scale: f64, e: &Expr) {
    match e.kind() {
        Kind::Const(c) => *constant += scale * c,
        Kind::Add(c0, ts) => {
            *constant += scale * c0;
            terms.extend(ts.iter().map(|(k, t)| (scale * k, t.clone())));
        }
        Kind::Mul(c, fs) if *c != 1.0 => terms.push((scale * c, monomial(fs.clone()))),
        _ => terms.push((scale, e.clone())),
    }
}

/// Unscaled product of already normalized factors.
fn monomial(fs: Vec<(Expr, i32)>) -> Expr {
    if fs.len() == 1 && fs[0].1 == 1 {
        fs.into_iter().next().unwrap().0
    } else {
        Expr::from_kind(Kind::Mul(1.0, fs))
    }
}

fn scaled_monomial(c: f64, m: Expr) -> Expr {
    if c == 1.0 {
        return m;
    }
    match m.kind() {
        Kind::Mul(k, fs) => {
            debug_assert_eq!(*k, 1.0);
            Expr::from_kind(Kind::Mul(c, fs.clone()))
        }
        _ => Expr::from_kind(Kind::Mul(c, vec![(m, 1)])),
    }
}

/// Coefficient sums that cancel to within a few ulps of their largest input are dropped.
const CANCEL_ULPS: f64 = 8.0 * f64::EPSILON;

fn build_sum(constant: f64, mut terms: Vec<(f64, Expr)>) -> Expr {
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    let mut merged: Vec<(f64, Expr)> = Vec::with_capacity(terms.len());
    let mut peak = 0.0f64;
    for (k, t) in terms {
        match merged.last_mut() {
            Some((acc, last)) if *last == t => {
                *acc += k;
                peak = peak.max(k.abs());
            }
            _ => {
                drop_cancelled(&mut merged, peak);
                peak = k.abs();
                merged.push((k, t));
            }
        }
    }
    drop_cancelled(&mut merged, peak);
    if let Some(e) = cancel_common_denominator(constant, &merged) {
        return e;
    }

    if merged.is_empty() {
        return Expr::constant(constant);
    }
    if constant == 0.0 && merged.len() == 1 {
        let (k, m) = merged.pop().unwrap();
        return scaled_monomial(k, m);
    }
    Expr::from_kind(Kind::Add(canon(constant), merged))
}

/// Finds terms `c_i · n_i / D` sharing a denominator `D` whose numerators sum
/// to `λ·B` for a base `B` of `D`, and rebuilds the sum with that factor
/// cancelled. Returns `None` when no such group exists.
fn cancel_common_denominator(constant: f64, terms: &[(f64, Expr)]) -> Option<Expr> {
    let mut groups: std::collections::HashMap<Vec<(Expr, i32)>, Vec<usize>> = Default::default();
    for (idx, (_, m)) in terms.iter().enumerate() {
        if let Kind::Mul(_, fs) = m.kind() {
            let den: Vec<(Expr, i32)> = fs.iter().filter(|f| f.1 < 0).cloned().collect();
            if den.iter().any(|(b, _)| matches!(b.kind(), Kind::Add(..))) {
                groups.entry(den).or_default().push(idx);
            }
        }
    }
    let mut candidates: Vec<_> = groups.into_iter().filter(|(_, v)| v.len() >= 2).collect();
    candidates.sort_by(|a, b| a.1.cmp(&b.1));
    for (den, members) in candidates {
        let numerator = Expr::sum(members.iter().map(|&idx| {
            let (k, m) = &terms[idx];
            let Kind::Mul(_, fs) = m.kind() else { unreachable!() };
            let num = fs.iter().filter(|f| f.1 > 0).map(|(b, e)| b.powi(*e));
            Expr::product(std::iter::once(Expr::constant(*k)).chain(num))
        }));
        let Kind::Add(_, nts) = numerator.kind() else { continue };
        for (slot, (base, _)) in den.iter().enumerate() {
            let Kind::Add(_, bts) = base.kind() else { continue };
            if nts.len() != bts.len() {
                continue;
            }
            let lambda = nts[0].0 / bts[0].0;
            if numerator != base.scale(lambda) {
                continue;
            }
            let mut factors = den.clone();
            factors[slot].1 += 1;
            let collapsed = build_product(lambda, factors);
            let rest = terms
                .iter()
                .enumerate()
                .filter(|(idx, _)| !members.contains(idx))
                .map(|(_, (k, m))| scaled_monomial(*k, m.clone()));
            return Some(Expr::sum(
                std::iter::once(Expr::constant(constant)).chain(rest).chain([collapsed]),
            ));
        }
    }
    None
}

fn drop_cancelled(merged: &mut Vec<(f64, Expr)>, peak: f64) {
    if let Some((k, _)) = merged.last() {
        if *k == 0.0 || k.abs() <= CANCEL_ULPS * peak {
            merged.pop();
        }
    }
}

fn collect_factor(coeff: &mut f64, factors: &mut Vec<(Expr, i32)>, e: &Expr, k: i32) {
    match e.kind() {
        // 1/0 stays symbolic so evaluation reports it.
        Kind::Const(c) if !(*c == 0.0 && k < 0) => *coeff *= c.powi(k),
        Kind::Mul(c, fs) => {
            *coeff *= c.powi(k);
            factors.extend(fs.iter().map(|(b, j)| (b.clone(), j * k)));
        }
        _ => factors.push((e.clone(), k)),
    }
}

fn build_product(mut coeff: f64, mut factors: Vec<(Expr, i32)>) -> Expr {
    loop {
        if coeff == 0.0 {
            return Expr::zero();
        }
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Expr, i32)> = Vec::with_capacity(factors.len());
        for (b, k) in factors {
            match merged.last_mut() {
                Some((last, acc)) if *last == b => *acc += k,
                _ => {
                    if matches!(merged.last(), Some((_, 0))) {
                        merged.pop();
                    }
                    merged.push((b, k));
                }
            }
        }
        if matches!(merged.last(), Some((_, 0))) {
            merged.pop();
        }

        let mut changed = false;
        let mut next = Vec::with_capacity(merged.len());
        let mut exp_args = Vec::new();
        let mut exp_plain = 0usize;
        for (b, k) in merged {
            match b.kind() {
                Kind::Func(Func::Exp, a) => {
                    if k == 1 {
                        exp_plain += 1;
                    }
                    exp_args.push(a.scale(k as f64));
                }
                Kind::Func(Func::Sqrt, a) if k.abs() >= 2 => {
                    collect_factor(&mut coeff, &mut next, a, k / 2);
                    if k % 2 != 0 {
                        next.push((b.clone(), k % 2));
                    }
                    changed = true;
                }
                Kind::Add(_, ts) if ts[0].0 < 0.0 => {
                    if k % 2 != 0 {
                        coeff = -coeff;
                    }
                    next.push((b.scale(-1.0), k));
                    changed = true;
                }
                _ => next.push((b, k)),
            }
        }
        if exp_args.len() == 1 && exp_plain == 1 {
            next.push((Expr::func(Func::Exp, exp_args.pop().unwrap()), 1));
        } else if !exp_args.is_empty() {
            collect_factor(&mut coeff, &mut next, &Expr::sum(exp_args).exp(), 1);
            changed = true;
        }
        factors = next;
        if !changed {
            break;
        }
    }

    if coeff == 0.0 {
        return Expr::zero();
    }
    if factors
        .iter()
        .any(|(b, k)| *k > 0 && matches!(b.kind(), Kind::Add(..)))
    {
        return expand(coeff, factors);
    }
    if factors.is_empty() {
        return Expr::constant(coeff);
    }
    if coeff == 1.0 && factors.len() == 1 && factors[0].1 == 1 {
        return factors.pop().unwrap().0;
    }
    Expr::from_kind(Kind::Mul(canon(coeff), factors))
}

/// Additive parts of `e` as standalone expressions.
fn add_parts(e: &Expr) -> Vec<Expr> {
    match e.kind() {
        Kind::Add(c, ts) => {
            let mut out = Vec::with_capacity(ts.len() + 1);
            if *c != 0.0 {
                out.push(Expr::constant(*c));
            }
            out.extend(ts.iter().map(|(k, t)| scaled_monomial(*k, t.clone())));
            out
        }
        _ => vec![e.clone()],
    }
}

fn expand(coeff: f64, factors: Vec<(Expr, i32)>) -> Expr {
    let (sums, rest): (Vec<_>, Vec<_>) = factors
        .into_iter()
        .partition(|(b, k)| *k > 0 && matches!(b.kind(), Kind::Add(..)));
    let mut acc = vec![build_product(coeff, rest)];
    for (s, k) in sums {
        let parts = add_parts(&s);
        for _ in 0..k {
            let mut next = Vec::with_capacity(acc.len() * parts.len());
            for a in &acc {
                for p in &parts {
                    next.push(Expr::product([a.clone(), p.clone()]));
                }
            }
            acc = add_parts(&Expr::sum(next));
        }
    }
    Expr::sum(acc)
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    canon(a).total_cmp(&canon(b))
}

fn cmp_kind(a: &Kind, b: &Kind) -> Ordering {
    fn rank(k: &Kind) -> u8 {
        match k {
            Kind::Const(_) => 0,
            Kind::Pi => 1,
            Kind::Var(..) => 2,
            Kind::Add(..) => 3,
            Kind::Mul(..) => 4,
            Kind::Func(..) => 5,
            Kind::Atan2(..) => 6,
        }
    }
    match (a, b) {
        (Kind::Const(x), Kind::Const(y)) => cmp_f64(*x, *y),
        (Kind::Pi, Kind::Pi) => Ordering::Equal,
        (Kind::Var(i, n), Kind::Var(j, m)) => i.cmp(j).then_with(|| n.cmp(m)),
        (Kind::Add(c, ts), Kind::Add(d, us)) => cmp_f64(*c, *d).then_with(|| {
            ts.len().cmp(&us.len()).then_with(|| {
                ts.iter()
                    .zip(us)
                    .map(|((k, t), (l, u))| cmp_f64(*k, *l).then_with(|| t.cmp(u)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
        }),
        (Kind::Mul(c, fs), Kind::Mul(d, gs)) => cmp_f64(*c, *d).then_with(|| {
            fs.len().cmp(&gs.len()).then_with(|| {
                fs.iter()
                    .zip(gs)
                    .map(|((b, k), (c, l))| b.cmp(c).then_with(|| k.cmp(l)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
        }),
        (Kind::Func(f, x), Kind::Func(g, y)) => f.cmp(g).then_with(|| x.cmp(y)),
        (Kind::Atan2(a, b), Kind::Atan2(c, d)) => a.cmp(c).then_with(|| b.cmp(d)),
        _ => rank(a).cmp(&rank(b)),
    }
}

impl Ord for Expr {
    /// Total order by structural hash, ties broken structurally. Deterministic
    /// across runs, but otherwise arbitrary.
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.hash()
            .cmp(&other.hash())
            .then_with(|| cmp_kind(self.kind(), other.kind()))
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, |$a:ident, $b:ident| $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs.clone());
                $body
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self, rhs.clone());
                $body
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                let ($a, $b) = (self, Expr::constant(rhs));
                $body
            }
        }
        impl std::ops::$tr<f64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr {
                let ($a, $b) = (self.clone(), Expr::constant(rhs));
                $body
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, b.scale(-1.0)]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| Expr::product([a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(-1.0)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::sum(iter)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::product(iter)
    }
}
