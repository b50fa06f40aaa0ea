use std::fmt;

use super::{Expr, Kind};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn number(c: f64) -> String {
    format!("{c}")
}

/// Renders `e` and reports the binding strength of its outermost operator.
fn render(e: &Expr) -> (String, u8) {
    match e.kind() {
        Kind::Const(c) if *c < 0.0 => (number(*c), PREC_NEG),
        Kind::Const(c) => (number(*c), PREC_ATOM),
        Kind::Pi => ("pi".into(), PREC_ATOM),
        Kind::Var(_, name) => (name.to_string(), PREC_ATOM),
        Kind::Func(f, a) => (format!("{}({})", f.name(), render(a).0), PREC_ATOM),
        Kind::Atan2(y, x) => (
            format!("atan2({}, {})", render(y).0, render(x).0),
            PREC_ATOM,
        ),
        Kind::Mul(c, fs) => {
            let (s, p) = render_product(c.abs(), fs);
            if *c < 0.0 {
                (format!("-{}", wrap(s, p, PREC_MUL)), PREC_NEG)
            } else {
                (s, p)
            }
        }
        Kind::Add(c, ts) => {
            let mut out = String::new();
            for (k, t) in ts {
                let (s, p) = render_term(k.abs(), t);
                push_signed(&mut out, *k < 0.0, &s, p);
            }
            if *c != 0.0 {
                push_signed(&mut out, *c < 0.0, &number(c.abs()), PREC_ATOM);
            }
            (out, PREC_ADD)
        }
    }
}

fn push_signed(out: &mut String, negative: bool, s: &str, p: u8) {
    let body = if negative && p < PREC_MUL {
        format!("({s})")
    } else {
        s.to_string()
    };
    match (out.is_empty(), negative) {
        (true, false) => out.push_str(&body),
        (true, true) => {
            out.push('-');
            out.push_str(&body);
        }
        (false, false) => {
            out.push_str(" + ");
            out.push_str(&body);
        }
        (false, true) => {
            out.push_str(" - ");
            out.push_str(&body);
        }
    }
}

fn render_term(c: f64, m: &Expr) -> (String, u8) {
    match m.kind() {
        Kind::Mul(k, fs) if *k == 1.0 => render_product(c, fs),
        _ => render_product(c, std::slice::from_ref(&(m.clone(), 1))),
    }
}

fn wrap(s: String, p: u8, ctx: u8) -> String {
    if p < ctx {
        format!("({s})")
    } else {
        s
    }
}

fn power(b: &Expr, k: i32) -> String {
    let (s, p) = render(b);
    if k == 1 {
        wrap(s, p, PREC_POW)
    } else {
        format!("{}^{}", wrap(s, p, PREC_ATOM), k)
    }
}

/// `c * Π b^k` with `c > 0`; negative exponents become divisions.
fn render_product(c: f64, fs: &[(Expr, i32)]) -> (String, u8) {
    let num: Vec<String> = fs.iter().filter(|f| f.1 > 0).map(|(b, k)| power(b, *k)).collect();
    let den: Vec<String> = fs.iter().filter(|f| f.1 < 0).map(|(b, k)| power(b, -k)).collect();
    if c == 1.0 && num.len() == 1 && den.is_empty() {
        let (b, k) = &fs[0];
        if *k == 1 {
            return render(b);
        }
        return (num.into_iter().next().unwrap(), PREC_POW);
    }
    let mut parts = Vec::with_capacity(num.len() + 1);
    if c != 1.0 || num.is_empty() {
        parts.push(number(c));
    }
    parts.extend(num);
    let mut s = parts.join("*");
    for d in den {
        s.push('/');
        s.push_str(&d);
    }
    (s, PREC_MUL)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}
