use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Expr, Func, Kind};
use crate::{Error, Result};

enum Op {
    Const(f64),
    Var(usize),
    Add(f64, Vec<(f64, usize)>),
    Mul(f64, Vec<(usize, i32)>),
    Func(Func, usize),
    Atan2(usize, usize),
}

/// A batch of expressions flattened into a straight-line program with shared
/// subexpressions evaluated once. Results match [`Expr::eval`] exactly.
pub struct Tape {
    ops: Vec<Op>,
    nodes: Vec<Expr>,
    outputs: Vec<usize>,
}

impl Tape {
    pub fn new<'a, I: IntoIterator<Item = &'a Expr>>(exprs: I) -> Tape {
        let mut tape = Tape {
            ops: Vec::new(),
            nodes: Vec::new(),
            outputs: Vec::new(),
        };
        let mut seen = HashMap::new();
        for e in exprs {
            let slot = tape.push(e, &mut seen);
            tape.outputs.push(slot);
        }
        tape
    }

    fn push(&mut self, e: &Expr, seen: &mut HashMap<Expr, usize>) -> usize {
        if let Some(&slot) = seen.get(e) {
            return slot;
        }
        let op = match e.kind() {
            Kind::Const(c) => Op::Const(*c),
            Kind::Pi => Op::Const(PI),
            Kind::Var(i, _) => Op::Var(*i),
            Kind::Add(c, ts) => Op::Add(*c, ts.iter().map(|(k, t)| (*k, self.push(t, seen))).collect()),
            Kind::Mul(c, fs) => Op::Mul(*c, fs.iter().map(|(b, k)| (self.push(b, seen), *k)).collect()),
            Kind::Func(f, a) => Op::Func(*f, self.push(a, seen)),
            Kind::Atan2(y, x) => {
                let y = self.push(y, seen);
                Op::Atan2(y, self.push(x, seen))
            }
        };
        self.ops.push(op);
        self.nodes.push(e.clone());
        seen.insert(e.clone(), self.ops.len() - 1);
        self.ops.len() - 1
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    fn fail(&self, slot: usize, reason: &str) -> Error {
        Error::Domain {
            expr: self.nodes[slot].to_string(),
            reason: reason.to_string(),
        }
    }

    /// Values of all expressions at `p`, in input order.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(self.ops.len());
        for (slot, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(i) => *p
                    .get(*i)
                    .ok_or_else(|| self.fail(slot, "point has too few coordinates"))?,
                Op::Add(c, ts) => ts.iter().fold(*c, |s, (k, t)| s + k * vals[*t]),
                Op::Mul(c, fs) => {
                    let mut prod = *c;
                    for (b, k) in fs {
                        let v: f64 = vals[*b];
                        if v == 0.0 && *k < 0 {
                            return Err(self.fail(*b, "division by zero"));
                        }
                        prod *= v.powi(*k);
                    }
                    prod
                }
                Op::Func(f, a) => {
                    let v = vals[*a];
                    match f {
                        Func::Ln if v <= 0.0 => {
                            return Err(self.fail(slot, "logarithm of a non-positive value"))
                        }
                        Func::Sqrt if v < 0.0 => {
                            return Err(self.fail(slot, "square root of a negative value"))
                        }
                        _ => f.apply(v).expect("domain checked above"),
                    }
                }
                Op::Atan2(y, x) => {
                    let (a, b): (f64, f64) = (vals[*y], vals[*x]);
                    if a == 0.0 && b == 0.0 {
                        return Err(self.fail(slot, "atan2 at the origin"));
                    }
                    a.atan2(b)
                }
            };
            if !v.is_finite() {
                return Err(self.fail(slot, "value is not finite"));
            }
            vals.push(v);
        }
        Ok(self.outputs.iter().map(|&o| vals[o]).collect())
    }
}
