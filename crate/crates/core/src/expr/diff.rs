use super::{Expr, Func, Kind};

impl Expr {
    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        if !self.depends_on(i) {
            return Expr::zero();
        }
        match self.kind() {
            Kind::Const(_) | Kind::Pi => Expr::zero(),
            Kind::Var(j, _) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Add(_, ts) => Expr::sum(ts.iter().map(|(k, t)| t.diff(i).scale(*k))),
            Kind::Mul(c, fs) => {
                // Logarithmic derivative: Σ_j k_j b_j' / b_j times the product.
                let mut terms = Vec::with_capacity(fs.len());
                for (j, (b, k)) in fs.iter().enumerate() {
                    let db = b.diff(i);
                    if db.is_zero() {
                        continue;
                    }
                    let mut parts = Vec::with_capacity(fs.len() + 1);
                    parts.push(Expr::constant(c * f64::from(*k)));
                    parts.push(db);
                    for (l, (b2, k2)) in fs.iter().enumerate() {
                        let e = if l == j { k2 - 1 } else { *k2 };
                        if e != 0 {
                            parts.push(b2.powi(e));
                        }
                    }
                    terms.push(Expr::product(parts));
                }
                Expr::sum(terms)
            }
            Kind::Func(f, a) => {
                let da = a.diff(i);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => a.recip(),
                    Func::Sqrt => self.recip().scale(0.5),
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Atan => (a.powi(2) + 1.0).recip(),
                };
                outer * da
            }
            Kind::Atan2(y, x) => {
                let num = x * &y.diff(i) - y * &x.diff(i);
                num * (x.powi(2) + y.powi(2)).recip()
            }
        }
    }

    /// Best-effort rebuild through the normalizing constructors.
    pub fn simplify(&self) -> Expr {
        match self.kind() {
            Kind::Const(_) | Kind::Pi | Kind::Var(..) => self.clone(),
            Kind::Add(c, ts) => Expr::sum(
                std::iter::once(Expr::constant(*c))
                    .chain(ts.iter().map(|(k, t)| t.simplify().scale(*k))),
            ),
            Kind::Mul(c, fs) => Expr::product(
                std::iter::once(Expr::constant(*c))
                    .chain(fs.iter().map(|(b, k)| b.simplify().powi(*k))),
            ),
            Kind::Func(f, a) => Expr::func(*f, a.simplify()),
            Kind::Atan2(y, x) => Expr::atan2(y.simplify(), x.simplify()),
        }
    }
}
