use std::f64::consts::PI;

use super::{Expr, Func, Kind};
use crate::{Error, Result};

fn domain(e: &Expr, reason: &str) -> Error {
    Error::Domain {
        expr: e.to_string(),
        reason: reason.to_string(),
    }
}

impl Expr {
    /// Evaluates at the point `p` (coordinates in chart order).
    ///
    /// Leaving the domain of any subexpression is an error naming that
    /// subexpression; a NaN or infinity is never returned.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let v = match self.kind() {
            Kind::Const(c) => *c,
            Kind::Pi => PI,
            Kind::Var(i, _) => *p
                .get(*i)
                .ok_or_else(|| domain(self, "point has too few coordinates"))?,
            Kind::Add(c, ts) => {
                let mut s = *c;
                for (k, t) in ts {
                    s += k * t.eval(p)?;
                }
                s
            }
            Kind::Mul(c, fs) => {
                let mut prod = *c;
                for (b, k) in fs {
                    let v = b.eval(p)?;
                    if v == 0.0 && *k < 0 {
                        return Err(domain(b, "division by zero"));
                    }
                    prod *= v.powi(*k);
                }
                prod
            }
            Kind::Func(f, a) => {
                let v = a.eval(p)?;
                match f {
                    Func::Ln if v <= 0.0 => return Err(domain(self, "logarithm of a non-positive value")),
                    Func::Sqrt if v < 0.0 => return Err(domain(self, "square root of a negative value")),
                    _ => f.apply(v).expect("domain checked above"),
                }
            }
            Kind::Atan2(y, x) => {
                let (a, b) = (y.eval(p)?, x.eval(p)?);
                if a == 0.0 && b == 0.0 {
                    return Err(domain(self, "atan2 at the origin"));
                }
                a.atan2(b)
            }
        };
        if !v.is_finite() {
            return Err(domain(self, "value is not finite"));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(0, "x")
    }
    fn y() -> Expr {
        Expr::var(1, "y")
    }

    #[test]
    fn sum_of_squares() {
        let e = x().powi(2) + y().powi(2);
        assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn half_log_at_unit_point() {
        let e = (x().powi(2) + y().powi(2)).ln().scale(0.5);
        assert_eq!(e.eval(&[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn atan_near_the_axis() {
        let e = (x() / y()).atan();
        let v = e.eval(&[2.0, 1e-3]).unwrap();
        assert!((v - 2000f64.atan()).abs() < 1e-15);
        assert!((v - (PI / 2.0 - 5e-4)).abs() < 1e-9);
    }

    #[test]
    fn log_domain_error_names_subexpression() {
        let e = x().ln() + y();
        match e.eval(&[-1.0, 0.0]) {
            Err(Error::Domain { expr, .. }) => assert_eq!(expr, "ln(x)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_is_reported() {
        assert!(matches!(x().recip().eval(&[0.0]), Err(Error::Domain { .. })));
        assert!(matches!(
            (Expr::one() / Expr::zero()).eval(&[]),
            Err(Error::Domain { .. })
        ));
    }
}
