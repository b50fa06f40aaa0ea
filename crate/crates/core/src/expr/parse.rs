//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | "+" unary | power ;
//! power   = primary [ "^" unary ] ;          (* exponent folds to an integer *)
//! primary = number | "pi" | coordinate
//!         | function "(" expr ")" | "atan2" "(" expr "," expr ")"
//!         | "(" expr ")" ;
//! function = "exp" | "ln" | "sqrt" | "sin" | "cos" | "atan" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```

use super::{Chart, Expr, Func};
use crate::{Error, Result};

/// Parses `text` with identifiers resolved against the chart's coordinates.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr> {
    parse_with_coords(text, chart.coords())
}

/// Parses `text` with identifiers resolved against `coords` (index = position).
pub fn parse_with_coords<S: AsRef<str>>(text: &str, coords: &[S]) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        coords: coords.iter().map(|c| c.as_ref()).collect(),
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: Vec<&'a str>,
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let k = self.unary()?.as_const();
        match k {
            Some(k) if k.fract() == 0.0 && k.abs() <= 1e6 => Ok(base.powi(k as i32)),
            _ => Err(Error::Syntax {
                pos: at,
                msg: "exponent must be an integer constant".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        let mut any = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            any |= digits(self);
        }
        if !any {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = mark;
                return Err(self.syntax("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Expr::constant)
            .ok_or(Error::Syntax {
                pos: start,
                msg: format!("number out of range: {text}"),
            })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(i) = self.coords.iter().position(|c| *c == name) {
            if self.peek() == Some(b'(') {
                return Err(self.syntax(&format!("coordinate '{name}' is not a function")));
            }
            return Ok(Expr::var(i, name));
        }
        if name == "pi" {
            return Ok(Expr::pi());
        }
        let arity = match (Func::from_name(name), name) {
            (Some(_), _) => 1,
            (None, "atan2") => 2,
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    pos: start,
                })
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.syntax(&format!("expected '(' after '{name}'")));
        }
        self.pos += 1;
        let mut args = Vec::new();
        if self.peek() != Some(b')') {
            args.push(self.expr()?);
            while self.eat(b',') {
                args.push(self.expr()?);
            }
        }
        self.expect(b')')?;
        if args.len() != arity {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: arity,
                got: args.len(),
                pos: start,
            });
        }
        let mut it = args.into_iter();
        let a = it.next().unwrap();
        Ok(match Func::from_name(name) {
            Some(f) => Expr::func(f, a),
            None => Expr::atan2(a, it.next().unwrap()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: [&str; 2] = ["x", "y"];

    fn p(s: &str) -> Expr {
        parse_with_coords(s, &XY).unwrap()
    }

    #[test]
    fn half_log_radius() {
        let r2 = p("x^2+y^2");
        assert_eq!(p("1/2*ln(x^2+y^2)"), r2.ln().scale(0.5));
    }

    #[test]
    fn atom() {
        assert_eq!(p("x"), Expr::var(0, "x"));
    }

    #[test]
    fn product_with_atan() {
        let e = p("y*atan(x/y)");
        assert!(matches!(e.kind(), super::super::Kind::Mul(..)));
        assert_eq!(e, p("y") * p("x/y").atan());
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(p("-x^2").eval(&[3.0, 0.0]).unwrap(), -9.0);
        assert_eq!(p("2^-1").as_const(), Some(0.5));
        assert_eq!(p("1 - 2 - 3").as_const(), Some(-4.0));
        assert_eq!(p("8/2/2").as_const(), Some(2.0));
        assert_eq!(p("2.5e1").as_const(), Some(25.0));
        assert_eq!(p("pi").eval(&[]).unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_with_coords("x + z", &XY),
            Err(Error::UnknownIdentifier {
                name: "z".into(),
                pos: 4
            })
        );
        assert!(matches!(
            parse_with_coords("x + ", &XY),
            Err(Error::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse_with_coords("atan2(x)", &XY),
            Err(Error::Arity { expected: 2, got: 1, .. })
        ));
        assert!(matches!(
            parse_with_coords("sin(x, y)", &XY),
            Err(Error::Arity { expected: 1, got: 2, .. })
        ));
        assert!(matches!(
            parse_with_coords("x^y", &XY),
            Err(Error::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse_with_coords("(x", &XY),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn print_parse_round_trip() {
        for s in [
            "1/2*ln(x^2+y^2)",
            "x*ln(x^2 + y^2)/2 + y*atan(x/y)",
            "-x/(x^2+y^2) + 3*y^-2 - 0.125",
            "exp(-x)*sin(y)^3 - cos(x*y)",
            "atan2(y, x) + pi*sqrt(x^2+1)",
            "1/0 + x",
            "-(x - y)^3",
        ] {
            let e = p(s);
            let printed = e.to_string();
            let again = p(&printed);
            assert_eq!(again, e, "{s} -> {printed}");
            assert_eq!(again.to_string(), printed);
        }
    }
}
