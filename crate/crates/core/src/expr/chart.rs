use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse, Expr, Func};
use crate::{Error, Result};

/// Default margin by which every domain inequality must hold at sample points.
pub const DEFAULT_STANDOFF: f64 = 1e-3;

/// A strict inequality `lhs > rhs` (or `<`), stored as `gap > 0`.
#[derive(Clone, Debug)]
pub struct Constraint {
    text: String,
    gap: Expr,
}

impl Constraint {
    pub fn text(&self) -> &str {
        &self.text
    }

    /// The expression that must be positive.
    pub fn gap(&self) -> &Expr {
        &self.gap
    }
}

/// A coordinate chart: names, a sampling box and a domain predicate.
#[derive(Clone, Debug)]
pub struct Chart {
    coords: Vec<Arc<str>>,
    bounds: Vec<(f64, f64)>,
    constraints: Vec<Constraint>,
    standoff: f64,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "pi"
        && name != "atan2"
        && Func::from_name(name).is_none()
}

impl Chart {
    /// Builds a chart and checks that box and predicate have common points.
    pub fn new<S: AsRef<str>>(
        coords: &[S],
        bounds: &[(f64, f64)],
        constraints: &[S],
        standoff: f64,
    ) -> Result<Chart> {
        let coords: Vec<Arc<str>> = coords.iter().map(|c| Arc::from(c.as_ref())).collect();
        if coords.is_empty() {
            return Err(Error::InvalidChart("a chart needs at least one coordinate".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if !valid_name(c) {
                return Err(Error::InvalidChart(format!("invalid coordinate name '{c}'")));
            }
            if coords[..i].contains(c) {
                return Err(Error::InvalidChart(format!("duplicate coordinate '{c}'")));
            }
        }
        if bounds.len() != coords.len() {
            return Err(Error::InvalidChart(format!(
                "{} coordinates but {} bounds",
                coords.len(),
                bounds.len()
            )));
        }
        for &(lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidChart(format!("bad interval [{lo}, {hi}]")));
            }
        }
        if !(standoff >= 0.0 && standoff.is_finite()) {
            return Err(Error::InvalidChart(format!("bad standoff {standoff}")));
        }
        let mut chart = Chart {
            coords,
            bounds: bounds.to_vec(),
            constraints: Vec::new(),
            standoff,
        };
        for c in constraints {
            chart.constraints.push(chart.constraint(c.as_ref())?);
        }
        chart.check_nonempty()?;
        Ok(chart)
    }

    /// Box-only chart with the default standoff.
    pub fn boxed<S: AsRef<str>>(coords: &[S], bounds: &[(f64, f64)]) -> Result<Chart> {
        Chart::new(coords, bounds, &[] as &[S], DEFAULT_STANDOFF)
    }

    fn constraint(&self, text: &str) -> Result<Constraint> {
        let ops: Vec<(usize, char)> = text.char_indices().filter(|(_, c)| *c == '<' || *c == '>').collect();
        let &[(at, op)] = ops.as_slice() else {
            return Err(Error::InvalidChart(format!(
                "constraint '{text}' must contain exactly one '<' or '>'"
            )));
        };
        let lhs = parse(&text[..at], self)?;
        let rhs = parse(&text[at + 1..], self)?;
        let gap = if op == '>' { lhs - rhs } else { rhs - lhs };
        Ok(Constraint {
            text: text.trim().to_string(),
            gap,
        })
    }

    fn check_nonempty(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..20_000 {
            if self.contains(&self.draw(&mut rng)) {
                return Ok(());
            }
        }
        Err(Error::InvalidChart(
            "sampling box and domain predicate have no common points".into(),
        ))
    }

    /// Same chart with an additional domain inequality.
    pub fn restrict(&self, constraint: &str) -> Result<Chart> {
        let mut chart = self.clone();
        chart.constraints.push(chart.constraint(constraint)?);
        chart.check_nonempty()?;
        Ok(chart)
    }

    /// Same chart with a different sampling box.
    pub fn with_bounds(&self, bounds: &[(f64, f64)]) -> Result<Chart> {
        let texts: Vec<&str> = self.constraints.iter().map(|c| c.text()).collect();
        let coords: Vec<&str> = self.coords.iter().map(|c| &**c).collect();
        Chart::new(&coords, bounds, &texts, self.standoff)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn standoff(&self) -> f64 {
        self.standoff
    }

    /// The `i`-th coordinate function.
    pub fn var(&self, i: usize) -> Expr {
        Expr::var(i, self.coords[i].clone())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| &**c == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr> {
        parse(text, self)
    }

    /// Partial derivative by coordinate name.
    pub fn differentiate(&self, e: &Expr, coord: &str) -> Result<Expr> {
        let i = self
            .index_of(coord)
            .ok_or_else(|| Error::ChartMismatch(format!("'{coord}' is not a coordinate")))?;
        Ok(e.diff(i))
    }

    /// Whether `p` lies in the box and satisfies every inequality with margin.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
            && self
                .constraints
                .iter()
                .all(|c| matches!(c.gap.eval(p), Ok(g) if g > self.standoff))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
            .collect()
    }

    /// `count` points drawn uniformly from the box and rejected against the
    /// predicate, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let budget = 1000 * count.max(1);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            if attempts == budget {
                return Err(Error::Sampling {
                    found: out.len(),
                    wanted: count,
                    attempts,
                });
            }
            attempts += 1;
            let p = self.draw(&mut rng);
            if self.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Charts are compatible when they use the same coordinates.
    pub fn compatible(&self, other: &Chart) -> bool {
        self.coords == other.coords
    }

    pub fn ensure_compatible(&self, other: &Chart) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!(
                "coordinates ({}) vs ({})",
                self.coords.join(", "),
                other.coords.join(", ")
            )))
        }
    }
}
