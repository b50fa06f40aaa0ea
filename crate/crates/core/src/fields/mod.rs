//! Tensor fields on a chart: vector fields, 1-forms, metrics, (0,2)- and
//! (1,r)-tensor fields, plus the seeded sampling probes used to compare them.

mod metric;
mod probe;
mod random;

pub use metric::MetricField;
pub use probe::{
    fields_equal_probe, probe_exprs, probe_trials, residual, zero_probe, EqualityReport,
    ProbeConfig, SamplePoint,
    WITNESS_THRESHOLD,
};
pub use random::{random_affine_field, random_function, random_one_form, random_polynomial, random_vector_field};

use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::expr::{Chart, Expr};
use crate::{Error, Result};

/// Anything with a chart and a flat list of scalar components.
pub trait Field {
    fn chart(&self) -> &Arc<Chart>;
    fn components(&self) -> &[Expr];
}

fn check_len(chart: &Chart, what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::ChartMismatch(format!(
            "{what} on a {}-dimensional chart needs {want} components, got {got}",
            chart.dim()
        )))
    }
}

fn parse_all(chart: &Chart, texts: &[&str]) -> Result<Vec<Expr>> {
    texts.iter().map(|t| chart.parse(t)).collect()
}

/// Fails unless both objects live on charts with the same coordinates.
pub fn same_chart(a: &Chart, b: &Chart) -> Result<()> {
    a.ensure_compatible(b)
}

/// `Σ X^i ∂_i f`.
pub fn vf_apply(x: &VectorField, f: &Expr) -> Expr {
    x.apply(f)
}

/// Lie bracket `[X, Y]`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    x.bracket(y)
}

/// Index raising `ω ↦ ω^#` with respect to `g`.
pub fn sharp(w: &OneForm, g: &MetricField) -> Result<VectorField> {
    w.sharp(g)
}

/// Index lowering `X ↦ g(X, ·)`.
pub fn flat(x: &VectorField, g: &MetricField) -> Result<OneForm> {
    x.flat(g)
}

/// A vector field `Σ X^k ∂_k`.
#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl Field for VectorField {
    fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    fn components(&self) -> &[Expr] {
        &self.comps
    }
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<VectorField> {
        check_len(chart, "vector field", comps.len(), chart.dim())?;
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn parse(chart: &Arc<Chart>, texts: &[&str]) -> Result<VectorField> {
        VectorField::new(chart, parse_all(chart, texts)?)
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    /// The position (Euler) field `Σ x^j ∂_j`.
    pub fn position(chart: &Arc<Chart>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: (0..chart.dim()).map(|i| chart.var(i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, k: usize) -> &Expr {
        &self.comps[k]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    /// Derivative of `f` along the field.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.comps
                .iter()
                .enumerate()
                .filter(|(i, c)| !c.is_zero() && f.depends_on(*i))
                .map(|(i, c)| c * &f.diff(i)),
        )
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(xk, yk)| self.apply(yk) - other.apply(xk))
                .collect(),
        })
    }

    /// Pointwise multiple `f X`.
    pub fn scale(&self, f: &Expr) -> VectorField {
        self.map(|c| c * f)
    }

    pub fn scale_const(&self, c: f64) -> VectorField {
        self.map(|e| e.scale(c))
    }

    /// `true` when every component is the literal constant 0.
    pub fn is_structurally_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn simplify(&self) -> VectorField {
        self.map(Expr::simplify)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }

    pub fn flat(&self, g: &MetricField) -> Result<OneForm> {
        same_chart(&self.chart, g.chart())?;
        let n = self.dim();
        let comps = (0..n)
            .map(|j| Expr::sum((0..n).map(|i| g.component(i, j) * &self.comps[i])))
            .collect();
        Ok(OneForm {
            chart: self.chart.clone(),
            comps,
        })
    }

    /// Moves the field onto another chart with the same coordinates.
    pub fn on_chart(&self, chart: &Arc<Chart>) -> Result<VectorField> {
        same_chart(&self.chart, chart)?;
        Ok(VectorField {
            chart: chart.clone(),
            comps: self.comps.clone(),
        })
    }
}

macro_rules! linear_ops {
    ($t:ident) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                assert_eq!(self.comps.len(), rhs.comps.len(), "component count mismatch");
                $t {
                    chart: self.chart.clone(),
                    comps: self.comps.iter().zip(&rhs.comps).map(|(a, b)| a + b).collect(),
                }
            }
        }
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                &self + &rhs
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                assert_eq!(self.comps.len(), rhs.comps.len(), "component count mismatch");
                $t {
                    chart: self.chart.clone(),
                    comps: self.comps.iter().zip(&rhs.comps).map(|(a, b)| a - b).collect(),
                }
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                &self - &rhs
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                $t {
                    chart: self.chart.clone(),
                    comps: self.comps.iter().map(|c| -c).collect(),
                }
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                -&self
            }
        }
    };
}

linear_ops!(VectorField);
linear_ops!(OneForm);

/// A 1-form `Σ ω_k dx^k`.
#[derive(Clone, Debug)]
pub struct OneForm {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl Field for OneForm {
    fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    fn components(&self) -> &[Expr] {
        &self.comps
    }
}

impl OneForm {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<OneForm> {
        check_len(chart, "1-form", comps.len(), chart.dim())?;
        Ok(OneForm {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn parse(chart: &Arc<Chart>, texts: &[&str]) -> Result<OneForm> {
        OneForm::new(chart, parse_all(chart, texts)?)
    }

    pub fn zero(chart: &Arc<Chart>) -> OneForm {
        OneForm {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate differential `dx^i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> OneForm {
        let mut w = OneForm::zero(chart);
        w.comps[i] = Expr::one();
        w
    }

    /// The differential `df`.
    pub fn differential(chart: &Arc<Chart>, f: &Expr) -> OneForm {
        OneForm {
            chart: chart.clone(),
            comps: (0..chart.dim()).map(|i| f.diff(i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, k: usize) -> &Expr {
        &self.comps[k]
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> OneForm {
        OneForm {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    /// `ω(X)`.
    pub fn apply(&self, x: &VectorField) -> Expr {
        Expr::sum(
            self.comps
                .iter()
                .zip(&x.comps)
                .filter(|(w, v)| !w.is_zero() && !v.is_zero())
                .map(|(w, v)| w * v),
        )
    }

    pub fn scale(&self, f: &Expr) -> OneForm {
        self.map(|c| c * f)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }

    /// `(ω^#)^k = Σ g^{kl} ω_l` using the symbolic inverse metric.
    pub fn sharp(&self, g: &MetricField) -> Result<VectorField> {
        same_chart(&self.chart, g.chart())?;
        let inv = g.inverse()?;
        let n = self.dim();
        let comps = (0..n)
            .map(|k| Expr::sum((0..n).map(|l| &inv[k * n + l] * &self.comps[l])))
            .collect();
        Ok(VectorField {
            chart: self.chart.clone(),
            comps,
        })
    }

    /// Numeric `ω^#` at one point via a per-point LU solve (any dimension).
    pub fn sharp_at(&self, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
        let inv = g.inverse_at(p)?;
        let w = self.eval(p)?;
        let n = self.dim();
        Ok((0..n)
            .map(|k| (0..n).map(|l| inv[k * n + l] * w[l]).sum())
            .collect())
    }
}

/// A (0,2)-tensor field with components `T_{ij}` stored row-major.
#[derive(Clone, Debug)]
pub struct Tensor02 {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl Field for Tensor02 {
    fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    fn components(&self) -> &[Expr] {
        &self.comps
    }
}

impl Tensor02 {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Result<Tensor02> {
        let n = chart.dim();
        check_len(chart, "(0,2)-tensor", comps.len(), n * n)?;
        Ok(Tensor02 {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(usize, usize) -> Expr) -> Tensor02 {
        let n = chart.dim();
        Tensor02 {
            chart: chart.clone(),
            comps: (0..n * n).map(|ij| f(ij / n, ij % n)).collect(),
        }
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.comps[i * self.chart.dim() + j]
    }

    /// `T(X, Y)`.
    pub fn apply(&self, x: &VectorField, y: &VectorField) -> Expr {
        let n = self.chart.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            if x.comps[i].is_zero() {
                continue;
            }
            for j in 0..n {
                let t = &self.comps[i * n + j];
                if !t.is_zero() && !y.comps[j].is_zero() {
                    terms.push(Expr::product([t.clone(), x.comps[i].clone(), y.comps[j].clone()]));
                }
            }
        }
        Expr::sum(terms)
    }

    /// `T(Y, X)` as a tensor.
    pub fn transpose(&self) -> Tensor02 {
        Tensor02::from_fn(&self.chart, |i, j| self.component(j, i).clone())
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
}

/// A (1,r)-tensor field `T^k_{i_1…i_r}`; component `(k, i_1, …, i_r)` is
/// stored at `k·n^r + i_1·n^{r−1} + … + i_r`.
#[derive(Clone, Debug)]
pub struct TangentTensor {
    chart: Arc<Chart>,
    rank: usize,
    comps: Vec<Expr>,
}

impl Field for TangentTensor {
    fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }
    fn components(&self) -> &[Expr] {
        &self.comps
    }
}

impl TangentTensor {
    pub fn new(chart: &Arc<Chart>, rank: usize, comps: Vec<Expr>) -> Result<TangentTensor> {
        let n = chart.dim();
        check_len(chart, "(1,r)-tensor", comps.len(), n.pow(rank as u32 + 1))?;
        Ok(TangentTensor {
            chart: chart.clone(),
            rank,
            comps,
        })
    }

    /// Builds components from `f(k, [i_1, …, i_r])`.
    pub fn from_fn(chart: &Arc<Chart>, rank: usize, f: impl Fn(usize, &[usize]) -> Expr) -> TangentTensor {
        let n = chart.dim();
        let total = n.pow(rank as u32 + 1);
        let comps = (0..total)
            .map(|flat| {
                let (k, idx) = unflatten(flat, n, rank);
                f(k, &idx)
            })
            .collect();
        TangentTensor {
            chart: chart.clone(),
            rank,
            comps,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn component(&self, k: usize, idx: &[usize]) -> &Expr {
        let n = self.chart.dim();
        let flat = idx.iter().fold(k, |acc, i| acc * n + i);
        &self.comps[flat]
    }

    /// `T(X_1, …, X_r)`.
    pub fn apply(&self, args: &[&VectorField]) -> Result<VectorField> {
        if args.len() != self.rank {
            return Err(Error::Degree(format!(
                "tensor of rank {} applied to {} arguments",
                self.rank,
                args.len()
            )));
        }
        for a in args {
            same_chart(&self.chart, &a.chart)?;
        }
        let n = self.chart.dim();
        let block = n.pow(self.rank as u32);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut terms = Vec::new();
            for (off, t) in self.comps[k * block..(k + 1) * block].iter().enumerate() {
                if t.is_zero() {
                    continue;
                }
                let (_, idx) = unflatten(off, n, self.rank);
                let mut factors = vec![t.clone()];
                let mut vanishes = false;
                for (a, &i) in args.iter().zip(&idx) {
                    let c = &a.comps[i];
                    if c.is_zero() {
                        vanishes = true;
                        break;
                    }
                    factors.push(c.clone());
                }
                if !vanishes {
                    terms.push(Expr::product(factors));
                }
            }
            out.push(Expr::sum(terms));
        }
        VectorField::new(&self.chart, out)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
}

/// Splits a flat (1,r) index into `(k, [i_1, …, i_r])`.
fn unflatten(mut flat: usize, n: usize, rank: usize) -> (usize, Vec<usize>) {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    (flat, idx)
}
