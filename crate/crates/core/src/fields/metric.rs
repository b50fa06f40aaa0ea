use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::{check_len, same_chart, Field, OneForm, Tensor02, VectorField};
use crate::expr::{Chart, Expr};
use crate::{Error, Result};

/// Smallest `|det g|` accepted as nondegenerate.
pub const DET_FLOOR: f64 = 1e-10;

/// Points checked for nondegeneracy before the symbolic inverse is used.
const NONDEGENERACY_SAMPLES: usize = 100;

struct Inner {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
    inverse: OnceLock<Result<Vec<Expr>>>,
}

/// A symmetric (0,2)-tensor field `g_{ij}`, nondegenerate on the chart.
///
/// Only the upper triangle is supplied; the lower one shares the same
/// expressions, so symmetry holds by construction.
#[derive(Clone)]
pub struct MetricField(Arc<Inner>);

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField").field("comps", &self.0.comps).finish()
    }
}

impl Field for MetricField {
    fn chart(&self) -> &Arc<Chart> {
        &self.0.chart
    }
    fn components(&self) -> &[Expr] {
        &self.0.comps
    }
}

impl MetricField {
    /// Builds from the row-major upper triangle `g_11, g_12, …, g_1n, g_22, …`.
    pub fn from_upper(chart: &Arc<Chart>, upper: Vec<Expr>) -> Result<MetricField> {
        let n = chart.dim();
        check_len(chart, "metric upper triangle", upper.len(), n * (n + 1) / 2)?;
        let mut comps = vec![Expr::zero(); n * n];
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in i..n {
                let e = it.next().unwrap();
                comps[j * n + i] = e.clone();
                comps[i * n + j] = e;
            }
        }
        Ok(MetricField::raw(chart, comps))
    }

    /// Builds from full rows, which must agree structurally with their transpose.
    pub fn from_rows(chart: &Arc<Chart>, rows: Vec<Vec<Expr>>) -> Result<MetricField> {
        let n = chart.dim();
        check_len(chart, "metric rows", rows.len(), n)?;
        for r in &rows {
            check_len(chart, "metric row", r.len(), n)?;
        }
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Setup(format!(
                        "metric is not symmetric: g[{i}][{j}] = {} but g[{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Ok(MetricField::raw(chart, rows.into_iter().flatten().collect()))
    }

    fn raw(chart: &Arc<Chart>, comps: Vec<Expr>) -> MetricField {
        MetricField(Arc::new(Inner {
            chart: chart.clone(),
            comps,
            inverse: OnceLock::new(),
        }))
    }

    pub fn diagonal(chart: &Arc<Chart>, diag: Vec<Expr>) -> Result<MetricField> {
        let n = chart.dim();
        check_len(chart, "metric diagonal", diag.len(), n)?;
        let mut comps = vec![Expr::zero(); n * n];
        for (i, d) in diag.into_iter().enumerate() {
            comps[i * n + i] = d;
        }
        Ok(MetricField::raw(chart, comps))
    }

    pub fn euclidean(chart: &Arc<Chart>) -> MetricField {
        let n = chart.dim();
        MetricField::diagonal(chart, vec![Expr::one(); n]).expect("length matches")
    }

    /// `g_{ij} = ∂_i ∂_j φ`.
    pub fn hessian(chart: &Arc<Chart>, potential: &Expr) -> MetricField {
        let n = chart.dim();
        let first: Vec<Expr> = (0..n).map(|i| potential.diff(i)).collect();
        let mut comps = vec![Expr::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let e = first[i].diff(j);
                comps[j * n + i] = e.clone();
                comps[i * n + j] = e;
            }
        }
        MetricField::raw(chart, comps)
    }

    /// `e^{2f} g`.
    pub fn conformal(f: &Expr, g: &MetricField) -> MetricField {
        let factor = f.scale(2.0).exp();
        MetricField::raw(
            g.chart(),
            g.0.comps.iter().map(|c| c * &factor).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.chart.dim()
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.0.comps[i * self.dim() + j]
    }

    pub fn as_tensor(&self) -> Tensor02 {
        Tensor02::new(self.chart(), self.0.comps.clone()).expect("n² components")
    }

    /// `g(X, Y)`.
    pub fn apply(&self, x: &VectorField, y: &VectorField) -> Expr {
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            let xi = x.component(i);
            if xi.is_zero() {
                continue;
            }
            for j in 0..n {
                let (yj, gij) = (y.component(j), self.component(i, j));
                if !yj.is_zero() && !gij.is_zero() {
                    terms.push(Expr::product([gij.clone(), xi.clone(), yj.clone()]));
                }
            }
        }
        Expr::sum(terms)
    }

    /// Symbolic determinant (dimension ≤ 3).
    pub fn det(&self) -> Result<Expr> {
        let g = |i, j| self.component(i, j).clone();
        match self.dim() {
            1 => Ok(g(0, 0)),
            2 => Ok(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)),
            3 => Ok(Expr::sum([
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)),
                -(g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))),
                g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0)),
            ])),
            n => Err(Error::Unsupported(format!(
                "symbolic metric inverse in dimension {n} (only n <= 3); use the per-point inverse"
            ))),
        }
    }

    /// Symbolic inverse `g^{ij}` (row-major), via adjugate over determinant.
    ///
    /// Dimension ≤ 3 only. Nondegeneracy is checked at sampled chart points
    /// the first time the inverse is requested.
    pub fn inverse(&self) -> Result<&[Expr]> {
        self.0
            .inverse
            .get_or_init(|| self.compute_inverse())
            .as_deref()
            .map_err(Clone::clone)
    }

    fn compute_inverse(&self) -> Result<Vec<Expr>> {
        let det = self.det()?;
        let points = self.chart().sample(NONDEGENERACY_SAMPLES, 0x6d65_7472_6963)?;
        self.check_nondegenerate(&points)?;
        let rdet = det.recip();
        let g = |i: usize, j: usize| self.component(i, j).clone();
        let n = self.dim();
        let adj: Vec<Expr> = match n {
            1 => vec![Expr::one()],
            2 => vec![g(1, 1), -g(0, 1), -g(1, 0), g(0, 0)],
            _ => {
                let mut adj = Vec::with_capacity(9);
                for i in 0..3 {
                    for j in 0..3 {
                        // adj[i][j] = cofactor C[j][i]
                        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                        adj.push(g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0));
                    }
                }
                adj
            }
        };
        Ok(adj.into_iter().map(|a| a * &rdet).collect())
    }

    fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let vals: Vec<f64> = self.0.comps.iter().map(|c| c.eval(p)).collect::<Result<_>>()?;
        Ok(DMatrix::from_row_slice(n, n, &vals))
    }

    /// Numeric determinant at a point.
    pub fn det_at(&self, p: &[f64]) -> Result<f64> {
        Ok(self.matrix_at(p)?.determinant())
    }

    /// Numeric inverse at a point by LU factorization (any dimension).
    pub fn inverse_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        let m = self.matrix_at(p)?;
        let det = m.determinant();
        let singular = || Error::SingularMetric {
            point: p.to_vec(),
            det,
        };
        if !(det.abs() > DET_FLOOR) {
            return Err(singular());
        }
        let inv = m.lu().try_inverse().ok_or_else(singular)?;
        let n = self.dim();
        Ok((0..n * n).map(|ij| inv[(ij / n, ij % n)]).collect())
    }

    /// Fails at the first point where `|det g| <= 1e-10`.
    pub fn check_nondegenerate(&self, points: &[Vec<f64>]) -> Result<()> {
        for p in points {
            let det = self.det_at(p)?;
            if !(det.abs() > DET_FLOOR) {
                return Err(Error::SingularMetric {
                    point: p.clone(),
                    det,
                });
            }
        }
        Ok(())
    }

    /// Whether `g` is positive definite at every given point (Cholesky test).
    pub fn is_positive_definite(&self, points: &[Vec<f64>]) -> Result<bool> {
        for p in points {
            if self.matrix_at(p)?.cholesky().is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn same_chart(&self, other: &Chart) -> Result<()> {
        same_chart(self.chart(), other)
    }

    /// `grad f = (df)^#`.
    pub fn grad(&self, f: &Expr) -> Result<VectorField> {
        OneForm::differential(self.chart(), f).sharp(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Arc<Chart> {
        Arc::new(Chart::boxed(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap())
    }

    #[test]
    fn sharp_of_dx_for_exponential_diagonal_metric() {
        let c = plane();
        let g = MetricField::diagonal(&c, vec![c.parse("exp(x)").unwrap(), c.parse("exp(y)").unwrap()]).unwrap();
        let v = OneForm::coordinate(&c, 0).sharp(&g).unwrap();
        assert_eq!(v.component(0), &c.parse("exp(-x)").unwrap());
        assert!(v.component(1).is_zero());
    }

    #[test]
    fn symbolic_and_numeric_inverses_agree_in_three_dimensions() {
        let c = Arc::new(Chart::boxed(&["x", "y", "z"], &[(-1.0, 1.0); 3]).unwrap());
        let upper = ["2 + x^2", "x*y/4", "0.25", "3 + y^2", "z/8", "2 + exp(z)"];
        let g = MetricField::from_upper(&c, upper.iter().map(|s| c.parse(s).unwrap()).collect()).unwrap();
        let inv = g.inverse().unwrap().to_vec();
        for p in c.sample(20, 9).unwrap() {
            let num = g.inverse_at(&p).unwrap();
            for (a, b) in inv.iter().zip(&num) {
                assert!((a.eval(&p).unwrap() - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_metric_is_reported() {
        let c = plane();
        let z = MetricField::diagonal(&c, vec![Expr::zero(), Expr::one()]).unwrap();
        assert!(matches!(z.inverse(), Err(Error::SingularMetric { .. })));
        assert!(matches!(z.inverse_at(&[0.0, 0.0]), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn asymmetric_rows_are_rejected() {
        let c = plane();
        let rows = vec![vec![Expr::one(), c.var(0)], vec![c.var(1), Expr::one()]];
        assert!(MetricField::from_rows(&c, rows).is_err());
    }

    #[test]
    fn four_dimensional_inverse_is_numeric_only() {
        let c = Arc::new(Chart::boxed(&["a", "b", "d", "e"], &[(-1.0, 1.0); 4]).unwrap());
        let g = MetricField::euclidean(&c);
        assert!(matches!(g.inverse(), Err(Error::Unsupported(_))));
        assert_eq!(g.inverse_at(&[0.0; 4]).unwrap()[5], 1.0);
    }

    #[test]
    fn riemannian_flag() {
        let c = plane();
        let pts = c.sample(10, 1).unwrap();
        assert!(MetricField::euclidean(&c).is_positive_definite(&pts).unwrap());
        let lorentz = MetricField::diagonal(&c, vec![Expr::one(), Expr::constant(-1.0)]).unwrap();
        assert!(!lorentz.is_positive_definite(&pts).unwrap());
    }
}
