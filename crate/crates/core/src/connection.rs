//! Affine connections given by Christoffel symbols `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`.

use std::sync::Arc;

use crate::expr::{Chart, Expr};
use crate::fields::{
    probe_exprs, probe_trials, random_function, random_vector_field, same_chart, EqualityReport,
    Field, MetricField, OneForm, ProbeConfig, TangentTensor, Tensor02, VectorField,
};
use crate::{Error, Result};

/// An affine connection on a single chart. Flatness and torsion-freeness are
/// properties to probe, not invariants of the type.
#[derive(Clone, Debug)]
pub struct Connection {
    chart: Arc<Chart>,
    /// `Γ^k_{ij}` at `k·n² + i·n + j`.
    gamma: Vec<Expr>,
    label: Option<String>,
}

impl Connection {
    pub fn new(chart: &Arc<Chart>, gamma: Vec<Expr>) -> Result<Connection> {
        let n = chart.dim();
        if gamma.len() != n * n * n {
            return Err(Error::ChartMismatch(format!(
                "connection on a {n}-dimensional chart needs {} Christoffel symbols, got {}",
                n * n * n,
                gamma.len()
            )));
        }
        Ok(Connection {
            chart: chart.clone(),
            gamma,
            label: None,
        })
    }

    /// Builds from `f(k, i, j) = Γ^k_{ij}`.
    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(usize, usize, usize) -> Expr) -> Connection {
        let n = chart.dim();
        let gamma = (0..n * n * n).map(|f3| f(f3 / (n * n), (f3 / n) % n, f3 % n)).collect();
        Connection {
            chart: chart.clone(),
            gamma,
            label: None,
        }
    }

    /// The coordinate connection, all `Γ = 0`.
    pub fn flat(chart: &Arc<Chart>) -> Connection {
        Connection::from_fn(chart, |_, _, _| Expr::zero()).labeled("flat")
    }

    /// The connection whose affine coordinates are `u^a(x)`: the pullback of
    /// the coordinate connection, `Γ^k_{ij} = (J⁻¹)^k_a ∂_i∂_j u^a` with
    /// `J = ∂u/∂x`. Flat and torsion-free by construction (dimension ≤ 3).
    pub fn pullback_flat(chart: &Arc<Chart>, map: &[Expr]) -> Result<Connection> {
        let n = chart.dim();
        if map.len() != n {
            return Err(Error::ChartMismatch(format!("affine map needs {n} components")));
        }
        let jac = Tensor02::from_fn(chart, |a, i| map[a].diff(i));
        let jac = MetricLike::inverse(&jac)?;
        Ok(Connection::from_fn(chart, |k, i, j| {
            Expr::sum((0..n).map(|a| &jac[k * n + a] * &map[a].diff(i).diff(j)))
        }))
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Connection {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &Expr {
        let n = self.dim();
        &self.gamma[k * n * n + i * n + j]
    }

    pub fn christoffels(&self) -> &[Expr] {
        &self.gamma
    }

    /// Same symbols on another chart with the same coordinates.
    pub fn on_chart(&self, chart: &Arc<Chart>) -> Result<Connection> {
        same_chart(&self.chart, chart)?;
        Ok(Connection {
            chart: chart.clone(),
            ..self.clone()
        })
    }

    /// `(∇_X Y)^k = X(Y^k) + Γ^k_{ij} X^i Y^j`.
    pub fn cov_deriv_vf(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, x.chart())?;
        same_chart(&self.chart, y.chart())?;
        let n = self.dim();
        let comps = (0..n)
            .map(|k| {
                let mut terms = vec![x.apply(y.component(k))];
                for i in 0..n {
                    let xi = x.component(i);
                    if xi.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        let (g, yj) = (self.christoffel(k, i, j), y.component(j));
                        if !g.is_zero() && !yj.is_zero() {
                            terms.push(Expr::product([g.clone(), xi.clone(), yj.clone()]));
                        }
                    }
                }
                Expr::sum(terms)
            })
            .collect();
        VectorField::new(&self.chart, comps)
    }

    /// `(∇_X ω)_j = X(ω_j) − Γ^k_{ij} X^i ω_k`.
    pub fn cov_deriv_oneform(&self, x: &VectorField, w: &OneForm) -> Result<OneForm> {
        same_chart(&self.chart, x.chart())?;
        same_chart(&self.chart, w.chart())?;
        let n = self.dim();
        let comps = (0..n)
            .map(|j| {
                let mut terms = vec![x.apply(w.component(j))];
                for i in 0..n {
                    for k in 0..n {
                        let g = self.christoffel(k, i, j);
                        if !g.is_zero() {
                            terms.push(-Expr::product([
                                g.clone(),
                                x.component(i).clone(),
                                w.component(k).clone(),
                            ]));
                        }
                    }
                }
                Expr::sum(terms)
            })
            .collect();
        OneForm::new(&self.chart, comps)
    }

    /// `(∇_X h)(Y, Z) = X(h(Y,Z)) − h(∇_X Y, Z) − h(Y, ∇_X Z)`, componentwise.
    pub fn cov_deriv_bilinear(&self, x: &VectorField, h: &Tensor02) -> Result<Tensor02> {
        same_chart(&self.chart, x.chart())?;
        same_chart(&self.chart, h.chart())?;
        let n = self.dim();
        // A_m^j = Γ^m_{ij} X^i: the matrix of Y ↦ ∇_X Y − X(Y).
        let a: Vec<Expr> = (0..n * n)
            .map(|mj| {
                let (m, j) = (mj / n, mj % n);
                Expr::sum((0..n).map(|i| self.christoffel(m, i, j) * x.component(i)))
            })
            .collect();
        Ok(Tensor02::from_fn(&self.chart, |j, l| {
            let mut terms = vec![x.apply(h.component(j, l))];
            for m in 0..n {
                if !a[m * n + j].is_zero() {
                    terms.push(-(&a[m * n + j] * h.component(m, l)));
                }
                if !a[m * n + l].is_zero() {
                    terms.push(-(&a[m * n + l] * h.component(j, m)));
                }
            }
            Expr::sum(terms)
        }))
    }

    /// `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}` as a (1,2)-tensor.
    pub fn torsion_tensor(&self) -> TangentTensor {
        TangentTensor::from_fn(&self.chart, 2, |k, idx| {
            self.christoffel(k, idx[0], idx[1]) - self.christoffel(k, idx[1], idx[0])
        })
    }

    /// `T(X, Y) = ∇_X Y − ∇_Y X − [X, Y]`.
    pub fn torsion(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        Ok(self.cov_deriv_vf(x, y)? - self.cov_deriv_vf(y, x)? - x.bracket(y)?)
    }

    /// Probes `T(X, Y) = 0` on random polynomial field pairs.
    pub fn torsion_probe(&self, cfg: &ProbeConfig) -> Result<EqualityReport> {
        probe_trials(&self.chart, cfg, |rng, _| {
            let x = random_vector_field(&self.chart, cfg.field_degree, rng);
            let y = random_vector_field(&self.chart, cfg.field_degree, rng);
            let t = self.torsion(&x, &y)?;
            Ok((t.components().to_vec(), vec![Expr::zero(); self.dim()]))
        })
    }

    /// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`.
    pub fn curvature(&self, x: &VectorField, y: &VectorField, z: &VectorField) -> Result<VectorField> {
        let xy = self.cov_deriv_vf(x, &self.cov_deriv_vf(y, z)?)?;
        let yx = self.cov_deriv_vf(y, &self.cov_deriv_vf(x, z)?)?;
        let br = self.cov_deriv_vf(&x.bracket(y)?, z)?;
        Ok(xy - yx - br)
    }

    /// The curvature tensor as a (1,3)-tensor whose slots are `(X, Y, Z)`:
    /// component `(k, [i, j, l])` is `R^k_{lij} = ∂_iΓ^k_{jl} − ∂_jΓ^k_{il} +
    /// Γ^k_{im}Γ^m_{jl} − Γ^k_{jm}Γ^m_{il}`.
    pub fn riemann(&self) -> TangentTensor {
        let n = self.dim();
        TangentTensor::from_fn(&self.chart, 3, |k, idx| {
            let (i, j, l) = (idx[0], idx[1], idx[2]);
            let mut terms = vec![
                self.christoffel(k, j, l).diff(i),
                -self.christoffel(k, i, l).diff(j),
            ];
            for m in 0..n {
                terms.push(self.christoffel(k, i, m) * self.christoffel(m, j, l));
                terms.push(-(self.christoffel(k, j, m) * self.christoffel(m, i, l)));
            }
            Expr::sum(terms)
        })
    }

    /// Probes every curvature component against zero.
    pub fn flatness_probe(&self, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let r = self.riemann();
        let zeros = vec![Expr::zero(); r.components().len()];
        probe_exprs(&self.chart, cfg, r.components(), &zeros)
    }

    /// Probes the symbolic torsion components against zero.
    pub fn torsion_tensor_probe(&self, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let t = self.torsion_tensor();
        let zeros = vec![Expr::zero(); t.components().len()];
        probe_exprs(&self.chart, cfg, t.components(), &zeros)
    }

    /// Probes `R(X,Y)Z + R(Y,X)Z = 0` on random triples.
    pub fn curvature_antisymmetry_probe(&self, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let r = self.riemann();
        probe_trials(&self.chart, cfg, |rng, _| {
            let x = random_vector_field(&self.chart, cfg.field_degree, rng);
            let y = random_vector_field(&self.chart, cfg.field_degree, rng);
            let z = random_vector_field(&self.chart, cfg.field_degree, rng);
            let a = r.apply(&[&x, &y, &z])?;
            let b = -r.apply(&[&y, &x, &z])?;
            Ok((a.components().to_vec(), b.components().to_vec()))
        })
    }

    /// Levi-Civita connection `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
    pub fn levi_civita(g: &MetricField) -> Result<Connection> {
        let inv = g.inverse()?;
        let chart = g.chart();
        let n = chart.dim();
        Ok(Connection::from_fn(chart, |k, i, j| {
            Expr::sum((0..n).map(|l| {
                let s = g.component(j, l).diff(i) + g.component(i, l).diff(j) - g.component(i, j).diff(l);
                (&inv[k * n + l] * &s).scale(0.5)
            }))
        })
        .labeled("levi_civita"))
    }

    /// Conjugate connection `∇*` with `Z g(X,Y) = g(∇_Z X, Y) + g(X, ∇*_Z Y)`:
    /// `Γ*^m_{ij} = g^{ml}(∂_i g_{lj} − Γ^p_{il} g_{pj})`.
    pub fn conjugate(&self, g: &MetricField) -> Result<Connection> {
        same_chart(&self.chart, g.chart())?;
        let inv = g.inverse()?;
        let n = self.dim();
        // B_{lij} = ∂_i g_{lj} − Γ^p_{il} g_{pj}
        let b = |l: usize, i: usize, j: usize| {
            Expr::sum(
                std::iter::once(g.component(l, j).diff(i))
                    .chain((0..n).map(|p| -(self.christoffel(p, i, l) * g.component(p, j)))),
            )
        };
        let bs: Vec<Expr> = (0..n * n * n).map(|f| b(f / (n * n), (f / n) % n, f % n)).collect();
        Ok(Connection::from_fn(&self.chart, |m, i, j| {
            Expr::sum((0..n).map(|l| &inv[m * n + l] * &bs[l * n * n + i * n + j]))
        })
        .labeled("conjugate"))
    }

    /// `½(self + other)`.
    pub fn midpoint(&self, other: &Connection) -> Result<Connection> {
        same_chart(&self.chart, &other.chart)?;
        Ok(Connection {
            chart: self.chart.clone(),
            gamma: self
                .gamma
                .iter()
                .zip(&other.gamma)
                .map(|(a, b)| (a + b).scale(0.5))
                .collect(),
            label: Some("midpoint".into()),
        })
    }

    /// `∇ + t·θ` for a (1,2)-tensor `θ`, i.e. `Γ^k_{ij} + t θ^k_{ij}`.
    pub fn plus_tensor(&self, theta: &TangentTensor, t: f64) -> Result<Connection> {
        same_chart(&self.chart, theta.chart())?;
        if theta.rank() != 2 {
            return Err(Error::Degree(format!("connection shift needs a (1,2)-tensor, got rank {}", theta.rank())));
        }
        Ok(Connection {
            chart: self.chart.clone(),
            gamma: self
                .gamma
                .iter()
                .zip(theta.components())
                .map(|(g, d)| g + &d.scale(t))
                .collect(),
            label: None,
        })
    }

    /// The (1,2)-tensor `self − other`.
    pub fn difference(&self, other: &Connection) -> Result<TangentTensor> {
        same_chart(&self.chart, &other.chart)?;
        TangentTensor::new(
            &self.chart,
            2,
            self.gamma.iter().zip(&other.gamma).map(|(a, b)| a - b).collect(),
        )
    }

    /// Probes equality of all Christoffel symbols.
    pub fn equal_probe(&self, other: &Connection, cfg: &ProbeConfig) -> Result<EqualityReport> {
        same_chart(&self.chart, &other.chart)?;
        probe_exprs(&self.chart, cfg, &self.gamma, &other.gamma)
    }

    /// `(∇ df)_{ij} = ∂_i∂_j f − Γ^k_{ij} ∂_k f`.
    pub fn hessian(&self, f: &Expr) -> Tensor02 {
        let n = self.dim();
        let df: Vec<Expr> = (0..n).map(|k| f.diff(k)).collect();
        Tensor02::from_fn(&self.chart, |i, j| {
            Expr::sum(
                std::iter::once(df[j].diff(i))
                    .chain((0..n).map(|k| -(self.christoffel(k, i, j) * &df[k]))),
            )
        })
    }

    /// Probes symmetry of `∇ df` for random polynomial `f`.
    pub fn hessian_symmetry_probe(&self, cfg: &ProbeConfig) -> Result<EqualityReport> {
        probe_trials(&self.chart, cfg, |rng, _| {
            let f = random_function(&self.chart, cfg.field_degree + 1, rng);
            let h = self.hessian(&f);
            Ok((h.components().to_vec(), h.transpose().components().to_vec()))
        })
    }

    /// Probes `Z g(X,Y) = g(∇_Z X, Y) + g(X, ∇*_Z Y)` on random triples.
    pub fn conjugate_identity_probe(
        &self,
        conj: &Connection,
        g: &MetricField,
        cfg: &ProbeConfig,
    ) -> Result<EqualityReport> {
        probe_trials(&self.chart, cfg, |rng, _| {
            let x = random_vector_field(&self.chart, cfg.field_degree, rng);
            let y = random_vector_field(&self.chart, cfg.field_degree, rng);
            let z = random_vector_field(&self.chart, cfg.field_degree, rng);
            let lhs = z.apply(&g.apply(&x, &y));
            let rhs = g.apply(&self.cov_deriv_vf(&z, &x)?, &y) + g.apply(&x, &conj.cov_deriv_vf(&z, &y)?);
            Ok((vec![lhs], vec![rhs]))
        })
    }

    /// Probes `∇g = 0` componentwise.
    pub fn metric_compatibility_probe(&self, g: &MetricField, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let n = self.dim();
        let gt = g.as_tensor();
        let mut comps = Vec::with_capacity(n * n * n);
        for i in 0..n {
            let d = self.cov_deriv_bilinear(&VectorField::coordinate(&self.chart, i), &gt)?;
            comps.extend(d.components().iter().cloned());
        }
        let zeros = vec![Expr::zero(); comps.len()];
        probe_exprs(&self.chart, cfg, &comps, &zeros)
    }

    /// Probes `∇V = 0` componentwise.
    pub fn parallel_field_probe(&self, v: &VectorField, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let mut comps = Vec::new();
        for i in 0..self.dim() {
            let d = self.cov_deriv_vf(&VectorField::coordinate(&self.chart, i), v)?;
            comps.extend(d.components().iter().cloned());
        }
        let zeros = vec![Expr::zero(); comps.len()];
        probe_exprs(&self.chart, cfg, &comps, &zeros)
    }

    /// Probes `∇ω = 0` componentwise.
    pub fn parallel_form_probe(&self, w: &OneForm, cfg: &ProbeConfig) -> Result<EqualityReport> {
        let mut comps = Vec::new();
        for i in 0..self.dim() {
            let d = self.cov_deriv_oneform(&VectorField::coordinate(&self.chart, i), w)?;
            comps.extend(d.components().iter().cloned());
        }
        let zeros = vec![Expr::zero(); comps.len()];
        probe_exprs(&self.chart, cfg, &comps, &zeros)
    }
}

/// Symbolic inverse of a small square matrix of expressions (dimension ≤ 3).
struct MetricLike;

impl MetricLike {
    fn inverse(m: &Tensor02) -> Result<Vec<Expr>> {
        let n = m.chart().dim();
        let a = |i: usize, j: usize| m.component(i, j).clone();
        let (det, adj): (Expr, Vec<Expr>) = match n {
            1 => (a(0, 0), vec![Expr::one()]),
            2 => (
                a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
                vec![a(1, 1), -a(0, 1), -a(1, 0), a(0, 0)],
            ),
            3 => {
                let mut adj = Vec::with_capacity(9);
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                        adj.push(a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0));
                    }
                }
                let det = Expr::sum((0..3).map(|j| a(0, j) * adj[j * 3].clone()));
                (det, adj)
            }
            _ => return Err(Error::Unsupported(format!("symbolic inverse in dimension {n}"))),
        };
        if det.is_zero() {
            return Err(Error::Setup("affine map has a singular Jacobian".into()));
        }
        let r = det.recip();
        Ok(adj.into_iter().map(|e| e * &r).collect())
    }
}

/// `(∇_X h)(Y, Z) − (∇_Y h)(X, Z)`.
pub fn codazzi_residual(
    h: &MetricField,
    c: &Connection,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
) -> Result<Expr> {
    let ht = h.as_tensor();
    let a = c.cov_deriv_bilinear(x, &ht)?.apply(y, z);
    let b = c.cov_deriv_bilinear(y, &ht)?.apply(x, z);
    Ok(a - b)
}

/// Components `C_{ijk} = (∇_i h)_{jk} − (∇_j h)_{ik}`, flattened `i·n² + j·n + k`.
pub fn codazzi_tensor(h: &MetricField, c: &Connection) -> Result<Vec<Expr>> {
    let n = c.dim();
    let ht = h.as_tensor();
    let derivs: Vec<Tensor02> = (0..n)
        .map(|i| c.cov_deriv_bilinear(&VectorField::coordinate(c.chart(), i), &ht))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push(derivs[i].component(j, k) - derivs[j].component(i, k));
            }
        }
    }
    Ok(out)
}

/// Probes the Codazzi equation: random triples plus every coordinate triple.
pub fn codazzi_probe(h: &MetricField, c: &Connection, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let chart = c.chart();
    let coordinate = {
        let t = codazzi_tensor(h, c)?;
        let zeros = vec![Expr::zero(); t.len()];
        probe_exprs(chart, cfg, &t, &zeros)?
    };
    let random = probe_trials(chart, cfg, |rng, _| {
        let x = random_vector_field(chart, cfg.field_degree, rng);
        let y = random_vector_field(chart, cfg.field_degree, rng);
        let z = random_vector_field(chart, cfg.field_degree, rng);
        Ok((vec![codazzi_residual(h, c, &x, &y, &z)?], vec![Expr::zero()]))
    })?;
    Ok(EqualityReport::combine(vec![coordinate, random], cfg.tolerance))
}

/// `grad f = (df)^#`.
pub fn grad(f: &Expr, g: &MetricField) -> Result<VectorField> {
    g.grad(f)
}

/// `∇ df` for the connection `c`.
pub fn hessian(f: &Expr, c: &Connection) -> Tensor02 {
    c.hessian(f)
}

/// Laplace-Beltrami operator `Δf = g^{ij} (∇^{LC} df)_{ij}`.
pub fn laplacian(f: &Expr, g: &MetricField) -> Result<Expr> {
    let lc = Connection::levi_civita(g)?;
    let h = lc.hessian(f);
    let inv = g.inverse()?;
    let n = g.dim();
    Ok(Expr::sum((0..n * n).map(|ij| &inv[ij] * h.component(ij / n, ij % n))))
}
