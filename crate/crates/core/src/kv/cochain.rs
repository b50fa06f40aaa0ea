use std::fmt;
use std::sync::Arc;

use super::KvContext;
use crate::connection::Connection;
use crate::expr::Expr;
use crate::fields::{same_chart, Field, MetricField, OneForm, TangentTensor, VectorField};
use crate::{Error, Result};

type Evaluator = dyn Fn(&KvContext, &[VectorField]) -> Result<VectorField> + Send + Sync;

/// How a cochain evaluates; doubles as its provenance tag.
pub enum CochainKind {
    /// The zero cochain of the node's degree.
    Zero,
    /// A degree-0 cochain: a vector field.
    Field(VectorField),
    /// `Y ↦ Y`.
    Identity,
    /// `Y ↦ f Y`.
    Scalar(Expr),
    /// `Y ↦ [Z, Y]`.
    Ad(VectorField),
    /// A (1,r)-tensor field applied to its arguments.
    Tensor(TangentTensor),
    /// `(X, Y) ↦ ∇_X Y − D_X Y`, cached as a tensor.
    ConnDiff { other: Connection, tensor: TangentTensor },
    /// `(X, Y) ↦ D_X Y` for a connection `D`.
    Connection(Connection),
    /// `(X, Y) ↦ ω(X) Y + ω(Y) X`.
    Projective(OneForm),
    /// `(X, Y) ↦ −h(X, Y) V`.
    DualProjective { h: MetricField, v: VectorField },
    /// `(X, Y) ↦ −g(X, Y) grad f + (Xf) Y + (Yf) X`.
    Conformal { g: MetricField, f: Expr, grad: VectorField },
    /// `(X, Y, Z) ↦ R^D(X, Y) Z`, cached as a tensor.
    Curvature { connection: Connection, tensor: TangentTensor },
    /// `(X, Y) ↦ ∇_X∇_Y Z − ∇_{∇_X Y} Z`.
    Coboundary(VectorField),
    /// The KV differential of the inner cochain.
    Differential(Cochain),
    /// `∇_X` applied to the inner cochain.
    Covariant { along: VectorField, inner: Cochain },
    /// `Σ c_i θ_i`.
    Linear(Vec<(f64, Cochain)>),
    /// `(X_1, …, X_n) ↦ θ(X_{order[0]}, …, X_{order[n−1]})`.
    Permuted { order: Vec<usize>, inner: Cochain },
    /// A user-supplied evaluator; multilinearity is probed, not assumed.
    Custom { name: String, eval: Arc<Evaluator> },
}

struct Node {
    degree: usize,
    kind: CochainKind,
}

/// A KV cochain. Cheap to clone.
#[derive(Clone)]
pub struct Cochain(Arc<Node>);

impl fmt::Debug for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cochain(degree {}, {})", self.degree(), self.describe())
    }
}

fn node(degree: usize, kind: CochainKind) -> Cochain {
    Cochain(Arc::new(Node { degree, kind }))
}

impl Cochain {
    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn kind(&self) -> &CochainKind {
        &self.0.kind
    }

    /// Short provenance tag.
    pub fn tag(&self) -> &'static str {
        match self.kind() {
            CochainKind::Zero => "zero",
            CochainKind::Field(_) => "field",
            CochainKind::Identity => "identity",
            CochainKind::Scalar(_) => "scalar",
            CochainKind::Ad(_) => "ad",
            CochainKind::Tensor(_) => "tensor",
            CochainKind::ConnDiff { .. } => "conn_diff",
            CochainKind::Connection(_) => "connection",
            CochainKind::Projective(_) => "projective",
            CochainKind::DualProjective { .. } => "dual_projective",
            CochainKind::Conformal { .. } => "conformal",
            CochainKind::Curvature { .. } => "curvature",
            CochainKind::Coboundary(_) => "coboundary",
            CochainKind::Differential(_) => "differential",
            CochainKind::Covariant { .. } => "covariant",
            CochainKind::Linear(_) => "linear",
            CochainKind::Permuted { .. } => "permuted",
            CochainKind::Custom { .. } => "custom",
        }
    }

    /// Human-readable structure, e.g. `d(ad)` or `1*identity + -1*scalar`.
    pub fn describe(&self) -> String {
        match self.kind() {
            CochainKind::Differential(inner) => format!("d({})", inner.describe()),
            CochainKind::Covariant { inner, .. } => format!("nabla({})", inner.describe()),
            CochainKind::Permuted { order, inner } => format!("{}{:?}", inner.describe(), order),
            CochainKind::Linear(terms) => terms
                .iter()
                .map(|(c, t)| format!("{c}*{}", t.describe()))
                .collect::<Vec<_>>()
                .join(" + "),
            CochainKind::Custom { name, .. } => name.clone(),
            _ => self.tag().to_string(),
        }
    }

    pub fn zero(degree: usize) -> Cochain {
        node(degree, CochainKind::Zero)
    }

    /// A degree-0 cochain without the Jacobi check; see
    /// [`KvContext::jacobi_element`] for the checked form.
    pub fn field(z: VectorField) -> Cochain {
        node(0, CochainKind::Field(z))
    }

    pub fn identity() -> Cochain {
        node(1, CochainKind::Identity)
    }

    pub fn scalar(f: Expr) -> Cochain {
        node(1, CochainKind::Scalar(f))
    }

    pub fn ad(z: VectorField) -> Cochain {
        node(1, CochainKind::Ad(z))
    }

    pub fn tensor(t: TangentTensor) -> Cochain {
        node(t.rank(), CochainKind::Tensor(t))
    }

    /// `θ = base − other` as a (1,2)-tensor cochain.
    pub fn conn_diff(base: &Connection, other: &Connection) -> Result<Cochain> {
        let tensor = base.difference(other)?;
        Ok(node(
            2,
            CochainKind::ConnDiff {
                other: other.clone(),
                tensor,
            },
        ))
    }

    /// The connection `D` viewed as the 2-cochain `(X, Y) ↦ D_X Y`.
    pub fn connection(d: Connection) -> Cochain {
        node(2, CochainKind::Connection(d))
    }

    pub fn projective(w: OneForm) -> Cochain {
        node(2, CochainKind::Projective(w))
    }

    pub fn dual_projective(h: MetricField, v: VectorField) -> Result<Cochain> {
        same_chart(h.chart(), v.chart())?;
        Ok(node(2, CochainKind::DualProjective { h, v }))
    }

    pub fn conformal(g: MetricField, f: Expr) -> Result<Cochain> {
        let grad = g.grad(&f)?;
        Ok(node(2, CochainKind::Conformal { g, f, grad }))
    }

    /// The curvature of `d` as a degree-3 cochain.
    pub fn curvature(d: Connection) -> Cochain {
        let tensor = d.riemann();
        node(3, CochainKind::Curvature { connection: d, tensor })
    }

    pub fn coboundary(z: VectorField) -> Cochain {
        node(2, CochainKind::Coboundary(z))
    }

    pub(crate) fn differential(theta: Cochain) -> Cochain {
        node(theta.degree() + 1, CochainKind::Differential(theta))
    }

    pub(crate) fn covariant(along: VectorField, inner: Cochain) -> Cochain {
        node(inner.degree(), CochainKind::Covariant { along, inner })
    }

    /// `Σ c_i θ_i`; all terms must share a degree.
    pub fn linear(terms: Vec<(f64, Cochain)>) -> Result<Cochain> {
        let Some(first) = terms.first() else {
            return Err(Error::Degree("empty linear combination".into()));
        };
        let degree = first.1.degree();
        if let Some((_, bad)) = terms.iter().find(|(_, t)| t.degree() != degree) {
            return Err(Error::Degree(format!(
                "cannot combine cochains of degree {degree} and {}",
                bad.degree()
            )));
        }
        Ok(node(degree, CochainKind::Linear(terms)))
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain> {
        Cochain::linear(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain> {
        Cochain::linear(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    pub fn scale(&self, c: f64) -> Cochain {
        node(self.degree(), CochainKind::Linear(vec![(c, self.clone())]))
    }

    /// Reorders arguments: the result at `(X_1, …, X_n)` is
    /// `self(X_{order[0]}, …)`. `order` must be a permutation of `0..n`.
    pub fn permuted(&self, order: Vec<usize>) -> Result<Cochain> {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..self.degree()).collect::<Vec<_>>() {
            return Err(Error::Degree(format!(
                "{order:?} is not a permutation of {} slots",
                self.degree()
            )));
        }
        Ok(node(
            self.degree(),
            CochainKind::Permuted {
                order,
                inner: self.clone(),
            },
        ))
    }

    /// `(X, Y) ↦ θ(X, Y) − θ(Y, X)` for a degree-2 cochain.
    pub fn antisymmetric_part(&self) -> Result<Cochain> {
        if self.degree() != 2 {
            return Err(Error::Degree("antisymmetric part needs degree 2".into()));
        }
        self.sub(&self.permuted(vec![1, 0])?)
    }

    pub fn custom<F>(name: impl Into<String>, degree: usize, eval: F) -> Cochain
    where
        F: Fn(&KvContext, &[VectorField]) -> Result<VectorField> + Send + Sync + 'static,
    {
        node(
            degree,
            CochainKind::Custom {
                name: name.into(),
                eval: Arc::new(eval),
            },
        )
    }

    /// The cached component tensor, when the cochain is tensorial by construction.
    pub fn as_tensor(&self) -> Option<&TangentTensor> {
        match self.kind() {
            CochainKind::Tensor(t)
            | CochainKind::ConnDiff { tensor: t, .. }
            | CochainKind::Curvature { tensor: t, .. } => Some(t),
            _ => None,
        }
    }

    /// Evaluates at `args` (empty for degree 0).
    pub fn eval(&self, ctx: &KvContext, args: &[VectorField]) -> Result<VectorField> {
        if args.len() != self.degree() {
            return Err(Error::Degree(format!(
                "cochain of degree {} evaluated on {} arguments",
                self.degree(),
                args.len()
            )));
        }
        for a in args {
            same_chart(ctx.chart(), a.chart())?;
        }
        match self.kind() {
            CochainKind::Zero => Ok(VectorField::zero(ctx.chart())),
            CochainKind::Field(z) => Ok(z.clone()),
            CochainKind::Identity => Ok(args[0].clone()),
            CochainKind::Scalar(f) => Ok(args[0].scale(f)),
            CochainKind::Ad(z) => z.bracket(&args[0]),
            CochainKind::Tensor(t)
            | CochainKind::ConnDiff { tensor: t, .. }
            | CochainKind::Curvature { tensor: t, .. } => {
                let refs: Vec<&VectorField> = args.iter().collect();
                t.apply(&refs)
            }
            CochainKind::Connection(d) => d.cov_deriv_vf(&args[0], &args[1]),
            CochainKind::Projective(w) => {
                Ok(args[1].scale(&w.apply(&args[0])) + args[0].scale(&w.apply(&args[1])))
            }
            CochainKind::DualProjective { h, v } => Ok(v.scale(&-h.apply(&args[0], &args[1]))),
            CochainKind::Conformal { g, f, grad } => {
                let (x, y) = (&args[0], &args[1]);
                Ok(grad.scale(&-g.apply(x, y)) + y.scale(&x.apply(f)) + x.scale(&y.apply(f)))
            }
            CochainKind::Coboundary(z) => {
                let (x, y) = (&args[0], &args[1]);
                let inner = ctx.nabla(y, z)?;
                Ok(ctx.nabla(x, &inner)? - ctx.nabla(&ctx.nabla(x, y)?, z)?)
            }
            CochainKind::Differential(inner) => ctx.eval_differential(inner, args),
            CochainKind::Covariant { along, inner } => ctx.eval_covariant(along, inner, args),
            CochainKind::Linear(terms) => {
                let mut out = VectorField::zero(ctx.chart());
                for (c, t) in terms {
                    out = out + t.eval(ctx, args)?.scale_const(*c);
                }
                Ok(out)
            }
            CochainKind::Permuted { order, inner } => {
                let reordered: Vec<VectorField> = order.iter().map(|&i| args[i].clone()).collect();
                inner.eval(ctx, &reordered)
            }
            CochainKind::Custom { eval, .. } => eval(ctx, args),
        }
    }
}
