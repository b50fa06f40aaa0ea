//! Resolution of `[[bind]]` tables into values.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::format::{BindingKind, ScenarioFile};
use crate::connection::{laplacian, Connection};
use crate::derham::TwistedForm;
use crate::expr::{Chart, Expr};
use crate::fields::{
    random_function, random_one_form, random_polynomial, random_vector_field, MetricField, OneForm,
    ProbeConfig, TangentTensor, VectorField,
};
use crate::kv::{Cochain, KvContext};
use crate::{derive_seed, Error, Result};

#[derive(Clone, Debug)]
pub(crate) enum Value {
    Function(Expr),
    Vector(VectorField),
    Form(OneForm),
    Metric(MetricField),
    Connection(Connection),
    Cochain(Cochain),
    Twisted(TwistedForm),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Function(_) => "function",
            Value::Vector(_) => "vector field",
            Value::Form(_) => "1-form",
            Value::Metric(_) => "metric",
            Value::Connection(_) => "connection",
            Value::Cochain(_) => "cochain",
            Value::Twisted(_) => "twisted form",
        }
    }
}

/// The bindings of one scenario instance.
pub(crate) struct Env {
    scenario: String,
    chart: Arc<Chart>,
    values: HashMap<String, Value>,
    context_connection: Option<String>,
    context: Option<KvContext>,
    cfg: ProbeConfig,
    seed: u64,
}

macro_rules! getter {
    ($name:ident, $variant:ident, $t:ty, $label:literal) => {
        pub(crate) fn $name(&self, name: &str) -> Result<&$t> {
            match self.get(name)? {
                Value::$variant(v) => Ok(v),
                other => Err(self.error(format!(
                    "`{name}` is a {}, expected a {}",
                    other.kind(),
                    $label
                ))),
            }
        }
    };
}

impl Env {
    /// Resolves every binding of `file` in order. `seed` seeds the random
    /// bindings of this instance.
    pub(crate) fn build(file: &ScenarioFile, cfg: &ProbeConfig, seed: u64) -> Result<Env> {
        let spec = &file.chart;
        let chart = Chart::new(
            &spec.coords,
            &spec.bounds,
            &spec.constraints,
            spec.standoff.unwrap_or(crate::expr::DEFAULT_STANDOFF),
        )
        .map_err(|e| Error::Scenario {
            scenario: file.name.clone(),
            msg: format!("chart: {e}"),
        })?;
        let mut env = Env {
            scenario: file.name.clone(),
            chart: Arc::new(chart),
            values: HashMap::new(),
            context_connection: file.context.connection.clone(),
            context: None,
            cfg: cfg.clone(),
            seed,
        };
        for b in &file.bindings {
            let v = env.resolve(&b.name, &b.kind).map_err(|e| match e {
                Error::Scenario { .. } => e,
                other => env.error(format!("binding `{}`: {other}", b.name)),
            })?;
            env.values.insert(b.name.clone(), v);
        }
        Ok(env)
    }

    pub(crate) fn error(&self, msg: String) -> Error {
        Error::Scenario {
            scenario: self.scenario.clone(),
            msg,
        }
    }

    pub(crate) fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    fn get(&self, name: &str) -> Result<&Value> {
        self.values
            .get(name)
            .ok_or_else(|| self.error(format!("`{name}` is not bound")))
    }

    getter!(function, Function, Expr, "function");
    getter!(vector, Vector, VectorField, "vector field");
    getter!(form, Form, OneForm, "1-form");
    getter!(metric, Metric, MetricField, "metric");
    getter!(connection, Connection, Connection, "connection");
    getter!(cochain, Cochain, Cochain, "cochain");
    getter!(twisted, Twisted, TwistedForm, "twisted form");

    /// The KV context, built on first use. A connection that fails the
    /// flatness or torsion probe is a setup error of the scenario.
    pub(crate) fn context(&mut self) -> Result<&KvContext> {
        if self.context.is_none() {
            let conn = match &self.context_connection {
                Some(name) => self.connection(name)?.clone(),
                None => Connection::flat(&self.chart),
            };
            let ctx = KvContext::new(conn, &self.cfg.derive("context"))
                .map_err(|e| self.error(format!("KV context: {e}")))?;
            self.context = Some(ctx);
        }
        Ok(self.context.as_ref().expect("just built"))
    }

    fn rng(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, name))
    }

    fn parse_all(&self, texts: &[String]) -> Result<Vec<Expr>> {
        texts.iter().map(|t| self.chart.parse(t)).collect()
    }

    fn resolve(&mut self, name: &str, kind: &BindingKind) -> Result<Value> {
        use BindingKind as B;
        let chart = self.chart.clone();
        Ok(match kind {
            B::Function { expr } => Value::Function(chart.parse(expr)?),
            B::Laplacian { metric, function } => Value::Function(laplacian(self.function(function)?, self.metric(metric)?)?),
            B::RandomFunction { degree } => Value::Function(random_function(&chart, *degree, &mut self.rng(name))),

            B::Vector { components } => Value::Vector(VectorField::new(&chart, self.parse_all(components)?)?),
            B::Coordinate { index } => {
                if *index >= chart.dim() {
                    return Err(self.error(format!("coordinate index {index} out of range")));
                }
                Value::Vector(VectorField::coordinate(&chart, *index))
            }
            B::RandomVector { degree } => Value::Vector(random_vector_field(&chart, *degree, &mut self.rng(name))),
            B::OneForm { components } => Value::Form(OneForm::new(&chart, self.parse_all(components)?)?),
            B::Differential { function } => Value::Form(OneForm::differential(&chart, self.function(function)?)),
            B::RandomOneForm { degree } => Value::Form(random_one_form(&chart, *degree, &mut self.rng(name))),

            B::EuclideanMetric => Value::Metric(MetricField::euclidean(&chart)),
            B::DiagonalMetric { entries } => Value::Metric(MetricField::diagonal(&chart, self.parse_all(entries)?)?),
            B::Metric { rows } => {
                let rows = rows.iter().map(|r| self.parse_all(r)).collect::<Result<_>>()?;
                Value::Metric(MetricField::from_rows(&chart, rows)?)
            }
            B::HessianMetric { potential } => Value::Metric(MetricField::hessian(&chart, &chart.parse(potential)?)),
            B::ConformalMetric { function, metric } => {
                Value::Metric(MetricField::conformal(self.function(function)?, self.metric(metric)?))
            }

            B::FlatConnection => Value::Connection(Connection::flat(&chart)),
            B::PullbackFlat { map } => Value::Connection(Connection::pullback_flat(&chart, &self.parse_all(map)?)?),
            B::LeviCivita { metric } => Value::Connection(Connection::levi_civita(self.metric(metric)?)?),
            B::Conjugate { connection, metric } => {
                Value::Connection(self.connection(connection)?.conjugate(self.metric(metric)?)?)
            }
            B::Midpoint { a, b } => Value::Connection(self.connection(a)?.midpoint(self.connection(b)?)?),
            B::Deformed { connection, cochain } => {
                let base = self.connection(connection)?.clone();
                let theta = self.cochain(cochain)?.clone();
                if theta.degree() != 2 {
                    return Err(self.error(format!("`{cochain}` must be a 2-cochain to deform a connection")));
                }
                let ctx = self.context()?.clone();
                let n = chart.dim();
                let mut gamma = vec![Expr::zero(); n * n * n];
                for i in 0..n {
                    for j in 0..n {
                        let v = theta.eval(&ctx, &[VectorField::coordinate(&chart, i), VectorField::coordinate(&chart, j)])?;
                        for k in 0..n {
                            gamma[k * n * n + i * n + j] = base.christoffel(k, i, j) + v.component(k);
                        }
                    }
                }
                Value::Connection(Connection::new(&chart, gamma)?)
            }

            B::Identity => Value::Cochain(Cochain::identity()),
            B::Scalar { function } => Value::Cochain(Cochain::scalar(self.function(function)?.clone())),
            B::Ad { vector } => Value::Cochain(Cochain::ad(self.vector(vector)?.clone())),
            B::Projective { form } => Value::Cochain(Cochain::projective(self.form(form)?.clone())),
            B::DualProjective { metric, vector } => Value::Cochain(Cochain::dual_projective(
                self.metric(metric)?.clone(),
                self.vector(vector)?.clone(),
            )?),
            B::Conformal { metric, function } => Value::Cochain(Cochain::conformal(
                self.metric(metric)?.clone(),
                self.function(function)?.clone(),
            )?),
            B::ConnDiff { connection } => {
                let d = self.connection(connection)?.clone();
                Value::Cochain(self.context()?.conn_diff(&d)?)
            }
            B::ConnectionCochain { connection } => Value::Cochain(Cochain::connection(self.connection(connection)?.clone())),
            B::Curvature { connection } => Value::Cochain(Cochain::curvature(self.connection(connection)?.clone())),
            B::Coboundary { vector } => Value::Cochain(Cochain::coboundary(self.vector(vector)?.clone())),
            B::DKv { of } => {
                let theta = self.cochain(of)?.clone();
                Value::Cochain(self.context()?.d_kv(&theta)?)
            }
            B::Linear { terms } => {
                let terms = terms
                    .iter()
                    .map(|(c, n)| Ok((*c, self.cochain(n)?.clone())))
                    .collect::<Result<_>>()?;
                Value::Cochain(Cochain::linear(terms)?)
            }
            B::Permuted { of, order } => Value::Cochain(self.cochain(of)?.permuted(order.clone())?),
            B::Antisymmetric { of } => Value::Cochain(self.cochain(of)?.antisymmetric_part()?),
            B::ReversedBracket => Value::Cochain(Cochain::custom("reversed_bracket", 2, |_, a| a[1].bracket(&a[0]))),
            B::MinusNablaOfScaled { function } => {
                let f = self.function(function)?.clone();
                Value::Cochain(Cochain::custom("minus_nabla_of_scaled", 2, move |ctx, a| {
                    Ok(-ctx.nabla(&a[0], &a[1].scale(&f))?)
                }))
            }
            B::ScalarExpanded { function } => {
                let f = self.function(function)?.clone();
                Value::Cochain(Cochain::custom("scalar_expanded", 2, move |ctx, a| {
                    let (x, y) = (&a[0], &a[1]);
                    Ok(ctx.nabla(x, y)?.scale(&f) - ctx.nabla(x, &y.scale(&f))? - ctx.nabla(&x.scale(&f), y)?)
                }))
            }
            B::SymmetricDifferential { of } => {
                let theta = self.cochain(of)?.clone();
                if theta.degree() != 2 {
                    return Err(self.error(format!("`{of}` must be a 2-cochain")));
                }
                Value::Cochain(Cochain::custom("symmetric_differential", 3, move |ctx, a| {
                    let (x, y, z) = (&a[0], &a[1], &a[2]);
                    Ok(ctx.eval_covariant(y, &theta, &[x.clone(), z.clone()])?
                        - ctx.eval_covariant(x, &theta, &[y.clone(), z.clone()])?)
                }))
            }
            B::RandomTensor { rank, degree } => {
                let mut rng = self.rng(name);
                let n = chart.dim();
                let comps = (0..n * n.pow(*rank as u32))
                    .map(|_| random_polynomial(&chart, *degree, &mut rng))
                    .collect();
                Value::Cochain(Cochain::tensor(TangentTensor::new(&chart, *rank, comps)?))
            }

            B::Twisted { degree, entries } => {
                let entries = entries
                    .iter()
                    .map(|(idx, target, text)| Ok((idx.clone(), *target, chart.parse(text)?)))
                    .collect::<Result<Vec<_>>>()?;
                Value::Twisted(TwistedForm::from_entries(&chart, *degree, &entries)?)
            }
            B::Section { vector } => Value::Twisted(TwistedForm::from_section(self.vector(vector)?)),
            B::RandomTwisted { degree, poly_degree } => {
                let mut rng = self.rng(name);
                let n = chart.dim();
                let count = crate::derham::increasing_tuples(n, *degree).len() * n;
                let comps = (0..count).map(|_| random_polynomial(&chart, *poly_degree, &mut rng)).collect();
                Value::Twisted(TwistedForm::new(&chart, *degree, comps)?)
            }
        })
    }
}
