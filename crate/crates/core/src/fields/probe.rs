use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{same_chart, Field};
use crate::expr::{Chart, Expr, Tape};
use crate::{derive_seed, Error, Result};

/// Residual above which a single sample certifies "nonzero somewhere".
pub const WITNESS_THRESHOLD: f64 = 1e-3;

/// Sampling parameters shared by every probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    /// Points drawn from the chart.
    pub samples: usize,
    /// Pass iff the maximum residual is at most this.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent random argument tuples for probes that quantify over fields.
    pub trials: usize,
    /// Total degree of random polynomial fields.
    pub field_degree: u32,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            samples: 100,
            tolerance: 1e-9,
            seed: 42,
            trials: 3,
            field_degree: 2,
        }
    }
}

impl ProbeConfig {
    /// Same configuration with a seed derived from `label`.
    pub fn derive(&self, label: &str) -> ProbeConfig {
        ProbeConfig {
            seed: derive_seed(self.seed, label),
            ..self.clone()
        }
    }

    pub fn with_tolerance(&self, tolerance: f64) -> ProbeConfig {
        ProbeConfig {
            tolerance,
            ..self.clone()
        }
    }

    pub fn with_samples(&self, samples: usize) -> ProbeConfig {
        ProbeConfig {
            samples,
            ..self.clone()
        }
    }

    pub fn with_trials(&self, trials: usize) -> ProbeConfig {
        ProbeConfig {
            trials,
            ..self.clone()
        }
    }

    /// RNG for random arguments of trial `t`.
    pub fn trial_rng(&self, t: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &format!("trial/{t}")))
    }

    fn point_seed(&self) -> u64 {
        derive_seed(self.seed, "points")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplePoint {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Outcome of a sampled comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqualityReport {
    pub samples: Vec<SamplePoint>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl EqualityReport {
    pub fn new(samples: Vec<SamplePoint>, tolerance: f64) -> EqualityReport {
        let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
        let mean_residual = if samples.is_empty() {
            0.0
        } else {
            samples.iter().map(|s| s.residual).sum::<f64>() / samples.len() as f64
        };
        EqualityReport {
            samples,
            max_residual,
            mean_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }

    /// A report with a single, point-free residual (used for scalar checks
    /// such as limits).
    pub fn scalar(residual: f64, tolerance: f64) -> EqualityReport {
        EqualityReport::new(
            vec![SamplePoint {
                point: Vec::new(),
                residual,
            }],
            tolerance,
        )
    }

    /// Whether some sample certifies a nonzero difference.
    pub fn witnessed(&self) -> bool {
        self.max_residual >= WITNESS_THRESHOLD
    }

    /// Combines reports over the same points by taking pointwise maxima, or
    /// concatenates them when the point sets differ.
    pub fn combine(reports: Vec<EqualityReport>, tolerance: f64) -> EqualityReport {
        let mut it = reports.into_iter();
        let Some(first) = it.next() else {
            return EqualityReport::new(Vec::new(), tolerance);
        };
        let mut samples = first.samples;
        for r in it {
            let same = r.samples.len() == samples.len()
                && r.samples.iter().zip(&samples).all(|(a, b)| a.point == b.point);
            if same {
                for (s, t) in samples.iter_mut().zip(r.samples) {
                    s.residual = s.residual.max(t.residual);
                }
            } else {
                samples.extend(r.samples);
            }
        }
        EqualityReport::new(samples, tolerance)
    }
}

/// `max_k |a_k − b_k| / (1 + max_k max(|a_k|, |b_k|))`.
pub fn residual(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        diff = diff.max((x - y).abs());
        scale = scale.max(x.abs()).max(y.abs());
    }
    diff / (1.0 + scale)
}

fn evaluate(tape: &Tape, split: usize, p: &[f64]) -> Result<f64> {
    let vals = tape.eval(p)?;
    Ok(residual(&vals[..split], &vals[split..]))
}

/// Compares two equally long lists of expressions at sampled chart points.
pub fn probe_exprs(chart: &Chart, cfg: &ProbeConfig, lhs: &[Expr], rhs: &[Expr]) -> Result<EqualityReport> {
    probe_trials(chart, &cfg.with_trials(1), |_, _| Ok((lhs.to_vec(), rhs.to_vec())))
}

/// Runs `cfg.trials` independent comparisons, each built by `build` from a
/// trial-specific RNG, over one shared set of sample points. The residual at
/// a point is the maximum over trials.
pub fn probe_trials<F>(chart: &Chart, cfg: &ProbeConfig, build: F) -> Result<EqualityReport>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<(Vec<Expr>, Vec<Expr>)> + Sync,
{
    let points = chart.sample(cfg.samples, cfg.point_seed())?;
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = cfg.trial_rng(t);
            let (lhs, rhs) = build(&mut rng, t)?;
            if lhs.len() != rhs.len() {
                return Err(Error::Setup(format!(
                    "compared objects have {} and {} components",
                    lhs.len(),
                    rhs.len()
                )));
            }
            let tape = Tape::new(lhs.iter().chain(&rhs));
            points.iter().map(|p| evaluate(&tape, lhs.len(), p)).collect()
        })
        .collect::<Result<_>>()?;
    let samples = points
        .into_iter()
        .enumerate()
        .map(|(i, point)| SamplePoint {
            residual: per_trial.iter().map(|r| r[i]).fold(0.0, f64::max),
            point,
        })
        .collect();
    Ok(EqualityReport::new(samples, cfg.tolerance))
}

/// Sampled equality of two fields of the same type.
pub fn fields_equal_probe<F: Field>(a: &F, b: &F, cfg: &ProbeConfig) -> Result<EqualityReport> {
    same_chart(a.chart(), b.chart())?;
    probe_exprs(a.chart(), cfg, a.components(), b.components())
}

/// Sampled comparison of a field against zero.
pub fn zero_probe<F: Field>(a: &F, cfg: &ProbeConfig) -> Result<EqualityReport> {
    let zeros = vec![Expr::zero(); a.components().len()];
    probe_exprs(a.chart(), cfg, a.components(), &zeros)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fields::VectorField;

    fn plane() -> Arc<Chart> {
        Arc::new(Chart::boxed(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)]).unwrap())
    }

    #[test]
    fn identical_fields_pass() {
        let c = plane();
        let a = VectorField::parse(&c, &["x*exp(y)", "sin(x)"]).unwrap();
        let r = fields_equal_probe(&a, &a.clone(), &ProbeConfig::default()).unwrap();
        assert!(r.passed && r.max_residual <= 1e-12);
        assert_eq!(r.samples.len(), 100);
    }

    #[test]
    fn different_coordinate_fields_fail() {
        let c = plane();
        let r = fields_equal_probe(
            &VectorField::coordinate(&c, 0),
            &VectorField::coordinate(&c, 1),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert!(!r.passed && r.witnessed());
    }

    #[test]
    fn reports_are_deterministic() {
        let c = plane();
        let a = VectorField::parse(&c, &["x^2", "y"]).unwrap();
        let b = VectorField::parse(&c, &["x*x + 1e-7*y", "y"]).unwrap();
        let cfg = ProbeConfig::default();
        let r1 = fields_equal_probe(&a, &b, &cfg).unwrap();
        let r2 = fields_equal_probe(&a, &b, &cfg).unwrap();
        assert_eq!(r1, r2);
        let r3 = fields_equal_probe(&a, &b, &cfg.derive("other")).unwrap();
        assert_ne!(r1.samples[0].point, r3.samples[0].point);
    }

    #[test]
    fn residual_is_relative() {
        assert_eq!(residual(&[0.0], &[0.0]), 0.0);
        assert!((residual(&[1e6], &[1e6 + 1.0]) - 1.0 / (1.0 + 1e6 + 1.0)).abs() < 1e-18);
    }

    #[test]
    fn simplify_after_reciprocal_is_one_on_the_punctured_plane() {
        let c = Arc::new(Chart::new(&["x", "y"], &[(-2.0, 2.0), (-2.0, 2.0)], &["x^2 + y^2 > 0"], 1e-3).unwrap());
        let s = c.parse("x^2 + y^2").unwrap();
        let e = (&s * &s.recip()).simplify();
        let r = probe_exprs(&c, &ProbeConfig::default(), &[e], &[Expr::one()]).unwrap();
        assert!(r.passed);
    }
}
