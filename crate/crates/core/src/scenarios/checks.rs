//! Execution of `[[assert]]` tables.

use super::bind::Env;
use super::format::{Check, CommutingStage};
use crate::connection::codazzi_probe;
use crate::derham;
use crate::fields::{probe_exprs, EqualityReport, ProbeConfig, VectorField};
use crate::kv;
use crate::Result;

pub(crate) fn run_check(env: &mut Env, check: &Check, cfg: &ProbeConfig) -> Result<EqualityReport> {
    use Check as C;
    match check {
        C::CochainZero { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::zero_probe(env.context()?, &theta, cfg)
        }
        C::CochainEqual { lhs, rhs } => {
            let (a, b) = (env.cochain(lhs)?.clone(), env.cochain(rhs)?.clone());
            kv::equal_probe(env.context()?, &a, &b, cfg)
        }
        C::D2 { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::d2_probe(env.context()?, &theta, cfg)
        }
        C::Symmetric { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::symmetry_probe(env.context()?, &theta, cfg)
        }
        C::Tensorial { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::tensoriality_probe(env.context()?, &theta, cfg)
        }
        C::Multilinear { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::multilinearity_probe(env.context()?, &theta, cfg)
        }
        C::Derivation { cochain } => {
            let theta = env.cochain(cochain)?.clone();
            kv::derivation_probe(env.context()?, &theta, cfg)
        }
        C::Jacobi { vector } => {
            let z = env.vector(vector)?.clone();
            kv::jacobi_probe(env.context()?, &z, cfg)
        }
        C::Flat { connection } => env.connection(connection)?.flatness_probe(cfg),
        C::TorsionFree { connection } => env.connection(connection)?.torsion_tensor_probe(cfg),
        C::ConnectionEqual { lhs, rhs } => env.connection(lhs)?.equal_probe(env.connection(rhs)?, cfg),
        C::Codazzi { metric, connection } => codazzi_probe(env.metric(metric)?, env.connection(connection)?, cfg),
        C::ParallelVector { connection, vector } => {
            env.connection(connection)?.parallel_field_probe(env.vector(vector)?, cfg)
        }
        C::ParallelForm { connection, form } => env.connection(connection)?.parallel_form_probe(env.form(form)?, cfg),
        C::ConjugateIdentity {
            connection,
            conjugate,
            metric,
        } => env
            .connection(connection)?
            .conjugate_identity_probe(env.connection(conjugate)?, env.metric(metric)?, cfg),
        C::FunctionZero { function } => {
            let f = env.function(function)?.clone();
            probe_exprs(env.chart(), cfg, &[f], &[crate::Expr::zero()])
        }
        C::FunctionEqual { lhs, rhs } => {
            let (a, b) = (env.function(lhs)?.clone(), env.function(rhs)?.clone());
            probe_exprs(env.chart(), cfg, &[a], &[b])
        }
        C::FrameComponent {
            cochain,
            metric,
            slots,
            against,
            value,
        } => {
            let theta = env.cochain(cochain)?.clone();
            let g = env.metric(metric)?.clone();
            let want = env.function(value)?.clone();
            let chart = env.chart().clone();
            let n = chart.dim();
            if slots.iter().chain(std::iter::once(against)).any(|&i| i >= n) {
                return Err(env.error(format!("frame index out of range for dimension {n}")));
            }
            let frame: Vec<VectorField> = slots.iter().map(|&i| VectorField::coordinate(&chart, i)).collect();
            let v = theta.eval(env.context()?, &frame)?;
            let got = g.apply(&v, &VectorField::coordinate(&chart, *against));
            probe_exprs(&chart, cfg, &[got], &[want])
        }
        C::DnablaConsistency { connection, form } => {
            derham::d_nabla_consistency_probe(env.connection(connection)?, env.twisted(form)?, cfg)
        }
        C::DnablaDisplay { connection, form } => {
            derham::one_form_display_probe(env.connection(connection)?, env.twisted(form)?, cfg)
        }
        C::DnablaSquare { connection, form } => {
            derham::curvature_identity_probe(env.connection(connection)?, env.twisted(form)?, cfg)
        }
        C::DnablaAntisymmetric { connection, form } => {
            derham::antisymmetry_probe(env.connection(connection)?, env.twisted(form)?, cfg)
        }
        C::FlatDecomposition { connection, form } => {
            derham::flat_decomposition_probe(env.connection(connection)?, env.twisted(form)?, cfg)
        }
        C::Commuting { vector, stage } => {
            let x = env.vector(vector)?;
            let r = derham::commuting_lemma_probe(x, cfg)?;
            Ok(match stage {
                CommutingStage::Coordinate => r.coordinate_stage,
                CommutingStage::Euler => r.euler_stage,
                CommutingStage::Vanishes => r.vanishes,
                CommutingStage::EulerIdentity => match r.euler_identity {
                    Some(rep) => rep,
                    None => {
                        return Err(env.error(format!(
                            "`{vector}` does not have constant components; the Euler identity stage does not apply"
                        )))
                    }
                },
                CommutingStage::Lemma => {
                    let residual = if r.consistent() { 0.0 } else { r.vanishes.max_residual };
                    EqualityReport::scalar(residual, cfg.tolerance)
                }
            })
        }
    }
}

