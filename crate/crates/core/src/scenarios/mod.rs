//! Declarative verification scenarios and their reports.
//!
//! Built-in scenarios live as TOML files under `crates/core/scenarios/` and
//! are embedded at compile time; more can be loaded from a directory. The
//! Hessian-system obstruction on the punctured plane is a coded scenario
//! ([`punctured_plane_obstruction`]) because it mixes symbolic probes with a
//! one-sided limit.

mod bind;
mod checks;
pub mod format;
mod obstruction;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use format::{Assertion, Check, Expected, ScenarioFile};
pub use obstruction::punctured_plane_obstruction;

use crate::fields::{EqualityReport, ProbeConfig};
use crate::{derive_seed, Error, Result};

/// Name of the coded obstruction scenario.
pub const OBSTRUCTION: &str = "example_6_2_obstruction";

macro_rules! builtin {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../scenarios/", $name, ".toml")))),*]
    };
}

/// Embedded scenario files, in registry order.
const BUILTIN: &[(&str, &str)] = builtin!(
    "example_3_1",
    "example_3_2",
    "theorem_3_3_forward",
    "remark_3_4",
    "prop_4_1",
    "thm_4_2_iii_iv",
    "prop_4_3_parallel",
    "prop_4_3_nonparallel",
    "prop_4_5_codazzi",
    "prop_4_5_noncodazzi",
    "def_5_1_involution",
    "lemma_5_2_midpoint",
    "thm_5_3_curvature",
    "cor_5_4",
    "thm_5_5_harmonic",
    "thm_5_5_nonharmonic",
    "example_6_2_cocycle",
    "appendix_dnabla",
    "appendix_flat_decomposition",
    "appendix_commuting_lemma",
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The probe could not be evaluated (e.g. a domain error at a sample).
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionReport {
    pub name: String,
    /// The identity under test, as text.
    #[serde(rename = "paper_ref")]
    pub reference: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub expected: Expected,
    pub verdict: Verdict,
    /// Context for the reader; carries the error text when `verdict` is `error`.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub assertions: Vec<AssertionReport>,
    pub verdict: Verdict,
    /// The global seed; each scenario derives its own from it and its name.
    pub seed: u64,
    pub config: ProbeConfig,
    /// Set only when timing is requested, so reports stay reproducible.
    pub elapsed_ms: Option<u64>,
    /// Setup failure that prevented the assertions from running.
    pub error: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn finish(
        scenario: &str,
        assertions: Vec<AssertionReport>,
        opts: &RunOptions,
        config: ProbeConfig,
        start: Instant,
    ) -> Report {
        let verdict = if !assertions.is_empty() && assertions.iter().all(|a| a.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Report {
            scenario: scenario.to_string(),
            assertions,
            verdict,
            seed: opts.seed,
            config,
            elapsed_ms: opts.timing.then(|| start.elapsed().as_millis() as u64),
            error: None,
        }
    }

    fn setup_error(scenario: &str, opts: &RunOptions, err: &Error) -> Report {
        Report {
            scenario: scenario.to_string(),
            assertions: Vec::new(),
            verdict: Verdict::Error,
            seed: opts.seed,
            config: opts.config_for(scenario),
            elapsed_ms: None,
            error: Some(err.to_string()),
        }
    }
}

/// Global run parameters, as given on the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 42,
            samples: 100,
            tolerance: 1e-9,
            timing: false,
        }
    }
}

impl RunOptions {
    /// Probe configuration of one scenario: its seed depends only on the
    /// global seed and the scenario name, so serial and parallel runs agree.
    pub fn config_for(&self, scenario: &str) -> ProbeConfig {
        ProbeConfig {
            samples: self.samples,
            tolerance: self.tolerance,
            seed: derive_seed(self.seed, scenario),
            ..ProbeConfig::default()
        }
    }
}

/// Judges a probe report against the expected outcome.
pub fn judge(report: &EqualityReport, expected: Expected) -> Verdict {
    let ok = match expected {
        Expected::Pass => report.passed,
        Expected::Fail => report.witnessed(),
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn assertion_report(a: &Assertion, tolerance: f64, outcome: Result<EqualityReport>) -> AssertionReport {
    match outcome {
        Ok(r) => AssertionReport {
            name: a.name.clone(),
            reference: a.reference.clone(),
            max_residual: r.max_residual,
            tolerance,
            expected: a.expected,
            verdict: judge(&r, a.expected),
            note: a.note.clone(),
        },
        Err(e) => AssertionReport {
            name: a.name.clone(),
            reference: a.reference.clone(),
            max_residual: f64::NAN,
            tolerance,
            expected: a.expected,
            verdict: Verdict::Error,
            note: Some(e.to_string()),
        },
    }
}

/// Runs a parsed scenario file.
pub fn run_file(file: &ScenarioFile, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    file.validate()?;
    let cfg = opts.config_for(&file.name);
    let mut outcomes: Vec<Result<Vec<EqualityReport>>> = file.assertions.iter().map(|_| Ok(Vec::new())).collect();
    for instance in 0..file.instances {
        let seed = derive_seed(cfg.seed, &format!("instance/{instance}"));
        let mut env = bind::Env::build(file, &cfg, seed)?;
        for (a, slot) in file.assertions.iter().zip(outcomes.iter_mut()) {
            let Ok(reports) = slot else { continue };
            let mut acfg = cfg.derive(&a.name);
            if let Some(t) = a.tolerance {
                acfg.tolerance = t;
            }
            if let Some(t) = a.trials {
                acfg.trials = t;
            }
            match checks::run_check(&mut env, &a.check, &acfg) {
                Ok(r) => reports.push(r),
                // Setup failures (e.g. a curved KV context) abort the scenario.
                Err(e @ Error::Scenario { .. }) => return Err(e),
                Err(e) => *slot = Err(e),
            }
        }
    }
    let assertions = file
        .assertions
        .iter()
        .zip(outcomes)
        .map(|(a, outcome)| {
            let tolerance = a.tolerance.unwrap_or(cfg.tolerance);
            let combined = outcome.map(|rs| EqualityReport::combine(rs, tolerance));
            assertion_report(a, tolerance, combined)
        })
        .collect();
    Ok(Report::finish(&file.name, assertions, opts, cfg, start))
}

/// The set of runnable scenarios: built-ins plus any loaded files.
#[derive(Clone, Debug)]
pub struct Registry {
    files: Vec<ScenarioFile>,
}

impl Registry {
    pub fn builtin() -> Result<Registry> {
        let files = BUILTIN
            .iter()
            .map(|(name, text)| {
                let file = ScenarioFile::from_toml(text).map_err(|e| Error::Scenario {
                    scenario: name.to_string(),
                    msg: e.to_string(),
                })?;
                if file.name != *name {
                    return Err(Error::Scenario {
                        scenario: name.to_string(),
                        msg: format!("file declares name `{}`", file.name),
                    });
                }
                file.validate()?;
                Ok(file)
            })
            .collect::<Result<_>>()?;
        Ok(Registry { files })
    }

    /// Adds every `*.toml` file in `dir` (sorted by file name); a file with
    /// the name of a registered scenario replaces it.
    pub fn load_dir(&mut self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Setup(format!("{}: {e}", dir.display()));
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(io)?;
            let file = ScenarioFile::from_toml(&text).map_err(|e| Error::Setup(format!("{}: {e}", p.display())))?;
            file.validate()?;
            match self.files.iter_mut().find(|f| f.name == file.name) {
                Some(slot) => *slot = file,
                None => self.files.push(file),
            }
        }
        Ok(())
    }

    /// All scenario names, in run order.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.files.iter().map(|f| f.name.clone()).collect();
        if !names.iter().any(|n| n == OBSTRUCTION) {
            // Keep the coded scenario next to its sibling.
            let at = names
                .iter()
                .position(|n| n == "example_6_2_cocycle")
                .map_or(names.len(), |i| i + 1);
            names.insert(at, OBSTRUCTION.to_string());
        }
        names
    }

    pub fn get(&self, name: &str) -> Option<&ScenarioFile> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn run(&self, name: &str, opts: &RunOptions) -> Result<Report> {
        if let Some(file) = self.get(name) {
            return run_file(file, opts);
        }
        if name == OBSTRUCTION {
            let start = Instant::now();
            let cfg = opts.config_for(name);
            let assertions = punctured_plane_obstruction(&cfg)?;
            return Ok(Report::finish(name, assertions, opts, cfg, start));
        }
        Err(Error::UnknownScenario(name.to_string()))
    }

    /// Runs every scenario in parallel; setup failures become error reports.
    pub fn run_all(&self, opts: &RunOptions) -> Vec<Report> {
        self.names()
            .par_iter()
            .map(|name| self.run(name, opts).unwrap_or_else(|e| Report::setup_error(name, opts, &e)))
            .collect()
    }
}

/// Runs a built-in scenario by name.
pub fn run_scenario(name: &str, opts: &RunOptions) -> Result<Report> {
    Registry::builtin()?.run(name, opts)
}

#[cfg(test)]
mod tests;
