//! Command-line runner for the built-in and user-supplied scenarios.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kvgeom::kv::fuzz::{d2_fuzz, FuzzReport};
use kvgeom::scenarios::{Registry, Report, RunOptions, Verdict};
use kvgeom::Error;

#[derive(Parser, Debug)]
#[command(name = "kvgeom", version, about = "Run Koszul-Vinberg identity scenarios")]
struct Cli {
    /// Global seed; every scenario derives its own from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Sample points per probe.
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Default tolerance (scenario assertions may override it).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Directory of extra `*.toml` scenarios; same-named files replace built-ins.
    #[arg(long, global = true)]
    scenario_dir: Option<PathBuf>,
    /// Record wall time in reports (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario, or `all`.
    Run { name: String },
    /// List scenario names, one per line.
    List,
    /// Randomized check that d_KV∘d_KV vanishes on cochains of a degree.
    D2 {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        degree: u8,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Run every scenario and print a summary.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let opts = RunOptions {
        seed: cli.seed,
        samples: cli.samples,
        tolerance: cli.tol,
        timing: cli.timing,
    };
    let mut registry = Registry::builtin()?;
    if let Some(dir) = &cli.scenario_dir {
        registry.load_dir(dir)?;
    }
    match &cli.command {
        Command::List => {
            for name in registry.names() {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Run { name } if name == "all" => {
            let reports = registry.run_all(&opts);
            match cli.format {
                Format::Json => println!("{}", to_json(&reports)),
                Format::Text => reports.iter().for_each(print_report),
            }
            Ok(reports.iter().all(Report::passed))
        }
        Command::Run { name } => {
            let report = registry.run(name, &opts)?;
            match cli.format {
                Format::Json => println!("{}", to_json(&report)),
                Format::Text => print_report(&report),
            }
            Ok(report.passed())
        }
        Command::Report => {
            let reports = registry.run_all(&opts);
            match cli.format {
                Format::Json => println!("{}", to_json(&reports)),
                Format::Text => print_summary(&reports),
            }
            Ok(reports.iter().all(Report::passed))
        }
        Command::D2 { degree, trials } => {
            let report = d2_fuzz(*degree as usize, *trials, cli.seed, cli.samples)?;
            match cli.format {
                Format::Json => println!("{}", to_json(&report)),
                Format::Text => print_fuzz(&report, cli.timing),
            }
            Ok(report.passed)
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Error => "ERROR",
    }
}

fn print_report(r: &Report) {
    println!("{} {}", verdict(r.verdict), r.scenario);
    if let Some(e) = &r.error {
        println!("  setup error: {e}");
    }
    for a in &r.assertions {
        let expect = match a.expected {
            kvgeom::scenarios::format::Expected::Pass => "",
            kvgeom::scenarios::format::Expected::Fail => " [expected fail]",
        };
        println!(
            "  {:<5} {:<44} residual {:>10.3e}  tol {:.0e}{expect}  {}",
            verdict(a.verdict),
            a.name,
            a.max_residual,
            a.tolerance,
            a.reference
        );
        if a.verdict == Verdict::Error {
            if let Some(note) = &a.note {
                println!("        {note}");
            }
        }
    }
    if let Some(ms) = r.elapsed_ms {
        println!("  elapsed {ms} ms");
    }
}

fn print_summary(reports: &[Report]) {
    let mut failed = 0;
    for r in reports {
        let ok = r.assertions.iter().filter(|a| a.verdict == Verdict::Pass).count();
        println!("{:<5} {:<28} {ok}/{}", verdict(r.verdict), r.scenario, r.assertions.len());
        if !r.passed() {
            failed += 1;
            for a in r.assertions.iter().filter(|a| a.verdict != Verdict::Pass) {
                println!("        {} ({}): residual {:.3e}", a.name, verdict(a.verdict), a.max_residual);
            }
            if let Some(e) = &r.error {
                println!("        setup error: {e}");
            }
        }
    }
    println!("{} of {} scenarios pass", reports.len() - failed, reports.len());
}

fn print_fuzz(r: &FuzzReport, timing: bool) {
    println!(
        "{} d_KV∘d_KV on degree {} cochains: {} cases, max residual {:.3e} (tol {:.0e})",
        if r.passed { "PASS" } else { "FAIL" },
        r.degree,
        r.cases.len(),
        r.max_residual,
        r.tolerance
    );
    for c in &r.cases {
        println!("  case {:>3}  dim {}  {:<36} {:.3e}", c.index, c.dim, c.cochain, c.max_residual);
    }
    if timing {
        println!("  elapsed {} ms", r.elapsed_ms);
    }
}
