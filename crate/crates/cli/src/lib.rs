//! Library side of the `obsim` command: argument parsing, settings,
//! scenarios and report encoding.

pub mod config;
pub mod output;
pub mod scenarios;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ConfigError, Format, Options, Settings};
use output::Table;
use scenarios::{Check, ScenarioOutput};

#[derive(Debug, Parser)]
#[command(
    name = "obsim",
    version,
    about = "Hidden-measurement toy model simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Scenario,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Scenario {
    /// Yes-frequencies of the quantum machine over an angle grid.
    QuantumMachine,
    /// The same grid for several breakable fractions of the elastic.
    EpsilonSweep,
    /// Product observations on dry wood.
    WoodProduct,
    /// Left-handedness and fragmentation of an elastic band.
    Elastic,
    /// Classify the registered exemplars.
    Classify,
    /// Every scenario, one file each under the `--out` directory.
    All,
}

impl Scenario {
    pub const EACH: [Scenario; 5] = [
        Scenario::QuantumMachine,
        Scenario::EpsilonSweep,
        Scenario::WoodProduct,
        Scenario::Elastic,
        Scenario::Classify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::QuantumMachine => "quantum-machine",
            Scenario::EpsilonSweep => "epsilon-sweep",
            Scenario::WoodProduct => "wood-product",
            Scenario::Elastic => "elastic",
            Scenario::Classify => "classify",
            Scenario::All => "all",
        }
    }

    fn run(self, settings: &Settings) -> Result<ScenarioOutput> {
        match self {
            Scenario::QuantumMachine => scenarios::quantum_machine(settings),
            Scenario::EpsilonSweep => scenarios::epsilon_sweep(settings),
            Scenario::WoodProduct => scenarios::wood_product(settings),
            Scenario::Elastic => scenarios::elastic(settings),
            Scenario::Classify => scenarios::classify(settings),
            Scenario::All => unreachable!("expanded by the caller"),
        }
    }
}

/// Raised when `--check` finds a failing criterion. Maps to exit code 3.
#[derive(Debug)]
pub struct CheckFailed(pub Vec<Check>);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|c| c.name.as_str()).collect();
        write!(f, "acceptance check failed: {}", names.join("; "))
    }
}

impl std::error::Error for CheckFailed {}

fn write_table(table: &Table, settings: &Settings, path: Option<&Path>) -> Result<()> {
    let emit = |w: &mut dyn Write| match settings.format {
        Format::Csv => table.write_csv(w),
        Format::Json => table.write_json(w, settings.seed),
    };
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            emit(&mut w).with_context(|| format!("writing {}", p.display()))?;
            w.flush()
                .with_context(|| format!("writing {}", p.display()))
        }
        None => emit(&mut io::stdout().lock()),
    }
}

fn run_settled(scenario: Scenario, settings: &Settings) -> Result<Vec<Check>> {
    if scenario != Scenario::All {
        let out = scenario.run(settings)?;
        write_table(&out.table, settings, settings.out.as_deref())?;
        return Ok(out.checks);
    }
    let dir = settings
        .out
        .as_deref()
        .ok_or_else(|| ConfigError::new("out", "`all` needs an output directory"))?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let ext = match settings.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut checks = Vec::new();
    for s in Scenario::EACH {
        let out = s.run(settings)?;
        write_table(
            &out.table,
            settings,
            Some(&dir.join(format!("{}.{ext}", s.name()))),
        )?;
        checks.extend(out.checks);
    }
    Ok(checks)
}

/// Runs a parsed command line. Check results go to standard error.
pub fn run(cli: Cli) -> Result<()> {
    let settings = Settings::resolve(cli.options)?;
    let scenario = cli.command;
    let checks = match settings.threads {
        Some(n) => obsim_core::stats::with_threads(n, || run_settled(scenario, &settings))??,
        None => run_settled(scenario, &settings)?,
    };
    if !settings.check {
        return Ok(());
    }
    let mut stderr = io::stderr().lock();
    for c in &checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(stderr, "[{tag}] {}", c.name)?;
        } else {
            writeln!(stderr, "[{tag}] {}: {}", c.name, c.detail)?;
        }
    }
    let failed: Vec<Check> = checks.into_iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(failed).into())
    }
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        2
    } else if err.downcast_ref::<CheckFailed>().is_some() {
        3
    } else {
        1
    }
}
