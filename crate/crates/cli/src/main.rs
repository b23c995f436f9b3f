//! `envlab`: build, solve and inspect envelope experiments.
//!
//! Exit status is 0 on success, 1 on errors, 2 when a run recorded an
//! invariant violation and 3 when a run is INCOMPLETE.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use envelope_core::error::{Error, Result};
use envelope_core::field::io::{read_field, write_field};
use envelope_core::harness::{
    c11_probe, estimate_scan_fields, oracle_compare, preset_oracle, run, verdict_rows, QVariant,
    RunConfig, RunManifest, RunStatus, ScanInput, SolveRecord,
};

#[derive(Parser)]
#[command(
    name = "envlab",
    version,
    about = "Envelope laboratory for degenerate geodesic problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: solve, extract, scan estimates, compare with the oracle.
    Run(RunArgs),
    /// Solve and extract only.
    Solve(RunArgs),
    /// Write the Legendre reference geodesic of an x1-only preset.
    Oracle(OracleArgs),
    /// Recompute estimate tables from a finished run directory.
    Scan(ScanArgs),
    /// Hessian bound and continuity of one path at two resolutions.
    Probe { coarse: PathBuf, fine: PathBuf },
    /// Pointwise and first-difference comparison of two fields.
    Diff { a: PathBuf, b: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Gradient,
    Interior,
}

impl From<Variant> for QVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Gradient => QVariant::Gradient,
            Variant::Interior => QVariant::Interior,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// `NX,NT` or `NX1,NX2,NT`.
    #[arg(long)]
    grid: Option<String>,
    /// Put nodes at cell centres (`true`) or cell corners (`false`).
    #[arg(long)]
    offset: Option<bool>,
    /// First eps is 2^-P.
    #[arg(long, value_name = "P")]
    eps_first: Option<i32>,
    #[arg(long, value_name = "K")]
    eps_levels: Option<usize>,
    /// Smallest beta is 2^P.
    #[arg(long, value_name = "P", allow_negative_numbers = true)]
    beta_min: Option<i32>,
    /// Largest beta is 2^P.
    #[arg(long, value_name = "P", allow_negative_numbers = true)]
    beta_max: Option<i32>,
    /// Comma-separated B values.
    #[arg(long, value_delimiter = ',')]
    b_ladder: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    q_variant: Option<Variant>,
    #[arg(long)]
    oracle_refine: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "smooth")]
    preset: String,
    #[arg(long, default_value = "64,64,33")]
    grid: String,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    offset: bool,
    #[arg(long, default_value_t = 16)]
    refine: usize,
    /// Output `.bin` path; a `.json` header is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    /// Directory produced by `run` or `solve`.
    dir: PathBuf,
    #[arg(long, value_delimiter = ',')]
    b_ladder: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    q_variant: Option<Variant>,
    /// Directory for `estimates.csv` and `verdicts.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<[usize; 3]> {
    let parts: std::result::Result<Vec<usize>, _> =
        s.split(',').map(|p| p.trim().parse()).collect();
    match parts.as_deref() {
        Ok([nx, nt]) => Ok([*nx, *nx, *nt]),
        Ok([nx1, nx2, nt]) => Ok([*nx1, *nx2, *nt]),
        _ => Err(Error::InvalidInput(format!(
            "bad grid {s:?}; expected NX,NT or NX1,NX2,NT"
        ))),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            c.preset = p.clone();
        }
        if let Some(g) = &self.grid {
            c.grid = parse_grid(g)?;
        }
        if let Some(o) = self.offset {
            c.offset = o;
        }
        if let Some(e) = self.eps_first {
            c.eps_first = e;
        }
        if let Some(k) = self.eps_levels {
            c.eps_levels = k;
        }
        if let Some(p) = self.beta_min {
            c.beta_min = p;
        }
        if let Some(p) = self.beta_max {
            c.beta_max = p;
        }
        if let Some(l) = &self.b_ladder {
            c.b_ladder = l.clone();
        }
        if let Some(v) = self.q_variant {
            c.q_variant = v.into();
        }
        if let Some(r) = self.oracle_refine {
            c.oracle_refine = r;
        }
        Ok(c)
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run_cmd(args: &RunArgs, scan: bool) -> Result<ExitCode> {
    let mut config = args.config()?;
    config.scan = scan;
    let quiet = args.quiet;
    let manifest: RunManifest = run(&config, &args.out, |line| {
        if !quiet {
            eprintln!("{line}");
        }
    })?;
    for v in &manifest.violations {
        eprintln!("violation: {v}");
    }
    eprintln!(
        "{}: {}",
        args.out.join("manifest.json").display(),
        match manifest.status {
            RunStatus::Complete => "COMPLETE",
            RunStatus::Incomplete => "INCOMPLETE",
        }
    );
    Ok(if !manifest.violations.is_empty() {
        ExitCode::from(2)
    } else if manifest.status == RunStatus::Incomplete {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn oracle_cmd(args: &OracleArgs) -> Result<ExitCode> {
    let [nx1, nx2, nt] = parse_grid(&args.grid)?;
    let grid = envelope_core::field::ProductGrid::new(nx1, nx2, nt, args.offset)?;
    let preset = args.preset.parse()?;
    let field = preset_oracle(preset, grid, args.refine)?.ok_or_else(|| {
        Error::InvalidInput(format!("preset {} has no x1-only reference", args.preset))
    })?;
    write_field(&field, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn scan_cmd(args: &ScanArgs) -> Result<ExitCode> {
    let mut config = load_config(&args.dir.join("config.json"))?;
    if let Some(l) = &args.b_ladder {
        config.b_ladder = l.clone();
    }
    if let Some(v) = args.q_variant {
        config.q_variant = v.into();
    }
    let problem = config.build()?;
    let records: Vec<SolveRecord> =
        serde_json::from_slice(&std::fs::read(args.dir.join("reports/solves.json"))?)?;
    let mut fields = Vec::new();
    for r in &records {
        let s = &r.summary;
        if s.converged && s.sandwich_ok && s.trace_bound_ok {
            fields.push((s.eps, s.beta, read_field(&args.dir.join(&r.field))?));
        }
    }
    let inputs: Vec<ScanInput> = fields
        .iter()
        .map(|(eps, beta, u)| ScanInput {
            eps: *eps,
            beta: *beta,
            u,
        })
        .collect();
    let scan = estimate_scan_fields(&inputs, &problem.model, &config.b_ladder, config.q_variant)?;
    let rows = verdict_rows(&scan);
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let mut w = csv::Writer::from_path(out.join("estimates.csv"))?;
        for r in &scan.reports {
            w.serialize(r)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(out.join("verdicts.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    print_json(&rows)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run_cmd(a, true),
        Command::Solve(a) => run_cmd(a, false),
        Command::Oracle(a) => oracle_cmd(a),
        Command::Scan(a) => scan_cmd(a),
        Command::Probe { coarse, fine } => {
            (|| print_json(&c11_probe(&read_field(coarse)?, &read_field(fine)?)?))()
                .map(|_| ExitCode::SUCCESS)
        }
        Command::Diff { a, b } => {
            (|| print_json(&oracle_compare(&read_field(a)?, &read_field(b)?)?))()
                .map(|_| ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("64,33").unwrap(), [64, 64, 33]);
        assert_eq!(parse_grid("256, 8,65").unwrap(), [256, 8, 65]);
        assert!(parse_grid("64").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
