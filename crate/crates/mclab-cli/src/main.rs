use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mclab_cli::analyze::{analyze, AnalyzeRequest, Quantity};
use mclab_cli::args::parse_index_list;
use mclab_cli::checks::{first_failure_message, render_json, render_text, run_checks};
use mclab_cli::sweep::{
    render_csv, render_json as render_rows_json, reproduce_rows, SweepConfig, DEFAULT_SWEEP,
};
use mclab_cli::{exit_code, EXIT_CHECK_FAILED, EXIT_OK};
use mclab_core::io::read_chain_file;
use mclab_core::{Error, NumericMode, Result};

#[derive(Parser)]
#[command(
    name = "mclab",
    about = "Curvature and functional-inequality invariants of finite reversible Markov chains",
    version
)]
struct Cli {
    /// Seed for all stochastic subroutines (optimizer restarts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute selected quantities of a chain file as one JSON object.
    Analyze {
        /// JSON chain description: either {"kernel": [[..]]} or
        /// {"birth_death": {"up": [..], "down": [..]}}; numbers may be
        /// strings like "1/64" for exact rates.
        file: PathBuf,
        /// Comma-separated subset of: pi, lambda, kappa, kbe, lsi,
        /// mlsi, audit, capacity, diameter, sparsity.
        #[arg(long)]
        quantities: String,
        /// States of the capacity source set, e.g. "1" or "1..3".
        #[arg(long = "A", value_name = "SET")]
        a: Option<String>,
        /// States of the capacity target set, e.g. "8..12".
        #[arg(long = "B", value_name = "SET")]
        b: Option<String>,
    },
    /// Sweep the birth-death family and emit the invariant table.
    Reproduce {
        /// Family sizes, e.g. "4,8,16" or "4..32" (inclusive);
        /// default 4,8,16,32,64,128.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Rational)]
        mode: ModeArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Largest n that also gets a numerical log-Sobolev constant.
        #[arg(long, default_value_t = 6)]
        exact_lsi_max_n: usize,
    },
    /// Evaluate the displayed inequality checklist on the family.
    PaperChecks {
        /// Family sizes, e.g. "4..128"; default 4,8,16,32,64,128.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeArg::Rational)]
        mode: ModeArg,
        /// Emit the checklist as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for NumericMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Rational => NumericMode::ExactRational,
            ModeArg::Float => NumericMode::Float64LogSpace,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    init_thread_cap();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

/// MCLAB_THREADS caps the rayon pool; unset or unparsable means the
/// rayon default.
fn init_thread_cap() {
    if let Ok(raw) = std::env::var("MCLAB_THREADS") {
        if let Ok(threads) = raw.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze {
            file,
            quantities,
            a,
            b,
        } => {
            let request = AnalyzeRequest {
                quantities: Quantity::parse_list(&quantities)?,
                a: a.as_deref().map(parse_index_list).transpose()?,
                b: b.as_deref().map(parse_index_list).transpose()?,
                seed: cli.seed,
            };
            let loaded = read_chain_file(&file)?;
            let report = analyze(&loaded, &request)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(EXIT_OK)
        }
        Command::Reproduce {
            n,
            mode,
            out,
            format,
            exact_lsi_max_n,
        } => {
            let config = SweepConfig {
                n_list: sweep_sizes(n.as_deref())?,
                mode: mode.into(),
                exact_lsi_max_n,
                seed: cli.seed,
            };
            let (rows, failures) = reproduce_rows(&config);
            let rendered = match format {
                FormatArg::Csv => render_csv(&rows),
                FormatArg::Json => render_rows_json(&rows),
            };
            match &out {
                Some(path) => std::fs::write(path, &rendered).map_err(|e| {
                    Error::Parse(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{rendered}"),
            }
            for (n, err) in &failures {
                eprintln!("error: row n = {n}: {err}");
            }
            match failures.into_iter().next() {
                Some((_, err)) => Err(err),
                None => Ok(EXIT_OK),
            }
        }
        Command::PaperChecks { n, mode, json } => {
            let n_list = sweep_sizes(n.as_deref())?;
            let report = run_checks(&n_list, mode.into())?;
            if json {
                print!("{}", render_json(&report));
            } else {
                print!("{}", render_text(&report));
            }
            if report.failed() {
                if let Some(message) = first_failure_message(&report) {
                    eprintln!("error: {message}");
                }
                Ok(EXIT_CHECK_FAILED)
            } else {
                Ok(EXIT_OK)
            }
        }
    }
}

fn sweep_sizes(text: Option<&str>) -> Result<Vec<usize>> {
    let n_list = match text {
        Some(text) => parse_index_list(text)?,
        None => DEFAULT_SWEEP.to_vec(),
    };
    if let Some(&bad) = n_list.iter().find(|&&n| n < 4) {
        return Err(Error::Domain(format!(
            "family sizes must be at least 4, got {bad}"
        )));
    }
    Ok(n_list)
}
