use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use opcond_cli::config::{parse_config, Format, Quadrature};
use opcond_cli::experiment::run_experiment_with;
use opcond_cli::table::{build_table, format_sig4, render};

#[derive(Parser)]
#[command(name = "opcond", version, about = "Condition numbers of operator-preconditioned Galerkin matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Seed of the Lanczos start vector.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        quad: Option<QuadArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadArg {
    Standard,
    High,
}

const CONFIG_ERROR: u8 = 1;
const NUMERICAL_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let Command::Run {
        config,
        out,
        format,
        seed,
        quad,
    } = cli.command;

    let mut cfg = match parse_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("opcond: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(o) = out {
        cfg.output = Some(o);
    }
    if let Some(f) = format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Text => Format::Text,
        };
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(q) = quad {
        cfg.quadrature = match q {
            QuadArg::Standard => Quadrature::Standard,
            QuadArg::High => Quadrature::High,
        };
    }

    let result = run_experiment_with(&cfg, |row| {
        let kappas: Vec<String> =
            row.kappa.iter().map(|(c, e)| format!("{}={}", c.name(), format_sig4(e.kappa))).collect();
        eprintln!("level {} dofs {} {}", row.level, row.dofs, kappas.join(" "));
    });
    let text = render(&build_table(&cfg, &result), cfg.format);
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("opcond: {e}");
        return ExitCode::from(CONFIG_ERROR);
    }
    match result.failure {
        Some(f) => {
            eprintln!("opcond: level {} failed: {}", f.level, f.error);
            ExitCode::from(NUMERICAL_FAILURE)
        }
        None => ExitCode::SUCCESS,
    }
}
