use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lppf::explain::Mode;
use lppf::ground::{ground_with, GroundOptions};
use lppf::output::{self, Format, Request};
use lppf::syntax::parse_assignment;

#[derive(Parser)]
#[command(name = "lppf", version, about = "Logic programs with partial functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve programs and print their answer sets.
    Solve {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Explain an assignment such as `sentence(gabriel)=prison`.
        #[arg(long, value_name = "ATOM")]
        explain: Vec<String>,
        /// Explain every derived assignment.
        #[arg(long, conflicts_with = "explain")]
        explain_all: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Explanation mode; labeled when the program has labels unless set.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Print the ground program.
    Ground {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Instantiate over the whole universe.
        #[arg(long)]
        no_prune: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Default,
    Labeled,
}

fn read_sources(files: &[PathBuf]) -> Result<Vec<(String, String)>, ExitCode> {
    let mut out = Vec::new();
    for f in files {
        match std::fs::read_to_string(f) {
            Ok(text) => out.push((f.display().to_string(), text)),
            Err(e) => {
                eprintln!("{}: {e}", f.display());
                return Err(ExitCode::from(2));
            }
        }
    }
    Ok(out)
}

fn load(files: &[PathBuf]) -> Result<lppf::syntax::Program, ExitCode> {
    let sources = read_sources(files)?;
    output::load(sources.iter().map(|(o, t)| (o.as_str(), t.as_str()))).map_err(|errors| {
        for e in errors {
            eprintln!("{e}");
        }
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            files,
            explain,
            explain_all,
            format,
            mode,
        } => solve(&files, &explain, explain_all, format, mode),
        Command::Ground { files, no_prune } => ground_dump(&files, no_prune),
    };
    result.unwrap_or_else(|code| code)
}

fn solve(
    files: &[PathBuf],
    explain: &[String],
    explain_all: bool,
    format: FormatArg,
    mode: Option<ModeArg>,
) -> Result<ExitCode, ExitCode> {
    let program = load(files)?;
    let mut targets = Vec::new();
    for text in explain {
        match parse_assignment(text) {
            Ok(a) => targets.push(a),
            Err(e) => {
                eprintln!("--explain: {}", e.message);
                return Err(ExitCode::from(2));
            }
        }
    }
    let request = Request {
        explain: targets,
        explain_all,
        format: match format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Dot => Format::Dot,
        },
        mode: mode.map(|m| match m {
            ModeArg::Default => Mode::Default,
            ModeArg::Labeled => Mode::Labeled,
        }),
    };
    match output::run(&program, &request) {
        Ok(outcome) => {
            for d in &outcome.result.diagnostics {
                eprintln!("note: {d}");
            }
            print!("{}", output::render(&outcome, request.format));
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}

fn ground_dump(files: &[PathBuf], no_prune: bool) -> Result<ExitCode, ExitCode> {
    let program = load(files)?;
    let opts = GroundOptions {
        prune: !no_prune,
        ..GroundOptions::default()
    };
    match ground_with(&program, &opts) {
        Ok(g) => {
            print!("{}", g.render());
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}
