use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Utc;
use clap::{Parser, Subcommand};

use liverlp::classifier::{builtin_soft_fragment, Classifier, BUILTIN_ID};
use liverlp::records::{load_csv, load_json, synthesize, to_csv, Dataset};
use liverlp::report::{self, ReportFilter};
use liverlp::runs::Run;
use liverlp::schema::Schema;
use liverlp::scoring::{batch_text, Compiled};
use liverlp::service::{serve, ServeConfig};
use liverlp::store::Store;

#[derive(Parser)]
#[command(name = "liverlp", about = "Transplant risk scoring with explanations")]
struct Cli {
    /// Attribute schema document; the canonical schema by default.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every case of a dataset and print the explanations.
    Run {
        /// Classifier document, or the id of a stored classifier.
        #[arg(long)]
        classifier: String,
        /// CSV file or dataset document (.json).
        #[arg(long)]
        records: PathBuf,
        /// Also write an HTML report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Only this case.
        #[arg(long)]
        case: Option<i64>,
        #[arg(long, env = "LIVERLP_DATA", default_value = "liverlp-data")]
        data: PathBuf,
    },
    /// Write a synthetic dataset as CSV.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the lppf program of a classifier.
    Compile {
        #[arg(long)]
        classifier: String,
        #[arg(long, env = "LIVERLP_DATA", default_value = "liverlp-data")]
        data: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "LIVERLP_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, env = "LIVERLP_DATA", default_value = "liverlp-data")]
        data: PathBuf,
        #[arg(long = "static", env = "LIVERLP_STATIC")]
        static_dir: Option<PathBuf>,
    },
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_schema(path: Option<&Path>) -> Result<Schema, ExitCode> {
    match path {
        None => Ok(Schema::canonical()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            Schema::from_json(&text).map_err(|e| input_error(format!("{}: {e}", p.display())))
        }
    }
}

fn load_classifier(source: &str, data: &Path) -> Result<Classifier, ExitCode> {
    let path = Path::new(source);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| input_error(format!("{source}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| input_error(format!("{source}: {e}")));
    }
    if data.is_dir() {
        let store = Store::open(data).map_err(input_error)?;
        if let Ok(c) = store.classifier(source) {
            return Ok(c);
        }
    }
    if source == BUILTIN_ID {
        return Ok(builtin_soft_fragment());
    }
    Err(input_error(format!("no classifier file or stored classifier `{source}`")))
}

fn load_records(path: &Path, schema: &Schema) -> Result<Dataset, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if path.extension().is_some_and(|e| e == "json") {
        load_json(&text, schema).map_err(|e| input_error(format!("{}: {e}", path.display())))
    } else {
        let records = load_csv(&text, schema).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        Ok(Dataset {
            name: id.clone(),
            id,
            records,
        })
    }
}

fn run(
    schema: &Schema,
    classifier: &str,
    records: &Path,
    report_path: Option<&Path>,
    case: Option<i64>,
    data: &Path,
) -> Result<(), ExitCode> {
    let classifier = load_classifier(classifier, data)?;
    let mut dataset = load_records(records, schema)?;
    if let Some(id) = case {
        dataset.records.retain(|r| r.case_id == id);
        if dataset.records.is_empty() {
            return Err(input_error(format!("case {id} is not in {}", records.display())));
        }
    }
    let compiled = Compiled::new(&classifier, schema).map_err(input_error)?;
    let outcomes = compiled.score_all(&dataset.records);
    let ok: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    print!("{}", batch_text(&ok));

    if let Some(path) = report_path {
        let run = Run::execute(&classifier, schema, &dataset, Utc::now()).map_err(input_error)?;
        let run = Run {
            run_id: "cli".to_string(),
            ..run
        };
        fs::write(path, report::render(&run, &ReportFilter::default()))
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }

    let failed: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        for f in failed {
            eprintln!("error: {f}");
        }
        Err(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let schema = match load_schema(cli.schema.as_deref()) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let result = match cli.command {
        Command::Run {
            classifier,
            records,
            report,
            case,
            data,
        } => run(&schema, &classifier, &records, report.as_deref(), case, &data),
        Command::Synth { n, seed, out } => fs::write(&out, to_csv(&synthesize(n, seed), &schema))
            .map_err(|e| input_error(format!("{}: {e}", out.display()))),
        Command::Compile { classifier, data } => load_classifier(&classifier, &data).and_then(|c| {
            let compiled = Compiled::new(&c, &schema).map_err(input_error)?;
            print!("{}", compiled.text);
            Ok(())
        }),
        Command::Serve {
            bind,
            data,
            static_dir,
        } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(r) => r,
                Err(e) => return input_error(e),
            };
            runtime
                .block_on(serve(ServeConfig {
                    data,
                    bind,
                    static_dir,
                }))
                .map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
