use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prase::eval::{self, NameSource};
use prase::ingest::{self, PerturbationSpec, RandomKgSpec};
use prase::orchestrator::{self, PraseConfig};
use prase::Error;

/// Unsupervised entity alignment between two knowledge graphs.
#[derive(Parser)]
#[command(name = "prase", version)]
struct Cli {
    /// Worker threads for reasoning and training (defaults to all cores).
    #[arg(long, global = true, env = "PRASE_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full reasoning and embedding loop.
    Align(RunArgs),
    /// Run the probabilistic reasoner alone (same as `align --set K=0`).
    Paris(RunArgs),
    /// Score a mapping file against gold links.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Also write the metrics as key=value lines here.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Align by edit-distance similarity of entity names.
    StrMatch {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Read names from this attribute of the first graph instead of IRIs.
        #[arg(long, requires = "name_attr2")]
        name_attr1: Option<String>,
        #[arg(long, requires = "name_attr1")]
        name_attr2: Option<String>,
    },
    /// Write a random graph and a perturbed, renamed copy of it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        entities: usize,
        #[arg(long, default_value_t = 8)]
        relations: usize,
        #[arg(long, default_value_t = 4)]
        triples_per_entity: usize,
        #[arg(long, default_value_t = 0.2)]
        triple_drop: f64,
        #[arg(long, default_value_t = 0.0)]
        attribute_drop: f64,
        #[arg(long, default_value_t = 0.0)]
        literal_corruption: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory with rel_triples_1/2, attr_triples_1/2 and ent_links.
    #[arg(long)]
    data: PathBuf,
    /// Output mapping file. The run summary is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Config file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set K=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Usage(_) => 2,
        _ => 1,
    }
}

fn resolve_config(args: &RunArgs, paris: bool) -> prase::Result<PraseConfig> {
    let mut cfg = PraseConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_file_contents(&text)?;
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if paris {
        cfg.k = 0;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".report");
    out.with_file_name(name)
}

fn run_alignment(args: &RunArgs, paris: bool) -> Result<(), u8> {
    let cfg = resolve_config(args, paris).map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })?;
    let pair = ingest::load_openea(&args.data).map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })?;
    let summary = report_path(&args.out);
    match orchestrator::run(&pair, &cfg) {
        Ok(out) => {
            eprintln!("{}", out.report);
            let written = ingest::write_mappings(&out.labelled(&pair), &args.out)
                .and_then(|_| out.report.write_summary(&summary));
            if let Err(e) = written {
                eprintln!("error: {e}");
                return Err(exit_code(&e));
            }
            log::info!("wrote {} and {}", args.out.display(), summary.display());
            Ok(())
        }
        Err(failure) => {
            eprintln!("{}", failure.report);
            if let Err(e) = failure.report.write_summary(&summary) {
                log::warn!("could not write partial report: {e}");
            }
            eprintln!("error: {failure}");
            Err(exit_code(&failure.source))
        }
    }
}

fn run(cli: Cli) -> Result<(), u8> {
    let fail = |e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    match cli.command {
        Command::Align(args) => run_alignment(&args, false),
        Command::Paris(args) => run_alignment(&args, true),
        Command::Eval {
            pred,
            gold,
            metrics,
        } => {
            let predicted: Vec<(String, String)> = ingest::read_mappings(&pred)
                .map_err(fail)?
                .into_iter()
                .map(|(a, b, _)| (a, b))
                .collect();
            let gold = ingest::read_links(&gold).map_err(fail)?;
            let m = eval::score(&predicted, &gold).map_err(fail)?;
            // a closed pipe on stdout is not worth failing over
            let _ = writeln!(std::io::stdout(), "{m}");
            if let Some(path) = metrics {
                m.write(&path).map_err(fail)?;
            }
            Ok(())
        }
        Command::StrMatch {
            data,
            out,
            threshold,
            name_attr1,
            name_attr2,
        } => {
            let pair = ingest::load_openea(&data).map_err(fail)?;
            let source = match (name_attr1, name_attr2) {
                (Some(kg1), Some(kg2)) => NameSource::Attribute { kg1, kg2 },
                _ => NameSource::LocalName,
            };
            let found = eval::str_match_baseline(&pair.kg1, &pair.kg2, threshold, &source);
            let labelled: Vec<(String, String, f64)> = found
                .into_iter()
                .map(|(l, r, s)| {
                    (
                        pair.kg1.node_label(l).to_owned(),
                        pair.kg2.node_label(r).to_owned(),
                        s,
                    )
                })
                .collect();
            ingest::write_mappings(&labelled, &out).map_err(fail)
        }
        Command::Synth {
            out,
            entities,
            relations,
            triples_per_entity,
            triple_drop,
            attribute_drop,
            literal_corruption,
            seed,
        } => {
            let base = ingest::random_kg(&RandomKgSpec {
                entities,
                relations,
                triples_per_entity,
                seed,
                ..Default::default()
            })
            .map_err(fail)?;
            let spec = PerturbationSpec {
                triple_drop_rate: triple_drop,
                attribute_drop_rate: attribute_drop,
                literal_corruption_rate: literal_corruption,
                rename_seed: seed,
            };
            let pair = ingest::synthesize_pair(&base, &spec).map_err(fail)?;
            fs::create_dir_all(&out).map_err(|e| fail(e.into()))?;
            ingest::write_openea(&pair, &out).map_err(fail)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
