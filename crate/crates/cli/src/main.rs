use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use haulcycle::netmodel::Algorithm;
use haulcycle::pfa::DEFAULT_EPS;
use haulcycle::study::{
    emit, load_config, paper_config, run_study_with, ComparisonTable, OutputFormat, Scenario, StudyConfig,
    DEFAULT_SEED,
};
use haulcycle::Error;

/// Environment variable consulted for the seed when neither `--seed` nor the
/// configuration sets one.
const SEED_ENV: &str = "HAULCYCLE_SEED";

#[derive(Parser)]
#[command(name = "haulcycle", version, about = "Idle-time approximations for a closed loading and haulage cycle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm for one population size and print the result as JSON.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        algorithm: String,
        /// Number of customers (trucks).
        #[arg(long, short)]
        k: u32,
    },
    /// Run every configured algorithm over the configured population range.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Run only the simulator. With `--k` a single run is printed as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        #[arg(long, short)]
        k: Option<u32>,
    },
    /// Regenerate the bundled reference tables.
    Tables {
        #[arg(long, required = true)]
        paper: bool,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance of the bisection and bottleneck iterations.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Args)]
struct Output {
    /// Output file; tables go to stdout when neither this nor the config sets a path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Markdown => OutputFormat::Markdown,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Validation { .. } => 2,
        Error::Nonconvergence { .. } | Error::NoBracket => 3,
        Error::Io(_) => 4,
        _ => 1,
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Validation {
            field: SEED_ENV.into(),
            message: format!("not an unsigned integer: {v:?}"),
        }),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(cfg: &mut StudyConfig, flag: Option<u64>) -> Result<(), Error> {
    let seed = match flag.or(cfg.simulation.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(DEFAULT_SEED),
    };
    cfg.simulation.seed = Some(seed);
    Ok(())
}

fn load(common: &Common) -> Result<StudyConfig, Error> {
    let mut cfg = load_config(&common.config)?;
    resolve_seed(&mut cfg, common.seed)?;
    Ok(cfg)
}

fn report_diagnostics(table: &ComparisonTable) {
    for d in &table.diagnostics {
        eprintln!("{d}");
    }
}

fn write_table(table: &ComparisonTable, cfg: &StudyConfig, output: &Output) -> Result<(), Error> {
    let configured = cfg.output.clone().unwrap_or_default();
    let format = output.format.map(OutputFormat::from).unwrap_or(configured.format);
    let path = output.out.clone().or(configured.path.map(PathBuf::from));
    match path {
        Some(path) => {
            for p in emit(table, format, &path)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => match format {
            OutputFormat::Csv => {
                print!("{}", table.to_csv());
                if let Some(err) = table.abserr_csv() {
                    println!();
                    print!("{err}");
                }
            }
            OutputFormat::Markdown => print!("{}", table.to_markdown()),
        },
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn paper_tables(out: &Path, format: Format, seed: Option<u64>, eps: f64) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    for (disturbed, values, errors) in [(false, "table4", "table5"), (true, "table6", "table7")] {
        let mut cfg = paper_config(disturbed);
        if let Some(s) = seed {
            cfg.simulation.seed = Some(s);
        }
        let table = run_study_with(&cfg, eps)?;
        report_diagnostics(&table);
        match format {
            Format::Csv => {
                write_file(&out.join(format!("{values}.csv")), &table.to_csv())?;
                write_file(&out.join(format!("{errors}.csv")), &table.abserr_csv().unwrap_or_default())?;
                write_file(
                    &out.join(format!("{errors}_signed.csv")),
                    &table.signederr_csv().unwrap_or_default(),
                )?;
            }
            Format::Markdown => {
                write_file(&out.join(format!("{values}_{errors}.md")), &table.to_markdown())?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze { common, algorithm, k } => {
            let cfg = load(&common)?;
            let algorithm = Algorithm::from_id(&algorithm).ok_or_else(|| Error::Validation {
                field: "--algorithm".into(),
                message: format!("unknown algorithm `{algorithm}`"),
            })?;
            if k == 0 {
                return Err(Error::Validation {
                    field: "--k".into(),
                    message: "must be at least 1".into(),
                });
            }
            let mut cfg = cfg;
            cfg.k_range = [k, k];
            cfg.algorithms = vec![algorithm];
            let scenario = Scenario::new(cfg, common.eps)?;
            let analysis = scenario.analyze(algorithm, k)?;
            for w in &analysis.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string_pretty(&analysis).expect("analysis serializes"));
        }
        Command::Compare { common, output } => {
            let cfg = load(&common)?;
            let table = run_study_with(&cfg, common.eps)?;
            report_diagnostics(&table);
            write_table(&table, &cfg, &output)?;
        }
        Command::Simulate { common, output, k } => {
            let mut cfg = load(&common)?;
            cfg.algorithms = vec![Algorithm::Sim];
            match k {
                Some(k) => {
                    cfg.k_range = [k, k];
                    let scenario = Scenario::new(cfg, common.eps)?;
                    let analysis = scenario.analyze(Algorithm::Sim, k)?;
                    println!("{}", serde_json::to_string_pretty(&analysis).expect("analysis serializes"));
                }
                None => {
                    let table = run_study_with(&cfg, common.eps)?;
                    report_diagnostics(&table);
                    write_table(&table, &cfg, &output)?;
                }
            }
        }
        Command::Tables {
            paper: _,
            out,
            format,
            seed,
            eps,
        } => paper_tables(&out, format, seed, eps)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
