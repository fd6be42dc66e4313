//! `steamreg`: batch front end for data preparation, training, benchmarking
//! and plot data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steamreg::bench::{self, exit_code, DEFAULT_PLOT_POINTS, EXIT_OK};
use steamreg::config::{BenchConfig, Method};
use steamreg::synth::SyntheticSpec;
use steamreg::Error;

#[derive(Parser, Debug)]
#[command(name = "steamreg", version, about = "Multi-method regression benchmark for steam generator data")]
struct Cli {
    /// TOML configuration file. Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, remove outliers, scale and split into <out>/prep.
    Prep {
        /// 8-column CSV; the synthetic generator is used when neither this nor data.path is set.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        delimiter: Option<char>,
    },
    /// Train one method on the prepared split into <out>/models/<method>.
    Train {
        #[arg(long)]
        method: String,
    },
    /// Train and evaluate all configured methods; writes <out>/bench.
    Bench {
        /// Comma-separated subset of methods, overriding the config.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Actual vs predicted CSV for the first n test samples of every output.
    PlotData {
        /// Saved model directory, e.g. out/models/mlp.
        #[arg(long)]
        model: PathBuf,
        /// Test CSV; defaults to <out>/prep/test.csv.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(short, default_value_t = DEFAULT_PLOT_POINTS)]
        n: usize,
        /// Output CSV; defaults to <out>/plot/<model dir name>.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic raw dataset.
    Synth {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Defaults to <out>/synthetic.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> steamreg::Result<BenchConfig> {
    let mut cfg = match &cli.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> steamreg::Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Prep { input, delimiter } => {
            if input.is_some() {
                cfg.data.path = input;
            }
            if let Some(d) = delimiter {
                cfg.data.delimiter = d;
            }
            let m = bench::cmd_prep(&cfg)?;
            println!(
                "source: {}\nrows: {}  removed: {}  kept: {}\nsplit: train {} / validation {} / test {}",
                m.source, m.rows_total, m.removed, m.kept, m.train_rows, m.validation_rows, m.test_rows
            );
        }
        Command::Train { method } => {
            let method: Method = method.parse()?;
            let m = bench::cmd_train(&cfg, method)?;
            println!(
                "{}: {} file(s) in {}",
                method,
                m.files.len(),
                bench::model_dir(&cfg, method).display()
            );
        }
        Command::Bench { methods } => {
            if let Some(list) = methods {
                cfg.methods = list.iter().map(|s| s.parse()).collect::<steamreg::Result<_>>()?;
            }
            let report = bench::cmd_bench(&cfg)?;
            let table = cfg.out_dir.join(bench::BENCH_DIR).join("report.txt");
            let text = std::fs::read_to_string(&table).map_err(|e| Error::Io { path: table, source: e })?;
            print!("{text}");
            if report.methods.iter().any(|r| r.error.is_some()) {
                return Err(Error::Training("one or more methods failed; see report.json".into()));
            }
        }
        Command::PlotData { model, test, n, output } => {
            let test = test.unwrap_or_else(|| cfg.out_dir.join(bench::PREP_DIR).join("test.csv"));
            let name = model.file_name().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            let output = output.unwrap_or_else(|| cfg.out_dir.join("plot").join(format!("{name}.csv")));
            let rows = bench::cmd_plot_data(&model, &test, n, &output)?;
            println!("{rows} rows written to {}", output.display());
        }
        Command::Synth { samples, noise, output } => {
            let mut spec: SyntheticSpec = cfg.data.synthetic;
            spec.seed = cli.seed.unwrap_or(spec.seed);
            if let Some(s) = samples {
                spec.samples = s;
            }
            if let Some(s) = noise {
                spec.noise = s;
            }
            let output = output.unwrap_or_else(|| cfg.out_dir.join("synthetic.csv"));
            let rows = bench::cmd_synth(&spec, &output)?;
            println!("{rows} rows written to {}", output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
