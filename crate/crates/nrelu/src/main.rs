use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nrelu::checks::{self, Check};
use nrelu::config::{ExperimentConfig, ScheduleKind, STANDARD_SIGMAS};
use nrelu::data::resolve_data_dir;
use nrelu::experiment::{self, Cell, Datasets};
use nrelu::fetch::fetch_data;
use nrelu::runlog::RunLog;
use nrelu::Result;
use nrelu_core::{ActivationKind, Arch};

#[derive(Parser)]
#[command(
    name = "nrelu",
    version,
    about = "Train MNIST MLP/CNN models with N-ReLU and baseline activations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its JSON log.
    Run(Common),
    /// Train every model × activation cell (16 runs) and print a summary table.
    Matrix(Common),
    /// Train N-ReLU at several σ values for one model.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated σ values.
        #[arg(long, value_delimiter = ',', default_values_t = STANDARD_SIGMAS)]
        sigmas: Vec<f64>,
    },
    /// Train N-ReLU with σ annealed from 0.20 to 0 on a cosine schedule.
    Annealed(Common),
    /// Download the four MNIST files into the data directory.
    FetchData {
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mlp or cnn. For `matrix`, restricts the grid to one model.
    #[arg(long)]
    model: Option<Arch>,
    /// relu, leakyrelu, prelu, gelu, rrelu or nrelu.
    #[arg(long)]
    activation: Option<ActivationKind>,
    #[arg(long)]
    sigma: Option<f64>,
    /// fixed or cosine.
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Defaults to $NRELU_DATA_DIR, then ./data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Train on the first N training samples only.
    #[arg(long)]
    limit_train: Option<usize>,
    /// Exit nonzero when a finished run misses its acceptance thresholds.
    #[arg(long)]
    check: bool,
    /// Reuse logs in the output directory whose metadata matches.
    #[arg(long)]
    reuse: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            c.apply_override_file(path)?;
        }
        if self.data_dir.is_some() || self.config.is_none() {
            c.data_dir = resolve_data_dir(self.data_dir.as_deref());
        }
        c.arch = self.model.unwrap_or(c.arch);
        c.activation.kind = self.activation.unwrap_or(c.activation.kind);
        c.activation.sigma = self.sigma.unwrap_or(c.activation.sigma);
        c.schedule = self.schedule.unwrap_or(c.schedule);
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.batch_size = self.batch_size.unwrap_or(c.batch_size);
        c.lr = self.lr.unwrap_or(c.lr);
        c.seed = self.seed.unwrap_or(c.seed);
        c.out_dir = self.out_dir.clone().unwrap_or(c.out_dir);
        c.limit_train = self.limit_train.or(c.limit_train);
        c.validate()?;
        Ok(c)
    }
}

fn progress(line: &str) {
    eprintln!("{line}");
}

fn report(checks: &[Check]) -> bool {
    for c in checks {
        println!("{}", c.line());
    }
    checks::all_pass(checks)
}

/// Fixed-σ reference logs for the annealed comparison, from `out_dir`.
fn fixed_references(base: &ExperimentConfig) -> Vec<RunLog> {
    [0.05, 0.10]
        .iter()
        .filter_map(|&s| {
            let cell = Cell {
                arch: base.arch,
                activation: ActivationKind::Nrelu,
                sigma: Some(s),
            };
            experiment::existing_log(&cell.apply(base))
        })
        .collect()
}

fn execute(command: Command) -> Result<bool> {
    let mut p = progress;
    match command {
        Command::FetchData { data_dir } => {
            let dir = resolve_data_dir(data_dir.as_deref());
            fetch_data(&dir, &mut |l: &str| eprintln!("{l}"))?;
            Ok(true)
        }
        Command::Run(common) => {
            let cfg = common.config()?;
            let data = Datasets::load(&cfg.data_dir)?;
            let log = experiment::run_to_dir(&cfg, &data, common.reuse, &mut p)?;
            println!("{}", cfg.log_path().display());
            print!("{}", experiment::summary_table(std::slice::from_ref(&log)));
            Ok(!common.check || report(&checks::run_checks(&log)))
        }
        Command::Matrix(common) => {
            let cfg = common.config()?;
            let data = Datasets::load(&cfg.data_dir)?;
            let cells: Vec<Cell> = experiment::standard_grid()
                .into_iter()
                .filter(|c| common.model.is_none_or(|m| m == c.arch))
                .collect();
            let logs = experiment::run_matrix(&cfg, &cells, &data, common.reuse, &mut p)?;
            let table = experiment::summary_table(&logs);
            experiment::write_series(&cfg.out_dir, "matrix.csv", &logs)?;
            experiment::write_text(&cfg.out_dir.join("summary.txt"), &table)?;
            print!("{table}");
            if !common.check {
                return Ok(true);
            }
            let mut all: Vec<Check> = logs.iter().flat_map(checks::run_checks).collect();
            for arch in [Arch::Mlp, Arch::Cnn] {
                let of_arch: Vec<RunLog> = logs
                    .iter()
                    .filter(|l| l.meta.model == arch.id() && checks::is_reference_run(l))
                    .cloned()
                    .collect();
                if of_arch.is_empty() {
                    continue;
                }
                all.extend(match arch {
                    Arch::Mlp => checks::mlp_table_checks(&of_arch),
                    Arch::Cnn => checks::cnn_table_checks(&of_arch),
                });
            }
            Ok(report(&all))
        }
        Command::Sensitivity { common, sigmas } => {
            let cfg = common.config()?;
            let data = Datasets::load(&cfg.data_dir)?;
            let logs = experiment::run_sensitivity(&cfg, &sigmas, &data, common.reuse, &mut p)?;
            let csv = experiment::sensitivity_csv(&logs);
            let path = cfg.out_dir.join(format!("{}_sensitivity.csv", cfg.arch.id()));
            experiment::write_text(&path, &csv)?;
            experiment::write_series(
                &cfg.out_dir,
                &format!("{}_sensitivity_series.csv", cfg.arch.id()),
                &logs,
            )?;
            print!("{csv}");
            if !common.check {
                return Ok(true);
            }
            let mut all: Vec<Check> = logs.iter().flat_map(checks::run_checks).collect();
            all.extend(checks::sensitivity_checks(&logs, cfg.arch.id()));
            Ok(report(&all))
        }
        Command::Annealed(common) => {
            let cfg = common.config()?;
            let data = Datasets::load(&cfg.data_dir)?;
            let log = experiment::run_annealed(&cfg, &data, common.reuse, &mut p)?;
            let name = format!("{}.csv", log.run_id());
            experiment::write_series(&cfg.out_dir, &name, std::slice::from_ref(&log))?;
            print!("{}", experiment::summary_table(std::slice::from_ref(&log)));
            if !common.check {
                return Ok(true);
            }
            let mut all = vec![checks::loss_decreases(&log)];
            all.extend(checks::annealed_checks(&log, &fixed_references(&cfg)));
            Ok(report(&all))
        }
    }
}

fn main() -> ExitCode {
    nrelu::sys::retain_freed_memory();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance checks failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
