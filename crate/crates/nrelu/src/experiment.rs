//! Training runs and the multi-run studies built from them.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nrelu_core::metrics::evaluate;
use nrelu_core::train::{train_epoch, RunStreams};
use nrelu_core::{ActivationKind, Adam, Arch, IdxDataset, Mode, Model, ModelConfig, RngState, Split};

use crate::config::{ExperimentConfig, ScheduleKind, ANNEAL_SIGMA0, STANDARD_SIGMAS};
use crate::data::load_split;
use crate::error::{io_err, Error, Result};
use crate::runlog::{plot_csv, EpochRecord, RunLog};

/// Validation batches are larger than training ones; the metrics do not
/// depend on it.
pub const EVAL_BATCH_SIZE: usize = 250;

pub struct Datasets {
    pub train: IdxDataset,
    pub val: IdxDataset,
}

impl Datasets {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            train: load_split(dir, Split::Train)?,
            val: load_split(dir, Split::Val)?,
        })
    }
}

/// Receives one line per finished epoch.
pub type Progress<'a> = &'a mut dyn FnMut(&str);

pub fn quiet() -> impl FnMut(&str) {
    |_: &str| {}
}

/// The model a run starts from: Kaiming-uniform weights from the run seed.
pub fn initial_model(config: &ExperimentConfig) -> Result<Model> {
    let streams = RunStreams::new(config.seed);
    Ok(Model::new(&ModelConfig {
        arch: config.arch,
        activation: config.activation,
        init_seed: streams.init_seed,
    })?)
}

/// Trains for `config.epochs` epochs. σ for epoch `t` comes from the
/// schedule at `t`; every epoch ends with an Eval-mode validation pass.
pub fn run_single(config: &ExperimentConfig, data: &Datasets, progress: Progress) -> Result<RunLog> {
    config.validate()?;
    let run_id = config.run_id();
    let train = match config.limit_train {
        Some(n) => data.train.truncated(n)?,
        None => data.train.clone(),
    };
    let mut streams = RunStreams::new(config.seed);
    let mut model = initial_model(config)?;
    let mut adam = Adam::new(config.lr);
    let schedule = config.sigma_schedule();
    let mut records = Vec::with_capacity(config.epochs as usize);

    for epoch in 0..config.epochs {
        let sigma = if config.is_nrelu() {
            let s = schedule.sigma_at(epoch)?;
            model.set_sigma(s)?;
            Some(s)
        } else {
            None
        };
        let diverged = |source| Error::Diverged {
            run_id: run_id.clone(),
            epoch,
            source,
        };
        let stats = train_epoch(
            &mut model,
            &mut adam,
            &train,
            config.batch_size,
            &mut streams.data,
            &mut streams.noise,
        )
        .map_err(diverged)?;
        let report = evaluate(
            &model,
            &data.val,
            EVAL_BATCH_SIZE,
            Mode::Eval,
            &mut RngState::new(0),
            config.dead_threshold,
        )
        .map_err(diverged)?;
        let record = EpochRecord {
            epoch,
            train_loss: stats.train_loss,
            val_loss: report.loss,
            val_acc: report.accuracy,
            dead_ratio: report.dead_ratio,
            sigma,
            p_positive: report.p_positive,
        };
        progress(&format!(
            "{run_id} epoch {epoch}: train_loss {:.4} val_loss {:.4} val_acc {:.4} dead {:.3} p+ {:.3}",
            record.train_loss, record.val_loss, record.val_acc, record.dead_ratio, record.p_positive
        ));
        records.push(record);
    }
    Ok(RunLog::new(config.meta(), records))
}

/// The log already in `config.out_dir` for exactly this configuration, if
/// any.
pub fn existing_log(config: &ExperimentConfig) -> Option<RunLog> {
    let log = RunLog::read(&config.log_path()).ok()?;
    (log.meta == config.meta() && log.epochs.len() == config.epochs as usize).then_some(log)
}

/// Runs `config` and writes its log; with `reuse`, a matching log already
/// on disk is returned instead.
pub fn run_to_dir(config: &ExperimentConfig, data: &Datasets, reuse: bool, progress: Progress) -> Result<RunLog> {
    if reuse {
        if let Some(log) = existing_log(config) {
            progress(&format!("{}: reusing {}", log.run_id(), config.log_path().display()));
            return Ok(log);
        }
    }
    let start = Instant::now();
    let log = run_single(config, data, progress)?;
    let seconds = start.elapsed().as_secs_f64();
    log.write_to_dir(&config.out_dir)?;
    record_timing(&config.out_dir, &log.run_id(), seconds)?;
    Ok(log)
}

pub const TIMINGS_FILE: &str = "timings.csv";

/// Appends `run_id,seconds` to the timing file in `dir`.
pub fn record_timing(dir: &Path, run_id: &str, seconds: f64) -> Result<()> {
    let path = dir.join(TIMINGS_FILE);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(io_err(&path))?;
    writeln!(f, "{run_id},{seconds:.1}").map_err(io_err(&path))
}

/// Most recent wall-clock seconds recorded for `run_id` in `dir`.
pub fn recorded_seconds(dir: &Path, run_id: &str) -> Option<f64> {
    let text = std::fs::read_to_string(dir.join(TIMINGS_FILE)).ok()?;
    text.lines()
        .rev()
        .filter_map(|l| l.split_once(','))
        .filter(|(id, _)| *id == run_id)
        .find_map(|(_, s)| s.trim().parse().ok())
}

/// One (model, activation, σ) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub arch: Arch,
    pub activation: ActivationKind,
    pub sigma: Option<f64>,
}

impl Cell {
    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut c = base.clone().with_arch(self.arch).with_activation(self.activation);
        if let Some(s) = self.sigma {
            c = c.with_sigma(s);
        }
        c.schedule = ScheduleKind::Fixed;
        c
    }
}

/// Both models × (five deterministic or slope-random baselines + N-ReLU at
/// each σ): 16 cells.
pub fn standard_grid() -> Vec<Cell> {
    let mut cells = Vec::new();
    for arch in Arch::ALL {
        for kind in ActivationKind::ALL {
            if kind == ActivationKind::Nrelu {
                cells.extend(STANDARD_SIGMAS.iter().map(|&s| Cell {
                    arch,
                    activation: kind,
                    sigma: Some(s),
                }));
            } else {
                cells.push(Cell {
                    arch,
                    activation: kind,
                    sigma: None,
                });
            }
        }
    }
    cells
}

/// Every cell's logs, in grid order. Each run's randomness comes from the
/// base seed alone, so a cell gives the same log here as under
/// [`run_single`].
pub fn run_matrix(
    base: &ExperimentConfig,
    cells: &[Cell],
    data: &Datasets,
    reuse: bool,
    progress: Progress,
) -> Result<Vec<RunLog>> {
    cells
        .iter()
        .map(|cell| run_to_dir(&cell.apply(base), data, reuse, &mut *progress))
        .collect()
}

/// N-ReLU on `base.arch` at each σ.
pub fn run_sensitivity(
    base: &ExperimentConfig,
    sigmas: &[f64],
    data: &Datasets,
    reuse: bool,
    progress: Progress,
) -> Result<Vec<RunLog>> {
    let cells: Vec<Cell> = sigmas
        .iter()
        .map(|&s| Cell {
            arch: base.arch,
            activation: ActivationKind::Nrelu,
            sigma: Some(s),
        })
        .collect();
    run_matrix(base, &cells, data, reuse, progress)
}

/// The cosine-annealed configuration: N-ReLU, σ₀ = 0.20, T = epochs.
pub fn annealed_config(base: &ExperimentConfig) -> ExperimentConfig {
    base.clone()
        .with_activation(ActivationKind::Nrelu)
        .with_sigma(ANNEAL_SIGMA0)
        .with_schedule(ScheduleKind::Cosine)
}

pub fn run_annealed(base: &ExperimentConfig, data: &Datasets, reuse: bool, progress: Progress) -> Result<RunLog> {
    run_to_dir(&annealed_config(base), data, reuse, progress)
}

pub const SENSITIVITY_HEADER: &str = "sigma,final_val_acc,final_val_loss";

pub fn sensitivity_csv(logs: &[RunLog]) -> String {
    let mut out = format!("{SENSITIVITY_HEADER}\n");
    for log in logs {
        if let (Some(s), Some(r)) = (log.meta.sigma, log.final_record()) {
            let _ = writeln!(out, "{s},{},{}", r.val_acc, r.val_loss);
        }
    }
    out
}

fn label_of<T: std::str::FromStr>(id: &str, label: impl Fn(T) -> &'static str) -> String {
    id.parse().map(label).map_or_else(|_| id.to_string(), str::to_string)
}

/// Final-epoch results as an aligned text table: Model, Activation, σ,
/// Val Acc, Val Loss, Dead Ratio.
pub fn summary_table(logs: &[RunLog]) -> String {
    let header = ["Model", "Activation", "σ", "Val Acc", "Val Loss", "Dead Ratio"];
    let mut rows: Vec<[String; 6]> = Vec::new();
    for log in logs {
        let Some(r) = log.final_record() else { continue };
        let mut act = label_of(&log.meta.activation, ActivationKind::label);
        if log.meta.schedule != "fixed" {
            act = format!("{act} ({})", log.meta.schedule);
        }
        rows.push([
            label_of(&log.meta.model, Arch::label),
            act,
            log.meta.sigma.map_or_else(|| "-".to_string(), |s| format!("{s:.2}")),
            format!("{:.4}", r.val_acc),
            format!("{:.4}", r.val_loss),
            format!("{:.4}", r.dead_ratio),
        ]);
    }
    let width = |i: usize| {
        rows.iter()
            .map(|r| r[i].chars().count())
            .chain([header[i].chars().count()])
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..6).map(width).collect();
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = widths[i] - c.chars().count();
            let _ = write!(s, "{}{c}{}", if i == 0 { "" } else { "  " }, " ".repeat(pad));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    out += &line(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    for r in &rows {
        out += &line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, text).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Writes the combined plot series of `logs` to `dir/name`.
pub fn write_series(dir: &Path, name: &str, logs: &[RunLog]) -> Result<PathBuf> {
    write_text(&dir.join(name), &plot_csv(logs))
}
