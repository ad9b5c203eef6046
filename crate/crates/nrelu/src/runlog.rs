//! JSON run logs and CSV data series.
//!
//! Log layout:
//!
//! ```text
//! { "meta":    { model, activation, sigma, schedule, seed, lr, batch_size, epochs },
//!   "epochs":  [ { epoch, train_loss, val_loss, val_acc, dead_ratio, sigma, p_positive } ],
//!   "summary": { best_val_acc, final_val_acc } }
//! ```
//!
//! `sigma` is `null` for activations without a noise level. Settings that
//! differ from their defaults (`limit_train`, `dead_threshold`, activation
//! slopes) are echoed as extra `meta` keys; a default run has none.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub activation: String,
    pub sigma: Option<f64>,
    pub schedule: String,
    pub seed: u64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: u32,
    #[serde(flatten)]
    pub overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub dead_ratio: f64,
    pub sigma: Option<f64>,
    pub p_positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub best_val_acc: f64,
    pub final_val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub meta: RunMeta,
    pub epochs: Vec<EpochRecord>,
    pub summary: Summary,
}

/// Formats σ for file names: two decimals, or `na`.
pub fn sigma_token(sigma: Option<f64>) -> String {
    sigma.map_or_else(|| "na".to_string(), |s| format!("{s:.2}"))
}

impl RunMeta {
    /// `{model}_{activation}_{sigma}_{seed}`. Annealed runs carry the
    /// schedule in the activation token (`nrelu-cosine`) so they never
    /// collide with a fixed-σ run.
    pub fn run_id(&self) -> String {
        let act = if self.schedule == "fixed" {
            self.activation.clone()
        } else {
            format!("{}-{}", self.activation, self.schedule)
        };
        format!("{}_{}_{}_{}", self.model, act, sigma_token(self.sigma), self.seed)
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", self.run_id())
    }
}

impl RunLog {
    /// Builds a log from its records, computing the summary.
    pub fn new(meta: RunMeta, epochs: Vec<EpochRecord>) -> Self {
        let best = epochs.iter().map(|r| r.val_acc).fold(0.0, f64::max);
        let last = epochs.last().map_or(0.0, |r| r.val_acc);
        Self {
            meta,
            epochs,
            summary: Summary {
                best_val_acc: best,
                final_val_acc: last,
            },
        }
    }

    pub fn run_id(&self) -> String {
        self.meta.run_id()
    }

    pub fn final_record(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run log serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(path, self.to_json()).map_err(io_err(path))
    }

    /// Writes into `dir` under [`RunMeta::file_name`]; returns the path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(self.meta.file_name());
        self.write(&path)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, path)
    }
}

pub const CSV_HEADER: &str = "epoch,run_id,val_acc,val_loss,dead_ratio,sigma";

fn opt(v: Option<f64>) -> String {
    v.map(|s| s.to_string()).unwrap_or_default()
}

/// One row per (run, epoch); `sigma` is empty for noise-free activations.
pub fn plot_csv(logs: &[RunLog]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for log in logs {
        let id = log.run_id();
        for r in &log.epochs {
            let _ = writeln!(
                out,
                "{},{id},{},{},{},{}",
                r.epoch,
                r.val_acc,
                r.val_loss,
                r.dead_ratio,
                opt(r.sigma)
            );
        }
    }
    out
}

pub fn write_plot_csv(logs: &[RunLog], path: &Path) -> Result<()> {
    fs::write(path, plot_csv(logs)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(activation: &str, sigma: Option<f64>, schedule: &str) -> RunMeta {
        RunMeta {
            model: "mlp".into(),
            activation: activation.into(),
            sigma,
            schedule: schedule.into(),
            seed: 42,
            lr: 1e-3,
            batch_size: 128,
            epochs: 8,
            overrides: BTreeMap::new(),
        }
    }

    #[test]
    fn run_ids() {
        assert_eq!(meta("relu", None, "fixed").run_id(), "mlp_relu_na_42");
        assert_eq!(meta("nrelu", Some(0.05), "fixed").file_name(), "mlp_nrelu_0.05_42.json");
        assert_eq!(meta("nrelu", Some(0.2), "cosine").run_id(), "mlp_nrelu-cosine_0.20_42");
    }

    #[test]
    fn summary_and_round_trip() {
        let rec = |epoch, val_acc| EpochRecord {
            epoch,
            train_loss: 0.1 + 1.0 / 3.0,
            val_loss: 0.2,
            val_acc,
            dead_ratio: 0.0,
            sigma: Some(0.1),
            p_positive: 0.4,
        };
        let log = RunLog::new(
            meta("nrelu", Some(0.1), "fixed"),
            vec![rec(0, 0.9), rec(1, 0.95), rec(2, 0.94)],
        );
        assert_eq!(log.summary.best_val_acc, 0.95);
        assert_eq!(log.summary.final_val_acc, 0.94);
        let back = RunLog::from_json(&log.to_json(), Path::new("x")).unwrap();
        assert_eq!(back, log);
        assert!(!log.to_json().contains("limit_train"));

        let mut m = log.meta.clone();
        m.overrides.insert("limit_train".into(), 500.0);
        let log = RunLog::new(m, log.epochs.clone());
        assert!(log.to_json().contains("\"limit_train\": 500.0"));
        assert_eq!(RunLog::from_json(&log.to_json(), Path::new("x")).unwrap(), log);
    }
}
