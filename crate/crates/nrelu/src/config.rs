//! Experiment settings: defaults, `key = value` override files and the
//! run metadata they produce.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nrelu_core::activation::{DEFAULT_LEAKY_SLOPE, DEFAULT_PRELU_ALPHA, DEFAULT_RRELU_HI, DEFAULT_RRELU_LO};
use nrelu_core::metrics::DEAD_THRESHOLD;
use nrelu_core::{ActivationKind, ActivationSpec, Arch, SigmaSchedule};

use crate::data::resolve_data_dir;
use crate::error::{io_err, Error, Result};
use crate::runlog::RunMeta;

pub const DEFAULT_EPOCHS: u32 = 8;
pub const DEFAULT_BATCH_SIZE: usize = 128;
pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SIGMA: f64 = 0.10;
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const STANDARD_SIGMAS: [f64; 3] = [0.05, 0.10, 0.20];
pub const ANNEAL_SIGMA0: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Fixed,
    Cosine,
}

impl ScheduleKind {
    pub fn id(self) -> &'static str {
        match self {
            ScheduleKind::Fixed => "fixed",
            ScheduleKind::Cosine => "cosine",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(ScheduleKind::Fixed),
            "cosine" => Ok(ScheduleKind::Cosine),
            _ => Err(format!("unknown schedule `{s}` (expected fixed or cosine)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arch: Arch,
    /// Family and parameters; `sigma` is σ₀ for a cosine schedule.
    pub activation: ActivationSpec,
    pub schedule: ScheduleKind,
    pub epochs: u32,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Train on the first N samples only.
    pub limit_train: Option<usize>,
    pub dead_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Mlp,
            activation: ActivationSpec::relu().with_sigma(DEFAULT_SIGMA),
            schedule: ScheduleKind::Fixed,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            lr: DEFAULT_LR,
            seed: DEFAULT_SEED,
            data_dir: resolve_data_dir(None),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            limit_train: None,
            dead_threshold: DEAD_THRESHOLD,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("bad value `{value}` for {key}: {e}"))
}

impl ExperimentConfig {
    pub fn with_arch(mut self, arch: Arch) -> Self {
        self.arch = arch;
        self
    }

    pub fn with_activation(mut self, kind: ActivationKind) -> Self {
        self.activation.kind = kind;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.activation.sigma = sigma;
        self
    }

    pub fn with_schedule(mut self, schedule: ScheduleKind) -> Self {
        self.schedule = schedule;
        self
    }

    /// Applies one setting by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let a = &mut self.activation;
        match key.trim().replace('-', "_").as_str() {
            "model" | "arch" => self.arch = parse(key, value)?,
            "activation" => a.kind = parse(key, value)?,
            "sigma" => a.sigma = parse(key, value)?,
            "schedule" => self.schedule = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "limit_train" => self.limit_train = Some(parse(key, value)?),
            "dead_threshold" => self.dead_threshold = parse(key, value)?,
            "leaky_slope" => a.leaky_slope = parse(key, value)?,
            "alpha_init" => a.alpha_init = parse(key, value)?,
            "rrelu_lo" => a.rrelu_lo = parse(key, value)?,
            "rrelu_hi" => a.rrelu_hi = parse(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_overrides(&mut self, text: &str, origin: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Config {
                origin: format!("{origin}:{}", no + 1),
                reason,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            self.set(k.trim(), v.trim()).map_err(err)?;
        }
        Ok(())
    }

    pub fn apply_override_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.apply_overrides(&text, &path.display().to_string())
    }

    pub fn is_nrelu(&self) -> bool {
        self.activation.kind == ActivationKind::Nrelu
    }

    pub fn sigma_schedule(&self) -> SigmaSchedule {
        match self.schedule {
            ScheduleKind::Fixed => SigmaSchedule::Fixed {
                sigma0: self.activation.sigma,
            },
            ScheduleKind::Cosine => SigmaSchedule::Cosine {
                sigma0: self.activation.sigma,
                total_epochs: self.epochs,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::Config {
            origin: "settings".into(),
            reason: reason.into(),
        };
        self.activation.validate()?;
        self.sigma_schedule().validate()?;
        if self.epochs == 0 {
            return Err(bad("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(bad("batch_size must be positive"));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(bad("lr must be positive"));
        }
        if self.limit_train == Some(0) {
            return Err(bad("limit_train must be positive"));
        }
        if self.dead_threshold.is_nan() || self.dead_threshold <= 0.0 {
            return Err(bad("dead_threshold must be positive"));
        }
        if self.schedule == ScheduleKind::Cosine && !self.is_nrelu() {
            return Err(bad("a cosine schedule needs the nrelu activation"));
        }
        Ok(())
    }

    /// Settings that differ from their defaults and are not part of the
    /// fixed metadata fields.
    fn overrides(&self) -> BTreeMap<String, f64> {
        let a = &self.activation;
        let mut m = BTreeMap::new();
        if let Some(n) = self.limit_train {
            m.insert("limit_train".into(), n as f64);
        }
        if self.dead_threshold != DEAD_THRESHOLD {
            m.insert("dead_threshold".into(), self.dead_threshold);
        }
        let knobs = match a.kind {
            ActivationKind::LeakyRelu => vec![("leaky_slope", a.leaky_slope, DEFAULT_LEAKY_SLOPE)],
            ActivationKind::Prelu => vec![("alpha_init", a.alpha_init, DEFAULT_PRELU_ALPHA)],
            ActivationKind::Rrelu => vec![
                ("rrelu_lo", a.rrelu_lo, DEFAULT_RRELU_LO),
                ("rrelu_hi", a.rrelu_hi, DEFAULT_RRELU_HI),
            ],
            _ => Vec::new(),
        };
        for (k, v, d) in knobs {
            if v != d {
                m.insert(k.into(), v);
            }
        }
        m
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta {
            model: self.arch.id().into(),
            activation: self.activation.kind.id().into(),
            sigma: self.is_nrelu().then_some(self.activation.sigma),
            schedule: self.schedule.id().into(),
            seed: self.seed,
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            overrides: self.overrides(),
        }
    }

    pub fn run_id(&self) -> String {
        self.meta().run_id()
    }

    pub fn log_path(&self) -> PathBuf {
        self.out_dir.join(self.meta().file_name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table() {
        let c = ExperimentConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.lr), (8, 128, 1e-3));
        assert_eq!(c.schedule, ScheduleKind::Fixed);
        assert_eq!(c.dead_threshold, 1e-5);
        assert!(c.meta().overrides.is_empty());
        assert_eq!(c.meta().sigma, None);
        c.validate().unwrap();
    }

    #[test]
    fn override_file() {
        let mut c = ExperimentConfig::default();
        c.apply_overrides(
            "# comment\nmodel = cnn\nactivation=nrelu\n\nsigma = 0.05  # trailing\nlimit-train = 500\n",
            "t",
        )
        .unwrap();
        assert_eq!(c.arch, Arch::Cnn);
        assert_eq!(c.meta().run_id(), "cnn_nrelu_0.05_42");
        assert_eq!(c.meta().overrides.get("limit_train"), Some(&500.0));

        let err = c
            .apply_overrides("epochs = 3\nbogus = 1\n", "f.cfg")
            .unwrap_err()
            .to_string();
        assert!(err.contains("f.cfg:2") && err.contains("bogus"), "{err}");
        assert!(c.apply_overrides("epochs\n", "f").is_err());
        assert!(c.apply_overrides("epochs = x\n", "f").is_err());
    }

    #[test]
    fn cosine_requires_nrelu() {
        let c = ExperimentConfig::default().with_schedule(ScheduleKind::Cosine);
        assert!(c.validate().is_err());
        let c = c.with_activation(ActivationKind::Nrelu).with_sigma(0.2);
        c.validate().unwrap();
        assert_eq!(c.sigma_schedule().sigma_at(8).unwrap(), 0.0);
    }

    #[test]
    fn slope_overrides_are_echoed() {
        let mut c = ExperimentConfig::default().with_activation(ActivationKind::LeakyRelu);
        assert!(c.meta().overrides.is_empty());
        c.set("leaky_slope", "0.2").unwrap();
        assert_eq!(c.meta().overrides.get("leaky_slope"), Some(&0.2));
    }
}
