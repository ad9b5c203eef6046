//! Pass/fail thresholds for finished runs.

use crate::config::{DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LR};
use crate::runlog::{sigma_token, RunLog};

/// Allowed spread around a reference accuracy.
pub const ACC_TOL: f64 = 0.004;
pub const MLP_RELU_ACC: f64 = 0.9791;
pub const MLP_NRELU_005_ACC: f64 = 0.9802;
/// σ = 0.05 may trail σ = 0.20 by at most this much (MLP).
pub const MLP_ORDER_SLACK: f64 = 0.002;
pub const CNN_RELU_ACC: f64 = 0.9904;
/// Annealed final accuracy vs. the fixed σ = 0.10 run.
pub const ANNEAL_TOL: f64 = 0.005;
/// Annealed final accuracy may beat the σ = 0.05 run by at most this much.
pub const ANNEAL_MAX_GAIN: f64 = 0.003;
pub const ANNEAL_FINAL_SIGMA_MAX: f64 = 0.02;
pub const SMOKE_LIMIT_TRAIN: usize = 10_000;
pub const SMOKE_MIN_ACC: f64 = 0.97;
pub const MLP_RUN_SECS: f64 = 600.0;
pub const CNN_RUN_SECS: f64 = 3600.0;
pub const SMOKE_RUN_SECS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// True for a full-data run with the default hyperparameters, the only
/// kind the reference accuracies apply to.
pub fn is_reference_run(log: &RunLog) -> bool {
    let m = &log.meta;
    m.overrides.is_empty() && m.epochs == DEFAULT_EPOCHS && m.batch_size == DEFAULT_BATCH_SIZE && m.lr == DEFAULT_LR
}

fn final_acc(log: &RunLog) -> f64 {
    log.summary.final_val_acc
}

/// Finds the fixed-schedule log for `model`/`activation`/`sigma`.
pub fn find<'a>(logs: &'a [RunLog], model: &str, activation: &str, sigma: Option<f64>) -> Option<&'a RunLog> {
    logs.iter().find(|l| {
        l.meta.model == model
            && l.meta.activation == activation
            && l.meta.schedule == "fixed"
            && match (l.meta.sigma, sigma) {
                (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                (None, None) => true,
                _ => false,
            }
    })
}

fn missing(name: &str, what: &str) -> Check {
    Check::new(name, false, format!("no log for {what}"))
}

fn within(name: &str, log: Option<&RunLog>, what: &str, target: f64, tol: f64) -> Check {
    match log {
        Some(l) => {
            let acc = final_acc(l);
            Check::new(
                name,
                (acc - target).abs() <= tol,
                format!("{what} final val_acc {acc:.4}, want {target} ± {tol}"),
            )
        }
        None => missing(name, what),
    }
}

/// Dead ratio exactly zero at every epoch.
pub fn no_dead_units(log: &RunLog) -> Check {
    let worst = log.epochs.iter().map(|r| r.dead_ratio).fold(0.0, f64::max);
    Check::new(
        format!("{} dead ratio", log.run_id()),
        log.epochs.iter().all(|r| r.dead_ratio == 0.0),
        format!("max over epochs {worst}"),
    )
}

/// Train loss of the last epoch below that of the first.
pub fn loss_decreases(log: &RunLog) -> Check {
    let (first, last) = match (log.epochs.first(), log.epochs.last()) {
        (Some(a), Some(b)) => (a.train_loss, b.train_loss),
        _ => return Check::new(format!("{} train loss", log.run_id()), false, "empty log"),
    };
    Check::new(
        format!("{} train loss", log.run_id()),
        last < first,
        format!("epoch 0 {first:.4} -> final {last:.4}"),
    )
}

pub fn mlp_table_checks(logs: &[RunLog]) -> Vec<Check> {
    let relu = find(logs, "mlp", "relu", None);
    let n05 = find(logs, "mlp", "nrelu", Some(0.05));
    let n20 = find(logs, "mlp", "nrelu", Some(0.20));
    let order = match (n05, n20) {
        (Some(a), Some(b)) => Check::new(
            "MLP N-ReLU σ=0.05 vs σ=0.20",
            final_acc(a) >= final_acc(b) - MLP_ORDER_SLACK,
            format!("{:.4} vs {:.4} (slack {MLP_ORDER_SLACK})", final_acc(a), final_acc(b)),
        ),
        _ => missing("MLP N-ReLU σ=0.05 vs σ=0.20", "mlp nrelu 0.05/0.20"),
    };
    vec![
        within("MLP ReLU accuracy", relu, "mlp relu", MLP_RELU_ACC, ACC_TOL),
        within(
            "MLP N-ReLU σ=0.05 accuracy",
            n05,
            "mlp nrelu 0.05",
            MLP_NRELU_005_ACC,
            ACC_TOL,
        ),
        order,
    ]
}

pub fn cnn_table_checks(logs: &[RunLog]) -> Vec<Check> {
    let relu = find(logs, "cnn", "relu", None);
    let order = match (
        find(logs, "cnn", "nrelu", Some(0.20)),
        find(logs, "cnn", "nrelu", Some(0.05)),
    ) {
        (Some(a), Some(b)) => Check::new(
            "CNN N-ReLU σ=0.20 below σ=0.05",
            final_acc(a) < final_acc(b),
            format!("{:.4} vs {:.4}", final_acc(a), final_acc(b)),
        ),
        _ => missing("CNN N-ReLU σ=0.20 below σ=0.05", "cnn nrelu 0.20/0.05"),
    };
    vec![
        within("CNN ReLU accuracy", relu, "cnn relu", CNN_RELU_ACC, ACC_TOL),
        order,
    ]
}

/// σ = 0.05 at least as accurate as σ = 0.20.
pub fn sensitivity_checks(logs: &[RunLog], model: &str) -> Vec<Check> {
    let name = format!("{model} sensitivity σ=0.05 ≥ σ=0.20");
    match (
        find(logs, model, "nrelu", Some(0.05)),
        find(logs, model, "nrelu", Some(0.20)),
    ) {
        (Some(a), Some(b)) => vec![Check::new(
            name,
            final_acc(a) >= final_acc(b),
            format!("{:.4} vs {:.4}", final_acc(a), final_acc(b)),
        )],
        _ => vec![missing(&name, "nrelu 0.05/0.20")],
    }
}

/// The annealed run against the fixed σ = 0.10 and σ = 0.05 runs of the
/// same model.
pub fn annealed_checks(annealed: &RunLog, fixed: &[RunLog]) -> Vec<Check> {
    let model = annealed.meta.model.as_str();
    let mut out = Vec::new();
    let first = annealed.epochs.first().and_then(|r| r.sigma);
    let last = annealed.epochs.last().and_then(|r| r.sigma);
    out.push(Check::new(
        format!("{model} annealed σ endpoints"),
        first == Some(0.20) && last.is_some_and(|s| s <= ANNEAL_FINAL_SIGMA_MAX),
        format!(
            "epoch 0 σ {}, final σ {} (≤ {ANNEAL_FINAL_SIGMA_MAX})",
            sigma_token(first),
            last.map_or("none".into(), |s| format!("{s:.4}"))
        ),
    ));
    let acc = final_acc(annealed);
    out.push(match find(fixed, model, "nrelu", Some(0.10)) {
        Some(f) => Check::new(
            format!("{model} annealed vs fixed σ=0.10"),
            (acc - final_acc(f)).abs() <= ANNEAL_TOL,
            format!("{acc:.4} vs {:.4} (± {ANNEAL_TOL})", final_acc(f)),
        ),
        None => missing(&format!("{model} annealed vs fixed σ=0.10"), "nrelu 0.10"),
    });
    out.push(match find(fixed, model, "nrelu", Some(0.05)) {
        Some(f) => Check::new(
            format!("{model} annealed vs σ=0.05"),
            acc <= final_acc(f) + ANNEAL_MAX_GAIN,
            format!("{acc:.4} vs {:.4} (+{ANNEAL_MAX_GAIN} allowed)", final_acc(f)),
        ),
        None => missing(&format!("{model} annealed vs σ=0.05"), "nrelu 0.05"),
    });
    out.push(no_dead_units(annealed));
    out
}

/// Checks that apply to any single run: no dead units, falling train loss,
/// and for reference runs the matching accuracy target.
pub fn run_checks(log: &RunLog) -> Vec<Check> {
    let mut out = vec![no_dead_units(log), loss_decreases(log)];
    if is_reference_run(log) && log.meta.schedule == "fixed" {
        let one = std::slice::from_ref(log);
        let targeted: Vec<Check> = match log.meta.model.as_str() {
            "mlp" => mlp_table_checks(one).into_iter().take(2).collect(),
            _ => cnn_table_checks(one).into_iter().take(1).collect(),
        };
        out.extend(targeted.into_iter().filter(|c| !c.detail.starts_with("no log")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runlog::{EpochRecord, RunMeta};

    fn log(model: &str, activation: &str, sigma: Option<f64>, accs: &[f64]) -> RunLog {
        let meta = RunMeta {
            model: model.into(),
            activation: activation.into(),
            sigma,
            schedule: "fixed".into(),
            seed: 42,
            lr: 1e-3,
            batch_size: 128,
            epochs: accs.len() as u32,
            overrides: Default::default(),
        };
        let epochs = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| EpochRecord {
                epoch: i as u32,
                train_loss: 1.0 / (i + 1) as f64,
                val_loss: 0.1,
                val_acc: a,
                dead_ratio: 0.0,
                sigma,
                p_positive: 0.5,
            })
            .collect();
        RunLog::new(meta, epochs)
    }

    #[test]
    fn mlp_targets() {
        let logs = vec![
            log("mlp", "relu", None, &[0.95, 0.978]),
            log("mlp", "nrelu", Some(0.05), &[0.95, 0.9799]),
            log("mlp", "nrelu", Some(0.2), &[0.95, 0.9825]),
        ];
        let c = mlp_table_checks(&logs);
        assert!(c[0].pass && c[1].pass);
        assert!(!c[2].pass, "{}", c[2].line());
        assert!(!mlp_table_checks(&logs[..1])[1].pass);
    }

    #[test]
    fn dead_and_loss() {
        let mut l = log("cnn", "gelu", None, &[0.9, 0.95]);
        assert!(no_dead_units(&l).pass && loss_decreases(&l).pass);
        l.epochs[1].dead_ratio = 1.0 / 416.0;
        l.epochs[1].train_loss = 2.0;
        assert!(!no_dead_units(&l).pass && !loss_decreases(&l).pass);
    }

    #[test]
    fn run_checks_apply_reference_only_to_full_runs() {
        let full = log("mlp", "relu", None, &[0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.96]);
        assert!(!all_pass(&run_checks(&full)));
        let mut smoke = full.clone();
        smoke.meta.overrides.insert("limit_train".into(), 500.0);
        assert!(all_pass(&run_checks(&smoke)));
    }
}
