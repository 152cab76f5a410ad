use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::StartPolicy;
use crate::coupling::{StoppingKind, DEFAULT_KAPPA};
use crate::error::{Error, Result};

pub const DEFAULT_REPLICAS: usize = 10_000;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Profile,
    Mixtime,
    Coupling,
    Approx,
    Lowerbound,
    Schedule,
    Sweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Profile => "profile",
            ExperimentKind::Mixtime => "mixtime",
            ExperimentKind::Coupling => "coupling",
            ExperimentKind::Approx => "approx",
            ExperimentKind::Lowerbound => "lowerbound",
            ExperimentKind::Schedule => "schedule",
            ExperimentKind::Sweep => "sweep",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::config("experiment", format!("unknown experiment `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// `k = ⌊λ n⌋`.
    FloorLambdaN,
    /// `k` taken from `k_values`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// The JSON document as written by the user.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    n: Option<u64>,
    n_grid: Option<Vec<u64>>,
    lambda: f64,
    k_rule: Option<KRule>,
    k_values: Option<Vec<u64>>,
    epsilons: Option<Vec<f64>>,
    replicas: Option<usize>,
    master_seed: Option<u64>,
    horizon: Option<usize>,
    output_dir: Option<PathBuf>,
    kappa1: Option<f64>,
    kappa3: Option<f64>,
    kappa4: Option<f64>,
    start_policy: Option<StartPolicy>,
    x0: Option<u64>,
    y0: Option<u64>,
    r: Option<f64>,
    stopping: Option<StoppingKind>,
    format: Option<OutputFormat>,
}

/// A validated experiment configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// `(n, k)` pairs in the order given, duplicates removed.
    pub grid: Vec<(u64, u64)>,
    pub lambda: f64,
    pub k_rule: KRule,
    pub epsilons: Vec<f64>,
    pub replicas: usize,
    pub master_seed: u64,
    pub horizon: Option<usize>,
    pub kappa1: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub start_policy: StartPolicy,
    pub x0: Option<u64>,
    pub y0: Option<u64>,
    pub r: Option<f64>,
    pub stopping: StoppingKind,
    pub format: OutputFormat,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

/// Overrides from the command line or environment; `None` keeps the
/// configured value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

fn positive_kappa(field: &str, value: Option<f64>) -> Result<f64> {
    match value {
        None => Ok(DEFAULT_KAPPA),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::config(field, format!("must be a positive number, got {v}"))),
    }
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;

    if !(raw.lambda > 0.0 && raw.lambda < 0.5) {
        return Err(Error::config(
            "lambda",
            format!(
                "{} is outside the open interval (0, 1/2) required for the limit k/n -> lambda",
                raw.lambda
            ),
        ));
    }

    let ns: Vec<u64> = match (raw.n, raw.n_grid) {
        (Some(_), Some(_)) => return Err(Error::config("n_grid", "give either `n` or `n_grid`, not both")),
        (None, None) => return Err(Error::config("n", "one of `n` or `n_grid` is required")),
        (Some(n), None) => vec![n],
        (None, Some(grid)) => grid,
    };
    if ns.is_empty() {
        return Err(Error::config("n_grid", "grid must be non-empty"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::config("n_grid", format!("n = {n} is too small; need n >= 2")));
    }

    let k_rule = raw.k_rule.unwrap_or(KRule::FloorLambdaN);
    let ks: Vec<u64> = match k_rule {
        KRule::FloorLambdaN => {
            if raw.k_values.is_some() {
                return Err(Error::config("k_values", "only allowed with k_rule = \"explicit\""));
            }
            ns.iter().map(|&n| (raw.lambda * n as f64).floor() as u64).collect()
        }
        KRule::Explicit => {
            let ks = raw
                .k_values
                .ok_or_else(|| Error::config("k_values", "required when k_rule = \"explicit\""))?;
            match ks.len() {
                1 => vec![ks[0]; ns.len()],
                len if len == ns.len() => ks,
                len => {
                    return Err(Error::config(
                        "k_values",
                        format!("has {len} entries; expected 1 or one per n ({})", ns.len()),
                    ))
                }
            }
        }
    };
    let mut grid: Vec<(u64, u64)> = Vec::with_capacity(ns.len());
    for (n, k) in ns.into_iter().zip(ks) {
        if k > n {
            return Err(Error::config("k_values", format!("k = {k} exceeds n = {n}")));
        }
        if grid.iter().any(|&(m, _)| m == n) {
            log::warn!("duplicate n = {n} in n_grid ignored");
            continue;
        }
        grid.push((n, k));
    }

    let epsilons = raw.epsilons.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    if epsilons.is_empty() {
        return Err(Error::config("epsilons", "must be non-empty"));
    }
    if let Some(e) = epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::config("epsilons", format!("{e} is outside (0, 1)")));
    }

    let replicas = raw.replicas.unwrap_or(DEFAULT_REPLICAS);
    if replicas == 0 {
        return Err(Error::config("replicas", "must be >= 1"));
    }
    if let Some(r) = raw.r {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::config("r", format!("must be positive, got {r}")));
        }
    }
    for (field, state) in [("x0", raw.x0), ("y0", raw.y0)] {
        if let Some(s) = state {
            if let Some(&(n, _)) = grid.iter().find(|&&(n, _)| s > n) {
                return Err(Error::config(field, format!("state {s} exceeds n = {n}")));
            }
        }
    }

    Ok(ExperimentConfig {
        experiment: raw.experiment,
        grid,
        lambda: raw.lambda,
        k_rule,
        epsilons,
        replicas,
        master_seed: raw.master_seed.unwrap_or(0),
        horizon: raw.horizon,
        kappa1: positive_kappa("kappa1", raw.kappa1)?,
        kappa3: positive_kappa("kappa3", raw.kappa3)?,
        kappa4: positive_kappa("kappa4", raw.kappa4)?,
        start_policy: raw.start_policy.unwrap_or(StartPolicy::StateZero),
        x0: raw.x0,
        y0: raw.y0,
        r: raw.r,
        stopping: raw.stopping.unwrap_or(StoppingKind::TauCouple),
        format: raw.format.unwrap_or(OutputFormat::Csv),
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
    })
}

impl ExperimentConfig {
    pub fn apply(mut self, overrides: &Overrides) -> Self {
        if let Some(seed) = overrides.master_seed {
            self.master_seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
        self
    }

    /// Hex SHA-256 of the canonical JSON form. The output directory is not
    /// part of the digest, so moving results does not change it.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn kappa_for(&self, kind: StoppingKind) -> f64 {
        match kind {
            StoppingKind::Tau1 => self.kappa1,
            StoppingKind::Tau3 => self.kappa3,
            StoppingKind::Tau4 | StoppingKind::TauCouple => self.kappa4,
        }
    }
}
