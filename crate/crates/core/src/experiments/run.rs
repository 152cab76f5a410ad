use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::table::{Cell, Table};
use crate::approximation::{hyper_vs_dnormal_tv, normalization_constant, one_step_tv, ApproxParams};
use crate::asymptotics::{make_schedule, Schedule};
use crate::chain::{distance_profile, lower_bound_certificate, t_mix, ChainParams, StartPolicy, MAX_DENSE_N, MAX_STATE_ZERO_N};
use crate::coupling::{stopping_tail, survival_vs_bound, StoppingKind, StoppingSpec};
use crate::error::{Error, Result};

/// Version stamped into every metadata file.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files produced by one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub digest: String,
    pub tables: Vec<Table>,
    pub files: Vec<PathBuf>,
    pub metadata: PathBuf,
}

#[derive(Serialize)]
struct Metadata<'a> {
    experiment: &'a str,
    config_digest: &'a str,
    artifact_version: &'a str,
    master_seed: u64,
    rng: &'a str,
    worker_threads: usize,
    wall_clock_seconds: f64,
    files: Vec<String>,
}

/// Validates, computes and writes every table of the experiment.
///
/// Output paths and size guards are checked before any computation starts.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    preflight(config)?;
    let started = Instant::now();
    let digest = config.digest();
    let tables = compute(config)?;
    let files = tables
        .iter()
        .map(|t| write_table(config, &digest, t))
        .collect::<Result<Vec<_>>>()?;
    let metadata = config
        .output_dir
        .join(format!("{}-{}.meta.json", config.experiment.as_str(), &digest[..8]));
    let meta = Metadata {
        experiment: config.experiment.as_str(),
        config_digest: &digest,
        artifact_version: ARTIFACT_VERSION,
        master_seed: config.master_seed,
        rng: "chacha8, stream = replica index",
        worker_threads: rayon::current_num_threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: files
            .iter()
            .map(|p| p.file_name().expect("file path").to_string_lossy().into_owned())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&metadata, text)?;
    Ok(RunOutput {
        digest,
        tables,
        files,
        metadata,
    })
}

/// File name of a table: `<experiment>[-<name>]-<digest8>.<ext>`.
pub fn table_file_name(config: &ExperimentConfig, digest: &str, table: &Table) -> String {
    let stem = if table.name.is_empty() {
        config.experiment.as_str().to_string()
    } else {
        format!("{}-{}", config.experiment.as_str(), table.name)
    };
    format!("{stem}-{}.{}", &digest[..8], config.format.extension())
}

fn write_table(config: &ExperimentConfig, digest: &str, table: &Table) -> Result<PathBuf> {
    if table.rows.is_empty() {
        return Err(Error::domain(format!("table `{}` has no records", table.name)));
    }
    let mut stamped = Table::new(&table.name, &[]);
    stamped.columns = table.columns.clone();
    stamped.columns.push("config_digest".into());
    for row in &table.rows {
        let mut row = row.clone();
        row.push(Cell::Text(digest.to_string()));
        stamped.rows.push(row);
    }
    let bytes = match config.format {
        super::OutputFormat::Csv => stamped.to_csv()?,
        super::OutputFormat::Json => stamped.to_json(),
    };
    let path = config.output_dir.join(table_file_name(config, digest, table));
    fs::write(&path, bytes)?;
    Ok(path)
}

/// Checks the output directory is writable and every grid point passes the
/// size guards and domain checks of the experiment.
pub fn preflight(config: &ExperimentConfig) -> Result<()> {
    check_writable(&config.output_dir)?;
    for &(n, k) in &config.grid {
        ChainParams::new(n, k).map_err(|e| Error::config("n_grid", e.to_string()))?;
        match config.experiment {
            ExperimentKind::Profile | ExperimentKind::Mixtime | ExperimentKind::Sweep => {
                let limit = match config.start_policy {
                    StartPolicy::AllStates => MAX_DENSE_N,
                    StartPolicy::StateZero => MAX_STATE_ZERO_N,
                };
                if n > limit {
                    return Err(Error::Infeasible(format!(
                        "exact {} profile with n = {n} exceeds the n <= {limit} guard; \
                         run the `coupling` experiment (Monte Carlo) or `lowerbound` (closed form) instead",
                        config.start_policy.as_str()
                    )));
                }
            }
            _ => {}
        }
        match config.experiment {
            ExperimentKind::Approx => {
                if k == 0 || k == n {
                    return Err(Error::config("k_values", format!("approx needs 0 < k < n, got k = {k}, n = {n}")));
                }
            }
            ExperimentKind::Profile | ExperimentKind::Mixtime | ExperimentKind::Sweep | ExperimentKind::Schedule
                if config.horizon.is_none() || config.experiment == ExperimentKind::Schedule =>
            {
                if n < 3 {
                    return Err(Error::config("n_grid", "the schedule needs n >= 3"));
                }
            }
            ExperimentKind::Coupling | ExperimentKind::Lowerbound if n < 3 => {
                return Err(Error::config("n_grid", "the schedule needs n >= 3"));
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(format!(".blmix-write-probe-{}", std::process::id()));
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Computes the tables of the experiment without writing them.
pub fn compute(config: &ExperimentConfig) -> Result<Vec<Table>> {
    match config.experiment {
        ExperimentKind::Profile => profile(config),
        ExperimentKind::Mixtime => mixtime(config).map(|t| vec![t]),
        ExperimentKind::Sweep => sweep(config).map(|t| vec![t]),
        ExperimentKind::Coupling => coupling(config).map(|t| vec![t]),
        ExperimentKind::Approx => approx(config).map(|t| vec![t]),
        ExperimentKind::Lowerbound => lowerbound(config).map(|t| vec![t]),
        ExperimentKind::Schedule => schedule(config).map(|t| vec![t]),
    }
}

fn schedule_of(config: &ExperimentConfig, n: u64, k: u64) -> Result<Schedule> {
    make_schedule(n, k, config.lambda)
}

fn horizon_of(config: &ExperimentConfig, n: u64, k: u64) -> Result<usize> {
    match config.horizon {
        Some(h) => Ok(h),
        None => Ok(schedule_of(config, n, k)?.default_horizon()),
    }
}

fn profile(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let mut d_table = Table::new("", &["n", "k", "lambda", "t", "d_of_t", "start_policy", "lost_mass"]);
    let mut tmix_table = Table::new("tmix", &["n", "k", "lambda", "epsilon", "t_mix", "start_policy"]);
    for &(n, k) in &config.grid {
        let params = ChainParams::new(n, k)?;
        let prof = distance_profile(params, horizon_of(config, n, k)?, config.start_policy)?;
        let policy = config.start_policy.as_str();
        for (t, &d) in prof.d_values.iter().enumerate() {
            d_table.push(vec![
                n.into(),
                k.into(),
                config.lambda.into(),
                t.into(),
                d.into(),
                policy.into(),
                prof.lost_mass.into(),
            ]);
        }
        for &eps in &config.epsilons {
            let tm = match t_mix(&prof, eps) {
                Ok(t) => Cell::from(t),
                Err(Error::HorizonExceeded { .. }) => Cell::Null,
                Err(e) => return Err(e),
            };
            tmix_table.push(vec![n.into(), k.into(), config.lambda.into(), eps.into(), tm, policy.into()]);
        }
    }
    Ok(vec![d_table, tmix_table])
}

fn exact_t_mix(config: &ExperimentConfig, params: ChainParams, horizon: usize, eps: &[f64]) -> Result<Vec<usize>> {
    let prof = distance_profile(params, horizon, config.start_policy)?;
    eps.iter().map(|&e| t_mix(&prof, e)).collect()
}

fn mixtime(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(
        "",
        &[
            "n", "k", "lambda", "epsilon", "t_mix", "t_n", "s_n", "bracket_lo", "bracket_hi", "in_bracket",
            "start_policy",
        ],
    );
    for &(n, k) in &config.grid {
        let sched = schedule_of(config, n, k)?;
        let horizon = config.horizon.unwrap_or_else(|| sched.default_horizon());
        let times = exact_t_mix(config, sched.params(), horizon, &config.epsilons)?;
        for (&eps, &tm) in config.epsilons.iter().zip(&times) {
            let (lo, hi) = sched.mixing_bracket(eps);
            let inside = lo <= tm as f64 && tm as f64 <= hi;
            table.push(vec![
                n.into(),
                k.into(),
                config.lambda.into(),
                eps.into(),
                tm.into(),
                sched.t_n.into(),
                sched.s_n.into(),
                lo.into(),
                hi.into(),
                inside.into(),
                config.start_policy.as_str().into(),
            ]);
        }
    }
    Ok(table)
}

/// Per `n` and per `ε` in the config: `t_mix(ε)`, `t_mix(1 − ε)`, their
/// ratio, and the window diagnostic `(t_mix(ε) − t_mix(1 − ε)) / t_mix(½)`.
fn sweep(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(
        "",
        &[
            "n",
            "k",
            "lambda",
            "epsilon",
            "t_mix_eps",
            "t_mix_one_minus_eps",
            "t_mix_half",
            "cutoff_ratio",
            "window_ratio",
            "t_n",
            "s_n",
            "in_bracket_eps",
            "in_bracket_one_minus_eps",
        ],
    );
    for &(n, k) in &config.grid {
        let sched = schedule_of(config, n, k)?;
        let horizon = config.horizon.unwrap_or_else(|| sched.default_horizon());
        let prof = distance_profile(sched.params(), horizon, config.start_policy)?;
        let half = t_mix(&prof, 0.5)?;
        for &eps in &config.epsilons {
            let a = t_mix(&prof, eps)?;
            let b = t_mix(&prof, 1.0 - eps)?;
            let within = |e: f64, t: usize| {
                let (lo, hi) = sched.mixing_bracket(e);
                lo <= t as f64 && t as f64 <= hi
            };
            table.push(vec![
                n.into(),
                k.into(),
                config.lambda.into(),
                eps.into(),
                a.into(),
                b.into(),
                half.into(),
                (a as f64 / b as f64).into(),
                ((a as f64 - b as f64) / half as f64).into(),
                sched.t_n.into(),
                sched.s_n.into(),
                within(eps, a).into(),
                within(1.0 - eps, b).into(),
            ]);
        }
    }
    Ok(table)
}

fn coupling(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(
        "",
        &[
            "n", "k", "lambda", "stopping", "x0", "y0", "r", "kappa", "replicas", "t", "survival", "ci_halfwidth",
            "bound",
        ],
    );
    for &(n, k) in &config.grid {
        let sched = schedule_of(config, n, k)?;
        let params = sched.params();
        let x0 = config.x0.unwrap_or(0);
        let y0 = config.y0.unwrap_or(n);
        let kind = config.stopping;
        let kappa = config.kappa_for(kind);
        let (estimate, r) = if kind == StoppingKind::TauCouple {
            let r = config.r.unwrap_or(1.0);
            let horizon = config.horizon.unwrap_or_else(|| sched.default_horizon());
            (survival_vs_bound(params, x0, y0, r, horizon, config.replicas, config.master_seed)?, Cell::from(r))
        } else {
            let spec = StoppingSpec::new(kind, config.r.unwrap_or(1.0), kappa, sched)?;
            (
                stopping_tail(params, &spec, x0, y0, config.horizon, config.replicas, config.master_seed)?,
                Cell::Null,
            )
        };
        let kappa_cell = if kind == StoppingKind::TauCouple { Cell::Null } else { kappa.into() };
        for (i, &t) in estimate.t_grid.iter().enumerate() {
            table.push(vec![
                n.into(),
                k.into(),
                config.lambda.into(),
                kind.as_str().into(),
                x0.into(),
                y0.into(),
                r.clone(),
                kappa_cell.clone(),
                config.replicas.into(),
                t.into(),
                estimate.empirical_survival[i].into(),
                estimate.ci_halfwidth[i].into(),
                estimate.theoretical_bound[i].into(),
            ]);
        }
    }
    Ok(table)
}

fn approx(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new(
        "",
        &[
            "n",
            "k",
            "lambda",
            "ell",
            "sigma",
            "tv_hyper_dnormal",
            "normalizer",
            "x0",
            "y0",
            "hyper_dnormal_sum",
            "shift_term",
            "center_term",
            "total_bound",
            "exact_tv",
        ],
    );
    for &(n, k) in &config.grid {
        let ell = n / 2;
        let ap = ApproxParams::new(n, k, ell)?;
        let x0 = config.x0.unwrap_or(n / 2);
        let y0 = config
            .y0
            .unwrap_or_else(|| (n / 2 + (n as f64).powf(0.25).floor() as u64).min(n));
        let d = one_step_tv(ChainParams::new(n, k)?, x0, y0)?;
        table.push(vec![
            n.into(),
            k.into(),
            config.lambda.into(),
            ell.into(),
            ap.sigma.into(),
            hyper_vs_dnormal_tv(n, k, ell)?.into(),
            normalization_constant(&ap).into(),
            x0.into(),
            y0.into(),
            d.hyper_dn_terms.iter().sum::<f64>().into(),
            d.shift_term.into(),
            d.center_term.into(),
            d.total_bound.into(),
            d.exact_tv.into(),
        ]);
    }
    Ok(table)
}

/// Certificate for `t = 0..=horizon`, the horizon defaulting to `⌈t_n⌉`.
fn lowerbound(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new("", &["n", "k", "lambda", "t", "t_n", "certificate"]);
    for &(n, k) in &config.grid {
        let sched = schedule_of(config, n, k)?;
        let horizon = config.horizon.unwrap_or(sched.t_n.ceil() as usize);
        for t in 0..=horizon {
            table.push(vec![
                n.into(),
                k.into(),
                config.lambda.into(),
                t.into(),
                sched.t_n.into(),
                lower_bound_certificate(sched.params(), t).into(),
            ]);
        }
    }
    Ok(table)
}

fn schedule(config: &ExperimentConfig) -> Result<Table> {
    let mut table = Table::new("", &["n", "k", "lambda", "delta_n", "t_n", "s_n", "p_lambda", "r_n"]);
    for &(n, k) in &config.grid {
        let s = schedule_of(config, n, k)?;
        table.push(vec![
            n.into(),
            k.into(),
            s.lambda.into(),
            s.delta_n.into(),
            s.t_n.into(),
            s.s_n.into(),
            s.p_lambda.into(),
            s.r_n.into(),
        ]);
    }
    Ok(table)
}
