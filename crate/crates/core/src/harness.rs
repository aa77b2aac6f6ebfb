//! Monte Carlo sweeps over user or packet counts.
//!
//! Every trial draws one topology and one feedback matrix and feeds the same
//! instance to every configured scheduler. Seeds are derived as
//! master -> sweep value -> trial.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mis::{MisSolver, DEFAULT_VERTEX_CEILING};
use crate::netcam_wp::completion_bounds;
use crate::schedule::SchedulerKind;
use crate::session::{generate_feedback, ErasureSpec, DEFAULT_ERASURE_PROBABILITY};
use crate::topology::{generate, TopologyKind, TopologySpec};

pub const DEFAULT_TRIALS: usize = 500;

pub const CSV_HEADER: [&str; 10] = [
    "sweep_value",
    "scheduler",
    "mean_T",
    "std_T",
    "min_T",
    "max_T",
    "trials",
    "excluded",
    "lower_bound_mean",
    "upper_bound_mean",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NUsers,
    NPackets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErasureConfig {
    pub erasure_probability: f64,
}

impl Default for ErasureConfig {
    fn default() -> Self {
        Self {
            erasure_probability: DEFAULT_ERASURE_PROBABILITY,
        }
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}

fn default_ceiling() -> usize {
    DEFAULT_VERTEX_CEILING
}

/// Sweep description, read from TOML:
///
/// ```toml
/// sweep = "n_packets"
/// values = [10, 15, 20]
/// fixed = 10
/// trials = 500
/// schedulers = ["opt-idnc", "netcam-wp"]
/// master_seed = 7
///
/// [topology]
/// kind = "random_uniform"
/// edge_probability = 0.3
///
/// [erasure]
/// erasure_probability = 0.25
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep: SweepVariable,
    pub values: Vec<usize>,
    /// The user count when sweeping packets, and vice versa.
    pub fixed: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub topology: TopologyKind,
    #[serde(default)]
    pub erasure: ErasureConfig,
    #[serde(default = "default_ceiling")]
    pub vertex_ceiling: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trial count must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidSpec("sweep value list is empty".into()));
        }
        if self.values.contains(&0) || self.fixed == 0 {
            return Err(Error::InvalidSpec(
                "user and packet counts must be positive".into(),
            ));
        }
        if self.schedulers.is_empty() {
            return Err(Error::InvalidSpec("scheduler list is empty".into()));
        }
        TopologySpec {
            n_users: 1,
            kind: self.topology,
            seed: 0,
        }
        .validate()?;
        if !(0.0..=1.0).contains(&self.erasure.erasure_probability) {
            return Err(Error::InvalidSpec(format!(
                "erasure probability {} outside [0, 1]",
                self.erasure.erasure_probability
            )));
        }
        Ok(())
    }

    /// `(n_users, n_packets)` at a sweep point.
    pub fn dimensions(&self, value: usize) -> (usize, usize) {
        match self.sweep {
            SweepVariable::NUsers => (value, self.fixed),
            SweepVariable::NPackets => (self.fixed, value),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(parent: u64, child: u64) -> u64 {
    splitmix64(parent ^ splitmix64(child))
}

pub fn trial_seed(master: u64, sweep_value: usize, trial: usize) -> u64 {
    mix(mix(master, sweep_value as u64), trial as u64)
}

/// Seeds for the topology and feedback draws of one trial.
pub fn instance_seeds(trial_seed: u64) -> (u64, u64) {
    (mix(trial_seed, 1), mix(trial_seed, 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_value: usize,
    pub trial: usize,
    pub seed: u64,
    pub lower_bound: usize,
    pub upper_bound: usize,
    /// Completion time per scheduler, in config order; `None` when the
    /// scheduler refused the instance on capacity grounds.
    pub completion: Vec<Option<usize>>,
}

/// Draws and solves one trial.
pub fn run_trial(
    config: &ExperimentConfig,
    sweep_value: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let (n_users, n_packets) = config.dimensions(sweep_value);
    let seed = trial_seed(config.master_seed, sweep_value, trial);
    let (topo_seed, erasure_seed) = instance_seeds(seed);
    let c = generate(&TopologySpec {
        n_users,
        kind: config.topology,
        seed: topo_seed,
    })?;
    let state = generate_feedback(
        n_users,
        n_packets,
        &ErasureSpec {
            erasure_probability: config.erasure.erasure_probability,
            seed: erasure_seed,
        },
    )?;
    let bounds = completion_bounds(&state, &c)?;
    let solver = MisSolver::new(config.vertex_ceiling);
    let completion = config
        .schedulers
        .iter()
        .map(|k| match k.run(&state, &c, &solver) {
            Ok(r) => Ok(Some(r.completion_time)),
            Err(Error::Capacity { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialRecord {
        sweep_value,
        trial,
        seed,
        lower_bound: bounds.lower,
        upper_bound: bounds.upper,
        completion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_value: usize,
    pub scheduler: SchedulerKind,
    pub mean_t: Option<f64>,
    pub std_t: Option<f64>,
    pub min_t: Option<usize>,
    pub max_t: Option<usize>,
    pub trials: usize,
    pub excluded: usize,
    pub lower_bound_mean: f64,
    pub upper_bound_mean: f64,
    /// Heuristic rows only: trials outside `[lower, upper]`.
    pub bound_violations: Option<usize>,
    /// Heuristic rows only: mean of `upper - T`.
    pub mean_bound_gap: Option<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentSummary {
    pub fn row(&self, sweep_value: usize, scheduler: SchedulerKind) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.scheduler == scheduler)
    }

    pub fn bound_violations(&self) -> usize {
        self.rows.iter().filter_map(|r| r.bound_violations).sum()
    }
}

/// Runs the sweep on the global rayon pool.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .values
        .iter()
        .flat_map(|&v| (0..config.trials).map(move |t| (v, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(v, t)| run_trial(config, v, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, &records))
}

/// Runs the sweep on a dedicated pool of `jobs` threads.
pub fn run_trials_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| run_trials(config))
}

fn mean(xs: &[usize]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().sum::<usize>() as f64 / xs.len() as f64)
}

fn sample_std(xs: &[usize]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Aggregates trial records. Input order does not matter.
pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentSummary {
    let mut rows = Vec::new();
    for &value in &config.values {
        let mut here: Vec<&TrialRecord> =
            records.iter().filter(|r| r.sweep_value == value).collect();
        here.sort_by_key(|r| r.trial);
        here.dedup_by_key(|r| r.trial);
        let lower: Vec<usize> = here.iter().map(|r| r.lower_bound).collect();
        let upper: Vec<usize> = here.iter().map(|r| r.upper_bound).collect();
        for (k, &scheduler) in config.schedulers.iter().enumerate() {
            let done: Vec<(usize, &TrialRecord)> = here
                .iter()
                .filter_map(|r| r.completion[k].map(|t| (t, *r)))
                .collect();
            let ts: Vec<usize> = done.iter().map(|&(t, _)| t).collect();
            let heuristic = scheduler == SchedulerKind::NetcamWp;
            let gaps: Vec<f64> = done
                .iter()
                .map(|&(t, r)| r.upper_bound as f64 - t as f64)
                .collect();
            rows.push(SummaryRow {
                sweep_value: value,
                scheduler,
                mean_t: mean(&ts),
                std_t: sample_std(&ts),
                min_t: ts.iter().copied().min(),
                max_t: ts.iter().copied().max(),
                trials: here.len(),
                excluded: here.len() - ts.len(),
                lower_bound_mean: mean(&lower).unwrap_or(0.0),
                upper_bound_mean: mean(&upper).unwrap_or(0.0),
                bound_violations: heuristic.then(|| {
                    done.iter()
                        .filter(|&&(t, r)| t < r.lower_bound || t > r.upper_bound)
                        .count()
                }),
                mean_bound_gap: if heuristic && !gaps.is_empty() {
                    Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
                } else {
                    None
                },
                seeds: here.iter().map(|r| r.seed).collect(),
            });
        }
    }
    ExperimentSummary {
        config: config.clone(),
        rows,
    }
}

fn fmt_opt_f(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn fmt_opt_u(x: Option<usize>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn to_csv_string(summary: &ExperimentSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &summary.rows {
        w.write_record([
            r.sweep_value.to_string(),
            r.scheduler.id().to_string(),
            fmt_opt_f(r.mean_t),
            fmt_opt_f(r.std_t),
            fmt_opt_u(r.min_t),
            fmt_opt_u(r.max_t),
            r.trials.to_string(),
            r.excluded.to_string(),
            format!("{:.6}", r.lower_bound_mean),
            format!("{:.6}", r.upper_bound_mean),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

pub fn to_json_string(summary: &ExperimentSummary) -> Result<String> {
    serde_json::to_string_pretty(summary).map_err(|e| Error::Serde(e.to_string()))
}

pub fn from_json_str(text: &str) -> Result<ExperimentSummary> {
    serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Static line chart of mean completion time against the sweep value, one
/// polyline per scheduler.
pub fn to_svg_string(summary: &ExperimentSummary) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 170.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let xs: Vec<f64> = summary.config.values.iter().map(|&v| v as f64).collect();
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let y_max = summary
        .rows
        .iter()
        .filter_map(|r| r.mean_t)
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let sx = |x: f64| {
        if x_max > x_min {
            left + (x - x_min) / (x_max - x_min) * pw
        } else {
            left + pw / 2.0
        }
    };
    let sy = |y: f64| top + ph - y / y_max * ph;

    let axis_label = match summary.config.sweep {
        SweepVariable::NUsers => "number of users N",
        SweepVariable::NPackets => "number of packets M",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#,
        y0 = top + ph,
        x1 = left + pw
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{y0}" stroke="black"/>"#,
        y0 = top + ph
    );
    for &x in &xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            sx(x),
            top + ph + 16.0
        );
    }
    for i in 0..=4 {
        let y = y_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#,
            left - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{axis_label}</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">mean completion time</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (k, scheduler) in summary.config.schedulers.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = summary
            .rows
            .iter()
            .filter(|r| r.scheduler == *scheduler)
            .filter_map(|r| {
                r.mean_t
                    .map(|m| format!("{:.2},{:.2}", sx(r.sweep_value as f64), sy(m)))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            scheduler.id()
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_csv(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(summary)?)?;
    Ok(())
}

pub fn write_json(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    fs::write(path, to_json_string(summary)?)?;
    Ok(())
}

pub fn write_svg(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    fs::write(path, to_svg_string(summary))?;
    Ok(())
}
