//! Seeded experiment runs, cross-seed aggregation, CSV output and the
//! learning-rate grid sweep.

mod config;
mod sweep;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{OptimizerSpec, RunConfig, ScheduleSpec, Seeds};
pub use sweep::{grid_lrs, grid_sweep, SweepRow, SweepTable};

use crate::error::{Error, Result};
use crate::numerics::{ParamVector, Rng};
use crate::optimizers::StepControl;
use crate::problems::{suboptimality, Problem};
use crate::schedules::{
    lambda_weight, momentum_coeff, step_size, MomentumSchedule, StepSizeSchedule,
};

/// Fixed CSV header.
pub const CSV_HEADER: [&str; 7] = ["k", "loss", "subopt", "grad_inf", "gamma", "lambda", "seed"];

/// A run is halted once suboptimality exceeds this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub k: u64,
    /// `f(x_k, xi_k)` on the sample drawn at step `k`.
    pub loss: f64,
    /// Exact `F(x_k) - f*`.
    pub subopt: f64,
    pub grad_inf: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Seconds since the run started; not part of the CSV.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub rows: Vec<RunRow>,
    /// Why the run stopped early, if it did.
    pub halted: Option<String>,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        self.halted.is_some()
    }
}

/// Mean and two standard errors of each metric across the seeds that reached `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub k: u64,
    pub seeds: usize,
    pub mean: [f64; 5],
    pub two_se: [f64; 5],
}

impl AggregateRow {
    pub fn subopt_mean(&self) -> f64 {
        self.mean[1]
    }

    pub fn subopt_two_se(&self) -> f64 {
        self.two_se[1]
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub schedule: StepSizeSchedule,
    pub records: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
}

impl RunOutput {
    pub fn any_diverged(&self) -> bool {
        self.records.iter().any(RunRecord::diverged)
    }

    /// The aggregate row at the last step.
    pub fn final_row(&self) -> Option<&AggregateRow> {
        self.aggregate.last().filter(|r| r.k == self.config.steps)
    }

    /// Final mean suboptimality, or infinity when any seed stopped early.
    pub fn final_subopt(&self) -> f64 {
        match self.final_row() {
            Some(r) if !self.any_diverged() => r.subopt_mean(),
            _ => f64::INFINITY,
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_error)?;
        for rec in &self.records {
            let seed = rec.seed.to_string();
            for r in &rec.rows {
                let values = [r.loss, r.subopt, r.grad_inf, r.gamma, r.lambda];
                write_row(&mut w, r.k, &values, &seed)?;
            }
        }
        for a in &self.aggregate {
            write_row(&mut w, a.k, &a.mean, "mean")?;
        }
        for a in &self.aggregate {
            write_row(&mut w, a.k, &a.two_se, "2se")?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn write_row(w: &mut csv::Writer<Vec<u8>>, k: u64, values: &[f64; 5], seed: &str) -> Result<()> {
    let mut fields = Vec::with_capacity(7);
    fields.push(k.to_string());
    fields.extend(values.iter().map(|v| v.to_string()));
    fields.push(seed.to_string());
    w.write_record(&fields).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Runs every seed of `config` in parallel. Records come back in seed order
/// and do not depend on scheduling.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let problem = config.problem.build()?;
    run_on(config, problem)
}

/// [`run`] on an already built problem, which must match `config.problem`.
pub fn run_on(config: &RunConfig, problem: Arc<dyn Problem>) -> Result<RunOutput> {
    config.validate(problem.as_ref())?;
    let schedule = config.resolve_schedule(problem.as_ref())?;
    let records = config
        .seeds
        .to_vec()
        .into_par_iter()
        .map(|seed| run_seed(config, problem.as_ref(), &schedule, seed))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&records);
    Ok(RunOutput {
        config: config.clone(),
        schedule,
        records,
        aggregate,
    })
}

fn run_seed(
    config: &RunConfig,
    problem: &dyn Problem,
    schedule: &StepSizeSchedule,
    seed: u64,
) -> Result<RunRecord> {
    let start = Instant::now();
    let mut rng = Rng::new(seed);
    let x0 = ParamVector::filled(problem.dim(), config.x0);
    let mut opt = config.optimizer.build(x0, problem, &config.momentum)?;
    let momentum: &MomentumSchedule = &config.momentum;
    let mut rows = Vec::new();
    let mut halted = None;
    let mut initial = None;

    for k in 0..=config.steps {
        let xi = problem.sample(&mut rng);
        let x = opt.iterate();
        if !x.is_finite() {
            halted = Some(format!("non-finite iterate at k={k}"));
            break;
        }
        let g = problem.grad(x, xi)?;
        let gamma = step_size(schedule, k);
        if k % config.record_every == 0 || k == config.steps {
            let subopt = suboptimality(problem, x)?;
            let base = *initial.get_or_insert(subopt);
            rows.push(RunRow {
                k,
                loss: problem.loss(x, xi)?,
                subopt,
                grad_inf: g.linf(),
                gamma,
                lambda: lambda_weight(gamma, k),
                wall_time: start.elapsed().as_secs_f64(),
            });
            if !subopt.is_finite() || subopt > DIVERGENCE_FACTOR * base.max(f64::MIN_POSITIVE) {
                halted = Some(format!(
                    "suboptimality {subopt} at k={k} exceeds {DIVERGENCE_FACTOR} x initial"
                ));
                break;
            }
        }
        if k == config.steps {
            break;
        }
        let ctl = StepControl {
            gamma,
            gamma_next: step_size(schedule, k + 1),
            c_next: momentum_coeff(momentum, k),
        };
        if let Err(e) = opt.step(&g, &ctl) {
            halted = Some(format!("step {k} failed: {e}"));
            break;
        }
    }
    Ok(RunRecord { seed, rows, halted })
}

/// Per-`k` mean and `2 * sd / sqrt(n)` (sample standard deviation; zero for a
/// single seed) over the seeds that recorded that `k`.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut ks: Vec<u64> = records
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.k))
        .collect();
    ks.sort_unstable();
    ks.dedup();
    let mut cursors = vec![0usize; records.len()];
    ks.into_iter()
        .map(|k| {
            let mut samples: Vec<[f64; 5]> = Vec::new();
            for (rec, cur) in records.iter().zip(cursors.iter_mut()) {
                if let Some(row) = rec.rows.get(*cur).filter(|row| row.k == k) {
                    samples.push([row.loss, row.subopt, row.grad_inf, row.gamma, row.lambda]);
                    *cur += 1;
                }
            }
            let n = samples.len() as f64;
            let mut mean = [0.0; 5];
            let mut two_se = [0.0; 5];
            for m in 0..5 {
                mean[m] = samples.iter().map(|s| s[m]).sum::<f64>() / n;
                if samples.len() > 1 {
                    let var = samples
                        .iter()
                        .map(|s| (s[m] - mean[m]).powi(2))
                        .sum::<f64>()
                        / (n - 1.0);
                    two_se[m] = 2.0 * (var / n).sqrt();
                }
            }
            AggregateRow {
                k,
                seeds: samples.len(),
                mean,
                two_se,
            }
        })
        .collect()
}
