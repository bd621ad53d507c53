use std::fmt;

use rayon::prelude::*;

use super::{run_on, RunConfig};
use crate::error::{Error, Result};
use crate::schedules::StepSizeSchedule;

/// Learning rates `{1, 2.5, 5} x 10^i` for `i` in `i_min..=i_max`, ascending.
/// Each value is parsed from its decimal literal so `2.5e-4` is exactly the
/// double nearest to that literal.
pub fn grid_lrs(i_min: i32, i_max: i32) -> Result<Vec<f64>> {
    if i_min > i_max {
        return Err(Error::config(format!(
            "empty exponent range {i_min}..={i_max}"
        )));
    }
    let mut out = Vec::new();
    for i in i_min..=i_max {
        for m in ["1", "2.5", "5"] {
            let lr = format!("{m}e{i}")
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            out.push(lr);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lr: f64,
    pub weight_decay: f64,
    /// Final mean suboptimality; infinite when any seed diverged.
    pub final_subopt: f64,
    pub final_two_se: f64,
    pub diverged_seeds: usize,
    pub best: bool,
}

/// Sweep results sorted by final mean suboptimality, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub name: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.best)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "lr",
            "weight_decay",
            "final_subopt",
            "final_2se",
            "diverged_seeds",
            "best",
        ];
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.lr.to_string(),
                r.weight_decay.to_string(),
                r.final_subopt.to_string(),
                r.final_two_se.to_string(),
                r.diverged_seeds.to_string(),
                r.best.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sweep {}", self.name)?;
        writeln!(
            f,
            "{:>10} {:>10} {:>14} {:>12} {:>9}",
            "lr", "decay", "final subopt", "2se", "diverged"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>10} {:>10} {:>14.6e} {:>12.3e} {:>9}{}",
                r.lr,
                r.weight_decay,
                r.final_subopt,
                r.final_two_se,
                r.diverged_seeds,
                if r.best { "  <- best" } else { "" }
            )?;
        }
        Ok(())
    }
}

/// Runs `base` at every grid learning rate crossed with every weight decay.
/// An empty `decays` keeps the base config's decay.
pub fn grid_sweep(base: &RunConfig, i_min: i32, i_max: i32, decays: &[f64]) -> Result<SweepTable> {
    let lrs = grid_lrs(i_min, i_max)?;
    let schedule = match &base.schedule {
        super::ScheduleSpec::Fixed(s) => s.clone(),
        super::ScheduleSpec::Theorem1Optimal { .. } => {
            return Err(Error::config(
                "a sweep needs a fixed step-size schedule to rescale",
            ))
        }
    };
    let decays = if decays.is_empty() {
        vec![base.optimizer.weight_decay()]
    } else {
        decays.to_vec()
    };
    let mut cells = Vec::with_capacity(lrs.len() * decays.len());
    for &lr in &lrs {
        for &wd in &decays {
            let mut cfg = base.clone();
            cfg.schedule =
                super::ScheduleSpec::Fixed(StepSizeSchedule::with_base_lr(&schedule, lr));
            cfg.optimizer = base.optimizer.with_weight_decay(wd)?;
            cells.push((lr, wd, cfg));
        }
    }
    let problem = base.problem.build()?;
    let mut rows = cells
        .into_par_iter()
        .map(|(lr, wd, cfg)| {
            let out = run_on(&cfg, problem.clone())?;
            Ok(SweepRow {
                lr,
                weight_decay: wd,
                final_subopt: out.final_subopt(),
                final_two_se: out.final_row().map_or(f64::INFINITY, |r| r.subopt_two_se()),
                diverged_seeds: out.records.iter().filter(|r| r.diverged()).count(),
                best: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.final_subopt
            .total_cmp(&b.final_subopt)
            .then(a.lr.total_cmp(&b.lr))
            .then(a.weight_decay.total_cmp(&b.weight_decay))
    });
    if let Some(first) = rows.first_mut() {
        first.best = true;
    }
    Ok(SweepTable {
        name: base.name.clone(),
        rows,
    })
}
