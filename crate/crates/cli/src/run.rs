//! Evaluation of an experiment grid in each requested mode.

use std::time::Instant;

use log::{debug, info};
use mmcov_core::analysis::{CoverageModel, CoverageQuery};
use mmcov_core::config::db_to_linear;
use mmcov_core::interference::{Mode, TableResolution};
use mmcov_core::montecarlo::{estimate_coverage, estimate_coverage_curve, estimate_rate, SimOptions};
use mmcov_core::Parallelism;

use crate::config::{Axis, ExperimentConfig, Metric, RunMode};
use crate::output::ResultRow;
use crate::CliError;

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn model(cfg: &ExperimentConfig, par: Parallelism) -> Result<CoverageModel, CliError> {
    let net = cfg.network()?;
    Ok(CoverageModel::build(&net, TableResolution::default(), par)?.with_tolerances(cfg.tolerances())?)
}

/// Rows of one analytic mode over the grid, in grid order.
fn analytic_rows(cfg: &ExperimentConfig, mode: Mode, run: RunMode, par: Parallelism) -> Result<Vec<ResultRow>, CliError> {
    let grid = &cfg.grid;
    let row = |axis_value: f64, value: f64, wall_ms: f64| ResultRow {
        axis_value,
        mode: run,
        value,
        ci95: None,
        wall_ms,
    };
    match (cfg.metric, cfg.axis) {
        (Metric::Coverage, Axis::BetaDb) => {
            // one exponent profile serves the whole threshold grid; its
            // cost is spread evenly over the rows
            let t = Instant::now();
            let m = model(cfg, par)?;
            let profile = m.profile(cfg.delta * cfg.radius, mode)?;
            let setup = elapsed_ms(t) / grid.len() as f64;
            grid.iter()
                .map(|&b| {
                    let t = Instant::now();
                    let p = profile.coverage(db_to_linear(b))?.p_cover;
                    Ok(row(b, p, setup + elapsed_ms(t)))
                })
                .collect()
        }
        (metric, Axis::Delta) => {
            let t = Instant::now();
            let m = model(cfg, par)?;
            let setup = elapsed_ms(t) / grid.len() as f64;
            grid.iter()
                .map(|&delta| {
                    let t = Instant::now();
                    let d = delta * cfg.radius;
                    let v = match metric {
                        Metric::Coverage => m.coverage(&CoverageQuery::new(db_to_linear(cfg.beta_db), d, mode))?.p_cover,
                        Metric::Rate => m.ergodic_rate(d, mode)?,
                    };
                    debug!("{run} delta = {delta}: {v}");
                    Ok(row(delta, v, setup + elapsed_ms(t)))
                })
                .collect()
        }
        (metric, axis) => grid
            .iter()
            .map(|&x| {
                let t = Instant::now();
                let point = cfg.at(axis, x);
                let m = model(&point, par)?;
                let d = point.delta * point.radius;
                let v = match metric {
                    Metric::Coverage => m.coverage(&CoverageQuery::new(db_to_linear(point.beta_db), d, mode))?.p_cover,
                    Metric::Rate => m.ergodic_rate(d, mode)?,
                };
                debug!("{run} {axis} = {x}: {v}");
                Ok(row(x, v, elapsed_ms(t)))
            })
            .collect(),
    }
}

/// Simulator rows over the grid. Every grid point reuses the seed, so the
/// curve is built from common random numbers.
fn mc_rows(cfg: &ExperimentConfig, par: Parallelism) -> Result<Vec<ResultRow>, CliError> {
    let opts = SimOptions {
        idle: cfg.idle,
        par,
        ..SimOptions::default()
    };
    let row = |axis_value: f64, est: mmcov_core::montecarlo::SimEstimate, wall_ms: f64| ResultRow {
        axis_value,
        mode: RunMode::Mc,
        value: est.mean,
        ci95: Some(est.half_width_95),
        wall_ms,
    };
    if cfg.metric == Metric::Coverage && cfg.axis == Axis::BetaDb {
        let t = Instant::now();
        let net = cfg.network()?;
        let betas: Vec<f64> = cfg.grid.iter().map(|&b| db_to_linear(b)).collect();
        let est = estimate_coverage_curve(&net, cfg.delta * cfg.radius, &betas, cfg.trials, cfg.seed, &opts)?;
        let wall = elapsed_ms(t) / cfg.grid.len() as f64;
        return Ok(cfg.grid.iter().zip(est).map(|(&b, e)| row(b, e, wall)).collect());
    }
    cfg.grid
        .iter()
        .map(|&x| {
            let t = Instant::now();
            let point = cfg.at(cfg.axis, x);
            let net = point.network()?;
            let d = point.delta * point.radius;
            let est = match cfg.metric {
                Metric::Coverage => estimate_coverage(&net, d, db_to_linear(point.beta_db), cfg.trials, cfg.seed, &opts)?,
                Metric::Rate => estimate_rate(&net, d, cfg.trials, cfg.seed, &opts)?,
            };
            Ok(row(x, est, elapsed_ms(t)))
        })
        .collect()
}

/// All rows of the experiment, ordered by grid point and then by mode.
pub fn evaluate(cfg: &ExperimentConfig, par: Parallelism) -> Result<Vec<ResultRow>, CliError> {
    cfg.validate()?;
    let mut per_mode = Vec::with_capacity(cfg.modes.len());
    for &run in &cfg.modes {
        let t = Instant::now();
        let rows = match run.analytic() {
            Some(mode) => analytic_rows(cfg, mode, run, par)?,
            None => mc_rows(cfg, par)?,
        };
        info!("{run}: {} points in {:.1} s", rows.len(), t.elapsed().as_secs_f64());
        per_mode.push(rows);
    }
    Ok((0..cfg.grid.len())
        .flat_map(|i| per_mode.iter().map(move |rows| rows[i].clone()))
        .collect())
}

/// Largest |analytic − mc| over the grid and the axis value where it occurs.
pub fn max_gap(rows: &[ResultRow]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for a in rows.iter().filter(|r| r.mode == RunMode::Analytic) {
        if let Some(m) = rows.iter().find(|r| r.mode == RunMode::Mc && r.axis_value == a.axis_value) {
            let gap = (a.value - m.value).abs();
            if best.is_none_or(|(g, _)| gap > g) {
                best = Some((gap, a.axis_value));
            }
        }
    }
    best
}
