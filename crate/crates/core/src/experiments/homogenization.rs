//! `u_eps -> <p, x> + t H(p)` for affine data as the cell size `eps` shrinks.
//! All runs share one physical grid, so smaller `eps` means fewer nodes per
//! cell.

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::field::{make_field, FieldSpec, Scaled};
use crate::hj::{solve_time_dependent_sl, Grid, InitialData, SlParams, TimeOptions};
use crate::homogenize::{effective_hamiltonian_time, CellConfig};
use crate::io::{ArtifactWriter, LinePlot, Series};
use crate::vecops::{dot, norm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizationParams {
    pub field: FieldSpec,
    pub p: [f64; 2],
    /// Decreasing cell sizes.
    pub epsilons: Vec<f64>,
    pub h: f64,
    pub horizon: f64,
    /// Half-width of the core where the error is measured (open grids only;
    /// periodic fields use one full period).
    pub core: f64,
    /// `H(p)`; estimated with the time-dependent cell solver when absent.
    pub h_bar: Option<f64>,
    pub cell_horizon: f64,
    pub sl: SlParams,
    pub seed: u64,
}

impl Default for HomogenizationParams {
    fn default() -> Self {
        HomogenizationParams {
            field: FieldSpec::cellular(2.0),
            p: [0.0, 1.0],
            epsilons: vec![0.25, 0.125, 0.0625],
            h: 1.0 / 256.0,
            horizon: 1.0,
            core: 0.5,
            h_bar: None,
            cell_horizon: 20.0,
            sl: SlParams::default(),
            seed: 0,
        }
    }
}

/// `sup |u_eps(., T) - <p, .> - T H|` over the core.
pub fn homogenization_error(params: &HomogenizationParams, eps: f64, h_bar: f64) -> Result<f64> {
    let field = make_field::<2>(&params.field, params.seed)?;
    let scaled = Scaled::new(&field, eps);
    let (grid, core) = match params.field.family.period() {
        Some(period) => {
            let cells = 1.0 / eps;
            if (cells - cells.round()).abs() > 1e-9 {
                return Err(Error::config("homogenization.epsilons must be reciprocals of integers"));
            }
            (Grid::periodic(params.h, 0.5 * period)?, 0.5 * period)
        }
        None => {
            let need = params.core + 2.0 * field.speed_bound() * params.horizon;
            (Grid::open(params.h, (need / params.h).ceil() * params.h)?, params.core)
        }
    };
    let opts = TimeOptions {
        core_half_width: Some(core),
        snapshots: Vec::new(),
    };
    let ts = solve_time_dependent_sl(&scaled, InitialData::Affine(params.p), params.horizon, &grid, &params.sl, &opts)?;
    let slice = &ts.slices[0];
    let t = ts.times[0];
    let mut err: f64 = 0.0;
    for i in 0..slice.grid.len() {
        if let Some(u) = slice.get(i) {
            err = err.max((u - dot(&params.p, &slice.grid.point(i)) - t * h_bar).abs());
        }
    }
    Ok(err)
}

pub fn run_homogenization(
    params: &HomogenizationParams,
    tol: &Tolerances,
    out: Option<&ArtifactWriter>,
) -> Result<ExperimentReport> {
    if params.epsilons.is_empty() || params.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("homogenization.epsilons must be decreasing"));
    }
    let (mut report, t0) = ExperimentReport::start("homogenization", params);
    let h_bar = match params.h_bar {
        Some(h) => h,
        None => {
            let cell = CellConfig {
                sl: params.sl.clone(),
                ..CellConfig::default()
            };
            effective_hamiltonian_time::<2>(&params.field, &[params.seed], params.p, params.cell_horizon, &cell)?
        }
    };
    let errors: Vec<f64> = params
        .epsilons
        .iter()
        .map(|&e| homogenization_error(params, e, h_bar))
        .collect::<Result<_>>()?;
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    report.verdicts.push(Verdict::check(
        "hom_convergence",
        decreasing,
        format!("errors {:.4?} at eps {:?}, H(p) = {h_bar:.4}", errors, params.epsilons),
    ));
    let bound = tol.homogenization_final * (1.0 + norm(&params.p));
    report.verdicts.push(Verdict::at_most(
        "hom_convergence",
        *errors.last().unwrap(),
        bound,
        format!("error at eps = {}", params.epsilons.last().unwrap()),
    ));
    if let Some(w) = out {
        let rows: Vec<Vec<f64>> = params.epsilons.iter().zip(&errors).map(|(e, r)| vec![*e, *r, h_bar]).collect();
        report.artifacts.push(w.csv("homogenization.csv", &["eps", "sup_error", "h_bar"], &rows)?.display().to_string());
        let mut plot = LinePlot::new("Homogenization error at t = T", "eps", "sup error")
            .with(Series::line("error", params.epsilons.iter().copied().zip(errors.iter().copied()).collect()));
        plot.log_x = true;
        report.artifacts.push(w.svg("homogenization.svg", &plot)?.display().to_string());
    }
    Ok(report.finish(t0))
}
