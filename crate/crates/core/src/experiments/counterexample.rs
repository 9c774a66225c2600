//! Heavy-tailed shear: without moment conditions the time constant can be
//! infinite. `delta` is the distance from the origin to the nearest point
//! where `|V2| <= 1`; any trip to the unfavourable vertical neighbour takes at
//! least `delta`, and `delta` has tail index `gap_shape - 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{frozen, stream_seed, ExperimentReport, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::field::{ensemble_seed, CounterexampleShear, GapLaw, VelocityField};
use crate::homogenize::{solve_trusted, MinTimeConfig, MinTimeMethod};
use crate::io::{ArtifactWriter, LinePlot, Series};
use crate::stats::{hill_tail_index, prefix_means};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleParams {
    /// The first shape is the heavy-tailed case, the second the control.
    pub gap_shapes: [f64; 2],
    /// Increasing prefix lengths; the last is the sample size.
    pub sizes: Vec<usize>,
    pub window: f64,
    /// Hill window as a fraction of the sample.
    pub hill_fraction: f64,
    /// Realizations (in sampling order, with `delta <= graph_max_delta`)
    /// re-checked with a grid minimal-time solve.
    pub graph_checks: usize,
    pub graph_max_delta: f64,
    pub graph_h: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams {
            gap_shapes: [1.5, 3.0],
            sizes: vec![100, 1000, 10_000],
            window: 64.0,
            hill_fraction: frozen::HILL_FRACTION,
            graph_checks: 4,
            graph_max_delta: 2.0,
            graph_h: 1.0 / 16.0,
        }
    }
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.windows(2).any(|w| w[1] <= w[0]) || self.sizes[0] == 0 {
            return Err(Error::config("counterexample.sizes must be positive and strictly increasing"));
        }
        if !(self.hill_fraction > 0.0 && self.hill_fraction < 0.5) {
            return Err(Error::config("counterexample.hill_fraction must lie in (0, 0.5)"));
        }
        for s in self.gap_shapes {
            GapLaw::pareto(s).validate()?;
        }
        Ok(())
    }
}

/// `V = (0, V2(x1))` of one sampled shear.
pub struct ShearView<'a>(pub &'a CounterexampleShear);

impl VelocityField<2> for ShearView<'_> {
    fn velocity(&self, x: &[f64; 2]) -> [f64; 2] {
        [0.0, self.0.v2(x[0])]
    }
    fn speed_bound(&self) -> f64 {
        2.0
    }
    fn lipschitz(&self) -> f64 {
        CounterexampleShear::LIPSCHITZ
    }
}

/// Samples for one gap shape: `delta` and the certified lower bounds.
#[derive(Clone, Debug)]
pub struct CounterexampleSample {
    pub gap_shape: f64,
    pub deltas: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub shears: Vec<CounterexampleShear>,
}

pub fn sample_counterexample(shape: f64, n: usize, window: f64, master: u64, keep: usize) -> Result<CounterexampleSample> {
    let stream = stream_seed(master, &format!("counterexample/{shape}"));
    let mut out = CounterexampleSample {
        gap_shape: shape,
        deltas: Vec::with_capacity(n),
        bounds: Vec::with_capacity(n),
        shears: Vec::new(),
    };
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(ensemble_seed(stream, i as u64));
        let s = CounterexampleShear::sample_covering(GapLaw::pareto(shape), window, &mut rng)?;
        out.deltas.push(s.delta());
        out.bounds.push(s.theta_lower_bounds());
        if i < keep {
            out.shears.push(s);
        }
    }
    Ok(out)
}

/// `(delta, theta(0, e2), theta(0, -e2))` from the graph solver.
fn graph_theta(shear: &CounterexampleShear, h: f64) -> Result<(f64, f64)> {
    let view = ShearView(shear);
    let cfg = MinTimeConfig {
        h,
        method: MinTimeMethod::Graph { rho: 6 },
        half_width: None,
    };
    let targets = [[0.0, 1.0], [0.0, -1.0]];
    let solve = solve_trusted(&view, view.speed_bound() + 1.0, &targets, 1.0, &cfg)?;
    let at = |y: &[f64; 2]| solve.theta.interpolate(y).unwrap_or(f64::INFINITY);
    Ok((at(&targets[0]), at(&targets[1])))
}

pub fn run_counterexample(
    params: &CounterexampleParams,
    tol: &Tolerances,
    master: u64,
    out: Option<&ArtifactWriter>,
) -> Result<ExperimentReport> {
    params.validate()?;
    let (mut report, t0) = ExperimentReport::start("counterexample", params);
    let n = *params.sizes.last().unwrap();
    let keep = 200.min(n);
    let samples = params
        .gap_shapes
        .iter()
        .map(|&s| sample_counterexample(s, n, params.window, master, keep))
        .collect::<Result<Vec<_>>>()?;
    let (heavy, light) = (&samples[0], &samples[1]);
    let k = ((params.hill_fraction * n as f64) as usize).max(2);

    let hill = hill_tail_index(&heavy.deltas, k)?;
    let target = heavy.gap_shape - 1.0;
    report.verdicts.push(Verdict::in_open_range(
        "cex_tail",
        hill,
        tol.hill_low,
        tol.hill_high,
        format!("Hill index of delta, k={k} of {n}, gap shape {} (tail index {target})", heavy.gap_shape),
    ));

    let means = prefix_means(&heavy.deltas, &params.sizes);
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    report.verdicts.push(Verdict::check(
        "cex_growth",
        increasing,
        format!("running means of delta at n={:?}: {:.4?}", params.sizes, means),
    ));
    report.verdicts.push(Verdict::at_least(
        "cex_growth",
        means[means.len() - 1] / means[0],
        tol.growth_factor,
        format!("mean(n={}) / mean(n={})", n, params.sizes[0]),
    ));

    let light_means = prefix_means(&light.deltas, &params.sizes);
    let l = light_means.len();
    report.verdicts.push(Verdict::within(
        "cex_control",
        light_means[l - 1] / light_means[l - 2],
        1.0,
        tol.stabilization_rel,
        format!("gap shape {}: mean(n={n}) / mean(n={})", light.gap_shape, params.sizes[l - 2]),
    ));

    // the certified bounds: (delta + 1/3) on the unfavourable side
    let mut worst: f64 = f64::INFINITY;
    for s in &samples {
        for (d, (up, down)) in s.deltas.iter().zip(&s.bounds) {
            worst = worst.min(up + down - d);
        }
    }
    report.verdicts.push(Verdict::at_least(
        "cex_bound",
        worst,
        0.0,
        format!("min over {} realizations of the trajectory bound theta(e2) + theta(-e2) - delta", 2 * n),
    ));

    let mut graph_rows = Vec::new();
    for (i, shear) in heavy.shears.iter().enumerate() {
        if graph_rows.len() >= params.graph_checks {
            break;
        }
        let d = heavy.deltas[i];
        if d > params.graph_max_delta {
            continue;
        }
        let (up, down) = graph_theta(shear, params.graph_h)?;
        let (lb_up, lb_down) = heavy.bounds[i];
        graph_rows.push(vec![i as f64, d, up, down, lb_up, lb_down]);
        // the graph only overestimates travel times, up to quadrature error
        let slack = 2.0 * params.graph_h;
        report.verdicts.push(Verdict::at_least(
            "cex_bound",
            up.min(f64::MAX) + down.min(f64::MAX) - d,
            0.0,
            format!("realization {i}: graph theta(e2) {up:.4} + theta(-e2) {down:.4} against delta {d:.4}"),
        ));
        report.verdicts.push(Verdict::at_least(
            "cex_bound",
            (up - lb_up).min(down - lb_down),
            -slack,
            format!("realization {i}: graph values against the certified bounds ({lb_up:.4}, {lb_down:.4})"),
        ));
    }

    if let Some(w) = out {
        let grid = log_grid(n);
        let mut rows = Vec::new();
        let mut series = Vec::new();
        let runs: Vec<Vec<f64>> = samples.iter().map(|s| prefix_means(&s.deltas, &grid)).collect();
        for (j, &m) in grid.iter().enumerate() {
            rows.push(vec![m as f64, runs[0][j], runs[1][j]]);
        }
        for (s, r) in samples.iter().zip(&runs) {
            series.push(Series::line(
                format!("gap shape {}", s.gap_shape),
                grid.iter().zip(r).map(|(m, v)| (*m as f64, *v)).collect(),
            ));
        }
        let h0 = format!("mean_delta_shape_{}", samples[0].gap_shape);
        let h1 = format!("mean_delta_shape_{}", samples[1].gap_shape);
        report.artifacts.push(w.csv("counterexample_running_mean.csv", &["n", &h0, &h1], &rows)?.display().to_string());
        let mut plot = LinePlot::new("Running mean of delta", "n", "mean delta");
        plot.log_x = true;
        for s in series {
            plot = plot.with(s);
        }
        report.artifacts.push(w.svg("counterexample_running_mean.svg", &plot)?.display().to_string());
        let hill_rows: Vec<Vec<f64>> = [0.01, 0.02, 0.05, 0.1]
            .iter()
            .filter_map(|&f| {
                let kk = (f * n as f64) as usize;
                hill_tail_index(&heavy.deltas, kk).ok().map(|h| vec![f, kk as f64, h])
            })
            .collect();
        report.artifacts.push(w.csv("counterexample_hill.csv", &["fraction", "k", "hill_index"], &hill_rows)?.display().to_string());
        if !graph_rows.is_empty() {
            let header = ["realization", "delta", "theta_up", "theta_down", "bound_up", "bound_down"];
            report.artifacts.push(w.csv("counterexample_graph.csv", &header, &graph_rows)?.display().to_string());
        }
    }
    Ok(report.finish(t0))
}

// about 10 points per decade up to n
fn log_grid(n: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..)
        .map(|i| 10f64.powf(1.0 + 0.1 * i as f64).round() as usize)
        .take_while(|&m| m < n)
        .collect();
    g.push(n);
    g.dedup();
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_view_is_vertical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = CounterexampleShear::sample_covering(GapLaw::pareto(1.5), 16.0, &mut rng).unwrap();
        let v = ShearView(&s).velocity(&[0.3, 7.0]);
        assert_eq!(v, [0.0, s.v2(0.3)]);
    }

    #[test]
    fn log_grid_ends_at_n() {
        let g = log_grid(1000);
        assert_eq!(g[0], 10);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
