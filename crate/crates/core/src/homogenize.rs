//! Time constants, reachable-set geometry and the effective Hamiltonian,
//! assembled from the solvers in [`crate::hj`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, FieldRealization, FieldSpec, VelocityField};
use crate::hj::{
    control_directions, solve_discounted_sl, solve_min_time, solve_min_time_graph, solve_time_dependent_sl,
    Boundary, GraphOptions, Grid, InitialData, MinTimeSolve, SchemeParams, SlParams, TimeOptions,
};
use crate::stats::least_squares;
use crate::vecops::{norm, scale};

/// Which static solver produces `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MinTimeMethod {
    /// Lax–Friedrichs fast sweeping. Diffusive once `v_max` is comparable to 1.
    Sweeping,
    /// Shortest paths over straight segments with exact traversal costs.
    Graph { rho: i64 },
}

/// Whether `theta` is taken along the flow or against it. The shape theorem
/// concerns the forward sets; the dual formula for the Hamiltonian needs the
/// sets reachable against the flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinTimeConfig {
    pub h: f64,
    pub method: MinTimeMethod,
    /// Half-width of the box; `M * max radius` when absent.
    pub half_width: Option<f64>,
}

impl Default for MinTimeConfig {
    fn default() -> Self {
        MinTimeConfig {
            h: 1.0 / 32.0,
            method: MinTimeMethod::Graph { rho: 6 },
            half_width: None,
        }
    }
}

/// Solve `theta(source, .)` for one realization with the configured method.
/// With the graph method the search stops once `targets` (or `stop_time`) are
/// settled.
pub fn min_time<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    source: [f64; D],
    grid: &Grid<D>,
    method: MinTimeMethod,
    targets: Vec<[f64; D]>,
    stop_time: Option<f64>,
) -> Result<MinTimeSolve<D>> {
    match method {
        MinTimeMethod::Sweeping => solve_min_time(field, source, grid, &SchemeParams::for_field(field, grid)),
        MinTimeMethod::Graph { rho } => solve_min_time_graph(
            field,
            source,
            grid,
            &GraphOptions {
                rho,
                stop_time,
                targets,
            },
        ),
    }
}

/// Radii, ratios and the extrapolated time constant in one direction.
#[derive(Clone, Debug, Serialize)]
pub struct TimeConstantEstimate {
    pub direction: Vec<f64>,
    pub radii: Vec<f64>,
    /// `theta(0, r v) / r` per seed; `None` when unreachable or untrusted.
    pub ratios: Vec<Vec<Option<f64>>>,
    /// Per-seed intercepts of `ratio ~ q + a / r`.
    pub per_seed: Vec<f64>,
    pub q_bar: f64,
    pub spread: f64,
    /// False when some target (in particular the largest radius) was not
    /// reached within the trusted region.
    pub complete: bool,
}

fn fit_intercept(radii: &[f64], ratios: &[Option<f64>]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(ratios)
        .filter_map(|(r, q)| q.map(|q| (1.0 / r, q)))
        .unzip();
    match x.len() {
        0 => None,
        1 => Some(y[0]),
        _ => least_squares(&x, &y).ok().map(|(a, _)| a),
    }
}

fn estimate_from_ratios(direction: Vec<f64>, radii: &[f64], ratios: Vec<Vec<Option<f64>>>) -> TimeConstantEstimate {
    let complete = ratios.iter().all(|r| r.iter().all(Option::is_some));
    let per_seed: Vec<f64> = ratios
        .iter()
        .map(|r| fit_intercept(radii, r).unwrap_or(f64::INFINITY))
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for r in &ratios {
        for (rad, q) in radii.iter().zip(r) {
            if let Some(q) = q {
                x.push(1.0 / rad);
                y.push(*q);
            }
        }
    }
    let q_bar = match x.len() {
        0 => f64::INFINITY,
        1 => y[0],
        _ => least_squares(&x, &y).map(|(a, _)| a).unwrap_or_else(|_| crate::stats::mean(&y)),
    };
    let spread = per_seed.iter().fold(0.0f64, |s, q| s.max((q - q_bar).abs()));
    TimeConstantEstimate {
        direction,
        radii: radii.to_vec(),
        ratios,
        per_seed,
        q_bar,
        spread,
        complete,
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::config("radii must be positive and strictly increasing"));
    }
    Ok(())
}

/// `theta(0, .)` settled at every target and free of boundary effects there.
///
/// Without a configured box the first pass uses a box just enclosing the
/// targets. Boundary effects can only lengthen paths, so the computed
/// `theta_max` bounds the true one and a box of half-width `M theta_max`
/// contains every optimal path; the second pass on it is trusted.
pub fn solve_trusted<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    m: f64,
    targets: &[[f64; D]],
    extent: f64,
    cfg: &MinTimeConfig,
) -> Result<MinTimeSolve<D>> {
    let snap = |l: f64| (l / cfg.h).ceil() * cfg.h;
    let solve_on = |half: f64| {
        let grid = Grid::<D>::open(cfg.h, snap(half))?;
        min_time(field, [0.0; D], &grid, cfg.method, targets.to_vec(), None)
    };
    if let Some(half) = cfg.half_width {
        return solve_on(half);
    }
    let first = solve_on(1.25 * extent + 1.0)?;
    let worst = targets
        .iter()
        .map(|y| first.theta.interpolate(y).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    if worst <= first.trusted_time(m) {
        return Ok(first);
    }
    // unreachable targets: fall back to the a priori box
    let half = if worst.is_finite() { m * worst * 1.02 + 2.0 * cfg.h } else { m * extent + 2.0 * cfg.h };
    solve_on(half)
}

/// `theta(0, r v) / r` for every direction and radius, one solve per seed.
fn ratio_tables<const D: usize>(
    spec: &FieldSpec,
    seeds: &[u64],
    directions: &[[f64; D]],
    radii: &[f64],
    cfg: &MinTimeConfig,
    orientation: Orientation,
) -> Result<Vec<Vec<Vec<Option<f64>>>>> {
    check_radii(radii)?;
    if seeds.is_empty() {
        return Err(Error::config("at least one seed is required"));
    }
    let rmax = *radii.last().unwrap();
    let mut out = vec![Vec::with_capacity(seeds.len()); directions.len()];
    let targets: Vec<[f64; D]> = directions
        .iter()
        .flat_map(|v| radii.iter().map(move |&r| scale(v, r)))
        .collect();
    for &seed in seeds {
        let field = make_field::<D>(spec, seed)?;
        let m = field.speed_bound();
        let solve = match orientation {
            Orientation::Forward => solve_trusted(&field, m, &targets, rmax, cfg)?,
            Orientation::Backward => solve_trusted(&field.reversed(), m, &targets, rmax, cfg)?,
        };
        let trusted = solve.trusted_time(m);
        for (k, v) in directions.iter().enumerate() {
            let row = radii
                .iter()
                .map(|&r| {
                    solve
                        .theta
                        .interpolate(&scale(v, r))
                        .filter(|t| *t <= trusted)
                        .map(|t| t / r)
                })
                .collect();
            out[k].push(row);
        }
    }
    Ok(out)
}

/// `q(v) = lim theta(0, r v) / r`, extrapolated by a least-squares fit of the
/// ratios against `1 / r`.
pub fn time_constant<const D: usize>(
    spec: &FieldSpec,
    seeds: &[u64],
    v: [f64; D],
    radii: &[f64],
    cfg: &MinTimeConfig,
) -> Result<TimeConstantEstimate> {
    let n = norm(&v);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::config("time_constant direction must be a unit vector"));
    }
    let mut t = ratio_tables(spec, seeds, &[v], radii, cfg, Orientation::Forward)?;
    Ok(estimate_from_ratios(v.to_vec(), radii, t.remove(0)))
}

/// Evenly spaced unit directions (a Fibonacci lattice in 3D).
pub fn unit_directions<const D: usize>(k: usize) -> Vec<[f64; D]> {
    control_directions::<D>(k)
}

/// Sampled time constants and the implied shape `{q <= 1}`.
#[derive(Clone, Debug, Serialize)]
pub struct SupportFunctionTable {
    pub orientation: Orientation,
    pub dimension: usize,
    pub estimates: Vec<TimeConstantEstimate>,
}

impl SupportFunctionTable {
    pub fn directions(&self) -> impl Iterator<Item = &[f64]> {
        self.estimates.iter().map(|e| e.direction.as_slice())
    }

    pub fn q_bar(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.q_bar).collect()
    }

    /// Boundary points `v_k / q(v_k)`; directions with infinite `q` are
    /// dropped (the shape does not extend that way).
    pub fn shape_points(&self) -> Vec<Vec<f64>> {
        self.estimates
            .iter()
            .filter(|e| e.q_bar.is_finite() && e.q_bar > 0.0)
            .map(|e| e.direction.iter().map(|x| x / e.q_bar).collect())
            .collect()
    }

    /// Largest `q(v_k) / (1/M)` shortfall and `q(v_k) - 1` excess, i.e. the
    /// worst violation of `1/M <= q <= 1` (nonpositive when satisfied).
    pub fn bounds_violation(&self, speed_bound: f64) -> f64 {
        self.estimates.iter().fold(f64::NEG_INFINITY, |w, e| {
            w.max(1.0 / speed_bound - e.q_bar).max(e.q_bar - 1.0)
        })
    }

    /// Worst relative violation of `q(u + w) <= q(u) + q(w)` over adjacent
    /// triples in 2D, using `u + w = 2 cos(phi) v_k` and homogeneity.
    pub fn convexity_violation(&self) -> f64 {
        let k = self.estimates.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..k {
            let a = &self.estimates[(i + k - 1) % k];
            let b = &self.estimates[i];
            let c = &self.estimates[(i + 1) % k];
            let sum: Vec<f64> = a.direction.iter().zip(&c.direction).map(|(x, y)| x + y).collect();
            let len = norm_slice(&sum);
            let lhs = len * b.q_bar;
            let rhs = a.q_bar + c.q_bar;
            worst = worst.max((lhs - rhs) / rhs);
        }
        worst
    }

    /// Worst `|q(v) - q(w)| - |v - w|` over all pairs.
    pub fn lipschitz_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, a) in self.estimates.iter().enumerate() {
            for b in &self.estimates[i + 1..] {
                let d: Vec<f64> = a.direction.iter().zip(&b.direction).map(|(x, y)| x - y).collect();
                worst = worst.max((a.q_bar - b.q_bar).abs() - norm_slice(&d));
            }
        }
        worst
    }

    /// Convex hull of the shape points in 2D, counterclockwise.
    pub fn hull(&self) -> Vec<[f64; 2]> {
        let pts: Vec<[f64; 2]> = self.shape_points().iter().map(|p| [p[0], p[1]]).collect();
        convex_hull(pts)
    }

    /// CSV with columns `direction_1..N,q_bar,spread,complete`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let cols: Vec<String> = (1..=self.dimension).map(|i| format!("v{i}")).collect();
        writeln!(w, "{},q_bar,spread,complete", cols.join(","))?;
        for e in &self.estimates {
            let v: Vec<String> = e.direction.iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{},{},{},{}", v.join(","), e.q_bar, e.spread, e.complete)?;
        }
        Ok(())
    }
}

fn norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain.
pub fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Point in a counterclockwise convex polygon.
pub fn polygon_contains(poly: &[[f64; 2]], x: &[f64; 2]) -> bool {
    poly.len() >= 3 && (0..poly.len()).all(|i| cross(&poly[i], &poly[(i + 1) % poly.len()], x) >= 0.0)
}

/// `q(v_k)` for `k` evenly spaced directions, one minimal-time solve per seed.
pub fn support_table<const D: usize>(
    spec: &FieldSpec,
    seeds: &[u64],
    k: usize,
    radii: &[f64],
    cfg: &MinTimeConfig,
    orientation: Orientation,
) -> Result<SupportFunctionTable> {
    if k < 8 {
        return Err(Error::config("support table needs at least 8 directions"));
    }
    let dirs = unit_directions::<D>(k);
    let tables = ratio_tables(spec, seeds, &dirs, radii, cfg, orientation)?;
    let estimates = dirs
        .iter()
        .zip(tables)
        .map(|(v, r)| estimate_from_ratios(v.to_vec(), radii, r))
        .collect();
    Ok(SupportFunctionTable {
        orientation,
        dimension: D,
        estimates,
    })
}

/// Sublevel set `{theta <= t}`.
#[derive(Clone, Debug)]
pub struct ReachableSet {
    pub t: f64,
    pub indicator: Vec<bool>,
    pub volume: f64,
    /// Interface length by marching squares; 2D only.
    pub perimeter: Option<f64>,
}

pub fn reachable_set<const D: usize>(solve: &MinTimeSolve<D>, speed_bound: f64, t: f64) -> Result<ReachableSet> {
    let trusted = solve.trusted_time(speed_bound);
    if t > trusted {
        return Err(Error::TrustRegion { t, trusted });
    }
    let th = &solve.theta;
    let indicator: Vec<bool> = (0..th.grid.len()).map(|i| th.get(i).is_some_and(|v| v <= t)).collect();
    let volume = indicator.iter().filter(|b| **b).count() as f64 * th.grid.h.powi(D as i32);
    let perimeter = (D == 2).then(|| marching_squares_length(solve, t));
    Ok(ReachableSet {
        t,
        indicator,
        volume,
        perimeter,
    })
}

fn marching_squares_length<const D: usize>(solve: &MinTimeSolve<D>, t: f64) -> f64 {
    let th = &solve.theta;
    let g = &th.grid;
    let n = g.n;
    let h = g.h;
    // unreachable nodes sit well outside the set
    let f = |i: usize, j: usize| -> f64 {
        let mut m = [0usize; D];
        m[0] = i;
        m[1] = j;
        th.get(g.flat(&m)).map_or(t + 1.0, |v| v.min(t + 1.0)) - t
    };
    let cut = |a: f64, b: f64| a / (a - b);
    let mut total = 0.0;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            // corners counterclockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let c = [f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)];
            let pos = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            let mut pts: Vec<[f64; 2]> = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a <= 0.0) != (b <= 0.0) {
                    let s = cut(a, b);
                    let (p, q) = (pos[e], pos[(e + 1) % 4]);
                    pts.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
                }
            }
            let seg = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            match pts.len() {
                2 => total += seg(&pts[0], &pts[1]),
                4 => {
                    // saddle: pair crossings by the sign at the cell centre
                    let centre = 0.25 * c.iter().sum::<f64>();
                    let inside0 = c[0] <= 0.0;
                    if (centre <= 0.0) == inside0 {
                        total += seg(&pts[0], &pts[3]) + seg(&pts[1], &pts[2]);
                    } else {
                        total += seg(&pts[0], &pts[1]) + seg(&pts[2], &pts[3]);
                    }
                }
                _ => {}
            }
        }
    }
    total * h
}

/// Growth of `|R_t|` against the isoperimetric lower bound, with the
/// perimeter-window check of the volume argument.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeGrowthReport {
    pub times: Vec<f64>,
    pub volumes: Vec<f64>,
    pub perimeters: Vec<f64>,
    /// `sqrt(|R_t|) / t`.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    /// `K = N |B_1| (M g2)^N / (g2^N - g1^N)` with `g1 = 1/2`, `g2 = 1`.
    pub perimeter_constant: f64,
    /// For each `t`, whether some sampled `s` in `[t/2, t]` has `Per(R_s) <= K s`.
    pub perimeter_window: Vec<bool>,
}

impl VolumeGrowthReport {
    /// `min sqrt(|R_t|)/t >= sqrt(pi) (1 - tol)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.min_ratio >= std::f64::consts::PI.sqrt() * (1.0 - tol) && self.perimeter_window.iter().all(|b| *b)
    }
}

pub fn volume_growth_check(sets: &[ReachableSet], speed_bound: f64) -> Result<VolumeGrowthReport> {
    if sets.is_empty() {
        return Err(Error::config("volume growth check needs reachable sets"));
    }
    let times: Vec<f64> = sets.iter().map(|s| s.t).collect();
    let volumes: Vec<f64> = sets.iter().map(|s| s.volume).collect();
    let perimeters: Vec<f64> = sets
        .iter()
        .map(|s| s.perimeter.ok_or_else(|| Error::config("volume growth check is 2D only")))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = volumes.iter().zip(&times).map(|(v, t)| v.sqrt() / t).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let (g1, g2) = (0.5f64, 1.0f64);
    let k = 2.0 * std::f64::consts::PI * (speed_bound * g2).powi(2) / (g2.powi(2) - g1.powi(2));
    let perimeter_window = times
        .iter()
        .map(|&t| {
            times
                .iter()
                .zip(&perimeters)
                .any(|(&s, &p)| s >= 0.5 * t - 1e-12 && s <= t + 1e-12 && p <= k * s)
        })
        .collect();
    Ok(VolumeGrowthReport {
        times,
        volumes,
        perimeters,
        ratios,
        min_ratio,
        perimeter_constant: k,
        perimeter_window,
    })
}

/// `|(R_t / t) Δ K| / |K|`, with `K` the hull of a forward table. The
/// comparison runs over the nodes of the scaled grid, restricted to the box
/// `[-L/t, L/t]^2`.
pub fn shape_check(solve: &MinTimeSolve<2>, table: &SupportFunctionTable, speed_bound: f64, t: f64) -> Result<f64> {
    if table.orientation != Orientation::Forward {
        return Err(Error::config("shape check needs a forward table"));
    }
    let set = reachable_set(solve, speed_bound, t)?;
    let hull = table.hull();
    let area_k = polygon_area(&hull);
    if !(area_k > 0.0) {
        return Err(Error::config("table shape has no interior"));
    }
    let g = &solve.theta.grid;
    let mut diff = 0usize;
    for i in 0..g.len() {
        let y = g.point(i);
        let x = [(y[0] - solve.source[0]) / t, (y[1] - solve.source[1]) / t];
        if set.indicator[i] != polygon_contains(&hull, &x) {
            diff += 1;
        }
    }
    Ok(diff as f64 * (g.h / t).powi(2) / area_k)
}

fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|i| p[i][0] * p[(i + 1) % n][1] - p[(i + 1) % n][0] * p[i][1]).sum::<f64>()
}

/// `sup_k <p, -v_k / q(v_k)>`: the support function of `-K`.
pub fn effective_hamiltonian_dual(table: &SupportFunctionTable, p: &[f64]) -> Result<f64> {
    let pts = table.shape_points();
    if pts.is_empty() {
        return Err(Error::config("support table has no finite entries"));
    }
    if p.len() != table.dimension {
        return Err(Error::config("p has the wrong dimension"));
    }
    Ok(pts
        .iter()
        .map(|v| -v.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Grids and parameters of the cell-problem estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    /// Nodes per period on periodic fields.
    pub cell_points: usize,
    /// Spacing on open grids (non-periodic fields).
    pub h: f64,
    pub sl: SlParams,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            cell_points: 64,
            h: 1.0 / 16.0,
            sl: SlParams::default(),
        }
    }
}

// feet tables above this many entries are refused
const MAX_FEET: usize = 60_000_000;

fn cell_grid<const D: usize>(field: &FieldRealization<D>, cfg: &CellConfig, half_width: f64) -> Result<Grid<D>> {
    let grid = match field.spec().family.period() {
        Some(period) => Grid::periodic(period / cfg.cell_points as f64, 0.5 * period)?,
        None => {
            let l = (half_width / cfg.h).ceil() * cfg.h;
            Grid::open(cfg.h, l.max(10.0 * cfg.h))?
        }
    };
    if grid.len() * cfg.sl.directions > MAX_FEET {
        return Err(Error::config(format!(
            "cell problem grid of {} nodes is too large; shorten the horizon or coarsen h",
            grid.len()
        )));
    }
    Ok(grid)
}

/// Discounted estimates `delta v_delta(0)` for each `delta` and their linear
/// extrapolation to `delta = 0`. The extrapolation is empirical: no rate is
/// known for `delta v_delta -> H`.
#[derive(Clone, Debug, Serialize)]
pub struct DiscountedEstimate {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
}

pub fn effective_hamiltonian_discounted<const D: usize>(
    spec: &FieldSpec,
    seeds: &[u64],
    p: [f64; D],
    deltas: &[f64],
    cfg: &CellConfig,
) -> Result<DiscountedEstimate> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| *d <= 0.0) {
        return Err(Error::config("delta schedule must be positive and decreasing"));
    }
    if seeds.is_empty() {
        return Err(Error::config("at least one seed is required"));
    }
    let mut values = vec![0.0; deltas.len()];
    for &seed in seeds {
        let field = make_field::<D>(spec, seed)?;
        for (k, &d) in deltas.iter().enumerate() {
            let grid = cell_grid(&field, cfg, 2.0 * field.speed_bound() / d)?;
            values[k] += solve_discounted_sl(&field, p, d, &grid, &cfg.sl)?.estimate() / seeds.len() as f64;
        }
    }
    let extrapolated = if deltas.len() >= 2 {
        least_squares(deltas, &values)?.0
    } else {
        values[0]
    };
    Ok(DiscountedEstimate {
        deltas: deltas.to_vec(),
        values,
        extrapolated,
    })
}

/// `z(0, T) / T` for affine data, averaged over seeds.
pub fn effective_hamiltonian_time<const D: usize>(
    spec: &FieldSpec,
    seeds: &[u64],
    p: [f64; D],
    horizon: f64,
    cfg: &CellConfig,
) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::config("at least one seed is required"));
    }
    let mut acc = 0.0;
    for &seed in seeds {
        let field = make_field::<D>(spec, seed)?;
        let core = 10.0 * cfg.h;
        let grid = cell_grid(&field, cfg, core + 2.0 * field.speed_bound() * horizon)?;
        let opts = TimeOptions {
            core_half_width: Some(if grid.boundary == Boundary::Open { core } else { grid.half_width }),
            snapshots: Vec::new(),
        };
        let ts = solve_time_dependent_sl(&field, InitialData::Affine(p), horizon, &grid, &cfg.sl, &opts)?;
        acc += ts.z_origin[0] / ts.times[0];
    }
    Ok(acc / seeds.len() as f64)
}

/// `H(P) = H~(P) + <E[V], P>` where `H~` belongs to the centred field.
pub fn mean_shift_reduce(h_centered: f64, mean: &[f64], p: &[f64]) -> f64 {
    h_centered + mean.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()
}

/// All three estimates of `H(p)` and how far apart they are.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianEstimate {
    pub p: Vec<f64>,
    pub h_dual: f64,
    pub h_disc: f64,
    pub h_time: f64,
    /// Largest pairwise `|a - b| / max(a, b)`.
    pub disagreement: f64,
    pub mean: Vec<f64>,
}

impl HamiltonianEstimate {
    pub fn new(p: Vec<f64>, h_dual: f64, h_disc: f64, h_time: f64, mean: Vec<f64>) -> Self {
        let v = [h_dual, h_disc, h_time];
        let mut disagreement: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                disagreement = disagreement.max((v[i] - v[j]).abs() / v[i].abs().max(v[j].abs()));
            }
        }
        HamiltonianEstimate {
            p,
            h_dual,
            h_disc,
            h_time,
            disagreement,
            mean,
        }
    }

    /// `H(p) >= |p| + <E[V], p> - tol |p|` for the dual estimate.
    pub fn lower_bound_margin(&self) -> f64 {
        let pn = norm_slice(&self.p);
        self.h_dual - (pn + self.mean.iter().zip(&self.p).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Least-squares fit `theta(0, y) ~ T + s |y|` over trusted nodes with
/// `|y| >= r_min`, pooled over an ensemble. Returns `(T, s)`.
pub fn reachability_fit<const D: usize>(solves: &[MinTimeSolve<D>], speed_bound: f64, r_min: f64) -> Result<(f64, f64)> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for s in solves {
        let trusted = s.trusted_time(speed_bound);
        let g = &s.theta.grid;
        for i in 0..g.len() {
            if let Some(t) = s.theta.get(i) {
                let r = norm(&crate::vecops::sub(&g.point(i), &s.source));
                if r >= r_min && t <= trusted {
                    x.push(r);
                    y.push(t);
                }
            }
        }
    }
    least_squares(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::Grid;

    fn graph_cfg(h: f64) -> MinTimeConfig {
        MinTimeConfig {
            h,
            method: MinTimeMethod::Graph { rho: 6 },
            half_width: None,
        }
    }

    /// Root `t > 0` of `|v - t c| = t` by bisection.
    fn drift_q(v: [f64; 2], c: [f64; 2]) -> f64 {
        let g = |t: f64| ((v[0] - t * c[0]).powi(2) + (v[1] - t * c[1]).powi(2)).sqrt() - t;
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn zero_field_time_constant() {
        let e = time_constant::<2>(&FieldSpec::zero(), &[0], [0.6, 0.8], &[2.0, 3.0, 4.0], &graph_cfg(0.05)).unwrap();
        assert!((e.q_bar - 1.0).abs() < 0.02, "{}", e.q_bar);
        assert!(e.complete);
    }

    #[test]
    fn drift_time_constants_and_shape() {
        let c = [0.4, 0.0];
        let spec = FieldSpec::constant(c.to_vec());
        let radii = [2.0, 3.0, 4.0];
        let t = support_table::<2>(&spec, &[0], 16, &radii, &graph_cfg(0.05), Orientation::Forward).unwrap();
        for e in &t.estimates {
            let v = [e.direction[0], e.direction[1]];
            let exact = drift_q(v, c);
            assert!((e.q_bar - exact).abs() < 0.02 * exact, "{v:?} {} {exact}", e.q_bar);
        }
        for p in t.shape_points() {
            let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 0.03);
        }
        assert!(t.convexity_violation() < 0.0);
        assert!(t.lipschitz_violation() < 0.0);
        // forward table: the dual formula gives |p| - <c, p>
        let p = [0.6, 0.8];
        let hd = effective_hamiltonian_dual(&t, &p).unwrap();
        assert!((hd - (1.0 - 0.24)).abs() < 0.03, "{hd}");
        let back = support_table::<2>(&spec, &[0], 16, &radii, &graph_cfg(0.05), Orientation::Backward).unwrap();
        let hb = effective_hamiltonian_dual(&back, &p).unwrap();
        assert!((hb - (1.0 + 0.24)).abs() < 0.03, "{hb}");
        let h2 = effective_hamiltonian_dual(&back, &[1.2, 1.6]).unwrap();
        assert_eq!(h2, 2.0 * hb);
    }

    #[test]
    fn disc_reachable_set_geometry() {
        for spec in [FieldSpec::zero(), FieldSpec::constant(vec![0.4, 0.0])] {
            let f = make_field::<2>(&spec, 0).unwrap();
            let m = f.speed_bound();
            let g = Grid::open(0.02, 3.0).unwrap();
            let s = min_time(&f, [0.0; 2], &g, MinTimeMethod::Graph { rho: 6 }, vec![], None).unwrap();
            let r = reachable_set(&s, m, 1.0).unwrap();
            assert!((r.volume - std::f64::consts::PI).abs() < 0.03 * std::f64::consts::PI, "{}", r.volume);
            let per = r.perimeter.unwrap();
            assert!((per - 2.0 * std::f64::consts::PI).abs() < 0.05 * 2.0 * std::f64::consts::PI, "{per}");
            let r2 = reachable_set(&s, m, 1.5).unwrap();
            assert!(r2.volume >= r.volume);
            assert!(r.indicator.iter().zip(&r2.indicator).all(|(a, b)| !a || *b));
            assert!(matches!(reachable_set(&s, m, 10.0), Err(Error::TrustRegion { .. })));
        }
    }

    #[test]
    fn isoperimetric_ratio_for_discs() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.02, 3.0).unwrap();
        let s = min_time(&f, [0.0; 2], &g, MinTimeMethod::Graph { rho: 6 }, vec![], None).unwrap();
        let sets: Vec<_> = [0.5, 1.0, 1.5, 2.0, 2.5].iter().map(|&t| reachable_set(&s, 1.0, t).unwrap()).collect();
        let rep = volume_growth_check(&sets, 1.0).unwrap();
        for r in &rep.ratios {
            assert!((r - std::f64::consts::PI.sqrt()).abs() < 0.02 * std::f64::consts::PI.sqrt());
        }
        assert!(rep.passes(0.02));
    }

    #[test]
    fn shape_of_drifted_disc() {
        let spec = FieldSpec::constant(vec![0.4, 0.0]);
        let f = make_field::<2>(&spec, 0).unwrap();
        let table = support_table::<2>(&spec, &[0], 32, &[2.0, 3.0], &graph_cfg(0.05), Orientation::Forward).unwrap();
        let g = Grid::open(0.04, 2.0 * 1.4 + 0.2).unwrap();
        let s = min_time(&f, [0.0; 2], &g, MinTimeMethod::Graph { rho: 6 }, vec![], None).unwrap();
        let frac = shape_check(&s, &table, f.speed_bound(), 2.0).unwrap();
        assert!(frac < 0.06, "{frac}");
    }

    #[test]
    fn hull_and_containment() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let h = convex_hull(pts);
        assert_eq!(h.len(), 4);
        assert!(polygon_contains(&h, &[0.3, 0.7]));
        assert!(!polygon_contains(&h, &[1.3, 0.7]));
        assert!((polygon_area(&h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_shift_identity() {
        assert_eq!(mean_shift_reduce(1.5, &[0.0, 0.0], &[1.0, 0.0]), 1.5);
        let p = [0.6, 0.8];
        let r = mean_shift_reduce(1.0, &[0.3, 0.5], &p);
        assert!((r - (1.0 + 0.18 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn cell_estimators_on_constant_field() {
        let spec = FieldSpec::constant(vec![0.3, 0.5]);
        let p = [0.6, -0.8];
        let exact = 1.0 + 0.18 - 0.4;
        let cfg = CellConfig {
            cell_points: 32,
            ..Default::default()
        };
        let d = effective_hamiltonian_discounted::<2>(&spec, &[0], p, &[0.2, 0.1, 0.05], &cfg).unwrap();
        assert!((d.extrapolated - exact).abs() < 0.01);
        let t = effective_hamiltonian_time::<2>(&spec, &[0], p, 2.0, &cfg).unwrap();
        assert!((t - exact).abs() < 0.01);
    }

    #[test]
    fn fit_recovers_slope() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.05, 3.0).unwrap();
        let s = min_time(&f, [0.0; 2], &g, MinTimeMethod::Graph { rho: 6 }, vec![], None).unwrap();
        let (t0, slope) = reachability_fit(&[s], 1.0, 0.5).unwrap();
        assert!((slope - 1.0).abs() < 0.01 && t0.abs() < 0.02, "{t0} {slope}");
    }

    #[test]
    fn upstream_targets_unreachable() {
        let spec = FieldSpec::constant(vec![1.5, 0.0]);
        let e = time_constant::<2>(&spec, &[0], [-1.0, 0.0], &[1.0, 2.0], &graph_cfg(0.05)).unwrap();
        assert!(!e.complete);
        assert!(e.q_bar.is_infinite());
    }
}
