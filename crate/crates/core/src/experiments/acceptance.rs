//! The fourteen acceptance criteria, each a list of verdicts.

use std::cell::OnceCell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::control::collinearity;
use super::oracle::drift_time_constant;
use super::{
    frozen, rng, run_counterexample, run_enhancement, run_homogenization, run_random_control_study,
    ControlStudyParams, CounterexampleParams, EnhancementParams, HomogenizationParams, Tolerances, Verdict,
};
use crate::error::{Error, Result};
use crate::field::{make_field, FieldSpec};
use crate::hj::{
    dijkstra_oracle, hamiltonian, numerical_hamiltonian, solve_min_time, solve_time_dependent, Grid, InitialData,
    SchemeParams, TimeOptions,
};
use crate::homogenize::{
    effective_hamiltonian_discounted, effective_hamiltonian_dual, effective_hamiltonian_time, min_time,
    reachable_set, shape_check, support_table, time_constant, unit_directions, volume_growth_check, CellConfig,
    MinTimeConfig, MinTimeMethod, Orientation, SupportFunctionTable,
};
use crate::io::ArtifactWriter;
use crate::vecops::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Desk scale.
    Quick,
    /// Finer grids and larger ensembles.
    Full,
}

pub const CRITERIA: [(u8, &str); 14] = [
    (1, "eikonal oracle"),
    (2, "constant-drift oracle"),
    (3, "time-constant bounds"),
    (4, "convexity and Lipschitz of q"),
    (5, "estimator agreement"),
    (6, "enhancement dichotomy"),
    (7, "homogenized lower bound"),
    (8, "isoperimetric growth"),
    (9, "shape theorem"),
    (10, "counterexample"),
    (11, "homogenization convergence"),
    (12, "random-control drift"),
    (13, "2D collinearity"),
    (14, "monotone-scheme properties"),
];

/// Shared state across criteria: settings plus tables reused by several.
pub struct AcceptanceContext<'a> {
    pub profile: Profile,
    pub master: u64,
    pub tol: Tolerances,
    pub out: Option<&'a ArtifactWriter>,
    backward: OnceCell<SupportFunctionTable>,
    forward: OnceCell<SupportFunctionTable>,
}

impl<'a> AcceptanceContext<'a> {
    pub fn new(profile: Profile, master: u64, tol: Tolerances, out: Option<&'a ArtifactWriter>) -> Self {
        AcceptanceContext {
            profile,
            master,
            tol,
            out,
            backward: OnceCell::new(),
            forward: OnceCell::new(),
        }
    }

    fn table_h(&self) -> f64 {
        match self.profile {
            Profile::Quick => 1.0 / 32.0,
            Profile::Full => 1.0 / 48.0,
        }
    }

    fn cell(&self) -> CellConfig {
        CellConfig {
            cell_points: match self.profile {
                Profile::Quick => 64,
                Profile::Full => 128,
            },
            ..CellConfig::default()
        }
    }

    // 16 directions, radii 8..16, on the cellular flow with A = 2
    fn cellular_table(&self, orientation: Orientation) -> Result<&SupportFunctionTable> {
        let cell = match orientation {
            Orientation::Backward => &self.backward,
            Orientation::Forward => &self.forward,
        };
        if let Some(t) = cell.get() {
            return Ok(t);
        }
        let radii: Vec<f64> = (0..33).map(|i| 8.0 + 0.25 * i as f64).collect();
        let cfg = MinTimeConfig {
            h: self.table_h(),
            method: MinTimeMethod::Graph { rho: 6 },
            half_width: None,
        };
        let t = support_table::<2>(&FieldSpec::cellular(2.0), &[0], 16, &radii, &cfg, orientation)?;
        if let Some(w) = self.out {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let name = match orientation {
                Orientation::Backward => "table_cellular_backward.txt",
                Orientation::Forward => "table_cellular_forward.txt",
            };
            w.text(name, &String::from_utf8_lossy(&buf))?;
        }
        Ok(cell.get_or_init(|| t))
    }
}

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub verdicts: Vec<Verdict>,
    /// Module error that stopped the criterion, verbatim.
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed)
    }

    /// `criterion 5 PASS (12.3 s) estimator agreement`, then indented verdicts.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "criterion {:>2} {} ({:.1} s) {}",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.seconds,
            self.name
        );
        for v in &self.verdicts {
            s.push_str(&format!(
                "\n    [{}] {}: measured {:.5} target {:.5} {}",
                if v.passed { "ok" } else { "xx" },
                v.claim,
                v.measured,
                v.target,
                v.note
            ));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n    error: {e}"));
        }
        s
    }
}

pub fn run_criterion(id: u8, ctx: &AcceptanceContext) -> CriterionOutcome {
    let t0 = Instant::now();
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| n.to_string())
        .unwrap_or_else(|| "unknown".into());
    let res = match id {
        1 => eikonal(ctx),
        2 => constant_drift(ctx),
        3 => bounds(ctx),
        4 => convexity(ctx),
        5 => estimators(ctx),
        6 => enhancement(ctx),
        7 => lower_bound(ctx),
        8 => isoperimetric(ctx),
        9 => shape(ctx),
        10 => counterexample(ctx),
        11 => homogenization(ctx),
        12 => control_drift(ctx),
        13 => collinear(ctx),
        14 => scheme_properties(ctx),
        _ => Err(Error::config(format!("no acceptance criterion {id}"))),
    };
    let (verdicts, error) = match res {
        Ok(v) => (v, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionOutcome {
        id,
        name,
        verdicts,
        error,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

/// Runs the selected criteria (all when `ids` is empty), calling `report`
/// after each one.
pub fn run_acceptance(
    ctx: &AcceptanceContext,
    ids: &[u8],
    mut report: impl FnMut(&CriterionOutcome),
) -> Vec<CriterionOutcome> {
    let all: Vec<u8> = if ids.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { ids.to_vec() };
    all.into_iter()
        .map(|id| {
            let o = run_criterion(id, ctx);
            report(&o);
            o
        })
        .collect()
}

fn graph_cfg(h: f64) -> MinTimeConfig {
    MinTimeConfig {
        h,
        method: MinTimeMethod::Graph { rho: 6 },
        half_width: None,
    }
}

fn eikonal(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let t0 = Instant::now();
    let (h, l) = (0.02, 2.0);
    let field = make_field::<2>(&FieldSpec::zero(), 0)?;
    let grid = Grid::<2>::open(h, l)?;
    let solve = min_time(&field, [0.0, 0.0], &grid, MinTimeMethod::Graph { rho: 6 }, Vec::new(), None)?;
    let trusted = solve.trusted_time(field.speed_bound());
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        if let Some(t) = solve.theta.get(i).filter(|t| *t <= trusted) {
            worst = worst.max((t - norm(&grid.point(i))).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(vec![
        Verdict::at_most(
            "eikonal",
            worst / h,
            ctx.tol.eikonal_h,
            "max |theta(y) - |y|| / h over the trusted region, h = 0.02, L = 2",
        ),
        Verdict::at_most("eikonal", secs, 10.0, "wall-clock seconds"),
    ])
}

fn constant_drift(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let c = [0.4, 0.0];
    let spec = FieldSpec::constant(c.to_vec());
    let mut out = Vec::new();
    for v in [[1.0, 0.0], [-1.0, 0.0]] {
        let est = time_constant::<2>(&spec, &[0], v, &[2.0, 4.0], &graph_cfg(1.0 / 32.0))?;
        let exact = drift_time_constant(c, v);
        out.push(Verdict::at_most(
            "drift_q",
            (est.q_bar - exact).abs() / exact,
            ctx.tol.drift_q_rel,
            format!("v = {v:?}: q = {:.5}, root of |v - t c| = t is {exact:.5}", est.q_bar),
        ));
    }
    Ok(out)
}

fn bounds(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let t = ctx.cellular_table(Orientation::Backward)?;
    let m = 3.0;
    let q = t.q_bar();
    let (lo, hi) = q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    Ok(vec![
        Verdict::at_most(
            "q_bounds",
            t.bounds_violation(m),
            ctx.tol.q_bounds_abs,
            format!("cellular A=2, 16 directions: q in [{lo:.4}, {hi:.4}] against [1/3, 1]"),
        ),
        Verdict::check(
            "q_bounds",
            t.estimates.iter().all(|e| e.complete),
            "every radius reached inside the trusted region",
        ),
    ])
}

fn convexity(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let t = ctx.cellular_table(Orientation::Backward)?;
    Ok(vec![
        Verdict::at_most(
            "q_convex",
            t.convexity_violation(),
            ctx.tol.convexity_rel,
            "worst relative midpoint violation over adjacent triples",
        ),
        Verdict::at_most(
            "q_lipschitz",
            t.lipschitz_violation(),
            ctx.tol.lipschitz_abs,
            "worst |q(v) - q(w)| - |v - w| over pairs",
        ),
    ])
}

fn estimators(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let t0 = Instant::now();
    let spec = FieldSpec::cellular(2.0);
    let table = ctx.cellular_table(Orientation::Backward)?;
    let cell = ctx.cell();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for p in [[1.0, 0.0], [0.0, 1.0], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]] {
        let dual = effective_hamiltonian_dual(table, &p)?;
        let disc = effective_hamiltonian_discounted::<2>(&spec, &[0], p, &[0.2, 0.1, 0.05], &cell)?.extrapolated;
        let time = effective_hamiltonian_time::<2>(&spec, &[0], p, 20.0, &cell)?;
        let est = crate::homogenize::HamiltonianEstimate::new(p.to_vec(), dual, disc, time, vec![0.0, 0.0]);
        rows.push(vec![p[0], p[1], dual, disc, time, est.disagreement]);
        out.push(Verdict::at_most(
            "estimators",
            est.disagreement,
            ctx.tol.estimator_rel,
            format!("p = ({:.3}, {:.3}): dual {dual:.4}, discounted {disc:.4}, time {time:.4}", p[0], p[1]),
        ));
    }
    if let Some(w) = ctx.out {
        w.csv("estimators.csv", &["p1", "p2", "h_dual", "h_disc", "h_time", "disagreement"], &rows)?;
    }
    out.push(Verdict::at_most("estimators", t0.elapsed().as_secs_f64(), 300.0, "wall-clock seconds"));
    Ok(out)
}

fn enhancement(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let params = EnhancementParams {
        cell: ctx.cell(),
        ..EnhancementParams::default()
    };
    let mut v = run_enhancement(&params, &ctx.tol, ctx.out)?.verdicts;
    let i = frozen::SHEAR_AMPLITUDES.iter().position(|a| *a == 2.0).expect("A = 2 is frozen");
    v.push(Verdict::at_least(
        "hen_active",
        frozen::SHEAR_MARGIN[i],
        0.05,
        "frozen margin at A = 2",
    ));
    Ok(v)
}

fn lower_bound(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let spec = FieldSpec::poisson_bumps(0.5, 0.5, 0.5).with_drift(vec![0.2, 0.0]);
    let seeds: Vec<u64> = (0..2).map(|i| crate::field::ensemble_seed(super::stream_seed(ctx.master, "lower_bound"), i)).collect();
    let radii = [4.0, 5.0, 6.0, 7.0, 8.0];
    let table = support_table::<2>(&spec, &seeds, 16, &radii, &graph_cfg(1.0 / 16.0), Orientation::Backward)?;
    let mean = spec.mean();
    let mut worst = f64::INFINITY;
    let mut note = String::new();
    for p in unit_directions::<2>(8) {
        let h = effective_hamiltonian_dual(&table, &p)?;
        let bound = norm(&p) + mean[0] * p[0] + mean[1] * p[1];
        let margin = (h - bound) / norm(&p);
        if margin < worst {
            worst = margin;
            note = format!("worst p = ({:.3}, {:.3}): H = {h:.4}, |p| + <E[V], p> = {bound:.4}", p[0], p[1]);
        }
    }
    Ok(vec![Verdict::at_least("hom_lower", worst, -ctx.tol.lower_bound_rel, note)])
}

fn isoperimetric(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let times: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let mut out = Vec::new();
    for (spec, h, name) in [
        (FieldSpec::zero(), 1.0 / 32.0, "zero"),
        (FieldSpec::cellular(2.0), 1.0 / 16.0, "cellular A=2"),
    ] {
        let field = make_field::<2>(&spec, 0)?;
        let m = field.speed_bound();
        let l = ((m * 4.0 + 0.5) / h).ceil() * h;
        let grid = Grid::<2>::open(h, l)?;
        let solve = min_time(&field, [0.0, 0.0], &grid, MinTimeMethod::Graph { rho: 6 }, Vec::new(), Some(4.0 + h))?;
        let sets = times.iter().map(|&t| reachable_set(&solve, m, t)).collect::<Result<Vec<_>>>()?;
        let rep = volume_growth_check(&sets, m)?;
        let sp = PI.sqrt();
        if spec.family == crate::field::FieldFamily::Zero {
            let dev = rep.ratios.iter().map(|r| (r / sp - 1.0).abs()).fold(0.0, f64::max);
            out.push(Verdict::at_most(
                "vol_growth",
                dev,
                ctx.tol.isoperimetric_zero_rel,
                format!("{name}: max |sqrt(|R_t|) / t / sqrt(pi) - 1| over t in [0.5, 4]"),
            ));
        } else {
            out.push(Verdict::at_least(
                "vol_growth",
                rep.min_ratio / sp,
                1.0 - ctx.tol.isoperimetric_rel,
                format!("{name}: min sqrt(|R_t|) / t / sqrt(pi) over t in [0.5, 4], ratios {:.3?}", rep.ratios),
            ));
        }
        out.push(Verdict::check(
            "perimeter_window",
            rep.perimeter_window.iter().all(|b| *b),
            format!("{name}: some s in [t/2, t] with Per(R_s) <= K s, K = {:.1}", rep.perimeter_constant),
        ));
    }
    Ok(out)
}

fn shape(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let h = 1.0 / 16.0;
    let fraction = |field: &crate::field::FieldRealization<2>, table: &SupportFunctionTable| -> Result<[f64; 2]> {
        let m = field.speed_bound();
        let l = ((8.0 * m + 0.5) / h).ceil() * h;
        let grid = Grid::<2>::open(h, l)?;
        let solve = min_time(field, [0.0, 0.0], &grid, MinTimeMethod::Graph { rho: 6 }, Vec::new(), Some(8.0 + h))?;
        Ok([shape_check(&solve, table, m, 4.0)?, shape_check(&solve, table, m, 8.0)?])
    };
    for (spec, name) in [(FieldSpec::zero(), "zero"), (FieldSpec::constant(vec![0.4, 0.0]), "constant (0.4, 0)")] {
        let field = make_field::<2>(&spec, 0)?;
        let table = support_table::<2>(&spec, &[0], 32, &[4.0, 8.0], &graph_cfg(h), Orientation::Forward)?;
        let f = fraction(&field, &table)?;
        out.push(Verdict::at_most(
            "shape",
            f[0].max(f[1]),
            ctx.tol.shape_fraction,
            format!("{name}: symmetric difference fraction at t = 4, 8: {:.4?}", f),
        ));
    }
    let field = make_field::<2>(&FieldSpec::cellular(2.0), 0)?;
    let table = ctx.cellular_table(Orientation::Forward)?;
    let f = fraction(&field, table)?;
    out.push(Verdict::at_most(
        "shape",
        f[1],
        f[0],
        format!("cellular A=2: fraction at t = 8 against t = 4 ({:.4})", f[0]),
    ));
    Ok(out)
}

fn counterexample(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let t0 = Instant::now();
    let mut v = run_counterexample(&CounterexampleParams::default(), &ctx.tol, ctx.master, ctx.out)?.verdicts;
    v.push(Verdict::at_most("cex_bound", t0.elapsed().as_secs_f64(), 180.0, "wall-clock seconds"));
    Ok(v)
}

fn homogenization(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let params = HomogenizationParams::default();
    Ok(run_homogenization(&params, &ctx.tol, ctx.out)?.verdicts)
}

fn control_drift(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let params = ControlStudyParams {
        gamma: false,
        ..Default::default()
    };
    let rep = run_random_control_study(&params, &ctx.tol, ctx.master, ctx.out)?;
    Ok(rep
        .verdicts
        .into_iter()
        .filter(|v| v.claim == "control_drift" || v.claim == "control_moments")
        .collect())
}

fn collinear(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let field = make_field::<2>(&FieldSpec::cellular(2.0), 0)?;
    let a = [0.5, 0.25];
    let (speed, rel) = collinearity(&field, a, 5000.0)?;
    Ok(vec![Verdict::at_most(
        "collinear",
        rel,
        ctx.tol.collinear_rel,
        format!("cellular A=2, a = {a:?}, T = 5000: |X_T / T| = {speed:.4}, orthogonal part relative to it"),
    )])
}

// Randomized monotone-scheme checks on weak cellular flows (A in [0.25, 0.75]),
// where the Lax–Friedrichs diffusion is small enough to compare pointwise.
fn scheme_properties(ctx: &AcceptanceContext) -> Result<Vec<Verdict>> {
    let mut out = Vec::new();
    let mut r = rng(ctx.master, "scheme_properties");
    let instances = match ctx.profile {
        Profile::Quick => 10,
        Profile::Full => 40,
    };

    // consistency of the numerical flux
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p: [f64; 2] = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let v: [f64; 2] = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let sigma = [1.0 + v[0].abs() + r.random_range(0.0..1.0), 1.0 + v[1].abs() + r.random_range(0.0..1.0)];
        worst = worst.max((numerical_hamiltonian(&p, &p, &v, &sigma) - hamiltonian(&p, &v)).abs());
    }
    out.push(Verdict::at_most("consistency", worst, 1e-12, "max |G(p, p, V) - H(p, V)| over 1000 random triples"));

    let mut comp_worst = f64::NEG_INFINITY;
    let mut sub_worst = f64::NEG_INFINITY;
    let mut oracle_worst: f64 = 0.0;
    let h = 0.02;
    for _ in 0..instances {
        let a = r.random_range(0.25..0.75);
        let field = make_field::<2>(&FieldSpec::cellular(a), 0)?;
        let m = field.speed_bound();

        // comparison: ordered initial data stay ordered
        let c: [f64; 4] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let bump = r.random_range(0.05..0.5);
        let u0 = move |x: &[f64; 2]| c[0] * (3.0 * x[0]).sin() + c[1] * (2.0 * x[1]).cos() + c[2] * x[0] * x[1];
        let u1 = move |x: &[f64; 2]| u0(x) + bump * (1.0 + (5.0 * x[0] + c[3]).sin());
        let grid = Grid::<2>::open(0.05, 2.5)?;
        let params = SchemeParams::for_field(&field, &grid);
        let opts = TimeOptions {
            core_half_width: Some(0.5),
            snapshots: Vec::new(),
        };
        let s0 = solve_time_dependent(&field, InitialData::Callable(&u0), 0.5, &grid, &params, &opts)?;
        let s1 = solve_time_dependent(&field, InitialData::Callable(&u1), 0.5, &grid, &params, &opts)?;
        for (x, y) in s0.slices[0].values.iter().zip(&s1.slices[0].values) {
            comp_worst = comp_worst.max(x - y);
        }

        // subadditivity and the oracle, on 101^2 nodes
        let grid = Grid::<2>::open(h, 1.0)?;
        let params = SchemeParams::for_field(&field, &grid);
        let snap = |p: [f64; 2]| grid.point(grid.nearest(&p).unwrap());
        // y near the segment from x to z, where the inequality is nearly tight
        let x = [r.random_range(-0.3..0.3), r.random_range(-0.3..0.3)];
        let z = [r.random_range(-0.3..0.3), r.random_range(-0.3..0.3)];
        let y = [
            0.5 * (x[0] + z[0]) + r.random_range(-0.05..0.05),
            0.5 * (x[1] + z[1]) + r.random_range(-0.05..0.05),
        ];
        let pts = [snap(x), snap(y), snap(z)];
        let sx = solve_min_time(&field, pts[0], &grid, &params)?;
        let sy = solve_min_time(&field, pts[1], &grid, &params)?;
        let (txy, txz, tyz) = (sx.theta.at(&pts[1]), sx.theta.at(&pts[2]), sy.theta.at(&pts[2]));
        if let (Some(txy), Some(txz), Some(tyz)) = (txy, txz, tyz) {
            sub_worst = sub_worst.max((txz - txy - tyz) / h);
        } else {
            sub_worst = f64::INFINITY;
        }
        let oracle = dijkstra_oracle(&field, pts[0], &grid, 4)?;
        let trusted = sx.trusted_time(m);
        for i in 0..grid.len() {
            if let (Some(a), Some(b)) = (sx.theta.get(i), oracle.get(i)) {
                if b <= trusted {
                    oracle_worst = oracle_worst.max((a - b).abs() / (ctx.tol.oracle_h * h + ctx.tol.oracle_rel * b));
                }
            }
        }
    }
    out.push(Verdict::at_most(
        "comparison",
        comp_worst,
        0.0,
        format!("{instances} instances: max (u0 - u1)(T) with u0 <= u1 initially"),
    ));
    out.push(Verdict::at_most(
        "subadditive",
        sub_worst,
        ctx.tol.subadditive_h,
        format!("{instances} instances: max (theta(x,z) - theta(x,y) - theta(y,z)) / h"),
    ));
    out.push(Verdict::at_most(
        "oracle_equivalence",
        oracle_worst,
        1.0,
        format!("{instances} instances: max |sweeping - oracle| / (3h + 5% theta) on the trusted region"),
    ));
    Ok(out)
}
