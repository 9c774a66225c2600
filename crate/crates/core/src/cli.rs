//! The `gflame` command line: a JSON run configuration (or equivalent flags),
//! seed handling and subcommand dispatch.
//!
//! Exit status: 0 when every verdict passes, 1 on a verdict failure, 2 on a
//! configuration error, 3 on numerical non-convergence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::acceptance::CriterionOutcome;
use crate::experiments::oracle::{compute_frozen, render_frozen};
use crate::experiments::{
    run_acceptance, run_counterexample, run_enhancement, run_homogenization, run_random_control_study,
    AcceptanceContext, ControlStudyParams, CounterexampleParams, EnhancementParams, ExperimentReport,
    HomogenizationParams, Profile, Tolerances,
};
use crate::field::{divergence_estimate, ensemble_seed, make_field, FieldFamily, FieldSpec, Scaled};
use crate::hj::{solve_time_dependent_sl, Grid, InitialData, SlParams, TimeOptions};
use crate::homogenize::{
    effective_hamiltonian_discounted, effective_hamiltonian_dual, effective_hamiltonian_time, min_time,
    support_table, CellConfig, HamiltonianEstimate, MinTimeConfig, MinTimeMethod, Orientation,
};
use crate::io::{ArtifactWriter, LinePlot, Provenance, Series};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum SubcommandName {
    Field,
    Mintime,
    Timeconst,
    Heff,
    Gequation,
    Enhance,
    Counterexample,
    ControlStudy,
    Homogenization,
    Acceptance,
}

/// A family name with the amplitude taken from `A`, or a full field law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldChoice {
    Named(String),
    Spec(FieldSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Graph,
    Sweeping,
}

fn default_field() -> FieldChoice {
    FieldChoice::Named("zero".into())
}
fn default_seed() -> u64 {
    1
}
fn default_ensemble() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a run needs. Unknown keys are rejected; absent keys take the
/// subcommand defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: SubcommandName,
    #[serde(default = "default_field")]
    pub field: FieldChoice,
    /// Amplitude for named fields.
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Master seed.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u8>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sl: SlParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhance: Option<EnhancementParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlStudyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenization: Option<HomogenizationParams>,
}

impl RunConfig {
    pub fn new(subcommand: SubcommandName) -> Self {
        serde_json::from_value(serde_json::json!({ "subcommand": subcommand })).expect("defaults deserialize")
    }

    /// The field law, with named families resolved.
    pub fn field_spec(&self) -> Result<FieldSpec> {
        let mut spec = match &self.field {
            FieldChoice::Spec(s) => s.clone(),
            FieldChoice::Named(name) => named_field(name, self.amplitude)?,
        };
        if let Some(d) = &self.drift {
            spec = spec.with_drift(d.clone());
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Rejects parameter combinations the requested solve cannot honour.
    pub fn validate(&self) -> Result<()> {
        let spec = self.field_spec()?;
        if self.ensemble == 0 {
            return Err(Error::config("ensemble must be at least 1"));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config(format!("h must be positive, got {h}")));
            }
        }
        if let (Some(h), Some(l)) = (self.h, self.half_width) {
            if !(l >= 10.0 * h) {
                return Err(Error::config(format!(
                    "grid invariant violated: L = {l} must be at least 10 h = {}",
                    10.0 * h
                )));
            }
        }
        if let Some(p) = &self.p {
            if p.len() != spec.dimension {
                return Err(Error::config(format!("p has {} components but the field has dimension {}", p.len(), spec.dimension)));
            }
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::config(format!("eps must be positive, got {e}")));
            }
        }
        self.sl.validate()?;
        if self.subcommand == SubcommandName::Mintime {
            if let (Some(t), Some(l)) = (self.horizon, self.half_width) {
                let m = make_field::<2>(&spec, self.seed)?.speed_bound();
                if m * t > l {
                    return Err(Error::config(format!(
                        "domain of dependence: M T = {m} * {t} = {} exceeds L = {l}; trajectories could leave the box",
                        m * t
                    )));
                }
            }
        }
        if spec.dimension != 2 && self.subcommand != SubcommandName::Field {
            return Err(Error::config("the command line runs 2D fields only (field.dimension = 2)"));
        }
        Ok(())
    }
}

fn named_field(name: &str, amplitude: Option<f64>) -> Result<FieldSpec> {
    let a = || amplitude.ok_or_else(|| Error::config(format!("field `{name}` needs the amplitude A")));
    Ok(match name.to_ascii_lowercase().replace('-', "_").as_str() {
        "zero" => FieldSpec::zero(),
        "constant" => FieldSpec::constant(vec![a()?, 0.0]),
        "cellular" => FieldSpec::cellular(a()?),
        "shear" => FieldSpec::shear(a()?),
        "random_phase" => FieldSpec::new(FieldFamily::default_random_phase(a()?)),
        "poisson_bumps" => FieldSpec::poisson_bumps(0.5, 0.5, a()?),
        "counterexample" => FieldSpec::counterexample(amplitude.unwrap_or(1.5)),
        other => {
            return Err(Error::config(format!(
                "unknown field `{other}`; expected zero, constant, cellular, shear, random_phase, poisson_bumps or counterexample"
            )))
        }
    })
}

/// Parses a JSON run configuration; errors name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(format!("key `{path}`: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

#[derive(Debug, Parser)]
#[command(name = "gflame", version, about = "Effective Hamiltonians of the G-equation in random flows")]
pub struct Cli {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides SEED and the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a realization and write its velocity on a grid.
    Field(Common),
    /// Minimal time from the origin.
    Mintime(Common),
    /// Time-constant table `q(v_k)` and the shape `{q <= 1}`.
    Timeconst(Common),
    /// Three estimates of the effective Hamiltonian at `p`.
    Heff(Common),
    /// G-equation with affine data at scale `eps`.
    Gequation(Common),
    /// Shear enhancement study.
    Enhance(Common),
    /// Heavy-tailed counterexample study.
    Counterexample(Common),
    /// Random-control drift study.
    ControlStudy(Common),
    /// Convergence of `u_eps` to the homogenized solution.
    Homogenization(Common),
    /// Run the acceptance criteria.
    Acceptance(Common),
    /// Recompute the frozen reference constants.
    Oracle {
        /// Write the constants file here instead of printing it.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

/// Flags mirroring the configuration keys.
#[derive(Debug, Default, Args)]
pub struct Common {
    /// zero, constant, cellular, shear, random_phase, poisson_bumps or counterexample.
    #[arg(long)]
    pub field: Option<String>,
    /// Field amplitude.
    #[arg(long = "A", allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Mean velocity added to the field, e.g. `0.2,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub drift: Option<Vec<f64>>,
    /// Grid spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Grid half-width.
    #[arg(long = "L")]
    pub half_width: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Number of realizations.
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Slope `p`, e.g. `0,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Minimal-time solver.
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Number of unit directions in the time-constant table.
    #[arg(long)]
    pub directions: Option<usize>,
    /// Radii for the time-constant fit, e.g. `4,6,8`.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Scale of the oscillations.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Gap shape of the counterexample.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of counterexample realizations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Acceptance profile.
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Acceptance criteria to run, e.g. `1,5,14`; all by default.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<u8>>,
}

impl Common {
    fn apply(self, cfg: &mut RunConfig) {
        if let Some(f) = self.field {
            cfg.field = FieldChoice::Named(f);
        }
        macro_rules! set {
            ($($flag:ident => $key:ident),*) => {$(
                if self.$flag.is_some() {
                    cfg.$key = self.$flag;
                }
            )*};
        }
        set!(amplitude => amplitude, drift => drift, h => h, half_width => half_width, horizon => horizon,
             p => p, method => method, directions => directions, radii => radii, eps => eps, alpha => alpha,
             n => n, profile => profile, criteria => criteria);
        if let Some(e) = self.ensemble {
            cfg.ensemble = e;
        }
    }
}

fn command_name(c: &Command) -> Option<SubcommandName> {
    Some(match c {
        Command::Field(_) => SubcommandName::Field,
        Command::Mintime(_) => SubcommandName::Mintime,
        Command::Timeconst(_) => SubcommandName::Timeconst,
        Command::Heff(_) => SubcommandName::Heff,
        Command::Gequation(_) => SubcommandName::Gequation,
        Command::Enhance(_) => SubcommandName::Enhance,
        Command::Counterexample(_) => SubcommandName::Counterexample,
        Command::ControlStudy(_) => SubcommandName::ControlStudy,
        Command::Homogenization(_) => SubcommandName::Homogenization,
        Command::Acceptance(_) => SubcommandName::Acceptance,
        Command::Oracle { .. } => return None,
    })
}

/// Merges the configuration file, `SEED` and the flags into a validated
/// configuration.
pub fn resolve(cli: Cli, env_seed: Option<String>) -> Result<RunConfig> {
    let from_file = cli.config.as_deref().map(load_config).transpose()?;
    let (name, common) = match cli.command {
        Some(c) => {
            let name = command_name(&c).expect("oracle handled by the caller");
            let common = match c {
                Command::Field(a)
                | Command::Mintime(a)
                | Command::Timeconst(a)
                | Command::Heff(a)
                | Command::Gequation(a)
                | Command::Enhance(a)
                | Command::Counterexample(a)
                | Command::ControlStudy(a)
                | Command::Homogenization(a)
                | Command::Acceptance(a) => a,
                Command::Oracle { .. } => unreachable!(),
            };
            (Some(name), common)
        }
        None => (None, Common::default()),
    };
    let mut cfg = match (from_file, name) {
        (Some(f), Some(n)) if f.subcommand != n => {
            return Err(Error::config(format!(
                "subcommand: the configuration asks for `{:?}` but the command line for `{:?}`",
                f.subcommand, n
            )))
        }
        (Some(f), _) => f,
        (None, Some(n)) => RunConfig::new(n),
        (None, None) => return Err(Error::config("no subcommand given and no --config file")),
    };
    common.apply(&mut cfg);
    if let Some(s) = env_seed {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("SEED must be an unsigned integer, got `{s}`")))?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of a dispatched run.
#[derive(Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub summary: String,
}

fn writer(cfg: &RunConfig) -> Result<ArtifactWriter> {
    // where the artifacts go is not part of what was computed
    let mut identity = serde_json::to_value(cfg)?;
    if let Some(m) = identity.as_object_mut() {
        m.remove("out");
    }
    ArtifactWriter::new(&cfg.out, Provenance::new(&identity, cfg.seed))
}

fn seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.ensemble as u64).map(|i| ensemble_seed(cfg.seed, i)).collect()
}

fn p2(cfg: &RunConfig, default: [f64; 2]) -> [f64; 2] {
    cfg.p.as_ref().map_or(default, |p| [p[0], p[1]])
}

fn finish(w: &ArtifactWriter, rep: ExperimentReport) -> Result<RunOutcome> {
    let text = rep.to_text();
    w.text("report.txt", &text)?;
    Ok(RunOutcome {
        passed: rep.passed(),
        summary: text,
    })
}

pub fn dispatch(cfg: &RunConfig) -> Result<RunOutcome> {
    let w = writer(cfg)?;
    match cfg.subcommand {
        SubcommandName::Field => field_cmd(cfg, &w),
        SubcommandName::Mintime => mintime_cmd(cfg, &w),
        SubcommandName::Timeconst => timeconst_cmd(cfg, &w),
        SubcommandName::Heff => heff_cmd(cfg, &w),
        SubcommandName::Gequation => gequation_cmd(cfg, &w),
        SubcommandName::Enhance => {
            let mut params = cfg.enhance.clone().unwrap_or_default();
            if let Some(t) = cfg.horizon {
                params.horizon = t;
            }
            finish(&w, run_enhancement(&params, &cfg.tolerances, Some(&w))?)
        }
        SubcommandName::Counterexample => {
            let mut params = cfg.counterexample.clone().unwrap_or_default();
            if let Some(a) = cfg.alpha {
                params.gap_shapes[0] = a;
            }
            if let Some(n) = cfg.n {
                params.sizes = vec![(n / 100).max(1), (n / 10).max(2), n];
                params.sizes.dedup();
            }
            finish(&w, run_counterexample(&params, &cfg.tolerances, cfg.seed, Some(&w))?)
        }
        SubcommandName::ControlStudy => {
            let mut params = cfg.control.clone().unwrap_or_default();
            if cfg.amplitude.is_some() || cfg.field != default_field() {
                params.field = cfg.field_spec()?;
            }
            if let Some(t) = cfg.horizon {
                params.horizon = t;
            }
            finish(&w, run_random_control_study(&params, &cfg.tolerances, cfg.seed, Some(&w))?)
        }
        SubcommandName::Homogenization => {
            let mut params = cfg.homogenization.clone().unwrap_or_default();
            if cfg.amplitude.is_some() || cfg.field != default_field() {
                params.field = cfg.field_spec()?;
            }
            if let Some(p) = &cfg.p {
                params.p = [p[0], p[1]];
            }
            if let Some(h) = cfg.h {
                params.h = h;
            }
            finish(&w, run_homogenization(&params, &cfg.tolerances, Some(&w))?)
        }
        SubcommandName::Acceptance => acceptance_cmd(cfg, &w),
    }
}

fn field_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let spec = cfg.field_spec()?;
    let (h, l) = (cfg.h.unwrap_or(0.05), cfg.half_width.unwrap_or(1.0));
    let mut summary = String::new();
    if spec.dimension != 2 {
        let f = make_field::<3>(&spec, cfg.seed)?;
        summary.push_str(&format!("dimension = 3\nv_max = {}\nlipschitz = {}\n", f.v_max(), f.lipschitz()));
        w.text("field.txt", &summary)?;
        return Ok(RunOutcome { passed: true, summary });
    }
    let f = make_field::<2>(&spec, cfg.seed)?;
    let grid = Grid::<2>::open(h, l)?;
    let mut rows = Vec::with_capacity(grid.len());
    let (mut vmax, mut div): (f64, f64) = (0.0, 0.0);
    for i in 0..grid.len() {
        let x = grid.point(i);
        let v = f.eval(&x);
        vmax = vmax.max(crate::vecops::norm(&v));
        div = div.max(divergence_estimate(&f, &x, 1e-4).abs());
        rows.push(vec![x[0], x[1], v[0], v[1]]);
    }
    w.csv("field.csv", &["x1", "x2", "v1", "v2"], &rows)?;
    w.json("realization.json", &f.record())?;
    summary = format!(
        "v_max_bound = {}\nv_max_sampled = {vmax}\nlipschitz_bound = {}\nmax_abs_divergence = {div:.3e}\nmean = {:?}\n",
        f.v_max(),
        f.lipschitz(),
        f.mean()
    );
    w.text("field.txt", &summary)?;
    Ok(RunOutcome { passed: true, summary })
}

fn method(cfg: &RunConfig) -> MinTimeMethod {
    match cfg.method.unwrap_or(MethodName::Graph) {
        MethodName::Graph => MinTimeMethod::Graph { rho: 6 },
        MethodName::Sweeping => MinTimeMethod::Sweeping,
    }
}

fn mintime_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let f = make_field::<2>(&cfg.field_spec()?, cfg.seed)?;
    let (h, l) = (cfg.h.unwrap_or(0.02), cfg.half_width.unwrap_or(2.0));
    let grid = Grid::<2>::open(h, l)?;
    let solve = min_time(&f, [0.0, 0.0], &grid, method(cfg), Vec::new(), cfg.horizon)?;
    let mut buf = Vec::new();
    solve.theta.write_csv(&mut buf)?;
    w.csv_text("theta.csv", &String::from_utf8_lossy(&buf))?;
    let trusted = solve.trusted_time(f.speed_bound());
    let summary = format!(
        "nodes = {}\nreachable = {}\ntrusted_time = {trusted}\ncycles = {}\nresidual = {:.3e}\n",
        grid.len(),
        solve.theta.reachable_count(),
        solve.cycles,
        solve.residual
    );
    w.text("mintime.txt", &summary)?;
    Ok(RunOutcome { passed: true, summary })
}

fn default_radii(cfg: &RunConfig) -> Vec<f64> {
    // dense radii average out the period-scale oscillation of theta(0, r v) / r
    cfg.radii.clone().unwrap_or_else(|| (0..33).map(|i| 8.0 + 0.25 * i as f64).collect())
}

fn timeconst_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let spec = cfg.field_spec()?;
    let mc = MinTimeConfig {
        h: cfg.h.unwrap_or(1.0 / 32.0),
        method: method(cfg),
        half_width: cfg.half_width,
    };
    let table = support_table::<2>(&spec, &seeds(cfg), cfg.directions.unwrap_or(16), &default_radii(cfg), &mc, Orientation::Forward)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    w.csv_text("timeconst.csv", &String::from_utf8_lossy(&buf))?;
    let mut hull = table.hull();
    if let Some(first) = hull.first().copied() {
        hull.push(first);
    }
    let mut plot = LinePlot::new("Shape {q <= 1}", "x1", "x2")
        .with(Series::line("hull", hull.iter().map(|p| (p[0], p[1])).collect()));
    plot.equal_aspect = true;
    w.svg("shape.svg", &plot)?;
    let m = make_field::<2>(&spec, cfg.seed)?.speed_bound();
    let summary = format!(
        "directions = {}\nq_min = {}\nq_max = {}\nbounds_violation = {}\nconvexity_violation = {}\nlipschitz_violation = {}\n",
        table.estimates.len(),
        table.q_bar().iter().copied().fold(f64::INFINITY, f64::min),
        table.q_bar().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        table.bounds_violation(m),
        table.convexity_violation(),
        table.lipschitz_violation()
    );
    Ok(RunOutcome { passed: true, summary })
}

fn heff_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let spec = cfg.field_spec()?;
    let p = p2(cfg, [1.0, 0.0]);
    let seeds = seeds(cfg);
    let mc = MinTimeConfig {
        h: cfg.h.unwrap_or(1.0 / 32.0),
        method: method(cfg),
        half_width: None,
    };
    let radii = default_radii(cfg);
    let table = support_table::<2>(&spec, &seeds, cfg.directions.unwrap_or(16), &radii, &mc, Orientation::Backward)?;
    let cell = CellConfig {
        sl: cfg.sl.clone(),
        ..CellConfig::default()
    };
    let dual = effective_hamiltonian_dual(&table, &p)?;
    let disc = effective_hamiltonian_discounted::<2>(&spec, &seeds, p, &[0.2, 0.1, 0.05], &cell)?;
    let time = effective_hamiltonian_time::<2>(&spec, &seeds, p, cfg.horizon.unwrap_or(20.0), &cell)?;
    let est = HamiltonianEstimate::new(p.to_vec(), dual, disc.extrapolated, time, spec.mean());
    w.csv(
        "heff.csv",
        &["p1", "p2", "h_dual", "h_disc", "h_time", "disagreement"],
        &[vec![p[0], p[1], est.h_dual, est.h_disc, est.h_time, est.disagreement]],
    )?;
    let summary = format!(
        "p = {p:?}\nh_dual = {:.6}\nh_disc = {:.6}\nh_time = {:.6}\ndisagreement = {:.4}\n",
        est.h_dual, est.h_disc, est.h_time, est.disagreement
    );
    Ok(RunOutcome { passed: true, summary })
}

fn gequation_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let spec = cfg.field_spec()?;
    let f = make_field::<2>(&spec, cfg.seed)?;
    let eps = cfg.eps.unwrap_or(1.0);
    let scaled = Scaled::new(&f, eps);
    let p = p2(cfg, [0.0, 1.0]);
    let t = cfg.horizon.unwrap_or(1.0);
    let h = cfg.h.unwrap_or(eps / 32.0);
    let (grid, core) = match spec.family.period() {
        Some(period) => (Grid::<2>::periodic(h, 0.5 * period)?, 0.5 * period),
        None => {
            let core = cfg.half_width.unwrap_or(0.5);
            let need = core + 2.0 * f.speed_bound() * t;
            (Grid::<2>::open(h, (need / h).ceil() * h)?, core)
        }
    };
    let opts = TimeOptions {
        core_half_width: Some(core),
        snapshots: Vec::new(),
    };
    let ts = solve_time_dependent_sl(&scaled, InitialData::Affine(p), t, &grid, &cfg.sl, &opts)?;
    let mut buf = Vec::new();
    ts.slices[0].write_csv(&mut buf)?;
    w.csv_text("u_final.csv", &String::from_utf8_lossy(&buf))?;
    let summary = format!("T = {}\nnodes = {}\nrate_at_origin = {:.6}\n", ts.times[0], grid.len(), ts.z_origin[0] / ts.times[0]);
    Ok(RunOutcome { passed: true, summary })
}

fn acceptance_cmd(cfg: &RunConfig, w: &ArtifactWriter) -> Result<RunOutcome> {
    let ctx = AcceptanceContext::new(cfg.profile.unwrap_or(Profile::Quick), cfg.seed, cfg.tolerances.clone(), Some(w));
    let ids = cfg.criteria.clone().unwrap_or_default();
    let outcomes = run_acceptance(&ctx, &ids, |o: &CriterionOutcome| println!("{}", o.summary()));
    let total: f64 = outcomes.iter().map(|o| o.seconds).sum();
    let passed = outcomes.iter().filter(|o| o.passed()).count();
    let mut text: String = outcomes.iter().map(|o| o.summary() + "\n").collect();
    text.push_str(&format!("passed = {passed}/{}\nwall_clock_s = {total:.1}\n", outcomes.len()));
    w.text("acceptance.txt", &text)?;
    w.json("acceptance.json", &outcomes)?;
    Ok(RunOutcome {
        passed: passed == outcomes.len(),
        summary: format!("passed = {passed}/{}, {total:.1} s", outcomes.len()),
    })
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with(cli: Cli, env_seed: Option<String>) -> i32 {
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("configuration error: cannot set up {k} threads: {e}");
            return 2;
        }
    }
    if let Some(Command::Oracle { write }) = &cli.command {
        let master = cli.seed.unwrap_or(1);
        return match compute_frozen(master) {
            Ok(v) => {
                let text = render_frozen(&v, master);
                match write {
                    Some(p) => {
                        if let Err(e) = fs::write(p, &text) {
                            eprintln!("{}", Error::from(e));
                            return 1;
                        }
                    }
                    None => print!("{text}"),
                }
                0
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        };
    }
    let cfg = match resolve(cli, env_seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match dispatch(&cfg) {
        Ok(o) => {
            println!("{}", o.summary.trim_end());
            if o.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_valid() {
        let c = parse_config(r#"{"subcommand": "mintime", "field": "Zero", "h": 0.02, "L": 2, "seed": 1}"#).unwrap();
        assert_eq!(c.subcommand, SubcommandName::Mintime);
        assert_eq!(c.field_spec().unwrap(), FieldSpec::zero());
    }

    #[test]
    fn small_box_names_the_grid_invariant() {
        let e = parse_config(r#"{"subcommand": "mintime", "h": 0.02, "L": 0.1}"#).unwrap_err();
        assert!(e.to_string().contains("grid invariant"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn horizon_beyond_the_box_is_rejected() {
        let e = parse_config(r#"{"subcommand": "mintime", "field": "cellular", "A": 2, "h": 0.02, "L": 2, "T": 1}"#)
            .unwrap_err();
        assert!(e.to_string().contains("domain of dependence"), "{e}");
    }

    #[test]
    fn unknown_and_mistyped_keys_are_named() {
        let e = parse_config(r#"{"subcommand": "mintime", "hh": 0.02}"#).unwrap_err();
        assert!(e.to_string().contains("hh"), "{e}");
        let e = parse_config(r#"{"subcommand": "mintime", "h": "small"}"#).unwrap_err();
        assert!(e.to_string().contains("`h`"), "{e}");
        let e = parse_config(r#"{"subcommand": "enhance", "tolerances": {"estimator_rel": true}}"#).unwrap_err();
        assert!(e.to_string().contains("tolerances.estimator_rel"), "{e}");
    }

    #[test]
    fn flags_and_seed_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"subcommand": "heff", "field": "cellular", "A": 1, "seed": 4}"#).unwrap();
        let cli = Cli::parse_from(["gflame", "--config", path.to_str().unwrap(), "heff", "--A", "2", "--p", "0,1"]);
        let c = resolve(cli, Some("9".into())).unwrap();
        assert_eq!((c.amplitude, c.seed), (Some(2.0), 9));
        assert_eq!(c.p, Some(vec![0.0, 1.0]));
        let cli = Cli::parse_from(["gflame", "--config", path.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(resolve(cli, Some("9".into())).unwrap().seed, 3);
        let cli = Cli::parse_from(["gflame", "--config", path.to_str().unwrap(), "mintime"]);
        assert!(resolve(cli, None).is_err());
    }
}
