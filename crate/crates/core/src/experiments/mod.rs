//! End-to-end studies. Each returns an [`ExperimentReport`] whose verdicts
//! cite a claim from [`CLAIMS`] and compare against tolerances held in
//! [`Tolerances`].

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::field::ensemble_seed;

pub mod acceptance;
pub mod control;
pub mod counterexample;
pub mod enhancement;
pub mod frozen;
pub mod homogenization;
pub mod oracle;

pub use acceptance::{run_acceptance, run_criterion, AcceptanceContext, Profile, CRITERIA};
pub use control::{run_random_control_study, ControlStudyParams};
pub use counterexample::{run_counterexample, CounterexampleParams};
pub use enhancement::{run_enhancement, EnhancementParams};
pub use homogenization::{run_homogenization, HomogenizationParams};

/// Claim identifiers and what they assert.
pub const CLAIMS: &[(&str, &str)] = &[
    ("eikonal", "V = 0: minimal time equals |y| on the trusted region"),
    ("drift_q", "constant drift: q(v) is the root of |v - t c| = t"),
    ("q_bounds", "1/M <= q(v) <= |v|"),
    ("q_convex", "q is convex (midpoint test on adjacent directions)"),
    ("q_lipschitz", "q is 1-Lipschitz"),
    ("estimators", "dual, discounted and time-dependent estimates of H agree"),
    ("hen_orthogonal", "H(p) = |p| when <V, p> = 0"),
    ("hen_active", "H(p) > |p| when <V, p> is not identically zero"),
    ("hen_monotone", "H(e2) grows with the shear amplitude"),
    ("hom_lower", "H(p) >= |p| + <E[V], p>"),
    ("mean_shift", "H(p) = H~(p) + <E[V], p> for the centred field"),
    ("vol_growth", "|R_t|^(1/N) >= t / (N c_I)"),
    ("perimeter_window", "Per(R_s) <= K s^(N-1) for some s in [t/2, t]"),
    ("shape", "R_t / t converges to {q <= 1}"),
    ("cex_tail", "delta has tail index gap_shape - 1"),
    ("cex_growth", "running mean of delta diverges for gap_shape < 2"),
    ("cex_control", "running mean of delta stabilizes for gap_shape > 2"),
    ("cex_bound", "theta(0, e2) + theta(0, -e2) >= delta"),
    ("hom_convergence", "u_eps -> <p, x> + t H(p) as eps -> 0"),
    ("control_drift", "|X_t / t - a| <= C delta_c"),
    ("control_moments", "switch gaps have mean delta_c and E|t - delta_c| <= delta_c^2"),
    ("zero_drift", "zero field: drift <= eps_c + 0.01"),
    ("gamma", "theta(0, X_sigma_n) / sigma_n stabilizes"),
    ("collinear", "2D constant control: X_T / T is parallel to a"),
    ("comparison", "the monotone scheme preserves order"),
    ("consistency", "numerical Hamiltonian is consistent"),
    ("subadditive", "grid minimal time is subadditive"),
    ("oracle_equivalence", "graph oracle and sweeping agree"),
];

/// One pass/fail line.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub passed: bool,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Verdict {
    fn make(claim: &str, passed: bool, measured: f64, target: f64, tolerance: f64, note: String) -> Self {
        debug_assert!(CLAIMS.iter().any(|(c, _)| *c == claim), "unknown claim {claim}");
        Verdict {
            claim: claim.to_string(),
            passed,
            measured,
            target,
            tolerance,
            note,
        }
    }

    /// `measured <= bound`.
    pub fn at_most(claim: &str, measured: f64, bound: f64, note: impl Into<String>) -> Self {
        Self::make(claim, measured <= bound, measured, bound, 0.0, note.into())
    }

    /// `measured >= bound`.
    pub fn at_least(claim: &str, measured: f64, bound: f64, note: impl Into<String>) -> Self {
        Self::make(claim, measured >= bound, measured, bound, 0.0, note.into())
    }

    /// `|measured - target| <= tol`.
    pub fn within(claim: &str, measured: f64, target: f64, tol: f64, note: impl Into<String>) -> Self {
        Self::make(claim, (measured - target).abs() <= tol, measured, target, tol, note.into())
    }

    /// `lo < measured < hi`; target is the midpoint, tolerance the half-width.
    pub fn in_open_range(claim: &str, measured: f64, lo: f64, hi: f64, note: impl Into<String>) -> Self {
        Self::make(claim, measured > lo && measured < hi, measured, 0.5 * (lo + hi), 0.5 * (hi - lo), note.into())
    }

    pub fn check(claim: &str, ok: bool, note: impl Into<String>) -> Self {
        Self::make(claim, ok, ok as u8 as f64, 1.0, 0.0, note.into())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub parameters: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<String>,
    pub wall_clock: f64,
}

impl ExperimentReport {
    pub(crate) fn start(id: &str, parameters: &impl Serialize) -> (Self, Instant) {
        (
            ExperimentReport {
                id: id.to_string(),
                parameters: serde_json::to_value(parameters).expect("parameters serialize"),
                verdicts: Vec::new(),
                artifacts: Vec::new(),
                wall_clock: 0.0,
            },
            Instant::now(),
        )
    }

    pub(crate) fn finish(mut self, t0: Instant) -> Self {
        self.wall_clock = t0.elapsed().as_secs_f64();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Key-value text: one `key = value` line per field and per verdict.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "experiment = {}", self.id).unwrap();
        writeln!(s, "parameters = {}", self.parameters).unwrap();
        writeln!(s, "passed = {}", self.passed()).unwrap();
        writeln!(s, "wall_clock_s = {:.3}", self.wall_clock).unwrap();
        for (i, v) in self.verdicts.iter().enumerate() {
            writeln!(
                s,
                "verdict.{i} = {} {} measured={:.6} target={:.6} tol={:.6} {}",
                v.claim,
                if v.passed { "PASS" } else { "FAIL" },
                v.measured,
                v.target,
                v.tolerance,
                v.note
            )
            .unwrap();
        }
        for a in &self.artifacts {
            writeln!(s, "artifact = {a}").unwrap();
        }
        s
    }
}

/// Tolerances of every verdict. Defaults are the acceptance thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Eikonal error in units of `h`.
    pub eikonal_h: f64,
    pub drift_q_rel: f64,
    pub q_bounds_abs: f64,
    pub convexity_rel: f64,
    pub lipschitz_abs: f64,
    pub estimator_rel: f64,
    pub orthogonal_rel: f64,
    /// Allowed dip when checking monotonicity in amplitude.
    pub monotone_rel: f64,
    pub lower_bound_rel: f64,
    pub mean_shift_rel: f64,
    pub isoperimetric_zero_rel: f64,
    pub isoperimetric_rel: f64,
    pub shape_fraction: f64,
    pub hill_low: f64,
    pub hill_high: f64,
    pub growth_factor: f64,
    pub stabilization_rel: f64,
    /// Final homogenization error in units of `1 + |p|`.
    pub homogenization_final: f64,
    pub drift_constant_ratio: f64,
    pub moment_sigmas: f64,
    pub zero_drift_slack: f64,
    pub gamma_oscillation: f64,
    pub collinear_rel: f64,
    pub subadditive_h: f64,
    pub oracle_h: f64,
    pub oracle_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eikonal_h: 2.0,
            drift_q_rel: 0.02,
            q_bounds_abs: 0.03,
            convexity_rel: 0.03,
            lipschitz_abs: 0.03,
            estimator_rel: 0.05,
            orthogonal_rel: 0.02,
            monotone_rel: 0.02,
            lower_bound_rel: 0.03,
            mean_shift_rel: 0.04,
            isoperimetric_zero_rel: 0.02,
            isoperimetric_rel: 0.05,
            shape_fraction: 0.10,
            hill_low: 0.35,
            hill_high: 0.65,
            growth_factor: 2.0,
            stabilization_rel: 0.10,
            homogenization_final: 0.1,
            drift_constant_ratio: 2.0,
            moment_sigmas: 3.0,
            zero_drift_slack: 0.01,
            gamma_oscillation: 0.05,
            collinear_rel: 0.02,
            subadditive_h: 4.0,
            oracle_h: 3.0,
            oracle_rel: 0.05,
        }
    }
}

/// Seed of a named stream derived from the master seed.
pub fn stream_seed(master: u64, tag: &str) -> u64 {
    // FNV-1a of the tag
    let h = tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ensemble_seed(master, h)
}

pub(crate) fn rng(master: u64, tag: &str) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(stream_seed(master, tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_relations() {
        assert!(Verdict::at_most("eikonal", 0.01, 0.04, "").passed);
        assert!(!Verdict::at_least("q_bounds", 0.2, 0.3, "").passed);
        assert!(Verdict::within("drift_q", 0.72, 0.714, 0.01, "").passed);
        assert!(!Verdict::in_open_range("cex_tail", 0.65, 0.35, 0.65, "").passed);
    }

    #[test]
    fn report_text_lists_verdicts() {
        let (mut r, t0) = ExperimentReport::start("demo", &serde_json::json!({"a": 1}));
        r.verdicts.push(Verdict::check("shape", true, "ok"));
        let r = r.finish(t0);
        let t = r.to_text();
        assert!(t.contains("experiment = demo") && t.contains("verdict.0 = shape PASS"));
        assert!(r.passed());
    }

    #[test]
    fn streams_differ_by_tag() {
        assert_ne!(stream_seed(1, "a"), stream_seed(1, "b"));
        assert_eq!(stream_seed(7, "a"), stream_seed(7, "a"));
    }
}
