//! Independent reference values, and the `--oracle` run that regenerates the
//! frozen constants at fine resolution.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{ensemble_seed, CounterexampleShear, FieldSpec, GapLaw};
use crate::hj::SlParams;
use crate::homogenize::{effective_hamiltonian_time, CellConfig};
use crate::stats::hill_tail_index;

/// `q(v)` for the constant field `c`: the root `t` of `|v - t c| = t`, by
/// bisection. Requires `|c| < 1`.
pub fn drift_time_constant(c: [f64; 2], v: [f64; 2]) -> f64 {
    let g = |t: f64| ((v[0] - t * c[0]).powi(2) + (v[1] - t * c[1]).powi(2)).sqrt() - t;
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Effective Hamiltonian of the shear `V = (0, g(x1))` at `p = (0, p2)`.
///
/// The cell problem is one-dimensional, `H(x1, q) = sqrt(q^2 + p2^2) + g p2`,
/// and at zero horizontal slope its value is `max_x min_q H = |p2| + max g p2`.
/// `g` is sampled on `samples` points of one period.
pub fn shear_vertical_hamiltonian(g: impl Fn(f64) -> f64, period: f64, p2: f64, samples: usize) -> f64 {
    let worst = (0..samples)
        .map(|i| g(period * i as f64 / samples as f64) * p2)
        .fold(f64::NEG_INFINITY, f64::max);
    p2.abs() + worst
}

/// Values written to `frozen.rs` by [`compute_frozen`].
#[derive(Clone, Debug)]
pub struct FrozenValues {
    pub shear_amplitudes: Vec<f64>,
    pub shear_h_e2: Vec<f64>,
    pub hill_fraction: f64,
    pub hill_by_fraction: Vec<(f64, f64)>,
}

/// Fine-resolution reference runs:
///
/// - `H(e2)` on the shear for each amplitude, time-dependent solver at 128
///   nodes per period, horizon 40;
/// - the Hill window: among candidate fractions, the one whose estimate on
///   `10^5` samples at gap shape 1.5 is closest to the tail index 0.5.
pub fn compute_frozen(master: u64) -> Result<FrozenValues> {
    let shear_amplitudes = vec![0.5, 1.0, 2.0];
    let cfg = CellConfig {
        cell_points: 128,
        h: 1.0 / 32.0,
        sl: SlParams::default(),
    };
    let shear_h_e2 = shear_amplitudes
        .iter()
        .map(|&a| effective_hamiltonian_time::<2>(&FieldSpec::shear(a), &[0], [0.0, 1.0], 40.0, &cfg))
        .collect::<Result<Vec<_>>>()?;

    let n = 100_000;
    let stream = super::stream_seed(master, "oracle/hill");
    let deltas: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(ensemble_seed(stream, i as u64));
            CounterexampleShear::sample_covering(GapLaw::pareto(1.5), 64.0, &mut rng).map(|s| s.delta())
        })
        .collect::<Result<_>>()?;
    let hill_by_fraction: Vec<(f64, f64)> = [0.01, 0.02, 0.05, 0.1]
        .iter()
        .map(|&f| Ok((f, hill_tail_index(&deltas, (f * n as f64) as usize)?)))
        .collect::<Result<_>>()?;
    let hill_fraction = hill_by_fraction
        .iter()
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
        .unwrap()
        .0;
    Ok(FrozenValues {
        shear_amplitudes,
        shear_h_e2,
        hill_fraction,
        hill_by_fraction,
    })
}

/// Source text of `frozen.rs`.
pub fn render_frozen(v: &FrozenValues, master: u64) -> String {
    let mut s = String::new();
    writeln!(s, "//! Reference constants produced by `gflame oracle` and checked in.").unwrap();
    writeln!(s, "//! Regenerate with `gflame oracle --write <path>`; do not edit by hand.").unwrap();
    writeln!(s, "//!").unwrap();
    writeln!(s, "//! master seed {master}, {}", crate::io::VERSION).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "/// Shear amplitudes of the enhancement reference runs.").unwrap();
    writeln!(s, "pub const SHEAR_AMPLITUDES: [f64; {}] = {:?};", v.shear_amplitudes.len(), v.shear_amplitudes).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "/// `H(e2)` on the shear, time-dependent solver, 128 nodes per period, T = 40.").unwrap();
    writeln!(s, "pub const SHEAR_H_E2: [f64; {}] = {:?};", v.shear_h_e2.len(), v.shear_h_e2).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "/// Required enhancement `H(e2) - 1` per amplitude: half the reference value.").unwrap();
    let margins: Vec<f64> = v.shear_h_e2.iter().map(|h| round6(0.5 * (h - 1.0))).collect();
    writeln!(s, "pub const SHEAR_MARGIN: [f64; {}] = {:?};", margins.len(), margins).unwrap();
    writeln!(s).unwrap();
    let table: Vec<String> = v.hill_by_fraction.iter().map(|(f, h)| format!("{f}: {h:.4}")).collect();
    writeln!(s, "/// Hill window as a fraction of the sample; on 1e5 samples at shape 1.5:").unwrap();
    writeln!(s, "/// {}.", table.join(", ")).unwrap();
    writeln!(s, "pub const HILL_FRACTION: f64 = {:?};", v.hill_fraction).unwrap();
    s
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_root_matches_closed_form() {
        assert!((drift_time_constant([0.4, 0.0], [1.0, 0.0]) - 1.0 / 1.4).abs() < 1e-12);
        assert!((drift_time_constant([0.4, 0.0], [-1.0, 0.0]) - 1.0 / 0.6).abs() < 1e-12);
        assert!((drift_time_constant([0.0, 0.0], [0.6, 0.8]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shear_reference_is_one_plus_amplitude() {
        let g = |x: f64| 2.0 * (2.0 * std::f64::consts::PI * x).sin();
        assert!((shear_vertical_hamiltonian(g, 1.0, 1.0, 400) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_file_renders() {
        let v = FrozenValues {
            shear_amplitudes: vec![0.5, 1.0, 2.0],
            shear_h_e2: vec![1.5, 2.0, 3.0],
            hill_fraction: 0.05,
            hill_by_fraction: vec![(0.05, 0.5)],
        };
        let s = render_frozen(&v, 1);
        assert!(s.contains("SHEAR_MARGIN: [f64; 3] = [0.25, 0.5, 1.0]"));
        assert!(s.contains("HILL_FRACTION: f64 = 0.05"));
    }
}
