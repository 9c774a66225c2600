//! Reference constants produced by `gflame oracle` and checked in.
//! Regenerate with `gflame oracle --write <path>`; do not edit by hand.
//!
//! master seed 1, gflame 0.1.0

/// Shear amplitudes of the enhancement reference runs.
pub const SHEAR_AMPLITUDES: [f64; 3] = [0.5, 1.0, 2.0];

/// `H(e2)` on the shear, time-dependent solver, 128 nodes per period, T = 40.
pub const SHEAR_H_E2: [f64; 3] = [1.4964104371447466, 1.9946846116466432, 2.9917931906162876];

/// Required enhancement `H(e2) - 1` per amplitude: half the reference value.
pub const SHEAR_MARGIN: [f64; 3] = [0.248205, 0.497342, 0.995897];

/// Hill window as a fraction of the sample; on 1e5 samples at shape 1.5:
/// 0.01: 0.5137, 0.02: 0.5175, 0.05: 0.5025, 0.1: 0.5014.
pub const HILL_FRACTION: f64 = 0.1;
