use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One plane-wave mode `A cos(<k, x> + phi) e`, with `e` a unit vector
/// orthogonal to `k` (in 2D, `e = (k2, -k1) / |k|`, the stream convention).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMode {
    pub amplitude: f64,
    pub wave_vector: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(super) struct FrozenMode<const D: usize> {
    amplitude: f64,
    k: [f64; D],
    polarization: [f64; D],
    phase: f64,
}

pub(super) fn validate(modes: &[PhaseMode], dim: usize) -> Result<()> {
    if modes.len() < 2 {
        return Err(Error::config(
            "random_phase_stream needs at least two modes (a single mode is not ergodic)",
        ));
    }
    for m in modes {
        if m.wave_vector.len() != dim || m.wave_vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(format!(
                "random_phase_stream wave vectors must have {dim} finite components"
            )));
        }
        if m.wave_vector.iter().all(|x| *x == 0.0) {
            return Err(Error::config("random_phase_stream wave vector must be nonzero"));
        }
        if !m.amplitude.is_finite() {
            return Err(Error::config("random_phase_stream amplitude must be finite"));
        }
    }
    if !is_ergodic_family(modes) {
        return Err(Error::config(
            "random_phase_stream wave vectors satisfy an integer relation; the phase \
             field would not be ergodic",
        ));
    }
    Ok(())
}

/// Ergodicity of the translation action on the phase torus needs the wave
/// vectors to satisfy no integer relation `sum m_j k_j = 0`. Relations with
/// small coefficients are searched exhaustively.
fn is_ergodic_family(modes: &[PhaseMode]) -> bool {
    let n = modes.len();
    let bound: i64 = match n {
        0..=4 => 8,
        5..=7 => 2,
        _ => 1,
    };
    let dim = modes[0].wave_vector.len();
    let scale: f64 = modes
        .iter()
        .flat_map(|m| m.wave_vector.iter())
        .fold(0.0_f64, |a, x| a.max(x.abs()));
    let mut coeffs = vec![-bound; n];
    loop {
        if coeffs.iter().any(|c| *c != 0) {
            let zero = (0..dim).all(|d| {
                let s: f64 = modes
                    .iter()
                    .zip(&coeffs)
                    .map(|(m, c)| *c as f64 * m.wave_vector[d])
                    .sum();
                s.abs() < 1e-9 * scale
            });
            if zero {
                return false;
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                return true;
            }
            coeffs[i] += 1;
            if coeffs[i] > bound {
                coeffs[i] = -bound;
                i += 1;
            } else {
                break;
            }
        }
    }
}

pub(super) fn freeze<const D: usize, R: Rng>(modes: &[PhaseMode], rng: &mut R) -> Vec<FrozenMode<D>> {
    modes
        .iter()
        .map(|m| {
            let k: [f64; D] = std::array::from_fn(|i| m.wave_vector[i]);
            let nk = crate::vecops::norm(&k);
            let polarization = if D == 2 {
                let mut e = [0.0; D];
                e[0] = k[1] / nk;
                e[1] = -k[0] / nk;
                e
            } else {
                random_orthogonal_unit(&k, rng)
            };
            FrozenMode {
                amplitude: m.amplitude,
                k,
                polarization,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect()
}

fn random_orthogonal_unit<const D: usize, R: Rng>(k: &[f64; D], rng: &mut R) -> [f64; D] {
    use crate::vecops::{axpy, dot, norm, scale};
    let kk = dot(k, k);
    loop {
        let g: [f64; D] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let e = axpy(&g, -dot(&g, k) / kk, k);
        let n = norm(&e);
        if n > 1e-3 {
            return scale(&e, 1.0 / n);
        }
    }
}

pub(super) fn eval<const D: usize>(modes: &[FrozenMode<D>], x: &[f64; D]) -> [f64; D] {
    let mut v = [0.0; D];
    for m in modes {
        let c = m.amplitude * (crate::vecops::dot(&m.k, x) + m.phase).cos();
        for i in 0..D {
            v[i] += c * m.polarization[i];
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(k: Vec<f64>) -> PhaseMode {
        PhaseMode {
            amplitude: 1.0,
            wave_vector: k,
        }
    }

    #[test]
    fn single_mode_rejected() {
        assert!(validate(&[mode(vec![1.0, 0.0])], 2).is_err());
    }

    #[test]
    fn commensurate_pair_rejected() {
        assert!(validate(&[mode(vec![1.0, 0.0]), mode(vec![2.0, 0.0])], 2).is_err());
        assert!(validate(&[mode(vec![1.0, 1.0]), mode(vec![1.5, 1.5])], 2).is_err());
        let three = [mode(vec![1.0, 0.0]), mode(vec![0.0, 1.0]), mode(vec![1.0, 1.0])];
        assert!(validate(&three, 2).is_err());
    }

    #[test]
    fn independent_pair_accepted() {
        assert!(validate(&[mode(vec![1.0, 0.0]), mode(vec![0.0, 1.0])], 2).is_ok());
        assert!(validate(&[mode(vec![1.0, 0.0]), mode(vec![2f64.sqrt(), 0.0])], 2).is_ok());
    }
}
