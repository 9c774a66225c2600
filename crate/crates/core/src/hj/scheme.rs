use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::{dot, norm};

/// Lax–Friedrichs parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    /// Dissipation per axis; must dominate `1 + max |V_i|`.
    pub sigma: Vec<f64>,
    /// `dt = cfl h / sum sigma`.
    pub cfl: f64,
    /// Sweeping stops when no value moves by more than this (absolute).
    pub sweep_tolerance: f64,
    pub max_cycles: usize,
    /// Discounted iteration stops when the sup residual drops below this.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
}

impl SchemeParams {
    /// `sigma_i = 1 + max |V_i|` over the grid nodes, `cfl = 0.5`, sweep
    /// tolerance `1e-6 h`, 500 cycles.
    pub fn for_velocities<const D: usize>(grid: &Grid<D>, velocities: &[[f64; D]]) -> Self {
        let mut sigma = vec![1.0; D];
        for v in velocities {
            for a in 0..D {
                sigma[a] = f64::max(sigma[a], 1.0 + v[a].abs());
            }
        }
        SchemeParams {
            sigma,
            cfl: 0.5,
            sweep_tolerance: 1e-6 * grid.h,
            max_cycles: 500,
            residual_tolerance: 1e-6,
            max_iterations: 5_000_000,
        }
    }

    pub fn for_field<const D: usize, F: VelocityField<D> + ?Sized>(field: &F, grid: &Grid<D>) -> Self {
        Self::for_velocities(grid, &node_velocities(field, grid))
    }

    pub fn dt(&self, h: f64) -> f64 {
        self.cfl * h / self.sigma.iter().sum::<f64>()
    }

    /// Checks monotonicity (`sigma_i >= 1 + max |V_i|`) and the CFL bound.
    pub fn validate<const D: usize>(&self, velocities: &[[f64; D]]) -> Result<()> {
        if self.sigma.len() != D {
            return Err(Error::config("sigma must have one entry per axis"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config("cfl must lie in (0, 1]"));
        }
        for v in velocities {
            for a in 0..D {
                if self.sigma[a] < 1.0 + v[a].abs() - 1e-12 {
                    return Err(Error::config(format!(
                        "sigma[{a}] = {} below 1 + |V_{a}| = {}",
                        self.sigma[a],
                        1.0 + v[a].abs()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `V` at every node, evaluated in parallel.
pub fn node_velocities<const D: usize, F: VelocityField<D> + ?Sized>(field: &F, grid: &Grid<D>) -> Vec<[f64; D]> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| field.velocity(&grid.point(i)))
        .collect()
}

/// `H(p) = |p| + <V, p>`.
#[inline]
pub fn hamiltonian<const D: usize>(p: &[f64; D], v: &[f64; D]) -> f64 {
    norm(p) + dot(v, p)
}

/// Lax–Friedrichs flux `H(p_bar) - sum sigma_i (p+_i - p-_i) / 2`,
/// nonincreasing in `p+` and nondecreasing in `p-`. Used for the static
/// minimal-time equation and the level-set front.
#[inline]
pub fn numerical_hamiltonian<const D: usize>(pm: &[f64; D], pp: &[f64; D], v: &[f64; D], sigma: &[f64]) -> f64 {
    let mut pbar = [0.0; D];
    let mut diss = 0.0;
    for a in 0..D {
        pbar[a] = 0.5 * (pp[a] + pm[a]);
        diss += sigma[a] * (pp[a] - pm[a]);
    }
    hamiltonian(&pbar, v) - 0.5 * diss
}

/// Flux with the opposite dissipation sign, `H(p_bar) + sum sigma_i (p+_i -
/// p-_i) / 2`, monotone for the forward update `u += dt G` of
/// `u_t = H(Du)`. Equals `numerical_hamiltonian(-p-, -p+, -V)`.
#[inline]
pub fn ascent_hamiltonian<const D: usize>(pm: &[f64; D], pp: &[f64; D], v: &[f64; D], sigma: &[f64]) -> f64 {
    let mut pbar = [0.0; D];
    let mut diss = 0.0;
    for a in 0..D {
        pbar[a] = 0.5 * (pp[a] + pm[a]);
        diss += sigma[a] * (pp[a] - pm[a]);
    }
    hamiltonian(&pbar, v) + 0.5 * diss
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn consistency() {
        let p = [0.3, -1.2];
        let v = [0.5, 0.25];
        let s = [2.0, 2.0];
        assert_eq!(numerical_hamiltonian(&p, &p, &v, &s), hamiltonian(&p, &v));
        assert_eq!(ascent_hamiltonian(&p, &p, &v, &s), hamiltonian(&p, &v));
        assert_eq!(numerical_hamiltonian(&[0.0; 2], &[0.0; 2], &v, &s), 0.0);
    }

    #[test]
    fn monotone_in_one_sided_slopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let v: [f64; 2] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let s: Vec<f64> = v.iter().map(|c| 1.0 + c.abs()).collect();
            let pm: [f64; 2] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let pp: [f64; 2] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let base = numerical_hamiltonian(&pm, &pp, &v, &s);
            let up = ascent_hamiltonian(&pm, &pp, &v, &s);
            for a in 0..2 {
                let mut q = pp;
                q[a] += 0.1;
                assert!(numerical_hamiltonian(&pm, &q, &v, &s) <= base + 1e-12);
                assert!(ascent_hamiltonian(&pm, &q, &v, &s) >= up - 1e-12);
                let mut q = pm;
                q[a] += 0.1;
                assert!(numerical_hamiltonian(&q, &pp, &v, &s) >= base - 1e-12);
                assert!(ascent_hamiltonian(&q, &pp, &v, &s) <= up + 1e-12);
            }
            let neg = |x: &[f64; 2]| [-x[0], -x[1]];
            let mirrored = numerical_hamiltonian(&neg(&pm), &neg(&pp), &neg(&v), &s);
            assert!((mirrored - up).abs() < 1e-12);
        }
    }
}
