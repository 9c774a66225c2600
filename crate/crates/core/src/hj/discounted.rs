use rayon::prelude::*;

use super::grid::Grid;
use super::scalar::{FieldKind, ScalarField};
use super::scheme::{ascent_hamiltonian, node_velocities, SchemeParams};
use crate::error::{Error, Result};
use crate::field::VelocityField;

/// Result of a discounted solve.
#[derive(Clone, Debug)]
pub struct Discounted<const D: usize> {
    pub v: ScalarField<D>,
    pub delta: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl<const D: usize> Discounted<D> {
    /// `delta v_delta(0)`.
    pub fn estimate(&self) -> f64 {
        self.delta * self.v.at_origin()
    }
}

fn residual<const D: usize>(
    grid: &Grid<D>,
    vel: &[[f64; D]],
    sigma: &[f64],
    p: &[f64; D],
    v: &[f64],
    delta: f64,
    out: &mut [f64],
) {
    let inv_h = 1.0 / grid.h;
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let vi = v[i];
        let mut pm = *p;
        let mut pp = *p;
        for a in 0..D {
            let vp = grid.neighbor(i, a, 1).map_or(vi, |j| v[j]);
            let vm = grid.neighbor(i, a, -1).map_or(vi, |j| v[j]);
            pp[a] += (vp - vi) * inv_h;
            pm[a] += (vi - vm) * inv_h;
        }
        *o = ascent_hamiltonian(&pm, &pp, &vel[i], sigma) - delta * vi;
    });
}

/// Value iteration for `delta v = |Dv + p| + <V, Dv + p>`.
///
/// Each sweep is a pseudo-time step `v += dt R(v)`; since
/// `R(v + c) = R(v) - delta c` for constants, the mean residual is removed
/// exactly at every step by the shift `c = mean(R) / delta`.
pub fn solve_discounted<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    p: [f64; D],
    delta: f64,
    grid: &Grid<D>,
    params: &SchemeParams,
) -> Result<Discounted<D>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::config("discount delta must be positive"));
    }
    let vel = node_velocities(field, grid);
    params.validate(&vel)?;
    let n = grid.len();
    let dt = params.dt(grid.h);
    let mut v = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut sup = f64::INFINITY;
    for it in 0..params.max_iterations {
        residual(grid, &vel, &params.sigma, &p, &v, delta, &mut r);
        let mean = r.iter().sum::<f64>() / n as f64;
        sup = r.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
        let shift = mean / delta;
        if sup < params.residual_tolerance {
            v.iter_mut().for_each(|x| *x += shift);
            return Ok(Discounted {
                v: ScalarField::new(*grid, v, FieldKind::Discounted),
                delta,
                iterations: it,
                residual: sup,
            });
        }
        v.par_iter_mut()
            .zip(r.par_iter())
            .for_each(|(x, ri)| *x += shift + dt * (ri - mean));
    }
    Err(Error::IterationLimit {
        iterations: params.max_iterations,
        residual: sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};

    #[test]
    fn zero_and_constant_fields() {
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        let p = [0.6, -0.8];
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let d = solve_discounted(&f, p, 0.1, &g, &params).unwrap();
        assert!((d.estimate() - 1.0).abs() <= 2.0 * g.h);
        let f = make_field::<2>(&FieldSpec::constant(vec![0.3, 0.5]), 0).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let d = solve_discounted(&f, p, 0.1, &g, &params).unwrap();
        assert!((d.estimate() - (1.0 + 0.18 - 0.4)).abs() <= 2.0 * g.h);
    }

    #[test]
    fn iteration_limit_reported() {
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        let f = make_field::<2>(&FieldSpec::cellular(1.0), 0).unwrap();
        let mut params = SchemeParams::for_field(&f, &g);
        params.max_iterations = 3;
        let r = solve_discounted(&f, [1.0, 0.0], 0.1, &g, &params);
        assert!(matches!(r, Err(Error::IterationLimit { iterations: 3, .. })));
    }
}
