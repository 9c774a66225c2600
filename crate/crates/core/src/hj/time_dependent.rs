use rayon::prelude::*;

use super::grid::{Boundary, Grid};
use super::scalar::{FieldKind, ScalarField};
use super::scheme::{ascent_hamiltonian, node_velocities, SchemeParams};
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::dot;

/// Initial data `u0`.
#[derive(Clone, Copy)]
pub enum InitialData<'a, const D: usize> {
    /// `u0(x) = <P, x>`; evolved as `u = <P, x> + z` with `z(., 0) = 0`.
    Affine([f64; D]),
    Callable(&'a (dyn Fn(&[f64; D]) -> f64 + Sync)),
}

/// Snapshots `u(., t_k)`, restricted to the reported core.
#[derive(Clone, Debug)]
pub struct TimeSeries<const D: usize> {
    pub times: Vec<f64>,
    pub slices: Vec<ScalarField<D>>,
    /// Value of `z = u - <P, x>` at the origin at each snapshot.
    pub z_origin: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct TimeOptions {
    /// Half-width of the reported core for open grids; default `L/2`.
    pub core_half_width: Option<f64>,
    /// Snapshot times; the horizon is always included.
    pub snapshots: Vec<f64>,
}


/// One forward-Euler step of `z_t = G(Dz + P)` with the ascent flux.
/// Open edges use a zero-slope ghost for `z`.
pub(crate) fn step<const D: usize>(
    grid: &Grid<D>,
    vel: &[[f64; D]],
    sigma: &[f64],
    p: &[f64; D],
    z: &[f64],
    dt: f64,
    out: &mut [f64],
) {
    let inv_h = 1.0 / grid.h;
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let zi = z[i];
        let mut pm = *p;
        let mut pp = *p;
        for a in 0..D {
            let zp = grid.neighbor(i, a, 1).map_or(zi, |j| z[j]);
            let zm = grid.neighbor(i, a, -1).map_or(zi, |j| z[j]);
            pp[a] += (zp - zi) * inv_h;
            pm[a] += (zi - zm) * inv_h;
        }
        *o = zi + dt * ascent_hamiltonian(&pm, &pp, &vel[i], sigma);
    });
}

/// Explicit monotone solver for `u_t = |Du| + <V, Du>`.
pub fn solve_time_dependent<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    u0: InitialData<'_, D>,
    horizon: f64,
    grid: &Grid<D>,
    params: &SchemeParams,
    opts: &TimeOptions,
) -> Result<TimeSeries<D>> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::config("horizon must be nonnegative"));
    }
    let vel = node_velocities(field, grid);
    params.validate(&vel)?;
    let core = opts.core_half_width.unwrap_or(0.5 * grid.half_width);
    if grid.boundary == Boundary::Open {
        let need = core + 2.0 * field.speed_bound() * horizon;
        if grid.half_width + 1e-9 < need {
            return Err(Error::config(format!(
                "domain of dependence: half-width {} < core {core} + 2 M T = {need}",
                grid.half_width
            )));
        }
    }
    let (p, mut z): ([f64; D], Vec<f64>) = match u0 {
        InitialData::Affine(p) => (p, vec![0.0; grid.len()]),
        InitialData::Callable(f) => ([0.0; D], (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect()),
    };
    let mut snaps: Vec<f64> = opts.snapshots.iter().copied().filter(|&t| t >= 0.0 && t < horizon).collect();
    snaps.push(horizon);
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();

    let dt_max = params.dt(grid.h);
    let mut buf = vec![0.0; grid.len()];
    let mut t = 0.0;
    let mut out = TimeSeries {
        times: Vec::new(),
        slices: Vec::new(),
        z_origin: Vec::new(),
    };
    for &ts in &snaps {
        while t < ts - 1e-14 {
            let dt = dt_max.min(ts - t);
            step(grid, &vel, &params.sigma, &p, &z, dt, &mut buf);
            std::mem::swap(&mut z, &mut buf);
            t += dt;
        }
        let u: Vec<f64> = (0..grid.len()).map(|i| z[i] + dot(&p, &grid.point(i))).collect();
        let slice = ScalarField::new(*grid, u, FieldKind::TimeSlice).restrict(core)?;
        out.times.push(ts);
        out.slices.push(slice);
        out.z_origin.push(z[grid.origin()]);
    }
    Ok(out)
}

/// `z(0, T) / T` for affine data `<P, x>`.
pub fn time_dependent_rate<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    p: [f64; D],
    horizon: f64,
    grid: &Grid<D>,
    params: &SchemeParams,
) -> Result<f64> {
    let opts = TimeOptions {
        core_half_width: Some(grid.h * 10.0),
        snapshots: Vec::new(),
    };
    let ts = solve_time_dependent(field, InitialData::Affine(p), horizon, grid, params, &opts)?;
    Ok(ts.z_origin[0] / horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};
    use crate::FieldRealization;

    fn solve(f: &FieldRealization<2>, p: [f64; 2], t: f64, grid: &Grid<2>) -> TimeSeries<2> {
        let params = SchemeParams::for_field(f, grid);
        solve_time_dependent(f, InitialData::Affine(p), t, grid, &params, &TimeOptions::default()).unwrap()
    }

    #[test]
    fn affine_data_zero_field() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.05, 4.0).unwrap();
        let ts = solve(&f, [1.0, 0.0], 1.0, &g);
        let s = &ts.slices[0];
        for idx in 0..s.grid.len() {
            let x = s.grid.point(idx);
            assert!((s.values[idx] - (x[0] + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_data_constant_field() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.4, -0.2]), 0).unwrap();
        let g = Grid::open(0.05, 6.0).unwrap();
        let p = [0.6, 0.8];
        let ts = solve(&f, p, 1.0, &g);
        let rate = 1.0 + 0.4 * 0.6 - 0.2 * 0.8;
        let s = &ts.slices[0];
        for idx in 0..s.grid.len() {
            let x = s.grid.point(idx);
            assert!((s.values[idx] - (p[0] * x[0] + p[1] * x[1] + rate)).abs() <= 2.0 * g.h);
        }
    }

    #[test]
    fn domain_of_dependence_enforced() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.05, 2.0).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let r = solve_time_dependent(&f, InitialData::Affine([1.0, 0.0]), 1.0, &g, &params, &TimeOptions::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn cfl_violation_rejected() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.05, 4.0).unwrap();
        let mut params = SchemeParams::for_field(&f, &g);
        params.cfl = 1.5;
        let r = solve_time_dependent(&f, InitialData::Affine([1.0, 0.0]), 1.0, &g, &params, &TimeOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn comparison_principle() {
        let f = make_field::<2>(&FieldSpec::cellular(1.5), 0).unwrap();
        let g = Grid::periodic(1.0 / 32.0, 0.5).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let lo = |x: &[f64; 2]| (6.0 * x[0]).sin() * 0.2;
        let hi = |x: &[f64; 2]| (6.0 * x[0]).sin() * 0.2 + 0.05 + 0.1 * (x[1] * 9.0).cos().powi(2);
        let opts = TimeOptions {
            core_half_width: None,
            snapshots: vec![0.1, 0.2, 0.3],
        };
        let a = solve_time_dependent(&f, InitialData::Callable(&lo), 0.4, &g, &params, &opts).unwrap();
        let b = solve_time_dependent(&f, InitialData::Callable(&hi), 0.4, &g, &params, &opts).unwrap();
        for (sa, sb) in a.slices.iter().zip(&b.slices) {
            assert!(sa.values.iter().zip(&sb.values).all(|(x, y)| x <= y));
        }
    }
}
