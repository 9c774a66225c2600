//! Semi-Lagrangian schemes built on the control representation: over a step
//! `tau` the value is the best of the values at the feet `X_tau^x(a)` of the
//! controlled flow, for finitely many unit controls `a`. Unlike the upwind
//! finite differences these carry no numerical viscosity across streamlines,
//! which is what matters for strong cellular or shear flows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid};
use super::scalar::{FieldKind, ScalarField};
use super::discounted::Discounted;
use super::time_dependent::{InitialData, TimeOptions, TimeSeries};
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::dot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlParams {
    /// Number of unit controls sampled.
    pub directions: usize,
    /// Step in units of `h`.
    pub tau_over_h: f64,
    pub max_iterations: usize,
    pub residual_tolerance: f64,
}

impl Default for SlParams {
    fn default() -> Self {
        SlParams {
            directions: 32,
            tau_over_h: 1.6,
            max_iterations: 200_000,
            residual_tolerance: 1e-7,
        }
    }
}

impl SlParams {
    pub fn validate(&self) -> Result<()> {
        if self.directions < 4 {
            return Err(Error::config("need at least 4 control directions"));
        }
        if !(self.tau_over_h > 0.0 && self.tau_over_h.is_finite()) {
            return Err(Error::config("tau_over_h must be positive"));
        }
        Ok(())
    }
}

/// Roughly uniform unit vectors: equally spaced angles in the plane, a
/// Fibonacci lattice on the sphere.
pub fn control_directions<const D: usize>(k: usize) -> Vec<[f64; D]> {
    use std::f64::consts::PI;
    (0..k)
        .map(|j| {
            let mut a = [0.0; D];
            if D == 2 {
                let t = 2.0 * PI * j as f64 / k as f64;
                a[0] = t.cos();
                a[1] = t.sin();
            } else {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / k as f64;
                let r = (1.0 - z * z).sqrt();
                let t = PI * (3.0 - 5f64.sqrt()) * j as f64;
                a[0] = r * t.cos();
                a[1] = r * t.sin();
                a[2] = z;
            }
            a
        })
        .collect()
}

/// RK4 flow of `x' = a + V(x)` over `tau`.
fn flow<const D: usize, F: VelocityField<D> + ?Sized>(field: &F, x: [f64; D], a: &[f64; D], tau: f64, steps: usize) -> [f64; D] {
    let dt = tau / steps as f64;
    let rhs = |y: &[f64; D]| {
        let v = field.velocity(y);
        std::array::from_fn::<f64, D, _>(|i| v[i] + a[i])
    };
    let mut y = x;
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&std::array::from_fn(|i| y[i] + 0.5 * dt * k1[i]));
        let k3 = rhs(&std::array::from_fn(|i| y[i] + 0.5 * dt * k2[i]));
        let k4 = rhs(&std::array::from_fn(|i| y[i] + dt * k3[i]));
        for i in 0..D {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Feet of the controlled flow from every node, stored as the lower interpolation
/// corner, the fractional offsets and the displacement.
pub struct Feet<const D: usize> {
    grid: Grid<D>,
    k: usize,
    tau: f64,
    corner: Vec<[u32; D]>,
    frac: Vec<[f32; D]>,
    disp: Vec<[f32; D]>,
}

impl<const D: usize> Feet<D> {
    pub fn build<F: VelocityField<D> + ?Sized>(field: &F, grid: &Grid<D>, directions: usize, tau: f64) -> Self {
        let dirs = control_directions::<D>(directions);
        let lip = field.lipschitz();
        let steps = if lip > 0.0 { (tau * lip / 0.2).ceil().max(1.0) as usize } else { 1 };
        let n = grid.n as i64;
        let c = grid.center() as f64;
        let entries: Vec<([u32; D], [f32; D], [f32; D])> = (0..grid.len() * directions)
            .into_par_iter()
            .map(|q| {
                let x = grid.point(q / directions);
                let y = flow(field, x, &dirs[q % directions], tau, steps);
                let mut corner = [0u32; D];
                let mut frac = [0f32; D];
                for a in 0..D {
                    let s = y[a] / grid.h + c;
                    let (lo, t) = match grid.boundary {
                        Boundary::Periodic => {
                            let f = s.floor();
                            ((f as i64).rem_euclid(n), s - f)
                        }
                        Boundary::Open => {
                            let s = s.clamp(0.0, (n - 1) as f64);
                            let f = s.floor().min((n - 2) as f64);
                            (f as i64, s - f)
                        }
                    };
                    corner[a] = lo as u32;
                    frac[a] = t as f32;
                }
                let disp = std::array::from_fn(|a| (y[a] - x[a]) as f32);
                (corner, frac, disp)
            })
            .collect();
        let mut out = Feet {
            grid: *grid,
            k: directions,
            tau,
            corner: Vec::with_capacity(entries.len()),
            frac: Vec::with_capacity(entries.len()),
            disp: Vec::with_capacity(entries.len()),
        };
        for (c, f, d) in entries {
            out.corner.push(c);
            out.frac.push(f);
            out.disp.push(d);
        }
        out
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    fn interpolate(&self, q: usize, z: &[f64]) -> f64 {
        let g = &self.grid;
        let base = &self.corner[q];
        let t = &self.frac[q];
        let mut acc = 0.0;
        for corner in 0..(1usize << D) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..D {
                let up = (corner >> a) & 1 == 1;
                let mut m = base[a] as usize + up as usize;
                if m == g.n {
                    m = 0;
                }
                let ta = t[a] as f64;
                w *= if up { ta } else { 1.0 - ta };
                idx = idx * g.n + m;
            }
            acc += w * z[idx];
        }
        acc
    }

    /// `out_i = max_k [c <p, d_ik> + beta z(foot_ik)]`.
    fn apply(&self, p: &[f64; D], c: f64, beta: f64, z: &[f64], out: &mut [f64]) {
        let k = self.k;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut best = f64::NEG_INFINITY;
            for q in i * k..(i + 1) * k {
                let d: [f64; D] = std::array::from_fn(|a| self.disp[q][a] as f64);
                let v = c * dot(p, &d) + beta * self.interpolate(q, z);
                if v > best {
                    best = v;
                }
            }
            *o = best;
        });
    }
}

/// Semi-Lagrangian solver for `u_t = |Du| + <V, Du>`; same contract as
/// [`super::solve_time_dependent`]. Snapshot times are rounded to whole steps.
pub fn solve_time_dependent_sl<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    u0: InitialData<'_, D>,
    horizon: f64,
    grid: &Grid<D>,
    params: &SlParams,
    opts: &TimeOptions,
) -> Result<TimeSeries<D>> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::config("horizon must be positive"));
    }
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
    let steps = (horizon / (params.tau_over_h * grid.h)).ceil().max(1.0) as usize;
    let tau = horizon / steps as f64;
    let feet = Feet::build(field, grid, params.directions, tau);
    let (p, mut z): ([f64; D], Vec<f64>) = match u0 {
        InitialData::Affine(p) => (p, vec![0.0; grid.len()]),
        InitialData::Callable(f) => ([0.0; D], (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect()),
    };
    let mut marks: Vec<usize> = opts
        .snapshots
        .iter()
        .filter(|&&t| t >= 0.0 && t < horizon)
        .map(|t| (t / tau).round() as usize)
        .collect();
    marks.push(steps);
    marks.sort_unstable();
    marks.dedup();

    let mut buf = vec![0.0; grid.len()];
    let mut out = TimeSeries {
        times: Vec::new(),
        slices: Vec::new(),
        z_origin: Vec::new(),
    };
    let mut done = 0;
    for m in marks {
        while done < m {
            feet.apply(&p, 1.0, 1.0, &z, &mut buf);
            std::mem::swap(&mut z, &mut buf);
            done += 1;
        }
        let u: Vec<f64> = (0..grid.len()).map(|i| z[i] + dot(&p, &grid.point(i))).collect();
        out.times.push(m as f64 * tau);
        out.slices.push(ScalarField::new(*grid, u, FieldKind::TimeSlice).restrict(core)?);
        out.z_origin.push(z[grid.origin()]);
    }
    Ok(out)
}

/// `z(0, T) / T` for affine data `<P, x>`, semi-Lagrangian.
pub fn time_dependent_rate_sl<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    p: [f64; D],
    horizon: f64,
    grid: &Grid<D>,
    params: &SlParams,
) -> Result<f64> {
    let opts = TimeOptions {
        core_half_width: Some(grid.h * 10.0),
        snapshots: Vec::new(),
    };
    let ts = solve_time_dependent_sl(field, InitialData::Affine(p), horizon, grid, params, &opts)?;
    Ok(ts.z_origin[0] / ts.times[0])
}

/// Discounted cell problem `delta v = |Dv + p| + <V, Dv + p>` by value
/// iteration on `v = max_a [c <p, X_tau - x> + e^{-delta tau} v(X_tau)]`.
/// The constant mode contracts only by `e^{-delta tau}`, so it is removed
/// exactly at every sweep; what is left converges at the mixing rate.
pub fn solve_discounted_sl<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    p: [f64; D],
    delta: f64,
    grid: &Grid<D>,
    params: &SlParams,
) -> Result<Discounted<D>> {
    params.validate()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::config("discount delta must be positive"));
    }
    let tau = params.tau_over_h * grid.h;
    let feet = Feet::build(field, grid, params.directions, tau);
    let beta = (-delta * tau).exp();
    let c = (1.0 - beta) / (delta * tau);
    let n = grid.len();
    let mut v = vec![0.0; n];
    let mut tv = vec![0.0; n];
    let mut osc = f64::INFINITY;
    for it in 0..params.max_iterations {
        feet.apply(&p, c, beta, &v, &mut tv);
        let m = tv.iter().zip(&v).map(|(a, b)| a - b).sum::<f64>() / n as f64;
        osc = tv.iter().zip(&v).fold(0.0f64, |s, (a, b)| s.max((a - b - m).abs()));
        let shift = m / (1.0 - beta) - m;
        v.par_iter_mut().zip(tv.par_iter()).for_each(|(x, t)| *x = t + shift);
        // per unit time, comparable to the finite-difference residual
        if osc / tau < params.residual_tolerance {
            return Ok(Discounted {
                v: ScalarField::new(*grid, v, FieldKind::Discounted),
                delta,
                iterations: it + 1,
                residual: osc / tau,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: params.max_iterations,
        residual: osc / tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};

    #[test]
    fn directions_are_unit() {
        for d in control_directions::<3>(50) {
            assert!((dot(&d, &d) - 1.0).abs() < 1e-12);
        }
        let d2 = control_directions::<2>(8);
        assert!((d2[2][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_rate() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.3, 0.5]), 0).unwrap();
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        let p = [0.6, -0.8];
        let exact = 1.0 + 0.18 - 0.4;
        let r = time_dependent_rate_sl(&f, p, 2.0, &g, &SlParams::default()).unwrap();
        // direction sampling error is at most 1 - cos(pi / K)
        assert!((r - exact).abs() < 5e-3, "{r}");
        let d = solve_discounted_sl(&f, p, 0.1, &g, &SlParams::default()).unwrap();
        assert!((d.estimate() - exact).abs() < 5e-3, "{}", d.estimate());
    }

    #[test]
    fn open_grid_matches_zero_field() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.05, 4.0).unwrap();
        let opts = TimeOptions::default();
        let ts = solve_time_dependent_sl(&f, InitialData::Affine([1.0, 0.0]), 1.0, &g, &SlParams::default(), &opts).unwrap();
        let s = &ts.slices[0];
        for i in 0..s.grid.len() {
            assert!((s.values[i] - s.grid.point(i)[0] - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn cellular_estimates_agree() {
        let f = make_field::<2>(&FieldSpec::cellular(1.0), 0).unwrap();
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        let sl = SlParams::default();
        let t = time_dependent_rate_sl(&f, [1.0, 0.0], 20.0, &g, &sl).unwrap();
        let d = solve_discounted_sl(&f, [1.0, 0.0], 0.05, &g, &sl).unwrap();
        assert!(t > 1.0 && d.estimate() > 1.0);
        assert!((t - d.estimate()).abs() < 0.05, "{t} {}", d.estimate());
    }

    #[test]
    fn monotone_in_data() {
        let f = make_field::<2>(&FieldSpec::cellular(2.0), 0).unwrap();
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        let lo = |x: &[f64; 2]| (6.0 * x[0]).sin() * 0.2;
        let hi = |x: &[f64; 2]| (6.0 * x[0]).sin() * 0.2 + 0.01 * (x[1] * 9.0).cos().powi(2);
        let opts = TimeOptions {
            core_half_width: None,
            snapshots: vec![0.2],
        };
        let sl = SlParams::default();
        let a = solve_time_dependent_sl(&f, InitialData::Callable(&lo), 0.5, &g, &sl, &opts).unwrap();
        let b = solve_time_dependent_sl(&f, InitialData::Callable(&hi), 0.5, &g, &sl, &opts).unwrap();
        for (sa, sb) in a.slices.iter().zip(&b.slices) {
            assert!(sa.values.iter().zip(&sb.values).all(|(x, y)| x <= y));
        }
    }
}
