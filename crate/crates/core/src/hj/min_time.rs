use log::warn;

use super::grid::Grid;
use super::scalar::{FieldKind, ScalarField};
use super::scheme::{hamiltonian, node_velocities, SchemeParams};
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::{norm, sub};

/// Diagnostics of a static solve.
#[derive(Clone, Debug)]
pub struct MinTimeSolve<const D: usize> {
    pub theta: ScalarField<D>,
    pub cycles: usize,
    pub residual: f64,
    pub source: [f64; D],
}

impl<const D: usize> MinTimeSolve<D> {
    /// `theta <= (L - |source|) / M`: trajectories this fast cannot reach the
    /// box edge, so these values are free of boundary effects.
    pub fn trusted_time(&self, speed_bound: f64) -> f64 {
        let g = &self.theta.grid;
        (g.half_width - crate::vecops::sup_norm(&self.source)) / speed_bound
    }
}

fn snap_source<const D: usize>(grid: &Grid<D>, source: &[f64; D]) -> Result<(usize, [f64; D])> {
    let idx = grid
        .nearest(source)
        .ok_or_else(|| Error::config("minimal-time source lies outside the grid"))?;
    let snapped = grid.point(idx);
    if norm(&sub(&snapped, source)) > 1e-12 * (1.0 + norm(source)) {
        warn!("source {source:?} is not a grid node; snapped to {snapped:?}");
    }
    Ok((idx, snapped))
}


// between 2h and 8h, shrinking where V varies on short scales
fn pin_radius<const D: usize, F: VelocityField<D> + ?Sized>(field: &F, grid: &Grid<D>) -> f64 {
    let lip = field.lipschitz();
    let r = if lip > 0.0 { 0.5 / lip } else { f64::INFINITY };
    r.clamp(2.0 * grid.h, 8.0 * grid.h)
}

// Exact travel times for the velocity frozen at each segment midpoint, on a
// small ball around the source; removes the cone-tip smearing of the scheme.
fn pin_source<const D: usize, F: VelocityField<D> + ?Sized>(
    grid: &Grid<D>,
    field: &F,
    src: &[f64; D],
    radius: f64,
    theta: &mut [f64],
) -> Vec<bool> {
    let mut pinned = vec![false; grid.len()];
    for i in 0..grid.len() {
        let y = grid.point(i);
        let d = sub(&y, src);
        if norm(&d) <= radius + 1e-12 {
            let t = super::graph::straight_time(field, src, &d, super::graph::SegmentRule::Simpson);
            if t.is_finite() {
                theta[i] = t.min(theta[i]);
                pinned[i] = true;
            }
        }
    }
    pinned
}

/// Lax–Friedrichs fast sweeping for `|D theta| + <V, D theta> = 1`,
/// `theta(source) = 0`.
///
/// Values start at a finite cap and only decrease (`theta = min(old, new)`),
/// so the iteration is monotone. Nodes still above half the cap when the
/// sweeps settle are reported unreachable. Open edges use a zero-slope ghost.
pub fn solve_min_time<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    source: [f64; D],
    grid: &Grid<D>,
    params: &SchemeParams,
) -> Result<MinTimeSolve<D>> {
    let vel = node_velocities(field, grid);
    params.validate(&vel)?;
    let (_, snapped) = snap_source(grid, &source)?;
    let cap = 40.0 * (D as f64).sqrt() * grid.half_width;
    let n = grid.len();
    let mut theta = vec![cap; n];
    let pinned = pin_source(grid, field, &snapped, pin_radius(field, grid), &mut theta);
    let h = grid.h;
    let inv_2h = 0.5 / h;
    let denom: f64 = params.sigma.iter().sum::<f64>() / h;
    let mut residual = f64::INFINITY;
    let mut order = vec![0usize; n];
    for cycle in 1..=params.max_cycles {
        let mut change = 0.0f64;
        for mask in 0..(1usize << D) {
            for (k, slot) in order.iter_mut().enumerate() {
                let m = grid.multi(k);
                let m: [usize; D] = std::array::from_fn(|a| if mask >> a & 1 == 1 { grid.n - 1 - m[a] } else { m[a] });
                *slot = grid.flat(&m);
            }
            for &i in &order {
                if pinned[i] {
                    continue;
                }
                let old = theta[i];
                let mut pbar = [0.0; D];
                let mut num = 1.0;
                for a in 0..D {
                    let tp = grid.neighbor(i, a, 1).map_or(old, |j| theta[j]);
                    let tm = grid.neighbor(i, a, -1).map_or(old, |j| theta[j]);
                    pbar[a] = (tp - tm) * inv_2h;
                    num += params.sigma[a] * (tp + tm) * inv_2h;
                }
                let cand = (num - hamiltonian(&pbar, &vel[i])) / denom;
                if cand < old {
                    theta[i] = cand;
                    if cand < 0.5 * cap {
                        change = change.max(old.min(cap) - cand);
                    }
                }
            }
        }
        residual = change;
        if change <= params.sweep_tolerance {
            let reachable: Vec<bool> = theta.iter().map(|&t| t < 0.5 * cap).collect();
            let mut out = ScalarField::new(*grid, theta, FieldKind::MinTime);
            out.reachable = reachable;
            return Ok(MinTimeSolve {
                theta: out,
                cycles: cycle,
                residual,
                source: snapped,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: params.max_cycles,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};

    #[test]
    fn eikonal_zero_field() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.02, 2.0).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let s = solve_min_time(&f, [0.0, 0.0], &g, &params).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let r = g.radius(i);
            if r <= 2.0 {
                worst = worst.max((s.theta.values[i] - r).abs());
            }
        }
        assert!(worst <= 2.0 * g.h, "worst error {worst}");
    }

    #[test]
    fn constant_drift_travel_times() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.4, 0.0]), 0).unwrap();
        let g = Grid::open(0.02, 2.0).unwrap();
        let params = SchemeParams::for_field(&f, &g);
        let s = solve_min_time(&f, [0.0, 0.0], &g, &params).unwrap();
        let fwd = s.theta.at(&[1.0, 0.0]).unwrap();
        let back = s.theta.at(&[-1.0, 0.0]).unwrap();
        assert!((fwd - 1.0 / 1.4).abs() <= 2.0 * g.h);
        assert!((back - 1.0 / 0.6).abs() <= 2.0 * g.h);
    }
}
