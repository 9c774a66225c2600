use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::grid::{Boundary, Grid};
use super::min_time::MinTimeSolve;
use super::scalar::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::{dot, norm, scale};

/// Minimal time to traverse the straight segment `d` with constant drift `v`:
/// the least `t > 0` with `|d - t v| <= t`.
pub fn segment_time<const D: usize>(d: &[f64; D], v: &[f64; D]) -> f64 {
    // (|v|^2 - 1) t^2 - 2 <d, v> t + |d|^2 <= 0
    let a = dot(v, v) - 1.0;
    let b = -2.0 * dot(d, v);
    let c = dot(d, d);
    if c == 0.0 {
        return 0.0;
    }
    if a.abs() < 1e-14 {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if a < 0.0 {
        return (-b - disc.sqrt()) / (2.0 * a);
    }
    if disc < 0.0 || b >= 0.0 {
        return f64::INFINITY;
    }
    // smaller positive root, written to avoid cancellation
    2.0 * c / (-b + disc.sqrt())
}

/// Largest ground speed `s` along the unit vector `b` with `|s b - v| <= 1`;
/// zero if the direction cannot be followed.
#[inline]
pub fn max_speed<const D: usize>(b: &[f64; D], v: &[f64; D]) -> f64 {
    let bv = dot(b, v);
    let disc = 1.0 - dot(v, v) + bv * bv;
    if disc < 0.0 {
        return 0.0;
    }
    (bv + disc.sqrt()).max(0.0)
}

/// How an edge cost is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentRule {
    /// [`segment_time`] with `V` frozen at the midpoint.
    Midpoint,
    /// `int ds / s(b, V(x(s)))` along the segment by Simpson's rule: the
    /// exact cost of following the straight line, up to quadrature.
    Simpson,
}

/// Time to follow the straight segment from `x` to `x + d`.
pub fn straight_time<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    x: &[f64; D],
    d: &[f64; D],
    rule: SegmentRule,
) -> f64 {
    let len = norm(d);
    if len == 0.0 {
        return 0.0;
    }
    let mid: [f64; D] = std::array::from_fn(|a| x[a] + 0.5 * d[a]);
    match rule {
        SegmentRule::Midpoint => segment_time(d, &field.velocity(&mid)),
        SegmentRule::Simpson => {
            let end: [f64; D] = std::array::from_fn(|a| x[a] + d[a]);
            simpson(d, &field.velocity(x), &field.velocity(&mid), &field.velocity(&end))
        }
    }
}

fn simpson<const D: usize>(d: &[f64; D], v0: &[f64; D], v1: &[f64; D], v2: &[f64; D]) -> f64 {
    let len = norm(d);
    if len == 0.0 {
        return 0.0;
    }
    let b = scale(d, 1.0 / len);
    let (s0, s1, s2) = (max_speed(&b, v0), max_speed(&b, v1), max_speed(&b, v2));
    if s0 <= 0.0 || s1 <= 0.0 || s2 <= 0.0 {
        return f64::INFINITY;
    }
    len / 6.0 * (1.0 / s0 + 4.0 / s1 + 1.0 / s2)
}

#[inline]
fn node_velocity<const D: usize, F: VelocityField<D> + ?Sized>(
    cache: &mut [[f64; D]],
    i: usize,
    field: &F,
    grid: &Grid<D>,
) -> [f64; D] {
    if cache[i][0].is_nan() {
        cache[i] = field.velocity(&grid.point(i));
    }
    cache[i]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive integer offsets with sup norm at most `rho`.
pub fn stencil<const D: usize>(rho: i64) -> Vec<[i64; D]> {
    let side = (2 * rho + 1) as usize;
    let mut out = Vec::new();
    for k in 0..side.pow(D as u32) {
        let mut m = [0i64; D];
        let mut r = k;
        for c in m.iter_mut() {
            *c = (r % side) as i64 - rho;
            r /= side;
        }
        if m.iter().fold(0, |g, &c| gcd(g, c)) == 1 {
            out.push(m);
        }
    }
    out
}

/// Options for [`solve_min_time_graph`].
#[derive(Clone, Debug, Default)]
pub struct GraphOptions<const D: usize> {
    /// Stencil radius; 6 if zero.
    pub rho: i64,
    /// Stop once every node with `theta <= stop_time` is settled.
    pub stop_time: Option<f64>,
    /// Stop once these points (all their interpolation corners) are settled.
    pub targets: Vec<[f64; D]>,
}

fn shortest_paths<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    src: usize,
    grid: &Grid<D>,
    rho: i64,
    rule: SegmentRule,
    stop_time: f64,
    targets: &[usize],
) -> Vec<f64> {
    let offsets = stencil::<D>(rho);
    let mut vel: Vec<[f64; D]> = if rule == SegmentRule::Simpson { vec![[f64::NAN; D]; grid.len()] } else { Vec::new() };
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut wanted = vec![false; if targets.is_empty() { 0 } else { grid.len() }];
    let mut missing = 0usize;
    for &t in targets {
        if !wanted[t] {
            wanted[t] = true;
            missing += 1;
        }
    }
    dist[src] = 0.0;
    // nonnegative floats order like their bit patterns
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, src)));
    while let Some(Reverse((_, i))) = heap.pop() {
        if done[i] {
            continue;
        }
        let d = dist[i];
        if d > stop_time {
            break;
        }
        done[i] = true;
        if !wanted.is_empty() && wanted[i] {
            missing -= 1;
            if missing == 0 {
                break;
            }
        }
        let m = grid.multi(i);
        let x = grid.point(i);
        'edges: for off in &offsets {
            let mut nm = [0usize; D];
            for a in 0..D {
                let k = m[a] as i64 + off[a];
                nm[a] = match grid.boundary {
                    Boundary::Open if k < 0 || k >= grid.n as i64 => continue 'edges,
                    Boundary::Open => k as usize,
                    Boundary::Periodic => k.rem_euclid(grid.n as i64) as usize,
                };
            }
            let j = grid.flat(&nm);
            if done[j] {
                continue;
            }
            let seg: [f64; D] = std::array::from_fn(|a| off[a] as f64 * grid.h);
            let cost = match rule {
                SegmentRule::Midpoint => straight_time(field, &x, &seg, rule),
                SegmentRule::Simpson => {
                    let v0 = node_velocity(&mut vel, i, field, grid);
                    let v2 = node_velocity(&mut vel, j, field, grid);
                    let mid: [f64; D] = std::array::from_fn(|a| x[a] + 0.5 * seg[a]);
                    simpson(&seg, &v0, &field.velocity(&mid), &v2)
                }
            };
            let nd = d + cost;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    dist
}

fn into_field<const D: usize>(grid: &Grid<D>, mut dist: Vec<f64>, settled: f64) -> ScalarField<D> {
    // tentative labels beyond the settled level are not minimal times
    dist.iter_mut().filter(|d| **d > settled).for_each(|d| *d = f64::INFINITY);
    let reachable = dist.iter().map(|d| d.is_finite()).collect();
    let mut out = ScalarField::new(*grid, dist.iter().map(|d| d.min(f64::MAX)).collect(), FieldKind::MinTime);
    out.reachable = reachable;
    out
}

/// Shortest paths on the grid graph whose edges are the primitive offsets of
/// sup norm `<= rho`, each costing [`segment_time`] with `V` at the segment
/// midpoint. Independent of the PDE solvers; coarse grids only.
pub fn dijkstra_oracle<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    source: [f64; D],
    grid: &Grid<D>,
    rho: i64,
) -> Result<ScalarField<D>> {
    if grid.len() > 101usize.pow(D as u32) {
        return Err(Error::config("graph oracle is limited to 101^N nodes"));
    }
    if rho < 1 {
        return Err(Error::config("neighbour radius must be at least 1"));
    }
    let src = grid
        .nearest(&source)
        .ok_or_else(|| Error::config("oracle source lies outside the grid"))?;
    let dist = shortest_paths(field, src, grid, rho, SegmentRule::Midpoint, f64::INFINITY, &[]);
    Ok(into_field(grid, dist, f64::INFINITY))
}

/// Minimal time as a polygonal control problem: shortest paths over
/// straight segments with exact (Simpson) traversal costs. Free of numerical
/// viscosity and valid for any `v_max`; the bias is the angular resolution of
/// the `rho` stencil plus chord error, both vanishing as `rho -> inf`,
/// `rho h -> 0`.
///
/// With `stop_time` or `targets` the search ends early; nodes not settled by
/// then are reported unreachable.
pub fn solve_min_time_graph<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    source: [f64; D],
    grid: &Grid<D>,
    opts: &GraphOptions<D>,
) -> Result<MinTimeSolve<D>> {
    let rho = if opts.rho == 0 { 6 } else { opts.rho };
    if rho < 1 {
        return Err(Error::config("neighbour radius must be at least 1"));
    }
    let src = grid
        .nearest(&source)
        .ok_or_else(|| Error::config("minimal-time source lies outside the grid"))?;
    let mut targets = Vec::new();
    for y in &opts.targets {
        targets.extend(grid.corners(y).ok_or_else(|| Error::config("minimal-time target lies outside the grid"))?);
    }
    let stop = opts.stop_time.unwrap_or(f64::INFINITY);
    let dist = shortest_paths(field, src, grid, rho, SegmentRule::Simpson, stop, &targets);
    // everything strictly below the last settled label is final
    let settled = if targets.is_empty() {
        stop
    } else {
        targets.iter().map(|&t| dist[t]).fold(0.0, f64::max).min(stop)
    };
    Ok(MinTimeSolve {
        theta: into_field(grid, dist, settled),
        cycles: 1,
        residual: 0.0,
        source: grid.point(src),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};

    #[test]
    fn segment_time_closed_forms() {
        assert!((segment_time(&[1.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((segment_time(&[1.0, 0.0], &[0.4, 0.0]) - 1.0 / 1.4).abs() < 1e-14);
        assert!((segment_time(&[-1.0, 0.0], &[0.4, 0.0]) - 1.0 / 0.6).abs() < 1e-14);
        assert!(segment_time(&[-1.0, 0.0], &[2.0, 0.0]).is_infinite());
        assert!((segment_time(&[1.0, 0.0], &[2.0, 0.0]) - 1.0 / 3.0).abs() < 1e-14);
        assert!(segment_time(&[-1.0, 0.0], &[1.0, 0.0]).is_infinite());
        assert!((segment_time(&[1.0, 0.0], &[1.0, 0.0]) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn max_speed_matches_segment_time() {
        for v in [[0.3, -0.2], [1.5, 0.4], [-0.9, 0.9]] {
            for ang in 0..12 {
                let t = ang as f64 * std::f64::consts::FRAC_PI_6;
                let b = [t.cos(), t.sin()];
                let s = max_speed(&b, &v);
                let st = segment_time(&b, &v);
                if s > 0.0 {
                    assert!((1.0 / s - st).abs() < 1e-9, "{v:?} {b:?}");
                } else {
                    assert!(st.is_infinite());
                }
            }
        }
    }

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil::<2>(1).len(), 8);
        assert_eq!(stencil::<2>(2).len(), 16);
        assert_eq!(stencil::<3>(1).len(), 26);
    }

    #[test]
    fn euclidean_anisotropy_bound() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.04, 2.0).unwrap();
        let d = dijkstra_oracle(&f, [0.0; 2], &g, 2).unwrap();
        for i in 0..g.len() {
            let r = g.radius(i);
            assert!((d.values[i] - r).abs() <= 0.09 * r + 1e-12);
        }
    }

    #[test]
    fn constant_drift_along_axis() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.4, 0.0]), 0).unwrap();
        let g = Grid::open(0.04, 2.0).unwrap();
        let d = dijkstra_oracle(&f, [0.0; 2], &g, 2).unwrap();
        assert!((d.at(&[1.0, 0.0]).unwrap() - 1.0 / 1.4).abs() <= 3.0 * g.h);
        assert!((d.at(&[-1.0, 0.0]).unwrap() - 1.0 / 0.6).abs() <= 3.0 * g.h);
        let s = solve_min_time_graph(&f, [0.0; 2], &g, &GraphOptions { rho: 4, ..Default::default() }).unwrap();
        assert!((s.theta.at(&[-1.0, 0.0]).unwrap() - 1.0 / 0.6).abs() < 1e-9);
    }

    #[test]
    fn early_stop_keeps_settled_values() {
        let f = make_field::<2>(&FieldSpec::cellular(1.0), 0).unwrap();
        let g = Grid::open(0.05, 2.0).unwrap();
        let full = solve_min_time_graph(&f, [0.0; 2], &g, &GraphOptions { rho: 3, ..Default::default() }).unwrap();
        let y = [0.7, -0.3];
        let opts = GraphOptions { rho: 3, stop_time: None, targets: vec![y] };
        let part = solve_min_time_graph(&f, [0.0; 2], &g, &opts).unwrap();
        assert_eq!(part.theta.interpolate(&y), full.theta.interpolate(&y));
        assert!(part.theta.reachable_count() < full.theta.reachable_count());
        for i in 0..g.len() {
            if part.theta.reachable[i] {
                assert_eq!(part.theta.values[i], full.theta.values[i]);
            }
        }
        let opts = GraphOptions { rho: 3, stop_time: Some(0.5), targets: vec![] };
        let part = solve_min_time_graph(&f, [0.0; 2], &g, &opts).unwrap();
        for i in 0..g.len() {
            assert_eq!(part.theta.reachable[i], full.theta.values[i] <= 0.5);
        }
    }

    #[test]
    fn oracle_size_limit() {
        let f = make_field::<2>(&FieldSpec::zero(), 0).unwrap();
        let g = Grid::open(0.01, 2.0).unwrap();
        assert!(dijkstra_oracle(&f, [0.0; 2], &g, 2).is_err());
    }

    #[test]
    fn non_coercive_drift_blocks_upstream() {
        let f = make_field::<2>(&FieldSpec::constant(vec![1.5, 0.0]), 0).unwrap();
        let g = Grid::open(0.1, 2.0).unwrap();
        let s = solve_min_time_graph(&f, [0.0; 2], &g, &GraphOptions { rho: 3, ..Default::default() }).unwrap();
        assert_eq!(s.theta.at(&[-1.0, 0.0]), None);
        assert!((s.theta.at(&[1.0, 0.0]).unwrap() - 1.0 / 2.5).abs() < 1e-9);
    }
}
