//! The controlled flow `x' = a(t) + V(x)` and random piecewise-constant
//! controls.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::vecops::{axpy, norm, scale, sub};

/// Piecewise-constant control `a_{k_n}` on `[sigma_n, sigma_{n+1})` with
/// `a_k = base +- eps e_j`. Index `k = 2j` is `+eps e_j`, `k = 2j + 1` is
/// `-eps e_j`.
#[derive(Clone, Debug, Serialize)]
pub struct ControlSchedule<const D: usize> {
    #[serde(with = "array_serde")]
    pub base: [f64; D],
    pub epsilon: f64,
    pub delta: f64,
    /// `switches.len() == indices.len() + 1`; the last entry is the horizon.
    pub switches: Vec<f64>,
    pub indices: Vec<usize>,
}

mod array_serde {
    use serde::Serializer;

    pub fn serialize<S: Serializer, const D: usize>(a: &[f64; D], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(a.iter())
    }
}

impl<const D: usize> ControlSchedule<D> {
    pub fn horizon(&self) -> f64 {
        *self.switches.last().unwrap_or(&0.0)
    }

    pub fn vector(&self, k: usize) -> [f64; D] {
        let mut a = self.base;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        a[k / 2] += sign * self.epsilon;
        a
    }

    /// Control in force at time `t` (right-continuous).
    pub fn at(&self, t: f64) -> Option<[f64; D]> {
        if t < 0.0 || t > self.horizon() || self.indices.is_empty() {
            return None;
        }
        let n = self.switches.partition_point(|&s| s <= t).saturating_sub(1);
        Some(self.vector(self.indices[n.min(self.indices.len() - 1)]))
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.switches.windows(2).map(|w| w[1] - w[0])
    }

    /// `sigma_n,k_n` rows, with 1-based `k` as in `{1, ..., 2N}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sigma,k")?;
        for (s, k) in self.switches.iter().zip(&self.indices) {
            writeln!(w, "{s},{}", k + 1)?;
        }
        Ok(())
    }
}

/// Draws a schedule covering `[0, horizon]` with gaps uniform on
/// `[delta - delta^2, delta + delta^2]` and directions uniform on the `2N`
/// perturbations.
pub fn sample_random_control<const D: usize, R: Rng + ?Sized>(
    base: [f64; D],
    epsilon: f64,
    delta: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<ControlSchedule<D>> {
    if !(epsilon > 0.0 && epsilon < 1.0 - norm(&base)) {
        return Err(Error::config("control epsilon must lie in (0, 1 - |base|)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("control delta must lie in (0, 1)"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::config("control horizon must be positive"));
    }
    let (lo, hi) = (delta - delta * delta, delta + delta * delta);
    let mut switches = vec![0.0];
    let mut indices = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        indices.push(rng.random_range(0..2 * D));
        t += rng.random_range(lo..=hi);
        switches.push(t);
    }
    Ok(ControlSchedule {
        base,
        epsilon,
        delta,
        switches,
        indices,
    })
}

/// Open-loop control for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub enum Control<'a, const D: usize> {
    Constant([f64; D]),
    Schedule(&'a ControlSchedule<D>),
}

#[derive(Clone, Debug)]
pub enum ControlUsed<const D: usize> {
    Constant([f64; D]),
    Schedule(ControlSchedule<D>),
    /// Trajectory not generated by an open-loop control.
    None,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord<const D: usize> {
    pub start: [f64; D],
    pub t0: f64,
    pub times: Vec<f64>,
    pub positions: Vec<[f64; D]>,
    pub control: ControlUsed<D>,
}

impl<const D: usize> TrajectoryRecord<D> {
    pub fn end(&self) -> [f64; D] {
        *self.positions.last().expect("trajectory has at least its start")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least its start")
    }

    /// Largest `|dX| / (M dt)` over consecutive samples.
    pub fn speed_ratio(&self, m: f64) -> f64 {
        self.times
            .windows(2)
            .zip(self.positions.windows(2))
            .filter(|(t, _)| t[1] != t[0])
            .map(|(t, x)| norm(&sub(&x[1], &x[0])) / (m * (t[1] - t[0]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names = ["x1", "x2", "x3"];
        write!(w, "t")?;
        for n in names.iter().take(D) {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.positions) {
            write!(w, "{t}")?;
            for c in x {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrator settings. `record_every` thins the stored samples (the final
/// position is always stored).
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub max_step: Option<f64>,
    pub record_every: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            max_step: None,
            record_every: 1,
        }
    }
}

/// Default step `min(1e-2, 0.05 / Lip)`.
pub fn default_step<const D: usize, F: VelocityField<D> + ?Sized>(field: &F) -> f64 {
    let lip = field.lipschitz();
    if lip > 0.0 {
        (0.05 / lip).min(1e-2)
    } else {
        1e-2
    }
}

// constant-control segments [t_a, t_b) covering [t0, t1]
fn segments<const D: usize>(control: Control<'_, D>, t0: f64, t1: f64) -> Result<Vec<(f64, f64, [f64; D])>> {
    match control {
        Control::Constant(a) => {
            if norm(&a) > 1.0 + 1e-12 {
                return Err(Error::config("control must lie in the closed unit ball"));
            }
            Ok(vec![(t0, t1, a)])
        }
        Control::Schedule(s) => {
            if t0 < 0.0 || t1 > s.horizon() + 1e-12 {
                return Err(Error::Horizon {
                    horizon: s.horizon(),
                    requested: t1,
                });
            }
            let mut out = Vec::new();
            for (n, w) in s.switches.windows(2).enumerate() {
                let a = w[0].max(t0);
                let b = w[1].min(t1);
                if b > a {
                    out.push((a, b, s.vector(s.indices[n])));
                }
            }
            if out.is_empty() {
                out.push((t0, t1, s.vector(s.indices[0])));
            }
            Ok(out)
        }
    }
}

fn rk4_step<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    a: &[f64; D],
    sv: f64,
    x: &[f64; D],
    h: f64,
) -> [f64; D] {
    let f = |y: &[f64; D]| axpy(a, sv, &field.velocity(y));
    let k1 = f(x);
    let k2 = f(&axpy(x, 0.5 * h, &k1));
    let k3 = f(&axpy(x, 0.5 * h, &k2));
    let k4 = f(&axpy(x, h, &k3));
    let mut out = *x;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn drive<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    x0: [f64; D],
    segs: &[(f64, f64, [f64; D])],
    reverse: bool,
    opts: OdeOptions,
) -> (Vec<f64>, Vec<[f64; D]>) {
    let h_max = opts.max_step.unwrap_or_else(|| default_step(field));
    let every = opts.record_every.max(1);
    let start_t = if reverse { segs.last().unwrap().1 } else { segs[0].0 };
    let mut times = vec![start_t];
    let mut positions = vec![x0];
    let mut x = x0;
    let mut count = 0usize;
    let order: Vec<usize> = if reverse {
        (0..segs.len()).rev().collect()
    } else {
        (0..segs.len()).collect()
    };
    // running backward in time solves y' = -(a + V(y))
    let (sa, sv) = if reverse { (-1.0, -1.0) } else { (1.0, 1.0) };
    for &i in &order {
        let (ta, tb, a) = segs[i];
        let len = tb - ta;
        let n = (len / h_max).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let a = scale(&a, sa);
        for j in 0..n {
            x = rk4_step(field, &a, sv, &x, h);
            count += 1;
            let t = if reverse {
                tb - (j + 1) as f64 * h
            } else {
                ta + (j + 1) as f64 * h
            };
            if count.is_multiple_of(every) {
                times.push(t);
                positions.push(x);
            }
        }
    }
    let end_t = if reverse { segs[0].0 } else { segs.last().unwrap().1 };
    if *times.last().unwrap() != end_t {
        times.push(end_t);
        positions.push(x);
    }
    (times, positions)
}

fn control_used<const D: usize>(control: Control<'_, D>) -> ControlUsed<D> {
    match control {
        Control::Constant(a) => ControlUsed::Constant(a),
        Control::Schedule(s) => ControlUsed::Schedule(s.clone()),
    }
}

/// RK4 solution of `x' = a(t) + V(x)` on `[t0, t1]` with switch times as
/// step boundaries. For the backward system `x' = a - V` pass
/// `field.reversed()`.
pub fn integrate<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    x0: [f64; D],
    t0: f64,
    control: Control<'_, D>,
    t1: f64,
    opts: OdeOptions,
) -> Result<TrajectoryRecord<D>> {
    if !(t1 >= t0) {
        return Err(Error::config("integration requires t1 >= t0"));
    }
    let segs = segments(control, t0, t1)?;
    let (times, positions) = if t1 == t0 {
        (vec![t0], vec![x0])
    } else {
        drive(field, x0, &segs, false, opts)
    };
    Ok(TrajectoryRecord {
        start: x0,
        t0,
        times,
        positions,
        control: control_used(control),
    })
}

/// Solves the same forward system backward in time: given `X_{t1} = x1`,
/// returns samples from `t1` down to `t0`.
pub fn integrate_back_in_time<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    x1: [f64; D],
    t1: f64,
    control: Control<'_, D>,
    t0: f64,
    opts: OdeOptions,
) -> Result<TrajectoryRecord<D>> {
    if !(t1 >= t0) {
        return Err(Error::config("integration requires t1 >= t0"));
    }
    let segs = segments(control, t0, t1)?;
    let (times, positions) = if t1 == t0 {
        (vec![t1], vec![x1])
    } else {
        drive(field, x1, &segs, true, opts)
    };
    Ok(TrajectoryRecord {
        start: x1,
        t0: t1,
        times,
        positions,
        control: control_used(control),
    })
}

/// `sup_{t >= T/2} |(X_t - x0)/(t - t0) - base|` over the recorded samples.
pub fn drift_statistic<const D: usize>(traj: &TrajectoryRecord<D>, base: &[f64; D]) -> f64 {
    let t_end = traj.end_time() - traj.t0;
    traj.times
        .iter()
        .zip(&traj.positions)
        .filter(|(t, _)| **t - traj.t0 >= 0.5 * t_end && **t > traj.t0)
        .map(|(t, x)| {
            let v = scale(&sub(x, &traj.start), 1.0 / (t - traj.t0));
            norm(&sub(&v, base))
        })
        .fold(0.0, f64::max)
}

/// `X_T / T` from the origin under the constant control `a`.
pub fn constant_control_direction<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    a: [f64; D],
    horizon: f64,
) -> Result<[f64; D]> {
    let traj = integrate(
        field,
        [0.0; D],
        0.0,
        Control::Constant(a),
        horizon,
        OdeOptions {
            max_step: None,
            record_every: usize::MAX,
        },
    )?;
    Ok(scale(&traj.end(), 1.0 / horizon))
}

/// Positions `X_{sigma_n}` at the switch times of a schedule started at `x0`.
pub fn switch_positions<const D: usize, F: VelocityField<D> + ?Sized>(
    field: &F,
    x0: [f64; D],
    schedule: &ControlSchedule<D>,
) -> Vec<[f64; D]> {
    let segs = segments(Control::Schedule(schedule), 0.0, schedule.horizon()).expect("full horizon");
    let h_max = default_step(field);
    let mut x = x0;
    let mut out = vec![x];
    for (ta, tb, a) in segs {
        let n = ((tb - ta) / h_max).ceil().max(1.0) as usize;
        let h = (tb - ta) / n as f64;
        for _ in 0..n {
            x = rk4_step(field, &a, 1.0, &x, h);
        }
        out.push(x);
    }
    out
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (points[i], points[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Advects the boundary of the square `[c - s/2, c + s/2]^2` sampled with
/// `per_side` points per edge and returns the area ratio after time `t`.
pub fn advected_area_ratio<F: VelocityField<2> + ?Sized>(
    field: &F,
    center: [f64; 2],
    side: f64,
    per_side: usize,
    a: [f64; 2],
    t: f64,
) -> Result<f64> {
    let mut boundary = Vec::with_capacity(4 * per_side);
    let corner = [center[0] - 0.5 * side, center[1] - 0.5 * side];
    let dirs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    let mut p = corner;
    for d in dirs {
        for _ in 0..per_side {
            boundary.push(p);
            p = axpy(&p, side / per_side as f64, &d);
        }
    }
    let before = polygon_area(&boundary);
    let opts = OdeOptions {
        max_step: None,
        record_every: usize::MAX,
    };
    let moved = boundary
        .iter()
        .map(|&x| integrate(field, x, 0.0, Control::Constant(a), t, opts).map(|tr| tr.end()))
        .collect::<Result<Vec<_>>>()?;
    Ok(polygon_area(&moved) / before)
}

/// Running average of the controls actually applied, weighted by duration.
pub fn schedule_average<const D: usize>(schedule: &ControlSchedule<D>) -> [f64; D] {
    let mut acc = [0.0; D];
    for (gap, &k) in schedule.gaps().zip(&schedule.indices) {
        acc = axpy(&acc, gap, &schedule.vector(k));
    }
    scale(&acc, 1.0 / schedule.horizon())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldFamily, FieldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero() -> crate::FieldRealization<2> {
        make_field(&FieldSpec::zero(), 0).unwrap()
    }

    #[test]
    fn straight_line() {
        let tr = integrate(&zero(), [0.0, 0.0], 0.0, Control::Constant([1.0, 0.0]), 5.0, OdeOptions::default()).unwrap();
        let x = tr.end();
        assert!((x[0] - 5.0).abs() < 1e-10 && x[1].abs() < 1e-12);
    }

    #[test]
    fn superposition_with_constant_field() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.4, 0.0]), 0).unwrap();
        let tr = integrate(&f, [0.0, 0.0], 0.0, Control::Constant([0.0, 1.0]), 2.0, OdeOptions::default()).unwrap();
        let x = tr.end();
        assert!((x[0] - 0.8).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
        let back = integrate(&f.reversed(), [0.0, 0.0], 0.0, Control::Constant([0.0, 1.0]), 2.0, OdeOptions::default()).unwrap();
        assert!((back.end()[0] + 0.8).abs() < 1e-10);
    }

    #[test]
    fn shifted_realization_relation() {
        let spec = FieldSpec::new(FieldFamily::default_random_phase(1.0));
        let f = make_field::<2>(&spec, 11).unwrap();
        let y = [0.37, -1.21];
        let g = f.shifted(&y);
        let x0 = [0.2, 0.5];
        let a = Control::Constant([0.3, -0.6]);
        let lhs = integrate(&g, x0, 0.0, a, 3.0, OdeOptions::default()).unwrap().end();
        let rhs = integrate(&f, [x0[0] + y[0], x0[1] + y[1]], 0.0, a, 3.0, OdeOptions::default()).unwrap().end();
        assert!(norm(&sub(&lhs, &sub(&rhs, &y))) < 1e-8);
    }

    #[test]
    fn horizon_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_random_control([0.2, 0.0], 0.3, 0.1, 1.0, &mut rng).unwrap();
        let err = integrate(&zero(), [0.0; 2], 0.0, Control::Schedule(&s), s.horizon() + 1.0, OdeOptions::default());
        assert!(matches!(err, Err(Error::Horizon { .. })));
    }

    #[test]
    fn control_parameter_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_random_control([0.9, 0.0], 0.2, 0.1, 1.0, &mut rng).is_err());
        assert!(sample_random_control([0.1, 0.0], 0.2, 1.5, 1.0, &mut rng).is_err());
        assert!(sample_random_control([0.1, 0.0], 0.2, 0.1, -1.0, &mut rng).is_err());
    }

    #[test]
    fn schedule_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let delta = 0.1;
        let s = sample_random_control([0.3, 0.0], 0.2, delta, 1.0e4, &mut rng).unwrap();
        let gaps: Vec<f64> = s.gaps().collect();
        let n = gaps.len() as f64;
        assert!(n >= 1e5);
        let mean = gaps.iter().sum::<f64>() / n;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - delta).abs() <= 3.0 * (var / n).sqrt());
        let mad = gaps.iter().map(|g| (g - delta).abs()).sum::<f64>() / n;
        assert!(mad <= delta * delta);
        assert!(gaps.iter().all(|&g| g >= delta - delta * delta && g <= delta + delta * delta));
        let mut counts = [0usize; 4];
        for &k in &s.indices {
            counts[k] += 1;
        }
        let m = s.indices.len() as f64;
        let se = (0.25 * 0.75 / m).sqrt();
        for c in counts {
            assert!((c as f64 / m - 0.25).abs() <= 3.0 * se);
        }
        for k in 0..4 {
            assert!(norm(&s.vector(k)) <= 1.0);
        }
    }

    #[test]
    fn drift_in_zero_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = [0.3, 0.1];
        let s = sample_random_control(base, 0.2, 0.1, 200.0, &mut rng).unwrap();
        let tr = integrate(&zero(), [0.0; 2], 0.0, Control::Schedule(&s), 200.0, OdeOptions::default()).unwrap();
        let stat = drift_statistic(&tr, &base);
        assert!(stat <= 0.2 + 1.0 / 200.0);
        // oracle: duration-weighted average of the sampled controls
        let mut acc = [0.0; 2];
        for (w, &k) in s.switches.windows(2).zip(&s.indices) {
            acc = axpy(&acc, w[1].min(200.0) - w[0].min(200.0), &s.vector(k));
        }
        let avg = scale(&acc, 1.0 / 200.0);
        let end = scale(&tr.end(), 1.0 / 200.0);
        assert!(norm(&sub(&avg, &end)) < 1e-9);
    }

    #[test]
    fn semigroup_and_reversal() {
        let f = make_field::<2>(&FieldSpec::cellular(2.0), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = sample_random_control([0.2, 0.2], 0.3, 0.1, 4.0, &mut rng).unwrap();
        let c = Control::Schedule(&s);
        let x0 = [0.1, 0.3];
        let mid = s.switches[17];
        let direct = integrate(&f, x0, 0.0, c, 3.0, OdeOptions::default()).unwrap().end();
        let part = integrate(&f, x0, 0.0, c, mid, OdeOptions::default()).unwrap().end();
        let two = integrate(&f, part, mid, c, 3.0, OdeOptions::default()).unwrap().end();
        assert!(norm(&sub(&direct, &two)) < 1e-8);
        let back = integrate_back_in_time(&f, direct, 3.0, c, 0.0, OdeOptions::default()).unwrap();
        assert!(norm(&sub(&back.end(), &x0)) < 1e-6);
        assert_eq!(back.end_time(), 0.0);
    }

    #[test]
    fn fourth_order_under_step_halving() {
        let f = make_field::<2>(&FieldSpec::cellular(2.0), 0).unwrap();
        let run = |h: f64| {
            integrate(&f, [0.11, 0.07], 0.0, Control::Constant([0.5, 0.2]), 1.0, OdeOptions { max_step: Some(h), record_every: 1 })
                .unwrap()
                .end()
        };
        let (a, b, c) = (run(0.04), run(0.02), run(0.01));
        let e1 = norm(&sub(&a, &b));
        let e2 = norm(&sub(&b, &c));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn speed_bound_and_area() {
        let f = make_field::<2>(&FieldSpec::cellular(2.0), 0).unwrap();
        let tr = integrate(&f, [0.3, 0.2], 0.0, Control::Constant([0.0, -1.0]), 5.0, OdeOptions::default()).unwrap();
        assert!(tr.speed_ratio(f.speed_bound()) <= 1.0 + 1e-6);
        let r = advected_area_ratio(&f, [0.2, 0.3], 0.1, 4, [0.3, 0.0], 1.0).unwrap();
        assert!((r - 1.0).abs() < 0.05, "area ratio {r}");
    }

    #[test]
    fn csv_layout() {
        let tr = integrate(&zero(), [0.0, 0.0], 0.0, Control::Constant([1.0, 0.0]), 0.02, OdeOptions::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        assert_eq!(text.lines().count(), 1 + tr.times.len());
    }
}
