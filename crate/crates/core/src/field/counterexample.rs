//! Heavy-tailed shear environment with non-integrable first-passage times.
//!
//! Gaps of a stationary renewal process are drawn from a law `mu` with finite
//! mean and infinite second moment. On each gap `[Y_{n-1}, Y_n)` the vertical
//! velocity is `phi(Y_n - Y_{n-1}, x1 - Y_{n-1}) sigma_{n-1}` with alternating
//! marks, so `|V2| = 2` deep inside long gaps and the distance from the origin
//! to the nearest point with `|V2| <= 1` has a heavy tail.

use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gap law `mu` of the renewal process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GapLaw {
    /// Density `shape scale^shape / v^(shape + 1)` on `[scale, inf)`.
    Pareto { shape: f64, scale: f64 },
    /// Point mass.
    Degenerate { value: f64 },
}

impl GapLaw {
    pub fn pareto(shape: f64) -> Self {
        GapLaw::Pareto { shape, scale: 1.0 }
    }

    /// Mean gap `m`; infinite when `shape <= 1`.
    pub fn mean(&self) -> f64 {
        match *self {
            GapLaw::Pareto { shape, scale } if shape > 1.0 => shape * scale / (shape - 1.0),
            GapLaw::Pareto { .. } => f64::INFINITY,
            GapLaw::Degenerate { value } => value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            GapLaw::Pareto { shape, scale } => Pareto::new(scale, shape)
                .expect("validated Pareto parameters")
                .sample(rng),
            GapLaw::Degenerate { value } => value,
        }
    }

    /// Draw from the size-biased law `v mu(dv) / m`. For a Pareto law this is
    /// again Pareto with the shape lowered by one.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            GapLaw::Pareto { shape, scale } => Pareto::new(scale, shape - 1.0)
                .expect("shape > 1 for a finite mean")
                .sample(rng),
            GapLaw::Degenerate { value } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GapLaw::Pareto { shape, scale } => {
                if !(shape > 1.0 && shape.is_finite()) {
                    return Err(Error::config("gap law shape must exceed 1 (finite mean)"));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::config("gap law scale must be positive"));
                }
            }
            GapLaw::Degenerate { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::config("degenerate gap must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Draws the gap straddling the origin under the stationary (Palm-inverted)
/// law: `v` from the size-biased law, `s` uniform on `(0, v)`, and returns
/// `(Y0, Y1) = (-s, v - s)`.
pub fn sample_stationary_interval<R: Rng + ?Sized>(law: &GapLaw, rng: &mut R) -> (f64, f64) {
    let v = law.sample_size_biased(rng);
    // s in (0, v]: keeps Y0 <= 0 < Y1 strictly
    let s = v * (1.0 - rng.random::<f64>());
    let y0 = -s;
    let y1 = v - s;
    if y1 > 0.0 {
        (y0, y1)
    } else {
        (y0, f64::MIN_POSITIVE)
    }
}

/// Smoothstep `3 s^2 - 2 s^3` clamped to `[0, 1]`.
fn ramp(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * (3.0 - 2.0 * s)
    }
}

/// `phi(a, x) = 2 r(x) r(a - x)`: zero outside `[0, a]`, equal to 2 on
/// `[1, a - 1]`, symmetric and unimodal in `x`, Lipschitz constant 3.
pub fn bump_profile(gap: f64, x: f64) -> f64 {
    2.0 * ramp(x) * ramp(gap - x)
}

/// Ordered marked points covering a window around the origin.
#[derive(Clone, Debug)]
pub struct PointProcessRealization {
    /// Strictly increasing positions.
    pub points: Vec<f64>,
    /// Index of `Y_0` in `points` (so `points[zero] <= 0 < points[zero + 1]`).
    pub zero: usize,
    /// `sigma_0 = +-1`; `sigma_n = sigma_0 (-1)^n`.
    pub sigma0: i8,
    pub law: GapLaw,
    pub mean_gap: f64,
}

impl PointProcessRealization {
    /// Mark of the interval `[Y_n, Y_{n+1})`.
    pub fn mark(&self, n: i64) -> i8 {
        if n.rem_euclid(2) == 0 {
            self.sigma0
        } else {
            -self.sigma0
        }
    }

    /// `Y_n` for `n` relative to the origin gap.
    pub fn point(&self, n: i64) -> Option<f64> {
        let idx = self.zero as i64 + n;
        (idx >= 0 && (idx as usize) < self.points.len()).then(|| self.points[idx as usize])
    }

    pub fn window(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().expect("nonempty"))
    }

    /// `(Y0, Y1)`.
    pub fn straddling(&self) -> (f64, f64) {
        (self.points[self.zero], self.points[self.zero + 1])
    }
}

/// The vertical velocity `V2(x1)` of the counterexample field.
#[derive(Clone, Debug)]
pub struct CounterexampleShear {
    process: PointProcessRealization,
}

impl CounterexampleShear {
    pub const LIPSCHITZ: f64 = 3.0;

    /// Samples the process on `[-window, window]`. Fails when the gap
    /// straddling the origin does not fit in the window.
    pub fn sample<R: Rng + ?Sized>(law: GapLaw, window: f64, rng: &mut R) -> Result<Self> {
        law.validate()?;
        if !(window > 0.0) {
            return Err(Error::config("counterexample window must be positive"));
        }
        let sigma0 = if rng.random::<bool>() { 1 } else { -1 };
        let (y0, y1) = sample_stationary_interval(&law, rng);
        let required = (-y0).max(y1);
        if required > window {
            return Err(Error::WindowTooSmall { window, required });
        }
        Ok(Self::extend(law, sigma0, y0, y1, window, rng))
    }

    /// Like [`sample`](Self::sample) but widens the window to contain the
    /// straddling gap. The random stream consumed is identical.
    pub fn sample_covering<R: Rng + ?Sized>(law: GapLaw, window: f64, rng: &mut R) -> Result<Self> {
        law.validate()?;
        let sigma0 = if rng.random::<bool>() { 1 } else { -1 };
        let (y0, y1) = sample_stationary_interval(&law, rng);
        let w = window.max(-y0).max(y1);
        Ok(Self::extend(law, sigma0, y0, y1, w, rng))
    }

    fn extend<R: Rng + ?Sized>(law: GapLaw, sigma0: i8, y0: f64, y1: f64, window: f64, rng: &mut R) -> Self {
        let mut right = vec![y1];
        while *right.last().unwrap() < window {
            let last = *right.last().unwrap();
            right.push(last + law.sample(rng));
        }
        let mut left = vec![y0];
        while *left.last().unwrap() > -window {
            let last = *left.last().unwrap();
            left.push(last - law.sample(rng));
        }
        let zero = left.len() - 1;
        let mut points: Vec<f64> = left.into_iter().rev().collect();
        points.extend(right);
        CounterexampleShear {
            process: PointProcessRealization {
                points,
                zero,
                sigma0,
                law,
                mean_gap: law.mean(),
            },
        }
    }

    pub fn process(&self) -> &PointProcessRealization {
        &self.process
    }

    /// `V2(x1)`; zero outside the sampled window.
    pub fn v2(&self, x1: f64) -> f64 {
        let pts = &self.process.points;
        let k = pts.partition_point(|&y| y <= x1);
        if k == 0 || k == pts.len() {
            return 0.0;
        }
        let (left, right) = (pts[k - 1], pts[k]);
        let n = (k - 1) as i64 - self.process.zero as i64;
        bump_profile(right - left, x1 - left) * self.process.mark(n) as f64
    }

    /// `delta = min{|r| : |V2(r)| <= 1}`.
    ///
    /// Only the straddling gap matters since `V2` vanishes at its endpoints.
    /// Inside it `phi(a, .)` is symmetric and increasing on `[0, a/2]`, so
    /// `{phi <= 1}` is `[0, l] U [a - l, a]` with `phi(a, l) = 1`; `l` is found
    /// by bisection.
    pub fn delta(&self) -> f64 {
        let (y0, y1) = self.process.straddling();
        let a = y1 - y0;
        let x = -y0;
        if bump_profile(a, x) <= 1.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, x.min(a - x).min(0.5 * a));
        while hi - lo > 1e-12 * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if bump_profile(a, mid) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let l = lo;
        (x - l).min(a - l - x).max(0.0)
    }

    /// Certified lower bounds `(theta(0, e2), theta(0, -e2))`.
    ///
    /// Horizontal speed is at most 1, so for `t < delta` every trajectory stays
    /// where `|V2| > 1` and moves vertically with the sign of `V2(0)`; after
    /// that the vertical speed is at most 3. Reaching the unfavourable target
    /// therefore takes at least `delta + 1/3`, and any target at distance 1
    /// takes at least `1/M = 1/3`.
    pub fn theta_lower_bounds(&self) -> (f64, f64) {
        let d = self.delta();
        let v0 = self.v2(0.0);
        let base = 1.0 / 3.0;
        if d > 0.0 && v0 > 1.0 {
            (base, d + base)
        } else if d > 0.0 && v0 < -1.0 {
            (d + base, base)
        } else {
            (base, base)
        }
    }
}

/// Independent oracle for `delta`: scan outward from 0 in steps of `step`.
pub fn delta_by_scan(shear: &CounterexampleShear, step: f64, max_radius: f64) -> Option<f64> {
    let mut r = 0.0;
    while r <= max_radius {
        if shear.v2(r).abs() <= 1.0 || shear.v2(-r).abs() <= 1.0 {
            return Some(r);
        }
        r += step;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bump_profile_shape() {
        assert_eq!(bump_profile(5.0, -0.1), 0.0);
        assert_eq!(bump_profile(5.0, 5.1), 0.0);
        for x in [1.0, 2.0, 3.3, 4.0] {
            assert_eq!(bump_profile(5.0, x), 2.0);
        }
        assert!((bump_profile(1.2, 0.3) - bump_profile(1.2, 0.9)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (y0, y1) = sample_stationary_interval(&GapLaw::Degenerate { value: 2.0 }, &mut rng);
            assert!(y0 <= 0.0 && y1 > 0.0);
            assert!((y1 - y0 - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_window_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let law = GapLaw::Degenerate { value: 10.0 };
        // the straddling gap has length 10, so some side exceeds 0.5
        assert!(matches!(
            CounterexampleShear::sample(law, 0.5, &mut rng),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn structure_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let s = CounterexampleShear::sample_covering(GapLaw::pareto(1.5), 30.0, &mut rng).unwrap();
            let p = s.process();
            assert!(p.points.windows(2).all(|w| w[1] > w[0]));
            let (y0, y1) = p.straddling();
            assert!(y0 <= 0.0 && 0.0 < y1);
            for n in -5..5 {
                assert_eq!(p.mark(n + 1), -p.mark(n));
                if let (Some(a), Some(b)) = (p.point(n), p.point(n + 1)) {
                    assert_eq!(s.v2(a), 0.0);
                    let mid = s.v2(0.5 * (a + b));
                    assert!(mid == 0.0 || mid.signum() as i8 == p.mark(n));
                }
            }
            assert!(p.window().0 <= -30.0 && p.window().1 >= 30.0);
        }
    }

    #[test]
    fn delta_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..400 {
            let s = CounterexampleShear::sample_covering(GapLaw::pareto(1.5), 10.0, &mut rng).unwrap();
            let d = s.delta();
            if d > 50.0 {
                continue;
            }
            let scan = delta_by_scan(&s, 1e-3, 60.0).unwrap();
            assert!((scan - d).abs() <= 1.01e-3, "scan {scan} vs bisection {d}");
            checked += 1;
        }
        assert!(checked > 300);
    }

    #[test]
    fn long_centered_gap() {
        // 0 at the center of a gap of length 8: |V2| = 2 on [-3, 3]
        let law = GapLaw::Degenerate { value: 8.0 };
        let s = CounterexampleShear::extend(law, 1, -4.0, 4.0, 20.0, &mut ChaCha8Rng::seed_from_u64(0));
        for x in [-3.0, -1.0, 0.0, 2.5, 3.0] {
            assert_eq!(s.v2(x).abs(), 2.0);
        }
        assert!(s.delta() >= 8.0 / 2.0 - 1.0);
        let (up, down) = s.theta_lower_bounds();
        assert!(up + down >= s.delta());
    }

    #[test]
    fn delta_zero_in_short_gap() {
        let law = GapLaw::Degenerate { value: 1.0 };
        // 0 close to the left end of a unit gap: phi(1, 0.05) is tiny
        let s = CounterexampleShear::extend(law, 1, -0.05, 0.95, 5.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(s.v2(0.0).abs() <= 1.0);
        assert_eq!(s.delta(), 0.0);
    }
}
