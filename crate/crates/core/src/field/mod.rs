//! Stationary divergence-free velocity fields.
//!
//! A [`FieldSpec`] describes a law; [`make_field`] freezes one sample of it
//! into an immutable [`FieldRealization`] that can be evaluated anywhere. In 2D
//! every non-constant family is generated from a stream function `psi` with
//! `V = (d psi/dx2, -d psi/dx1)`, so the divergence vanishes identically; 3D
//! families use the curl of a vector potential.

mod bumps;
mod counterexample;
mod periodic;
mod random_phase;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

pub use bumps::BumpField;
pub use counterexample::{
    bump_profile, delta_by_scan, sample_stationary_interval, CounterexampleShear, GapLaw,
    PointProcessRealization,
};
pub use random_phase::PhaseMode;

fn default_dimension() -> usize {
    2
}

/// Law of a random velocity field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub family: FieldFamily,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Constant drift added to the mean-zero family, so that `E[V] = drift`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldFamily {
    Zero,
    Constant {
        velocity: Vec<f64>,
    },
    /// `psi = (A / k) sin(k x1) sin(k x2)`; deterministic (the seed is ignored).
    PeriodicCellular {
        amplitude: f64,
        wavenumber: f64,
    },
    /// `V = (0, A sin(k x1))`; deterministic.
    PeriodicShear {
        amplitude: f64,
        wavenumber: f64,
    },
    /// Sum of plane-wave stream modes with independent uniform phases.
    RandomPhaseStream {
        modes: Vec<PhaseMode>,
    },
    /// Randomly signed compact bumps at a thinned Poisson pattern; at most one
    /// bump per lattice cell of side `2 * bump_radius`.
    PoissonBumpStream {
        intensity: f64,
        bump_radius: f64,
        amplitude: f64,
    },
    /// `V = (0, V2(x1))` built on a renewal process with Pareto gaps and
    /// alternating marks. 2D only.
    CounterexampleShear {
        gap_shape: f64,
        gap_scale: f64,
        window: f64,
    },
}

impl FieldFamily {
    /// Two rationally independent modes, `2 pi (1, 0)` and `pi (sqrt 2, sqrt 3)`,
    /// each of the given amplitude.
    pub fn default_random_phase(amplitude: f64) -> Self {
        FieldFamily::RandomPhaseStream {
            modes: vec![
                PhaseMode {
                    amplitude,
                    wave_vector: vec![2.0 * std::f64::consts::PI, 0.0],
                },
                PhaseMode {
                    amplitude,
                    wave_vector: vec![
                        std::f64::consts::PI * 2f64.sqrt(),
                        std::f64::consts::PI * 3f64.sqrt(),
                    ],
                },
            ],
        }
    }

    /// Whether the family has identically zero spatial mean.
    pub fn is_mean_zero(&self) -> bool {
        match self {
            FieldFamily::Constant { velocity } => velocity.iter().all(|v| *v == 0.0),
            _ => true,
        }
    }

    /// Spatial period when the family is deterministic and periodic in every
    /// direction with a common period.
    pub fn period(&self) -> Option<f64> {
        match self {
            FieldFamily::Zero | FieldFamily::Constant { .. } => Some(1.0),
            FieldFamily::PeriodicCellular { wavenumber, .. }
            | FieldFamily::PeriodicShear { wavenumber, .. } => {
                Some(2.0 * std::f64::consts::PI / wavenumber)
            }
            _ => None,
        }
    }
}

impl FieldSpec {
    pub fn new(family: FieldFamily) -> Self {
        FieldSpec {
            family,
            dimension: 2,
            drift: None,
        }
    }

    pub fn with_dimension(mut self, dimension: usize) -> Self {
        self.dimension = dimension;
        self
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn zero() -> Self {
        Self::new(FieldFamily::Zero)
    }

    pub fn constant(velocity: Vec<f64>) -> Self {
        let dimension = velocity.len();
        Self::new(FieldFamily::Constant { velocity }).with_dimension(dimension)
    }

    /// Cellular flow with period 1.
    pub fn cellular(amplitude: f64) -> Self {
        Self::new(FieldFamily::PeriodicCellular {
            amplitude,
            wavenumber: 2.0 * std::f64::consts::PI,
        })
    }

    /// Shear `(0, A sin(2 pi x1))`.
    pub fn shear(amplitude: f64) -> Self {
        Self::new(FieldFamily::PeriodicShear {
            amplitude,
            wavenumber: 2.0 * std::f64::consts::PI,
        })
    }

    pub fn poisson_bumps(intensity: f64, bump_radius: f64, amplitude: f64) -> Self {
        Self::new(FieldFamily::PoissonBumpStream {
            intensity,
            bump_radius,
            amplitude,
        })
    }

    pub fn counterexample(gap_shape: f64) -> Self {
        Self::new(FieldFamily::CounterexampleShear {
            gap_shape,
            gap_scale: 1.0,
            window: 64.0,
        })
    }

    /// Same law with the mean removed.
    pub fn centered(&self) -> Self {
        let mut s = self.clone();
        s.drift = None;
        if let FieldFamily::Constant { velocity } = &s.family {
            s.family = FieldFamily::Constant {
                velocity: vec![0.0; velocity.len()],
            };
        }
        s
    }

    /// `E[V]` as a vector of length `dimension`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dimension];
        if let FieldFamily::Constant { velocity } = &self.family {
            for (mi, v) in m.iter_mut().zip(velocity) {
                *mi += v;
            }
        }
        if let Some(d) = &self.drift {
            for (mi, v) in m.iter_mut().zip(d) {
                *mi += v;
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dimension == 2 || self.dimension == 3) {
            return Err(Error::config(format!(
                "field.dimension must be 2 or 3, got {}",
                self.dimension
            )));
        }
        if let Some(d) = &self.drift {
            check_len("field.drift", d, self.dimension)?;
            check_finite("field.drift", d)?;
        }
        match &self.family {
            FieldFamily::Zero => {}
            FieldFamily::Constant { velocity } => {
                check_len("field.velocity", velocity, self.dimension)?;
                check_finite("field.velocity", velocity)?;
            }
            FieldFamily::PeriodicCellular {
                amplitude,
                wavenumber,
            }
            | FieldFamily::PeriodicShear {
                amplitude,
                wavenumber,
            } => {
                check_positive("field.wavenumber", *wavenumber)?;
                if !amplitude.is_finite() {
                    return Err(Error::config("field.amplitude must be finite"));
                }
            }
            FieldFamily::RandomPhaseStream { modes } => {
                random_phase::validate(modes, self.dimension)?;
            }
            FieldFamily::PoissonBumpStream {
                intensity,
                bump_radius,
                amplitude,
            } => {
                check_positive("field.intensity", *intensity)?;
                check_positive("field.bump_radius", *bump_radius)?;
                if !amplitude.is_finite() || *amplitude < 0.0 {
                    return Err(Error::config("field.amplitude must be finite and >= 0"));
                }
            }
            FieldFamily::CounterexampleShear {
                gap_shape,
                gap_scale,
                window,
            } => {
                if self.dimension != 2 {
                    return Err(Error::config(
                        "counterexample_shear is defined in dimension 2 only",
                    ));
                }
                if !(*gap_shape > 1.0) {
                    return Err(Error::config(
                        "field.gap_shape must exceed 1 so that the mean gap is finite",
                    ));
                }
                check_positive("field.gap_scale", *gap_scale)?;
                check_positive("field.window", *window)?;
            }
        }
        Ok(())
    }
}

fn check_len(key: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::config(format!(
            "{key} has {} components but the field dimension is {dim}",
            v.len()
        )));
    }
    Ok(())
}

fn check_finite(key: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::config(format!("{key} must be finite")));
    }
    Ok(())
}

fn check_positive(key: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::config(format!("{key} must be positive, got {x}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Frozen<const D: usize> {
    Zero,
    Cellular { amplitude: f64, wavenumber: f64 },
    Shear { amplitude: f64, wavenumber: f64 },
    Phase(Vec<random_phase::FrozenMode<D>>),
    Bumps(BumpField<D>),
    Shear1d(CounterexampleShear),
}

/// One frozen sample `V(., omega)`. Immutable and `Sync`.
#[derive(Clone, Debug)]
pub struct FieldRealization<const D: usize> {
    spec: FieldSpec,
    seed: u64,
    frozen: Frozen<D>,
    drift: [f64; D],
    /// `V_shifted(x) = V(x + offset)`; realizes the translation `tau_y omega`.
    offset: [f64; D],
    v_max: f64,
    lipschitz: f64,
    smoothness: f64,
}

/// Persisted form of a realization: the law and the seed, never raw samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationRecord {
    pub spec: FieldSpec,
    pub seed: u64,
}

/// Freezes one realization of `spec`. Equal `(spec, seed)` give bit-identical
/// realizations.
pub fn make_field<const D: usize>(spec: &FieldSpec, seed: u64) -> Result<FieldRealization<D>> {
    spec.validate()?;
    if spec.dimension != D {
        return Err(Error::config(format!(
            "field.dimension is {} but a {D}-dimensional realization was requested",
            spec.dimension
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drift: [f64; D] = match &spec.drift {
        Some(d) => vecops::to_array(d).expect("validated length"),
        None => [0.0; D],
    };

    let (frozen, v_max, lipschitz, smoothness, extra_drift) = match &spec.family {
        FieldFamily::Zero => (Frozen::Zero, 0.0, 0.0, 0.0, [0.0; D]),
        FieldFamily::Constant { velocity } => {
            let c: [f64; D] = vecops::to_array(velocity).expect("validated length");
            (Frozen::Zero, 0.0, 0.0, 0.0, c)
        }
        FieldFamily::PeriodicCellular {
            amplitude,
            wavenumber,
        } => {
            let (a, k) = (amplitude.abs(), *wavenumber);
            // 2D: |V| = A sqrt(s1^2 c2^2 + c1^2 s2^2) <= A. 3D curl construction: <= 2A.
            let vmax = if D == 2 { a } else { 2.0 * a };
            let lip = if D == 2 { a * k } else { a * k * 18f64.sqrt() };
            let smooth = if D == 2 { a * k.powi(3) } else { 2.0 * a * k.powi(3) };
            (
                Frozen::Cellular {
                    amplitude: *amplitude,
                    wavenumber: k,
                },
                vmax,
                lip,
                smooth,
                [0.0; D],
            )
        }
        FieldFamily::PeriodicShear {
            amplitude,
            wavenumber,
        } => {
            let (a, k) = (amplitude.abs(), *wavenumber);
            (
                Frozen::Shear {
                    amplitude: *amplitude,
                    wavenumber: k,
                },
                a,
                a * k,
                a * k.powi(3),
                [0.0; D],
            )
        }
        FieldFamily::RandomPhaseStream { modes } => {
            let frozen = random_phase::freeze::<D, _>(modes, &mut rng);
            let vmax = modes.iter().map(|m| m.amplitude.abs()).sum();
            let lip = modes
                .iter()
                .map(|m| m.amplitude.abs() * norm_slice(&m.wave_vector))
                .sum();
            let smooth = modes
                .iter()
                .map(|m| m.amplitude.abs() * norm_slice(&m.wave_vector).powi(3))
                .sum();
            (Frozen::Phase(frozen), vmax, lip, smooth, [0.0; D])
        }
        FieldFamily::PoissonBumpStream {
            intensity,
            bump_radius,
            amplitude,
        } => {
            let bf = BumpField::<D>::new(*intensity, *bump_radius, *amplitude, rng.random());
            let (vmax, lip, smooth) = (bf.v_max(), bf.lipschitz(), bf.smoothness());
            (Frozen::Bumps(bf), vmax, lip, smooth, [0.0; D])
        }
        FieldFamily::CounterexampleShear {
            gap_shape,
            gap_scale,
            window,
        } => {
            let law = GapLaw::Pareto {
                shape: *gap_shape,
                scale: *gap_scale,
            };
            let shear = CounterexampleShear::sample(law, *window, &mut rng)?;
            (
                Frozen::Shear1d(shear),
                2.0,
                CounterexampleShear::LIPSCHITZ,
                0.0,
                [0.0; D],
            )
        }
    };
    let total_drift = vecops::add(&drift, &extra_drift);
    let v_max = v_max + vecops::norm(&total_drift);
    Ok(FieldRealization {
        spec: spec.clone(),
        seed,
        frozen,
        drift: total_drift,
        offset: [0.0; D],
        v_max,
        lipschitz,
        smoothness,
    })
}

fn norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl<const D: usize> FieldRealization<D> {
    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn record(&self) -> RealizationRecord {
        RealizationRecord {
            spec: self.spec.clone(),
            seed: self.seed,
        }
    }

    /// Certified bound on `sup_x |V(x)|` (Euclidean, hence also on every component).
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// `M = ||V|| + 1`, the maximal speed of the controlled flow.
    pub fn speed_bound(&self) -> f64 {
        self.v_max + 1.0
    }

    /// Certified Lipschitz constant of `x -> V(x)`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Bound on the third derivatives of `V`, which controls the central
    /// difference error of the divergence.
    pub fn smoothness_bound(&self) -> f64 {
        self.smoothness
    }

    /// Spatial mean `E[V]` of the law.
    pub fn mean(&self) -> [f64; D] {
        self.drift
    }

    /// The counterexample shear data, when this realization is one.
    pub fn counterexample(&self) -> Option<&CounterexampleShear> {
        match &self.frozen {
            Frozen::Shear1d(s) => Some(s),
            _ => None,
        }
    }

    /// The translated environment `tau_y omega`: `V'(x) = V(x + y)`.
    pub fn shifted(&self, y: &[f64; D]) -> Self {
        let mut s = self.clone();
        s.offset = vecops::add(&self.offset, y);
        s
    }

    /// The realization with `-V`, used for backward reachability.
    pub fn reversed(&self) -> Reversed<'_, D> {
        Reversed(self)
    }

    /// `V(x, omega)`.
    pub fn eval(&self, x: &[f64; D]) -> [f64; D] {
        let y = vecops::add(x, &self.offset);
        let v = match &self.frozen {
            Frozen::Zero => [0.0; D],
            Frozen::Cellular {
                amplitude,
                wavenumber,
            } => periodic::cellular(&y, *amplitude, *wavenumber),
            Frozen::Shear {
                amplitude,
                wavenumber,
            } => {
                let mut v = [0.0; D];
                v[1] = amplitude * (wavenumber * y[0]).sin();
                v
            }
            Frozen::Phase(modes) => random_phase::eval(modes, &y),
            Frozen::Bumps(b) => b.eval(&y),
            Frozen::Shear1d(s) => {
                let mut v = [0.0; D];
                v[1] = s.v2(y[0]);
                v
            }
        };
        vecops::add(&v, &self.drift)
    }
}

/// Borrowed view of a realization with reversed velocity.
#[derive(Clone, Copy)]
pub struct Reversed<'a, const D: usize>(&'a FieldRealization<D>);

/// Anything that can be sampled as a velocity field.
pub trait VelocityField<const D: usize>: Sync {
    fn velocity(&self, x: &[f64; D]) -> [f64; D];
    fn speed_bound(&self) -> f64;
    fn lipschitz(&self) -> f64;
}

impl<const D: usize> VelocityField<D> for FieldRealization<D> {
    fn velocity(&self, x: &[f64; D]) -> [f64; D] {
        self.eval(x)
    }
    fn speed_bound(&self) -> f64 {
        FieldRealization::speed_bound(self)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl<const D: usize> VelocityField<D> for Reversed<'_, D> {
    fn velocity(&self, x: &[f64; D]) -> [f64; D] {
        vecops::scale(&self.0.eval(x), -1.0)
    }
    fn speed_bound(&self) -> f64 {
        self.0.speed_bound()
    }
    fn lipschitz(&self) -> f64 {
        self.0.lipschitz
    }
}

/// `V(x / eps)`: the field seen at scale `eps`.
#[derive(Clone, Copy)]
pub struct Scaled<'a, const D: usize, F: ?Sized> {
    pub inner: &'a F,
    pub eps: f64,
}

impl<'a, const D: usize, F: VelocityField<D> + ?Sized> Scaled<'a, D, F> {
    pub fn new(inner: &'a F, eps: f64) -> Self {
        assert!(eps > 0.0, "scale must be positive");
        Scaled { inner, eps }
    }
}

impl<const D: usize, F: VelocityField<D> + ?Sized> VelocityField<D> for Scaled<'_, D, F> {
    fn velocity(&self, x: &[f64; D]) -> [f64; D] {
        self.inner.velocity(&vecops::scale(x, 1.0 / self.eps))
    }
    fn speed_bound(&self) -> f64 {
        self.inner.speed_bound()
    }
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz() / self.eps
    }
}

/// `V(x, omega)`.
pub fn eval_velocity<const D: usize>(field: &FieldRealization<D>, x: &[f64; D]) -> [f64; D] {
    field.eval(x)
}

/// Central-difference divergence with step `h`.
pub fn divergence_estimate<const D: usize>(field: &FieldRealization<D>, x: &[f64; D], h: f64) -> f64 {
    assert!(h > 0.0, "divergence step must be positive");
    let mut div = 0.0;
    for i in 0..D {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        div += (field.eval(&xp)[i] - field.eval(&xm)[i]) / (2.0 * h);
    }
    div
}

/// Monte Carlo average of `V` over `[-R, R]^D` with `n` uniform samples. The
/// sample points are drawn from a stream derived from the realization seed.
pub fn mean_velocity_estimate<const D: usize>(
    field: &FieldRealization<D>,
    half_width: f64,
    samples: usize,
) -> Result<[f64; D]> {
    if !(half_width > 0.0) || samples == 0 {
        return Err(Error::config(
            "mean_velocity_estimate needs half_width > 0 and samples >= 1",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(field.seed ^ 0x6d65_616e_5f76_656c);
    let mut acc = [0.0; D];
    for _ in 0..samples {
        let x: [f64; D] = std::array::from_fn(|_| rng.random_range(-half_width..half_width));
        let v = field.eval(&x);
        for i in 0..D {
            acc[i] += v[i];
        }
    }
    Ok(vecops::scale(&acc, 1.0 / samples as f64))
}

/// SplitMix64 finalizer; used to derive independent, order-free random streams.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for member `index` of an ensemble; independent of scheduling order.
pub fn ensemble_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x5eed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_field() {
        let f = make_field::<2>(&FieldSpec::zero(), 123).unwrap();
        assert_eq!(f.eval(&[3.0, -5.0]), [0.0, 0.0]);
        assert_eq!(f.v_max(), 0.0);
        assert_eq!(f.speed_bound(), 1.0);
        assert_eq!(divergence_estimate(&f, &[0.1, 0.2], 1e-3), 0.0);
        assert_eq!(mean_velocity_estimate(&f, 5.0, 10).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn constant_field() {
        let f = make_field::<2>(&FieldSpec::constant(vec![0.4, 0.0]), 7).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]), [0.4, 0.0]);
        assert_eq!(f.eval(&[-9.0, 0.5]), [0.4, 0.0]);
        assert!((f.v_max() - 0.4).abs() < 1e-15);
        assert!((f.speed_bound() - 1.4).abs() < 1e-15);
        assert_eq!(divergence_estimate(&f, &[0.3, 0.7], 1e-3), 0.0);
        let m = mean_velocity_estimate(&f, 3.0, 100).unwrap();
        assert!((m[0] - 0.4).abs() < 1e-12 && m[1] == 0.0);
    }

    #[test]
    fn cellular_closed_form() {
        let f = make_field::<2>(&FieldSpec::cellular(2.0), 0).unwrap();
        // d/dx2 and -d/dx1 of (A / 2pi) sin(2 pi x1) sin(2 pi x2)
        let x = [0.13, 0.71];
        let expect = [
            2.0 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
            -2.0 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
        ];
        let v = f.eval(&x);
        assert!((v[0] - expect[0]).abs() < 1e-14 && (v[1] - expect[1]).abs() < 1e-14);
        assert_eq!(f.v_max(), 2.0);
        assert_eq!(f.speed_bound(), 3.0);
        assert!(divergence_estimate(&f, &[0.3, 0.7], 1e-3).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let err = make_field::<3>(&FieldSpec::cellular(1.0), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = make_field::<2>(&FieldSpec::constant(vec![1.0, 2.0, 3.0]), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_amplitude_counterexample_rejected() {
        let spec = FieldSpec::new(FieldFamily::CounterexampleShear {
            gap_shape: 0.5,
            gap_scale: 1.0,
            window: 10.0,
        });
        assert!(matches!(make_field::<2>(&spec, 1), Err(Error::Config(_))));
        let spec = FieldSpec::new(FieldFamily::CounterexampleShear {
            gap_shape: 1.5,
            gap_scale: 0.0,
            window: 10.0,
        });
        assert!(matches!(make_field::<2>(&spec, 1), Err(Error::Config(_))));
    }

    #[test]
    fn spec_json_roundtrip_rejects_unknown_keys() {
        let spec = FieldSpec::poisson_bumps(0.2, 1.0, 0.5).with_drift(vec![0.2, 0.0]);
        let s = serde_json::to_string(&spec).unwrap();
        let back: FieldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"family":{"kind":"zero"},"dimension":2,"colour":"red"}"#;
        assert!(serde_json::from_str::<FieldSpec>(bad).is_err());
    }

    #[test]
    fn shift_realizes_translation() {
        let spec = FieldFamily::default_random_phase(0.7);
        let f = make_field::<2>(&FieldSpec::new(spec), 11).unwrap();
        let y = [0.37, -1.2];
        let g = f.shifted(&y);
        let x = [2.0, 0.5];
        assert_eq!(g.eval(&x), f.eval(&vecops::add(&x, &y)));
    }

    #[test]
    fn drift_and_centering() {
        let spec = FieldSpec::poisson_bumps(0.3, 1.0, 0.4).with_drift(vec![0.2, 0.0]);
        assert_eq!(spec.mean(), vec![0.2, 0.0]);
        assert_eq!(spec.centered().mean(), vec![0.0, 0.0]);
        let f = make_field::<2>(&spec, 3).unwrap();
        let g = make_field::<2>(&spec.centered(), 3).unwrap();
        let x = [0.3, 4.1];
        let (a, b) = (f.eval(&x), g.eval(&x));
        assert!((a[0] - b[0] - 0.2).abs() < 1e-15 && a[1] == b[1]);
    }

    #[test]
    fn ensemble_seeds_distinct() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| ensemble_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
