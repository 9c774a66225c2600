use super::mix64;

/// `max |g'|` for `g(r) = (1 - r^2)^3`, attained at `r^2 = 1/5`.
const PROFILE_SLOPE: f64 = 1.717_300_206_719_838_6;

/// Randomly signed stream bumps on a randomly offset lattice.
///
/// Each lattice cell of side `2 r_b` independently carries a bump with
/// probability `1 - exp(-lambda (2 r_b)^D)` (the chance that a Poisson pattern
/// of intensity `lambda` puts at least one point in the cell), at a uniform
/// position and with a uniform sign. Keeping at most one bump per cell bounds
/// the overlap count by `2^D`, which is what makes `||V||` finite. The uniform
/// lattice offset makes the law stationary under every translation.
///
/// A bump centered at `c` has stream function `s A r_b g(|x - c| / r_b) / max|g'|`,
/// so its velocity never exceeds `A`.
#[derive(Clone, Debug)]
pub struct BumpField<const D: usize> {
    radius: f64,
    amplitude: f64,
    cell: f64,
    occupancy: f64,
    lattice_offset: [f64; D],
    key: u64,
}

struct Bump<const D: usize> {
    center: [f64; D],
    sign: f64,
    axis: [f64; D],
}

impl<const D: usize> BumpField<D> {
    pub(super) fn new(intensity: f64, radius: f64, amplitude: f64, key: u64) -> Self {
        let cell = 2.0 * radius;
        let occupancy = 1.0 - (-intensity * cell.powi(D as i32)).exp();
        let mut h = mix64(key ^ 0x000f_f5e7);
        let lattice_offset = std::array::from_fn(|_| {
            h = mix64(h);
            unit(h) * cell
        });
        BumpField {
            radius,
            amplitude,
            cell,
            occupancy,
            lattice_offset,
            key,
        }
    }

    pub fn occupancy(&self) -> f64 {
        self.occupancy
    }

    pub(super) fn v_max(&self) -> f64 {
        self.amplitude * (1u32 << D) as f64
    }

    pub(super) fn lipschitz(&self) -> f64 {
        (1u32 << D) as f64 * self.amplitude * 6.0 / (PROFILE_SLOPE * self.radius)
    }

    pub(super) fn smoothness(&self) -> f64 {
        (1u32 << D) as f64 * self.amplitude * 400.0 / (PROFILE_SLOPE * self.radius * self.radius)
    }

    fn bump_in(&self, cell: &[i64; D]) -> Option<Bump<D>> {
        let mut h = mix64(self.key);
        for c in cell {
            h = mix64(h ^ (*c as u64));
        }
        if unit(h) >= self.occupancy {
            return None;
        }
        let center = std::array::from_fn(|i| {
            h = mix64(h.wrapping_add(i as u64 + 1));
            self.lattice_offset[i] + (cell[i] as f64 + unit(h)) * self.cell
        });
        h = mix64(h ^ 0x51);
        let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
        let mut axis = [0.0; D];
        if D == 3 {
            // uniform direction on the sphere
            h = mix64(h);
            let z = 2.0 * unit(h) - 1.0;
            h = mix64(h);
            let phi = std::f64::consts::TAU * unit(h);
            let r = (1.0 - z * z).sqrt();
            axis[0] = r * phi.cos();
            axis[1] = r * phi.sin();
            axis[2] = z;
        }
        Some(Bump { center, sign, axis })
    }

    pub(super) fn eval(&self, x: &[f64; D]) -> [f64; D] {
        let base: [i64; D] =
            std::array::from_fn(|i| ((x[i] - self.lattice_offset[i]) / self.cell).floor() as i64);
        let mut v = [0.0; D];
        let n_neighbors = 3usize.pow(D as u32);
        for code in 0..n_neighbors {
            let mut rem = code;
            let cell: [i64; D] = std::array::from_fn(|i| {
                let d = (rem % 3) as i64 - 1;
                rem /= 3;
                base[i] + d
            });
            let Some(b) = self.bump_in(&cell) else { continue };
            let d: [f64; D] = std::array::from_fn(|i| x[i] - b.center[i]);
            let rho2 = d.iter().map(|t| t * t).sum::<f64>() / (self.radius * self.radius);
            if rho2 >= 1.0 {
                continue;
            }
            let w = 1.0 - rho2;
            // grad psi = -s A 6 (1 - rho^2)^2 (x - c) / (r max|g'|)
            let f = -b.sign * self.amplitude * 6.0 * w * w / (PROFILE_SLOPE * self.radius);
            let g: [f64; D] = std::array::from_fn(|i| f * d[i]);
            if D == 2 {
                v[0] += g[1];
                v[1] -= g[0];
            } else {
                // grad psi x axis
                v[0] += g[1] * b.axis[2] - g[2] * b.axis[1];
                v[1] += g[2] * b.axis[0] - g[0] * b.axis[2];
                v[2] += g[0] * b.axis[1] - g[1] * b.axis[0];
            }
        }
        v
    }
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_slope_constant() {
        let r2: f64 = 0.2;
        let slope = 6.0 * r2.sqrt() * (1.0 - r2).powi(2);
        assert!((slope - PROFILE_SLOPE).abs() < 1e-12);
    }

    #[test]
    fn single_bump_speed_bounded_by_amplitude() {
        let b = BumpField::<2>::new(0.05, 1.0, 0.7, 99);
        let mut worst: f64 = 0.0;
        for i in 0..20000 {
            let x = [(i as f64 * 0.0137).sin() * 40.0, (i as f64 * 0.0071).cos() * 40.0];
            let v = b.eval(&x);
            worst = worst.max((v[0] * v[0] + v[1] * v[1]).sqrt());
        }
        assert!(worst <= b.v_max());
        assert!(worst > 0.0);
    }
}
