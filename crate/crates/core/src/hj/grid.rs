use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Box `[-L, L]^N` with `2 floor(L/h) + 1` nodes per axis.
    Open,
    /// Torus of period `2L` with `2L/h` nodes per axis.
    Periodic,
}

/// Uniform Cartesian grid centred on the origin, which is always a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<const D: usize> {
    pub h: f64,
    pub half_width: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl<const D: usize> Grid<D> {
    pub fn open(h: f64, half_width: f64) -> Result<Self> {
        Self::check(h, half_width)?;
        let m = (half_width / h + 1e-9).floor() as usize;
        Ok(Grid {
            h,
            half_width: m as f64 * h,
            n: 2 * m + 1,
            boundary: Boundary::Open,
        })
    }

    /// Torus `[-L, L)^N`; `2L / h` must be an even integer.
    pub fn periodic(h: f64, half_width: f64) -> Result<Self> {
        Self::check(h, half_width)?;
        let n = 2.0 * half_width / h;
        let m = n.round();
        if (n - m).abs() > 1e-9 * n || !(m as usize).is_multiple_of(2) {
            return Err(Error::config("periodic grid needs 2L/h to be an even integer"));
        }
        Ok(Grid {
            h,
            half_width,
            n: m as usize,
            boundary: Boundary::Periodic,
        })
    }

    fn check(h: f64, half_width: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::config("grid spacing h must be positive"));
        }
        if !(half_width >= 10.0 * h) {
            return Err(Error::config("grid half-width L must be at least 10 h"));
        }
        if D != 2 && D != 3 {
            return Err(Error::config("grid dimension must be 2 or 3"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Index of the origin along each axis.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((D - 1 - axis) as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.h
    }

    pub fn multi(&self, mut idx: usize) -> [usize; D] {
        let mut out = [0; D];
        for a in (0..D).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat(&self, m: &[usize; D]) -> usize {
        m.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, idx: usize) -> [f64; D] {
        let m = self.multi(idx);
        std::array::from_fn(|a| self.coord(m[a]))
    }

    pub fn origin(&self) -> usize {
        self.flat(&[self.center(); D])
    }

    /// Neighbour along `axis` in direction `dir = +-1`; `None` past an open edge.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i8) -> Option<usize> {
        let s = self.stride(axis);
        let i = (idx / s) % self.n;
        match (dir > 0, self.boundary) {
            (true, _) if i + 1 < self.n => Some(idx + s),
            (false, _) if i > 0 => Some(idx - s),
            (_, Boundary::Open) => None,
            (true, Boundary::Periodic) => Some(idx + s - self.n * s),
            (false, Boundary::Periodic) => Some(idx + self.n * s - s),
        }
    }

    /// Nearest node to `x` (wrapped on a torus), or `None` off an open grid.
    pub fn nearest(&self, x: &[f64; D]) -> Option<usize> {
        let mut m = [0; D];
        for a in 0..D {
            let k = (x[a] / self.h).round() as i64 + self.center() as i64;
            m[a] = match self.boundary {
                Boundary::Open if k < 0 || k >= self.n as i64 => return None,
                Boundary::Open => k as usize,
                Boundary::Periodic => k.rem_euclid(self.n as i64) as usize,
            };
        }
        Some(self.flat(&m))
    }

    /// The `2^N` nodes of the cell containing `x`.
    pub fn corners(&self, x: &[f64; D]) -> Option<Vec<usize>> {
        let mut base = [0i64; D];
        for a in 0..D {
            base[a] = (x[a] / self.h + self.center() as f64).floor() as i64;
        }
        let mut out = Vec::with_capacity(1 << D);
        for corner in 0..(1usize << D) {
            let mut m = [0usize; D];
            for a in 0..D {
                let k = base[a] + ((corner >> a) & 1) as i64;
                m[a] = match self.boundary {
                    Boundary::Open if k < 0 || k >= self.n as i64 => return None,
                    Boundary::Open => k as usize,
                    Boundary::Periodic => k.rem_euclid(self.n as i64) as usize,
                };
            }
            out.push(self.flat(&m));
        }
        Some(out)
    }

    /// Euclidean norm of the node position (on a torus: of its representative
    /// in `[-L, L)^N`).
    pub fn radius(&self, idx: usize) -> f64 {
        crate::vecops::norm(&self.point(idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_grid_layout() {
        let g = Grid::<2>::open(0.02, 2.0).unwrap();
        assert_eq!(g.n, 201);
        assert_eq!(g.point(g.origin()), [0.0, 0.0]);
        let idx = g.flat(&[3, 7]);
        assert_eq!(g.multi(idx), [3, 7]);
        assert_eq!(g.neighbor(g.flat(&[0, 5]), 0, -1), None);
        assert_eq!(g.neighbor(g.flat(&[0, 5]), 1, 1), Some(g.flat(&[0, 6])));
        assert_eq!(g.nearest(&[0.021, -0.039]), Some(g.flat(&[101, 98])));
        assert_eq!(g.nearest(&[3.0, 0.0]), None);
    }

    #[test]
    fn periodic_wraps() {
        let g = Grid::<2>::periodic(1.0 / 32.0, 0.5).unwrap();
        assert_eq!(g.n, 32);
        assert_eq!(g.point(g.origin()), [0.0, 0.0]);
        assert_eq!(g.neighbor(g.flat(&[31, 4]), 0, 1), Some(g.flat(&[0, 4])));
        assert_eq!(g.neighbor(g.flat(&[2, 0]), 1, -1), Some(g.flat(&[2, 31])));
        assert_eq!(g.nearest(&[0.5, 0.0]), Some(g.flat(&[0, 16])));
        assert!(Grid::<2>::periodic(0.3, 4.0).is_err());
    }

    #[test]
    fn three_dimensional_indexing() {
        let g = Grid::<3>::open(0.1, 1.0).unwrap();
        assert_eq!(g.len(), 21 * 21 * 21);
        let idx = g.flat(&[1, 2, 3]);
        assert_eq!(g.multi(idx), [1, 2, 3]);
        assert_eq!(g.stride(0), 441);
    }

    #[test]
    fn too_small_rejected() {
        assert!(Grid::<2>::open(0.5, 2.0).is_err());
        assert!(Grid::<2>::open(0.0, 2.0).is_err());
    }
}
