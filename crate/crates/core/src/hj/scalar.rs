use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    MinTime,
    Discounted,
    TimeSlice,
}

/// Node values on a [`Grid`]. Nodes outside `reachable` carry no value
/// (the `+inf` sentinel of a minimal-time field).
#[derive(Clone, Debug)]
pub struct ScalarField<const D: usize> {
    pub grid: Grid<D>,
    pub values: Vec<f64>,
    pub reachable: Vec<bool>,
    pub kind: FieldKind,
}

const MAGIC: &[u8; 4] = b"GFSF";

impl<const D: usize> ScalarField<D> {
    pub fn new(grid: Grid<D>, values: Vec<f64>, kind: FieldKind) -> Self {
        assert_eq!(values.len(), grid.len());
        let reachable = vec![true; values.len()];
        ScalarField {
            grid,
            values,
            reachable,
            kind,
        }
    }

    pub fn get(&self, idx: usize) -> Option<f64> {
        self.reachable[idx].then(|| self.values[idx])
    }

    /// Value at the nearest node.
    pub fn at(&self, x: &[f64; D]) -> Option<f64> {
        self.grid.nearest(x).and_then(|i| self.get(i))
    }

    pub fn at_origin(&self) -> f64 {
        self.values[self.grid.origin()]
    }

    /// Multilinear interpolation; `None` if any surrounding node is
    /// unreachable or outside an open grid.
    pub fn interpolate(&self, x: &[f64; D]) -> Option<f64> {
        let g = &self.grid;
        let mut base = [0i64; D];
        let mut frac = [0.0; D];
        for a in 0..D {
            let s = x[a] / g.h + g.center() as f64;
            let f = s.floor();
            base[a] = f as i64;
            frac[a] = s - f;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << D) {
            let mut m = [0usize; D];
            let mut w = 1.0;
            for a in 0..D {
                let bit = (corner >> a) & 1;
                let k = base[a] + bit as i64;
                m[a] = match g.boundary {
                    Boundary::Open if k < 0 || k >= g.n as i64 => return None,
                    Boundary::Open => k as usize,
                    Boundary::Periodic => k.rem_euclid(g.n as i64) as usize,
                };
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            acc += w * self.get(g.flat(&m))?;
        }
        Some(acc)
    }

    /// Restriction to the centred sub-box of half-width `core` (open grids).
    pub fn restrict(&self, core: f64) -> Result<Self> {
        if self.grid.is_periodic() || core >= self.grid.half_width {
            return Ok(self.clone());
        }
        let sub = Grid::<D>::open(self.grid.h, core)?;
        let off = self.grid.center() - sub.center();
        let mut values = Vec::with_capacity(sub.len());
        let mut reachable = Vec::with_capacity(sub.len());
        for idx in 0..sub.len() {
            let m = sub.multi(idx);
            let src = self.grid.flat(&std::array::from_fn(|a| m[a] + off));
            values.push(self.values[src]);
            reachable.push(self.reachable[src]);
        }
        Ok(ScalarField {
            grid: sub,
            values,
            reachable,
            kind: self.kind,
        })
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable.iter().filter(|&&r| r).count()
    }

    /// Flat binary layout: magic, `N` (u32), kind (u8), boundary (u8),
    /// per-axis counts (u64), `h`, `L` (f64), then row-major f64 payload with
    /// `+inf` for unreachable nodes. Little endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(D as u32).to_le_bytes())?;
        w.write_all(&[kind_code(self.kind), (self.grid.boundary == Boundary::Periodic) as u8])?;
        for _ in 0..D {
            w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        }
        w.write_all(&self.grid.h.to_le_bytes())?;
        w.write_all(&self.grid.half_width.to_le_bytes())?;
        for (v, r) in self.values.iter().zip(&self.reachable) {
            let v = if *r { *v } else { f64::INFINITY };
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let bad = |what: &str| Error::config(format!("scalar field file: {what}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) as usize != D {
            return Err(bad("dimension mismatch"));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let kind = match b2[0] {
            0 => FieldKind::MinTime,
            1 => FieldKind::Discounted,
            2 => FieldKind::TimeSlice,
            _ => return Err(bad("unknown kind")),
        };
        let mut b8 = [0u8; 8];
        let mut n = 0;
        for _ in 0..D {
            r.read_exact(&mut b8)?;
            n = u64::from_le_bytes(b8) as usize;
        }
        r.read_exact(&mut b8)?;
        let h = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let half_width = f64::from_le_bytes(b8);
        let grid = Grid {
            h,
            half_width,
            n,
            boundary: if b2[1] == 1 { Boundary::Periodic } else { Boundary::Open },
        };
        let mut values = Vec::with_capacity(grid.len());
        let mut reachable = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            let v = f64::from_le_bytes(b8);
            reachable.push(v.is_finite());
            values.push(v);
        }
        Ok(ScalarField {
            grid,
            values,
            reachable,
            kind,
        })
    }

    /// `x1,x2[,x3],value` with `inf` for unreachable nodes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names = ["x1", "x2", "x3"];
        writeln!(w, "{},value", names[..D].join(","))?;
        for idx in 0..self.grid.len() {
            for c in self.grid.point(idx) {
                write!(w, "{c},")?;
            }
            match self.get(idx) {
                Some(v) => writeln!(w, "{v}")?,
                None => writeln!(w, "inf")?,
            }
        }
        Ok(())
    }
}

fn kind_code(k: FieldKind) -> u8 {
    match k {
        FieldKind::MinTime => 0,
        FieldKind::Discounted => 1,
        FieldKind::TimeSlice => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let g = Grid::<2>::open(0.1, 1.0).unwrap();
        let mut f = ScalarField::new(g, (0..g.len()).map(|i| i as f64 * 0.5).collect(), FieldKind::MinTime);
        f.reachable[7] = false;
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let back = ScalarField::<2>::read_binary(&buf[..]).unwrap();
        assert_eq!(back.grid, g);
        assert_eq!(back.get(7), None);
        assert_eq!(back.get(8), Some(4.0));
        assert!(ScalarField::<3>::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_affine() {
        let g = Grid::<2>::open(0.1, 1.0).unwrap();
        let vals = (0..g.len()).map(|i| {
            let p = g.point(i);
            2.0 * p[0] - p[1] + 0.3
        });
        let f = ScalarField::new(g, vals.collect(), FieldKind::TimeSlice);
        let v = f.interpolate(&[0.234, -0.517]).unwrap();
        assert!((v - (2.0 * 0.234 + 0.517 + 0.3)).abs() < 1e-12);
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
    }

    #[test]
    fn restriction_keeps_positions() {
        let g = Grid::<2>::open(0.1, 2.0).unwrap();
        let f = ScalarField::new(g, (0..g.len()).map(|i| g.point(i)[0]).collect(), FieldKind::TimeSlice);
        let r = f.restrict(1.0).unwrap();
        assert_eq!(r.grid.n, 21);
        for idx in 0..r.grid.len() {
            assert!((r.values[idx] - r.grid.point(idx)[0]).abs() < 1e-12);
        }
    }
}
