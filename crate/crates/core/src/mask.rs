//! Rasterized plane regions with exact pixel-area accounting.
//!
//! Binary layout of [`RegionMask::to_bytes`]: the bounding box as four
//! little-endian `f64` (`x_min, y_min, x_max, y_max`), the resolution as two
//! little-endian `u32` (`nx, ny`), then `nx·ny` bits packed row-major
//! (row 0 is `y_min`), least significant bit first within each byte.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned pixel lattice. Pixel `(ix, iy)` is centred at
/// `(x_min + (ix + ½)·dx, y_min + (iy + ½)·dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, nx: usize, ny: usize) -> Result<Grid> {
        if nx == 0 || ny == 0 || !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidArgument(format!(
                "bad grid [{x_min}, {x_max}]x[{y_min}, {y_max}] at {nx}x{ny}"
            )));
        }
        Ok(Grid {
            x_min,
            y_min,
            dx: (x_max - x_min) / nx as f64,
            dy: (y_max - y_min) / ny as f64,
            nx,
            ny,
        })
    }

    /// The square `[-half, half]²` at `n × n` pixels.
    pub fn square(half: f64, n: usize) -> Result<Grid> {
        Grid::new(-half, -half, half, half, n, n)
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.nx as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + self.ny as f64 * self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn area(&self) -> f64 {
        self.pixel_area() * self.len() as f64
    }

    #[inline]
    pub fn center(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.x_min + (ix as f64 + 0.5) * self.dx,
            self.y_min + (iy as f64 + 0.5) * self.dy,
        )
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Complex64 {
        self.center(idx % self.nx, idx / self.nx)
    }

    /// Pixel containing `z`, if inside the grid.
    #[inline]
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let fx = (z.re - self.x_min) / self.dx;
        let fy = (z.im - self.y_min) / self.dy;
        if fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64 {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    #[inline]
    pub fn index_of(&self, z: Complex64) -> Option<usize> {
        self.pixel_of(z).map(|(ix, iy)| iy * self.nx + ix)
    }

    /// Integer offset of `other`'s origin in this grid's pixel units, when the
    /// two lattices coincide.
    pub fn offset_to(&self, other: &Grid) -> Option<(i64, i64)> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if !same(self.dx, other.dx) || !same(self.dy, other.dy) {
            return None;
        }
        let ox = (other.x_min - self.x_min) / self.dx;
        let oy = (other.y_min - self.y_min) / self.dy;
        let (rx, ry) = (ox.round(), oy.round());
        ((ox - rx).abs() < 1e-4 && (oy - ry).abs() < 1e-4).then_some((rx as i64, ry as i64))
    }

    /// Sub-grid of pixels `[x0, x1) × [y0, y1)`; indices may fall outside this grid.
    pub fn window(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> Grid {
        Grid {
            x_min: self.x_min + x0 as f64 * self.dx,
            y_min: self.y_min + y0 as f64 * self.dy,
            dx: self.dx,
            dy: self.dy,
            nx: (x1 - x0).max(1) as usize,
            ny: (y1 - y0).max(1) as usize,
        }
    }
}

/// A set of pixels of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMask {
    grid: Grid,
    bits: Vec<u64>,
}

impl RegionMask {
    pub fn empty(grid: Grid) -> RegionMask {
        RegionMask {
            grid,
            bits: vec![0; grid.len().div_ceil(64)],
        }
    }

    /// Pixels whose centres satisfy `pred`.
    pub fn from_fn(grid: Grid, pred: impl Fn(Complex64) -> bool) -> RegionMask {
        let mut m = RegionMask::empty(grid);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if pred(grid.center(ix, iy)) {
                    m.set(ix, iy, true);
                }
            }
        }
        m
    }

    /// Pixels of `grid` whose flat index is listed.
    pub fn from_indices(grid: Grid, indices: impl IntoIterator<Item = usize>) -> RegionMask {
        let mut m = RegionMask::empty(grid);
        for i in indices {
            m.bits[i / 64] |= 1 << (i % 64);
        }
        m
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> bool {
        let i = iy * self.grid.nx + ix;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    /// Like [`get`](Self::get) but `false` outside the grid.
    #[inline]
    pub fn get_signed(&self, ix: i64, iy: i64) -> bool {
        ix >= 0
            && iy >= 0
            && (ix as usize) < self.grid.nx
            && (iy as usize) < self.grid.ny
            && self.get(ix as usize, iy as usize)
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, on: bool) {
        let i = iy * self.grid.nx + ix;
        if on {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.grid.pixel_of(z).is_some_and(|(ix, iy)| self.get(ix, iy))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Occupied-pixel count times pixel area.
    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.pixel_area()
    }

    /// Occupied pixels as `(ix, iy)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.grid.nx;
        self.bits.iter().enumerate().flat_map(move |(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                let i = w * 64 + b;
                Some((i % nx, i / nx))
            })
        })
    }

    /// Value of this mask at pixel `(ix, iy)` of `frame`, which must share the lattice.
    fn lookup_from(&self, offset: (i64, i64), ix: usize, iy: usize) -> bool {
        self.get_signed(ix as i64 - offset.0, iy as i64 - offset.1)
    }

    /// Re-rasterizes onto another grid sharing the same lattice (cropping or padding).
    pub fn resample_aligned(&self, frame: Grid) -> Result<RegionMask> {
        let off = frame
            .offset_to(&self.grid)
            .ok_or_else(|| Error::InvalidArgument("masks are not on a common lattice".into()))?;
        let mut out = RegionMask::empty(frame);
        for (ix, iy) in self.pixels() {
            let x = ix as i64 + off.0;
            let y = iy as i64 + off.1;
            if x >= 0 && y >= 0 && (x as usize) < frame.nx && (y as usize) < frame.ny {
                out.set(x as usize, y as usize, true);
            }
        }
        Ok(out)
    }

    /// Smallest pixel window holding every occupied pixel, plus `pad` pixels.
    pub fn content_window(&self, pad: usize) -> Option<Grid> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for (ix, iy) in self.pixels() {
            x0 = x0.min(ix);
            y0 = y0.min(iy);
            x1 = x1.max(ix);
            y1 = y1.max(iy);
        }
        (x0 != usize::MAX).then(|| {
            let p = pad as i64;
            self.grid
                .window(x0 as i64 - p, y0 as i64 - p, x1 as i64 + 1 + p, y1 as i64 + 1 + p)
        })
    }

    /// Crops to the occupied pixels (`pad` extra pixels on each side).
    pub fn cropped(&self, pad: usize) -> RegionMask {
        match self.content_window(pad) {
            Some(w) => self.resample_aligned(w).expect("window of own grid"),
            None => RegionMask::empty(self.grid.window(0, 0, 1, 1)),
        }
    }

    /// Adds every pixel within Chebyshev distance `r` (grid grows by `r`).
    pub fn dilated(&self, r: usize) -> RegionMask {
        let ri = r as i64;
        let g = self
            .grid
            .window(-ri, -ri, self.grid.nx as i64 + ri, self.grid.ny as i64 + ri);
        let mut out = RegionMask::empty(g);
        for (ix, iy) in self.pixels() {
            for dy in 0..=2 * r {
                for dx in 0..=2 * r {
                    out.set(ix + dx, iy + dy, true);
                }
            }
        }
        out
    }

    fn binary(&self, other: &RegionMask, op: impl Fn(bool, bool) -> bool) -> Result<RegionMask> {
        let off = self
            .grid
            .offset_to(&other.grid)
            .ok_or_else(|| Error::InvalidArgument("masks are not on a common lattice".into()))?;
        let mut out = RegionMask::empty(self.grid);
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                if op(self.get(ix, iy), other.lookup_from(off, ix, iy)) {
                    out.set(ix, iy, true);
                }
            }
        }
        Ok(out)
    }

    /// Pixels of `self` not in `other` (result lives on `self`'s grid).
    pub fn minus(&self, other: &RegionMask) -> Result<RegionMask> {
        self.binary(other, |a, b| a && !b)
    }

    pub fn intersection(&self, other: &RegionMask) -> Result<RegionMask> {
        self.binary(other, |a, b| a && b)
    }

    /// Union on a grid covering both masks.
    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        let off = self
            .grid
            .offset_to(&other.grid)
            .ok_or_else(|| Error::InvalidArgument("masks are not on a common lattice".into()))?;
        let x0 = off.0.min(0);
        let y0 = off.1.min(0);
        let x1 = (self.grid.nx as i64).max(off.0 + other.grid.nx as i64);
        let y1 = (self.grid.ny as i64).max(off.1 + other.grid.ny as i64);
        let frame = self.grid.window(x0, y0, x1, y1);
        let mut out = self.resample_aligned(frame)?;
        for (ix, iy) in other.resample_aligned(frame)?.pixels() {
            out.set(ix, iy, true);
        }
        Ok(out)
    }

    /// Every occupied pixel of `self` is occupied in `other`.
    pub fn is_subset_of(&self, other: &RegionMask) -> Result<bool> {
        let off = other
            .grid
            .offset_to(&self.grid)
            .ok_or_else(|| Error::InvalidArgument("masks are not on a common lattice".into()))?;
        Ok(self
            .pixels()
            .all(|(ix, iy)| other.get_signed(ix as i64 + off.0, iy as i64 + off.1)))
    }

    /// Number of pixels occupied in both masks.
    pub fn overlap_count(&self, other: &RegionMask) -> Result<usize> {
        let off = other
            .grid
            .offset_to(&self.grid)
            .ok_or_else(|| Error::InvalidArgument("masks are not on a common lattice".into()))?;
        Ok(self
            .pixels()
            .filter(|&(ix, iy)| other.get_signed(ix as i64 + off.0, iy as i64 + off.1))
            .count())
    }

    /// Image under `z ↦ −z` (exact when the grid is centred at the origin).
    pub fn negated(&self) -> RegionMask {
        let g = self.grid;
        let flipped = Grid {
            x_min: -g.x_max(),
            y_min: -g.y_max(),
            ..g
        };
        let mut out = RegionMask::empty(flipped);
        for (ix, iy) in self.pixels() {
            out.set(g.nx - 1 - ix, g.ny - 1 - iy, true);
        }
        out
    }

    /// 8-connected components, each cropped to its own window.
    pub fn components(&self) -> Vec<RegionMask> {
        let g = self.grid;
        let mut seen = vec![false; g.len()];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for (sx, sy) in self.pixels() {
            let s = sy * g.nx + sx;
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s);
            let mut members = Vec::new();
            while let Some(i) = stack.pop() {
                members.push(i);
                let (ix, iy) = ((i % g.nx) as i64, (i / g.nx) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (x, y) = (ix + dx, iy + dy);
                        if self.get_signed(x, y) {
                            let j = y as usize * g.nx + x as usize;
                            if !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
            out.push(RegionMask::from_indices(g, members).cropped(0));
        }
        out
    }

    /// Largest distance between occupied pixel centres.
    pub fn diameter(&self) -> f64 {
        let g = self.grid;
        let mut ends: Vec<Option<(usize, usize)>> = vec![None; g.ny];
        for (ix, iy) in self.pixels() {
            let e = ends[iy].get_or_insert((ix, ix));
            e.0 = e.0.min(ix);
            e.1 = e.1.max(ix);
        }
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (iy, e) in ends.iter().enumerate() {
            if let Some((a, b)) = *e {
                let p = g.center(a, iy);
                pts.push((p.re, p.im));
                if b != a {
                    let q = g.center(b, iy);
                    pts.push((q.re, q.im));
                }
            }
        }
        let hull = convex_hull(pts);
        let mut best = 0f64;
        for i in 0..hull.len() {
            for j in i + 1..hull.len() {
                let d = (hull[i].0 - hull[j].0).hypot(hull[i].1 - hull[j].1);
                best = best.max(d);
            }
        }
        best
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(40 + g.len().div_ceil(8));
        for v in [g.x_min, g.y_min, g.x_max(), g.y_max()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(g.nx as u32).to_le_bytes());
        out.extend_from_slice(&(g.ny as u32).to_le_bytes());
        let nbytes = g.len().div_ceil(8);
        for k in 0..nbytes {
            let word = self.bits[k / 8];
            out.push((word >> (8 * (k % 8))) as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RegionMask> {
        let bad = |msg: &str| Error::InvalidArgument(format!("mask binary: {msg}"));
        if bytes.len() < 40 {
            return Err(bad("truncated header"));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let u = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let grid = Grid::new(f(0), f(1), f(2), f(3), u(32), u(36))?;
        let nbytes = grid.len().div_ceil(8);
        if bytes.len() != 40 + nbytes {
            return Err(bad("payload length does not match resolution"));
        }
        let mut m = RegionMask::empty(grid);
        for (k, &b) in bytes[40..].iter().enumerate() {
            m.bits[k / 8] |= (b as u64) << (8 * (k % 8));
        }
        if grid.len() % 64 != 0 {
            let last = m.bits.len() - 1;
            m.bits[last] &= (1u64 << (grid.len() % 64)) - 1;
        }
        Ok(m)
    }
}

fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disk(grid: Grid, c: Complex64, r: f64) -> RegionMask {
        RegionMask::from_fn(grid, |z| (z - c).norm() < r)
    }

    #[test]
    fn disk_area_and_diameter() {
        let g = Grid::square(1.2, 400).unwrap();
        let d = disk(g, Complex64::new(0.0, 0.0), 1.0);
        assert!((d.area() - std::f64::consts::PI).abs() < 0.01);
        assert!((d.diameter() - 2.0).abs() < 2.0 * g.dx);
    }

    #[test]
    fn brute_force_diameter() {
        let g = Grid::square(1.0, 24).unwrap();
        let m = RegionMask::from_fn(g, |z| (z.re * 3.0).sin() + z.im * z.im * 2.0 < 0.4);
        let pts: Vec<Complex64> = m.pixels().map(|(x, y)| g.center(x, y)).collect();
        let mut best = 0f64;
        for a in &pts {
            for b in &pts {
                best = best.max((a - b).norm());
            }
        }
        assert!((m.diameter() - best).abs() < 1e-12);
    }

    #[test]
    fn components_split_two_disks() {
        let g = Grid::square(2.0, 100).unwrap();
        let two = disk(g, Complex64::new(-1.0, 0.0), 0.5)
            .union(&disk(g, Complex64::new(1.0, 0.0), 0.5))
            .unwrap();
        let comps = two.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps.iter().map(|c| c.count()).sum::<usize>(), two.count());
        for c in &comps {
            assert!(c.is_subset_of(&two).unwrap());
        }
    }

    #[test]
    fn dilation_and_subset() {
        let g = Grid::square(2.0, 64).unwrap();
        let d = disk(g, Complex64::new(0.3, 0.1), 0.7);
        let big = d.dilated(1);
        assert!(d.is_subset_of(&big).unwrap());
        assert!(!big.is_subset_of(&d).unwrap());
        assert!(d.negated().negated() == d);
    }

    #[test]
    fn header_layout() {
        let g = Grid::new(-1.0, -2.0, 3.0, 4.0, 5, 3).unwrap();
        let mut m = RegionMask::empty(g);
        m.set(0, 0, true);
        m.set(4, 2, true);
        let b = m.to_bytes();
        assert_eq!(b.len(), 40 + 2);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 3.0);
        assert_eq!(u32::from_le_bytes(b[32..36].try_into().unwrap()), 5);
        assert_eq!(b[40], 1);
        assert_eq!(b[41], 1 << 6);
        assert!(RegionMask::from_bytes(&b[..41]).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(nx in 1usize..40, ny in 1usize..40, seed in any::<u64>()) {
            let g = Grid::new(-1.5, -0.5, 2.0, 1.0, nx, ny).unwrap();
            let mut m = RegionMask::empty(g);
            let mut s = seed | 1;
            for iy in 0..ny {
                for ix in 0..nx {
                    s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                    m.set(ix, iy, s & 3 == 0);
                }
            }
            let back = RegionMask::from_bytes(&m.to_bytes()).unwrap();
            prop_assert_eq!(back.to_bytes(), m.to_bytes());
            prop_assert_eq!(back.count(), m.count());
        }
    }
}
