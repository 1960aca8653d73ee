//! Conformal moduli of pixel annuli and the arithmetic built on them.
//!
//! The modulus of `A = D ∖ K` is `1/E`, where `E` is the Dirichlet energy of
//! the discrete harmonic function that is 0 on `K` and 1 off `D`, summed over
//! 4-neighbour edges of the pixel lattice.

use std::collections::VecDeque;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{Grid, RegionMask};
use crate::puzzle::{Location, PuzzleComplex};
use crate::tableau::MarkedGrid;

/// Relative residual at which the solver stops.
pub const SOLVER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    Finite(f64),
    Infinite,
}

impl Modulus {
    pub fn as_f64(self) -> f64 {
        match self {
            Modulus::Finite(v) => v,
            Modulus::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Finite(v) => write!(f, "{v}"),
            Modulus::Infinite => f.write_str("inf"),
        }
    }
}

/// `D ∖ K` for masks on a common lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnularRegion {
    outer: RegionMask,
    inner: RegionMask,
}

impl AnnularRegion {
    /// Both masks are moved onto the outer mask's bounding window (plus one pixel).
    pub fn new(outer: &RegionMask, inner: &RegionMask) -> Result<AnnularRegion> {
        let frame = outer
            .content_window(1)
            .ok_or_else(|| Error::InvalidArgument("outer mask is empty".into()))?;
        if !inner.is_subset_of(outer)? {
            return Err(Error::InvalidArgument("inner mask is not inside the outer mask".into()));
        }
        let outer = outer.resample_aligned(frame)?;
        let inner = inner.resample_aligned(frame)?;
        if outer.count() == inner.count() && !inner.is_empty() {
            return Err(Error::InvalidArgument("annulus has no pixels".into()));
        }
        Ok(AnnularRegion { outer, inner })
    }

    /// Round annulus `r < |z − center| < R` rasterized with `n` pixels across `D`.
    pub fn round(center: Complex64, r: f64, big_r: f64, n: usize) -> Result<AnnularRegion> {
        if !(0.0 <= r && r < big_r) {
            return Err(Error::InvalidArgument(format!("need 0 ≤ r < R, got r={r}, R={big_r}")));
        }
        let g = Grid::square(big_r * (1.0 + 4.0 / n as f64), n)?;
        let g = Grid { x_min: g.x_min + center.re, y_min: g.y_min + center.im, ..g };
        let outer = RegionMask::from_fn(g, |z| (z - center).norm() < big_r);
        let inner = RegionMask::from_fn(g, |z| (z - center).norm() <= r);
        AnnularRegion::new(&outer, &inner)
    }

    pub fn outer(&self) -> &RegionMask {
        &self.outer
    }

    pub fn inner(&self) -> &RegionMask {
        &self.inner
    }

    pub fn grid(&self) -> &Grid {
        self.outer.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSolution {
    pub modulus: Modulus,
    /// `K` touches the complement of `D`; the modulus is reported as 0.
    pub degenerate: bool,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

const FREE: u8 = 0;
const ZERO: u8 = 1;
const ONE: u8 = 2;

/// Solves the discrete Dirichlet problem on `region` by conjugate gradients.
pub fn solve_modulus(region: &AnnularRegion) -> Result<ModulusSolution> {
    let g = *region.grid();
    let (nx, ny) = (g.nx, g.ny);
    if region.inner.is_empty() {
        return Ok(ModulusSolution {
            modulus: Modulus::Infinite,
            degenerate: false,
            energy: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut kind = vec![ONE; nx * ny];
    for (ix, iy) in region.outer.pixels() {
        kind[iy * nx + ix] = FREE;
    }
    for (ix, iy) in region.inner.pixels() {
        kind[iy * nx + ix] = ZERO;
    }
    let neighbours = |i: usize| {
        let (x, y) = (i % nx, i / nx);
        let at = |dx: i64, dy: i64| {
            let (a, b) = (x as i64 + dx, y as i64 + dy);
            (a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny)
                .then(|| b as usize * nx + a as usize)
        };
        [at(1, 0), at(-1, 0), at(0, 1), at(0, -1)]
    };
    let value_of = |k: u8| if k == ONE { 1.0 } else { 0.0 };

    let degenerate = (0..nx * ny).any(|i| {
        kind[i] == ZERO
            && neighbours(i)
                .iter()
                .any(|n| n.is_none_or(|j| kind[j] == ONE))
    });
    if degenerate {
        return Ok(ModulusSolution {
            modulus: Modulus::Finite(0.0),
            degenerate: true,
            energy: f64::INFINITY,
            iterations: 0,
            residual: 0.0,
        });
    }

    let free: Vec<usize> = (0..nx * ny).filter(|&i| kind[i] == FREE).collect();
    let mut slot = vec![usize::MAX; nx * ny];
    for (k, &i) in free.iter().enumerate() {
        slot[i] = k;
    }
    // 4u_i − Σ_free u_j = Σ_fixed u_j
    let adj: Vec<[usize; 4]> = free
        .iter()
        .map(|&i| neighbours(i).map(|n| n.map_or(usize::MAX, |j| slot[j])))
        .collect();
    let b: Vec<f64> = free
        .iter()
        .map(|&i| {
            neighbours(i)
                .iter()
                .map(|n| n.map_or(1.0, |j| if kind[j] == FREE { 0.0 } else { value_of(kind[j]) }))
                .sum()
        })
        .collect();
    let (u, iterations, residual) = conjugate_gradient(&adj, &b)?;

    let val = |i: usize| {
        if kind[i] == FREE {
            u[slot[i]]
        } else {
            value_of(kind[i])
        }
    };
    let mut energy = 0.0;
    for y in 0..ny {
        for x in 0..nx {
            let i = y * nx + x;
            if x + 1 < nx && (kind[i] == FREE || kind[i + 1] == FREE) {
                energy += (val(i) - val(i + 1)).powi(2);
            }
            if y + 1 < ny && (kind[i] == FREE || kind[i + nx] == FREE) {
                energy += (val(i) - val(i + nx)).powi(2);
            }
        }
    }
    // free pixels on the window edge see the implicit outside value 1
    for (k, &i) in free.iter().enumerate() {
        let missing = adj[k].iter().zip(neighbours(i)).filter(|(_, n)| n.is_none()).count();
        energy += missing as f64 * (1.0 - u[k]).powi(2);
    }
    Ok(ModulusSolution {
        modulus: Modulus::Finite(1.0 / energy),
        degenerate: false,
        energy,
        iterations,
        residual,
    })
}

const CHUNK: usize = 4096;

// Chunked reduction keeps sums independent of the thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

fn apply(adj: &[[usize; 4]], x: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(k, o)| {
        let mut s = 4.0 * x[k];
        for &j in &adj[k] {
            if j != usize::MAX {
                s -= x[j];
            }
        }
        *o = s;
    });
}

fn conjugate_gradient(adj: &[[usize; 4]], b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if n == 0 || b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let max_iter = 20 * n + 1000;
    for it in 1..=max_iter {
        apply(adj, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = dot(&r, &r);
        let rel = rr_new.sqrt() / b_norm;
        if !rel.is_finite() {
            return Err(Error::SolverDiverged {
                residual: rel,
                iterations: it,
            });
        }
        if rel <= SOLVER_TOL {
            return Ok((x, it, rel));
        }
        let beta = rr_new / rr;
        p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Err(Error::SolverDiverged {
        residual: rr.sqrt() / b_norm,
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringCheck {
    pub mu_source: f64,
    pub mu_image: f64,
    pub ratio: f64,
}

/// Compares the modulus of `region` with that of its image under `z ↦ z^d`.
///
/// The region must be invariant under rotation by `2π/d` about the origin for
/// the map to be a `d`-fold covering of annuli.
pub fn covering_check(region: &AnnularRegion, d: u32) -> Result<CoveringCheck> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let g = region.grid();
    let reach = [g.x_min, g.x_max(), g.y_min, g.y_max()]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let half = (reach * std::f64::consts::SQRT_2).powi(d as i32);
    let image_grid = Grid::square(half, g.nx.max(g.ny))?;
    let push = |m: &RegionMask| {
        RegionMask::from_fn(image_grid, |w| {
            if w.norm() == 0.0 {
                return m.contains(w);
            }
            let root = w.powf(1.0 / d as f64);
            m.contains(root)
        })
    };
    let image = AnnularRegion::new(&push(&region.outer), &push(&region.inner))?;
    let mu_source = solve_modulus(region)?.modulus.as_f64();
    let mu_image = solve_modulus(&image)?.modulus.as_f64();
    Ok(CoveringCheck {
        mu_source,
        mu_image,
        ratio: mu_image / mu_source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CellModulus {
    Finite(f64),
    Infinite,
    Unknown,
}

impl CellModulus {
    fn scaled(self, factor: f64) -> CellModulus {
        match self {
            CellModulus::Finite(v) => CellModulus::Finite(v * factor),
            other => other,
        }
    }

    fn agrees(self, other: CellModulus) -> bool {
        match (self, other) {
            (CellModulus::Finite(a), CellModulus::Finite(b)) => {
                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for CellModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellModulus::Finite(v) => write!(f, "{v}"),
            CellModulus::Infinite => f.write_str("inf"),
            CellModulus::Unknown => f.write_str("unknown"),
        }
    }
}

/// `μ[n][k]` aligned with a marked grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusMatrix {
    pub values: Vec<Vec<CellModulus>>,
}

impl ModulusMatrix {
    pub fn unknown(depth: usize, width: usize) -> ModulusMatrix {
        ModulusMatrix {
            values: vec![vec![CellModulus::Unknown; width + 1]; depth + 1],
        }
    }

    pub fn get(&self, n: usize, k: usize) -> CellModulus {
        self.values[n][k]
    }

    pub fn set(&mut self, n: usize, k: usize, v: CellModulus) {
        self.values[n][k] = v;
    }
}

/// Closes `seeds` under `μ[n−1][k+1] = μ[n][k]` at unmarked cells and
/// `μ[n−1][k+1] = 2μ[n][k]` at marked ones, in both directions.
pub fn lemma1_propagate(grid: &MarkedGrid, seeds: &ModulusMatrix) -> Result<ModulusMatrix> {
    if seeds.values.len() != grid.depth + 1
        || seeds.values.iter().any(|r| r.len() != grid.width + 1)
    {
        return Err(Error::InvalidArgument("seed matrix does not match the grid".into()));
    }
    let mut out = ModulusMatrix::unknown(grid.depth, grid.width);
    let mut origin: Vec<Vec<String>> = vec![vec![String::new(); grid.width + 1]; grid.depth + 1];
    let mut queue = VecDeque::new();
    for n in 0..=grid.depth {
        for k in 0..=grid.width {
            let v = seeds.get(n, k);
            if v != CellModulus::Unknown {
                out.set(n, k, v);
                origin[n][k] = format!("seed ({n}, {k}) = {v}");
                queue.push_back((n, k));
            }
        }
    }
    while let Some((n, k)) = queue.pop_front() {
        let v = out.get(n, k);
        let mut derived = Vec::with_capacity(2);
        if n > 0 && k < grid.width {
            let f = if grid.marks[n][k] { 2.0 } else { 1.0 };
            derived.push((n - 1, k + 1, v.scaled(f)));
        }
        if n < grid.depth && k > 0 {
            let f = if grid.marks[n + 1][k - 1] { 2.0 } else { 1.0 };
            derived.push((n + 1, k - 1, v.scaled(1.0 / f)));
        }
        for (a, b, w) in derived {
            let how = format!("({a}, {b}) = {w} from ({n}, {k})");
            match out.get(a, b) {
                CellModulus::Unknown => {
                    out.set(a, b, w);
                    origin[a][b] = how;
                    queue.push_back((a, b));
                }
                existing if existing.agrees(w) => {}
                _ => {
                    return Err(Error::PropagationConflict {
                        row: a,
                        col: b,
                        first: origin[a][b].clone(),
                        second: how,
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Partial sums of moduli along a nest of annuli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub level: usize,
    pub mu: f64,
    pub degenerate: bool,
    pub sum: f64,
}

/// `S_N = Σ_{n<N} μ(A_n)` over the given annuli.
pub fn partial_sums(annuli: &[AnnularRegion]) -> Result<Vec<PartialSum>> {
    let sols: Vec<ModulusSolution> = annuli.par_iter().map(solve_modulus).collect::<Result<_>>()?;
    let mut sum = 0.0;
    Ok(sols
        .iter()
        .enumerate()
        .map(|(level, s)| {
            let mu = s.modulus.as_f64();
            sum += mu;
            PartialSum {
                level,
                mu,
                degenerate: s.degenerate,
                sum,
            }
        })
        .collect())
}

/// Partial sums of `μ(V^n(x) ∖ V^{n+1}(x))` for `n < max_level`.
pub fn divergence_partial_sums(
    puzzle: &PuzzleComplex,
    x: Complex64,
    max_level: usize,
) -> Result<Vec<PartialSum>> {
    if max_level > puzzle.depth {
        return Err(Error::DepthExceeded {
            requested: max_level,
            available: puzzle.depth,
        });
    }
    let nest: Vec<&RegionMask> = (0..=max_level)
        .map(|n| match puzzle.locate(x, n)? {
            Location::Piece(id) => Ok(&puzzle.piece(n, id).mask),
            _ => Err(Error::OnBoundary { index: 0, level: n }),
        })
        .collect::<Result<_>>()?;
    let annuli: Vec<AnnularRegion> = nest
        .windows(2)
        .map(|w| AnnularRegion::new(w[0], w[1]))
        .collect::<Result<_>>()?;
    partial_sums(&annuli)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricCheck {
    /// `λ(D)/λ(K)`.
    pub lhs: f64,
    /// `1 + 4πμ(A)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Relative slack allowed for the solver in [`isoperimetric_check`].
pub const ISOPERIMETRIC_SLACK: f64 = 0.05;

pub fn isoperimetric_check(region: &AnnularRegion) -> Result<IsoperimetricCheck> {
    if region.inner.is_empty() {
        return Err(Error::InvalidArgument("inner mask is empty".into()));
    }
    let mu = solve_modulus(region)?.modulus.as_f64();
    let lhs = region.outer.count() as f64 / region.inner.count() as f64;
    let rhs = 1.0 + 4.0 * std::f64::consts::PI * mu;
    Ok(IsoperimetricCheck {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - ISOPERIMETRIC_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMethod {
    Solved,
    Propagated,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub parent: Option<usize>,
    pub mu: Modulus,
    pub nu: f64,
    pub method: ModulusMethod,
}

/// Containment tree with weights `ν = min(μ, 1/2)` and branch minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTree {
    pub levels: Vec<Vec<TreeVertex>>,
    /// `M_0 = 0`; `M_n` is the least weight of a root path through `n` vertices.
    pub m: Vec<f64>,
}

/// `(parent, μ, method)` of one tree vertex before weighting.
pub type VertexInput = (Option<usize>, Option<Modulus>, ModulusMethod);

pub fn nu(mu: Modulus) -> f64 {
    mu.as_f64().min(0.5)
}

impl WeightedTree {
    /// Tree from `(parent, modulus)` per vertex; `None` moduli are reported.
    pub fn new(levels: Vec<Vec<VertexInput>>) -> Result<WeightedTree> {
        let unknown: Vec<usize> = levels
            .iter()
            .flatten()
            .enumerate()
            .filter(|(_, v)| v.1.is_none())
            .map(|(i, _)| i)
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownModulus(unknown));
        }
        let levels: Vec<Vec<TreeVertex>> = levels
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|(parent, mu, method)| {
                        let mu = mu.expect("checked above");
                        TreeVertex { parent, mu, nu: nu(mu), method }
                    })
                    .collect()
            })
            .collect();
        for (n, row) in levels.iter().enumerate() {
            for v in row {
                let ok = match (n, v.parent) {
                    (0, None) => true,
                    (0, Some(_)) | (_, None) => false,
                    (_, Some(p)) => p < levels[n - 1].len(),
                };
                if !ok {
                    return Err(Error::InvalidArgument(format!("bad parent link at level {n}")));
                }
            }
        }
        let mut m = vec![0.0];
        let mut path: Vec<f64> = Vec::new();
        for (n, row) in levels.iter().enumerate() {
            path = row
                .iter()
                .map(|v| v.nu + if n == 0 { 0.0 } else { path[v.parent.unwrap()] })
                .collect();
            m.push(path.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        Ok(WeightedTree { levels, m })
    }

    /// Complete `branching`-ary tree of `depth` levels with constant modulus.
    pub fn uniform(depth: usize, branching: usize, mu: Modulus) -> WeightedTree {
        let mut levels = Vec::with_capacity(depth);
        let mut width = 1;
        for n in 0..depth {
            levels.push(
                (0..width)
                    .map(|i| ((n > 0).then(|| i / branching), Some(mu), ModulusMethod::Solved))
                    .collect(),
            );
            width *= branching;
        }
        WeightedTree::new(levels).expect("uniform tree is well formed")
    }
}

/// Weights from the puzzle: `μ(U)` is the modulus of `U` minus its children.
///
/// Vertices are the pieces of levels `0 … levels − 1`, so `levels ≤ depth`.
pub fn weighted_tree(puzzle: &PuzzleComplex, levels: usize) -> Result<WeightedTree> {
    if levels > puzzle.depth {
        return Err(Error::DepthExceeded {
            requested: levels,
            available: puzzle.depth,
        });
    }
    let rows: Vec<Vec<VertexInput>> = (0..levels)
        .map(|n| {
            puzzle
                .pieces(n)
                .par_iter()
                .map(|p| {
                    let mut inner = RegionMask::empty(*p.mask.grid());
                    for &child in &p.children_ids {
                        inner = inner.union(&puzzle.piece(n + 1, child).mask)?;
                    }
                    if inner.count() == p.mask.count() {
                        // children fill the piece at this resolution
                        return Ok((p.parent_id, Some(Modulus::Finite(0.0)), ModulusMethod::Degenerate));
                    }
                    let region = AnnularRegion::new(&p.mask, &inner)?;
                    let sol = solve_modulus(&region)?;
                    let method = if sol.degenerate {
                        ModulusMethod::Degenerate
                    } else {
                        ModulusMethod::Solved
                    };
                    Ok((p.parent_id, Some(sol.modulus), method))
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    WeightedTree::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    fn analytic(ratio: f64) -> f64 {
        ratio.ln() / (2.0 * PI)
    }

    #[test]
    fn round_annulus_e() {
        let a = AnnularRegion::round(Complex64::new(0.0, 0.0), 1.0, E, 256).unwrap();
        let s = solve_modulus(&a).unwrap();
        assert!(!s.degenerate);
        assert_relative_eq!(s.modulus.as_f64(), analytic(E), max_relative = 0.02);
    }

    #[test]
    fn empty_inner_is_infinite() {
        let a = AnnularRegion::round(Complex64::new(0.0, 0.0), 0.0, 1.0, 64).unwrap();
        let a = AnnularRegion::new(a.outer(), &RegionMask::empty(*a.grid())).unwrap();
        assert_eq!(solve_modulus(&a).unwrap().modulus, Modulus::Infinite);
    }

    #[test]
    fn touching_inner_is_degenerate() {
        let g = Grid::square(1.0, 32).unwrap();
        let outer = RegionMask::from_fn(g, |z| z.norm() < 1.0);
        let inner = RegionMask::from_fn(g, |z| z.norm() < 1.0 && z.re > 0.5);
        let s = solve_modulus(&AnnularRegion::new(&outer, &inner).unwrap()).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.modulus, Modulus::Finite(0.0));
    }

    #[test]
    fn propagation_rules() {
        let grid = MarkedGrid::synthetic(vec![vec![true, false, false], vec![true, false, false]]).unwrap();
        let mut seeds = ModulusMatrix::unknown(1, 2);
        seeds.set(1, 0, CellModulus::Finite(0.1));
        let out = lemma1_propagate(&grid, &seeds).unwrap();
        assert_eq!(out.get(0, 1), CellModulus::Finite(0.2));
        let mut seeds = ModulusMatrix::unknown(1, 2);
        seeds.set(1, 1, CellModulus::Finite(0.1));
        let out = lemma1_propagate(&grid, &seeds).unwrap();
        assert_eq!(out.get(0, 2), CellModulus::Finite(0.1));
        assert_eq!(out.get(1, 0), CellModulus::Unknown);
    }

    #[test]
    fn propagation_conflict() {
        let grid = MarkedGrid::synthetic(vec![vec![true, false], vec![true, false]]).unwrap();
        let mut seeds = ModulusMatrix::unknown(1, 1);
        seeds.set(1, 0, CellModulus::Finite(0.1));
        seeds.set(0, 1, CellModulus::Finite(0.3));
        assert!(matches!(
            lemma1_propagate(&grid, &seeds),
            Err(Error::PropagationConflict { .. })
        ));
    }

    #[test]
    fn nu_and_uniform_tree() {
        assert_eq!(nu(Modulus::Finite(0.3)), 0.3);
        assert_eq!(nu(Modulus::Finite(0.8)), 0.5);
        assert_eq!(nu(Modulus::Infinite), 0.5);
        let t = WeightedTree::uniform(6, 2, Modulus::Finite(0.25));
        for (n, m) in t.m.iter().enumerate() {
            assert_relative_eq!(*m, 0.25 * n as f64);
        }
    }

    #[test]
    fn unknown_moduli_are_listed() {
        let r = WeightedTree::new(vec![vec![(None, None, ModulusMethod::Solved)]]);
        assert_eq!(r, Err(Error::UnknownModulus(vec![0])));
    }

    #[test]
    fn isoperimetric_on_disks() {
        let a = AnnularRegion::round(Complex64::new(0.0, 0.0), 1.0, E, 256).unwrap();
        let c = isoperimetric_check(&a).unwrap();
        assert!(c.holds);
        assert_relative_eq!(c.lhs, E * E, max_relative = 0.02);
        assert_relative_eq!(c.rhs, 3.0, max_relative = 0.02);
    }
}
