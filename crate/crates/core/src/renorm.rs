//! First-return maps to the critical puzzle piece.
//!
//! At level `n` with `V = V^n(0)`, the returns `m(1) < m(2) < …` of the
//! critical orbit to `V` give pieces `V_i = V^{n+l(i)}(c_{m(i)})` with
//! `l(i) = m(i+1) − m(i)`, on which `g = p_c^{l(i)}` maps onto `V`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::step;
use crate::error::{Error, Result};
use crate::mask::RegionMask;
use crate::puzzle::{Location, PuzzleComplex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlmPiece {
    pub level: usize,
    pub id: usize,
    /// Return time `l(i)`.
    pub return_time: usize,
    pub degree: u8,
    /// The orbit point `c_{m(i)}` that selected the piece.
    pub point: Complex64,
    pub mask: RegionMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPLM {
    pub c: Complex64,
    pub level: usize,
    pub critical_id: usize,
    /// `V`, the level-`n` critical piece.
    pub domain: RegionMask,
    pub returns: Vec<usize>,
    pub pieces: Vec<PlmPiece>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Closures of two pieces meet.
    Disjointness { first: usize, second: usize },
    /// The closure of a piece leaves `V`.
    Containment { piece: usize },
    /// Not exactly one degree-2 piece, or it misses the critical point.
    UniqueCritical { degree_two: usize },
    /// An intermediate image `p_c^k V_i`, `0 < k < l(i)`, meets `V`.
    IntermediatePiece { piece: usize, step: usize },
    /// `g(c_{m(i)})` is not `c_{m(i+1)}`.
    OrbitConsistency { piece: usize },
    /// A piece level differs from `n + l(i)`.
    LevelMismatch { piece: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Disjointness { first, second } => {
                write!(f, "closures of pieces {first} and {second} intersect")
            }
            Violation::Containment { piece } => write!(f, "piece {piece} is not compactly inside V"),
            Violation::UniqueCritical { degree_two } => {
                write!(f, "{degree_two} degree-two pieces instead of one around the critical point")
            }
            Violation::IntermediatePiece { piece, step } => {
                write!(f, "image {step} of piece {piece} returns to V early")
            }
            Violation::OrbitConsistency { piece } => {
                write!(f, "g does not carry the orbit point of piece {piece} to the next return")
            }
            Violation::LevelMismatch { piece } => write!(f, "piece {piece} has the wrong level"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlmChecks {
    pub disjoint: bool,
    pub contained: bool,
    pub unique_critical: bool,
    pub orbit_ok: bool,
}

/// Whether `z` lies in the critical piece of `level`, walking the nest from
/// level 0 so that points far from it are never located finely.
fn in_critical_nest(puzzle: &PuzzleComplex, z: Complex64, level: usize, index: usize) -> Result<bool> {
    for n in 0..=level {
        match puzzle.locate(z, n)? {
            Location::Piece(id) if id == puzzle.critical_id(n) => {}
            Location::OnBoundary => return Err(Error::OnBoundary { index, level: n }),
            _ => return Ok(false),
        }
    }
    Ok(true)
}

fn critical_orbit(puzzle: &PuzzleComplex, len: usize) -> Result<Vec<Complex64>> {
    let c = puzzle.param.c;
    let bound = crate::dynamics::escape_radius(c);
    let mut z = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(len + 1);
    for j in 0..=len {
        if !(z.norm() <= bound) {
            return Err(Error::CriticalOrbitEscaped { step: j });
        }
        out.push(z);
        z = step(c, z);
    }
    Ok(out)
}

/// All `1 ≤ j ≤ budget` with `c_j ∈ V^n(0)`.
pub fn returns_to_critical_piece(puzzle: &PuzzleComplex, level: usize, budget: usize) -> Result<Vec<usize>> {
    if level > puzzle.depth {
        return Err(Error::DepthExceeded {
            requested: level,
            available: puzzle.depth,
        });
    }
    let orbit = critical_orbit(puzzle, budget)?;
    let hits: Vec<bool> = (1..=budget)
        .into_par_iter()
        .map(|j| in_critical_nest(puzzle, orbit[j], level, j))
        .collect::<Result<_>>()?;
    Ok((1..=budget).filter(|&j| hits[j - 1]).collect())
}

/// `V^{n−1}(0)` contains the one-pixel dilation of `V^n(0)`.
pub fn annulus_nondegenerate(puzzle: &PuzzleComplex, level: usize) -> bool {
    level >= 1
        && level <= puzzle.depth
        && puzzle
            .critical_piece(level)
            .mask
            .dilated(1)
            .is_subset_of(&puzzle.critical_piece(level - 1).mask)
            .unwrap_or(false)
}

/// Smallest level with a non-degenerate critical annulus and two returns
/// whose pieces fit inside the puzzle.
pub fn select_level(puzzle: &PuzzleComplex, budget: usize) -> Result<usize> {
    for n in 1..=puzzle.depth {
        if !annulus_nondegenerate(puzzle, n) {
            continue;
        }
        let returns = returns_to_critical_piece(puzzle, n, budget)?;
        if returns.len() >= 2 && n + returns[0] <= puzzle.depth {
            return Ok(n);
        }
    }
    Err(Error::NoReturns { level: puzzle.depth })
}

/// Builds and validates the first-return map at `level`.
pub fn build_first_return_plm(puzzle: &PuzzleComplex, level: usize, budget: usize) -> Result<GeneralizedPLM> {
    let returns = returns_to_critical_piece(puzzle, level, budget)?;
    if returns.is_empty() {
        return Err(Error::NoReturns { level });
    }
    if !annulus_nondegenerate(puzzle, level) {
        return Err(Error::AnnulusDegenerate { level });
    }
    let orbit = critical_orbit(puzzle, budget)?;
    let chain: Vec<usize> = std::iter::once(0).chain(returns.iter().copied()).collect();
    let mut pieces: Vec<PlmPiece> = Vec::new();
    for w in chain.windows(2) {
        let (m, l) = (w[0], w[1] - w[0]);
        let piece_level = level + l;
        if piece_level > puzzle.depth {
            continue;
        }
        let id = match puzzle.locate(orbit[m], piece_level)? {
            Location::Piece(id) => id,
            _ => return Err(Error::OnBoundary { index: m, level: piece_level }),
        };
        if pieces.iter().any(|p| p.level == piece_level && p.id == id) {
            continue;
        }
        let degree = if id == puzzle.critical_id(piece_level) { 2 } else { 1 };
        pieces.push(PlmPiece {
            level: piece_level,
            id,
            return_time: l,
            degree,
            point: orbit[m],
            mask: puzzle.piece(piece_level, id).mask.clone(),
        });
    }
    if pieces.is_empty() {
        return Err(Error::DepthExceeded {
            requested: level + returns[0],
            available: puzzle.depth,
        });
    }
    let plm = GeneralizedPLM {
        c: puzzle.param.c,
        level,
        critical_id: puzzle.critical_id(level),
        domain: puzzle.critical_piece(level).mask.clone(),
        returns,
        pieces,
    };
    validate(&plm, puzzle).map_err(Error::ValidationFailed)?;
    Ok(plm)
}

/// Checks every structural property of `g`, reporting the first violation.
pub fn validate(g: &GeneralizedPLM, puzzle: &PuzzleComplex) -> std::result::Result<PlmChecks, Violation> {
    let closures: Vec<RegionMask> = g.pieces.iter().map(|p| p.mask.dilated(1)).collect();
    for i in 0..g.pieces.len() {
        for j in i + 1..g.pieces.len() {
            if closures[i].overlap_count(&g.pieces[j].mask).unwrap_or(1) > 0 {
                return Err(Violation::Disjointness { first: i, second: j });
            }
        }
    }
    for (i, cl) in closures.iter().enumerate() {
        if !cl.is_subset_of(&g.domain).unwrap_or(false) {
            return Err(Violation::Containment { piece: i });
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let degree_two: Vec<usize> = (0..g.pieces.len()).filter(|&i| g.pieces[i].degree == 2).collect();
    if degree_two.len() != 1 || !closures[degree_two[0]].contains(zero) {
        return Err(Violation::UniqueCritical {
            degree_two: degree_two.len(),
        });
    }
    for (i, p) in g.pieces.iter().enumerate() {
        let mut z = p.point;
        for k in 1..p.return_time {
            z = step(g.c, z);
            if in_critical_nest(puzzle, z, g.level, k).unwrap_or(true) {
                return Err(Violation::IntermediatePiece { piece: i, step: k });
            }
        }
    }
    for (i, p) in g.pieces.iter().enumerate() {
        let image = g.apply(i, p.point);
        let lands = matches!(puzzle.locate(image, g.level), Ok(Location::Piece(id)) if id == g.critical_id);
        if !lands || !in_pieces(g, image) {
            return Err(Violation::OrbitConsistency { piece: i });
        }
    }
    for (i, p) in g.pieces.iter().enumerate() {
        if p.level != g.level + p.return_time {
            return Err(Violation::LevelMismatch { piece: i });
        }
    }
    Ok(PlmChecks {
        disjoint: true,
        contained: true,
        unique_critical: true,
        orbit_ok: true,
    })
}

fn in_pieces(g: &GeneralizedPLM, z: Complex64) -> bool {
    g.branch_of(z).is_some()
}

impl GeneralizedPLM {
    /// Index of the piece whose closure (one pixel) contains `z`.
    pub fn branch_of(&self, z: Complex64) -> Option<usize> {
        self.pieces.iter().position(|p| {
            let g = p.mask.grid();
            let fx = ((z.re - g.x_min) / g.dx).floor() as i64;
            let fy = ((z.im - g.y_min) / g.dy).floor() as i64;
            (-1..=1).any(|dy| (-1..=1).any(|dx| p.mask.get_signed(fx + dx, fy + dy)))
        })
    }

    /// `p_c^{l(i)}(z)`.
    pub fn apply(&self, i: usize, z: Complex64) -> Complex64 {
        (0..self.pieces[i].return_time).fold(z, |w, _| step(self.c, w))
    }
}

/// True when the `g`-orbit of the critical point stays in the pieces.
pub fn plm_orbit_check(g: &GeneralizedPLM, iterations: usize) -> bool {
    let mut z = Complex64::new(0.0, 0.0);
    for _ in 0..iterations {
        match g.branch_of(z) {
            Some(i) => z = g.apply(i, z),
            None => return false,
        }
    }
    true
}

/// A map `g: ∪V_i → V` given by branches on pixel masks.
pub trait ReturnMap: Sync {
    fn domain(&self) -> &RegionMask;
    fn branch_count(&self) -> usize;
    fn branch_mask(&self, i: usize) -> &RegionMask;
    fn apply_branch(&self, i: usize, z: Complex64) -> Complex64;
}

impl ReturnMap for GeneralizedPLM {
    fn domain(&self) -> &RegionMask {
        &self.domain
    }

    fn branch_count(&self) -> usize {
        self.pieces.len()
    }

    fn branch_mask(&self, i: usize) -> &RegionMask {
        &self.pieces[i].mask
    }

    fn apply_branch(&self, i: usize, z: Complex64) -> Complex64 {
        self.apply(i, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorLevel {
    pub k: usize,
    pub components: usize,
    pub max_diameter: f64,
    pub area: f64,
}

/// Diameters and areas of `g^{−k}(V)` for `k = 0 … depth`, on `V`'s raster.
pub fn cantor_diagnostics(g: &impl ReturnMap, depth: usize) -> Result<Vec<CantorLevel>> {
    let domain = g.domain();
    let grid = *domain.grid();
    let branch_of: Vec<Option<usize>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.center_of(idx);
            (0..g.branch_count()).find(|&i| g.branch_mask(i).contains(z))
        })
        .collect();
    let images: Vec<Option<usize>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            branch_of[idx].and_then(|i| grid.index_of(g.apply_branch(i, grid.center_of(idx))))
        })
        .collect();
    let mut current: Vec<bool> = (0..grid.len())
        .map(|idx| domain.get(idx % grid.nx, idx / grid.nx))
        .collect();
    let mut out = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        if k > 0 {
            current = (0..grid.len())
                .map(|idx| images[idx].is_some_and(|j| current[j]))
                .collect();
        }
        let mask = RegionMask::from_indices(grid, (0..grid.len()).filter(|&i| current[i]));
        let comps = mask.components();
        if comps.is_empty() || comps.iter().any(|m| m.count() < 2) {
            return Err(Error::RasterTooCoarse(format!(
                "components of level {k} fall below two pixels"
            )));
        }
        out.push(CantorLevel {
            k,
            components: comps.len(),
            max_diameter: comps.iter().map(|m| m.diameter()).fold(0.0, f64::max),
            area: mask.area(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::Grid;

    struct TwoDisks {
        domain: RegionMask,
        branches: [RegionMask; 2],
    }

    const CENTERS: [f64; 2] = [-0.5, 0.5];
    const RADIUS: f64 = 0.3;

    impl TwoDisks {
        fn new(n: usize) -> TwoDisks {
            let grid = Grid::square(1.02, n).unwrap();
            let disk = |x: f64, r: f64| RegionMask::from_fn(grid, move |z| (z - x).norm() < r);
            TwoDisks {
                domain: disk(0.0, 1.0),
                branches: [disk(CENTERS[0], RADIUS), disk(CENTERS[1], RADIUS)],
            }
        }
    }

    impl ReturnMap for TwoDisks {
        fn domain(&self) -> &RegionMask {
            &self.domain
        }
        fn branch_count(&self) -> usize {
            2
        }
        fn branch_mask(&self, i: usize) -> &RegionMask {
            &self.branches[i]
        }
        fn apply_branch(&self, i: usize, z: Complex64) -> Complex64 {
            (z - CENTERS[i]) / RADIUS
        }
    }

    #[test]
    fn synthetic_cantor_set_shrinks() {
        let g = TwoDisks::new(512);
        let levels = cantor_diagnostics(&g, 3).unwrap();
        for w in levels.windows(2) {
            assert!(w[1].area <= w[0].area);
            assert!(w[1].max_diameter < w[0].max_diameter);
            assert_eq!(w[1].components, 2 * w[0].components);
        }
        // diameters contract by the branch factor
        let ratio = levels[3].max_diameter / levels[2].max_diameter;
        assert!((ratio - RADIUS).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn too_fine_levels_are_reported() {
        let g = TwoDisks::new(64);
        assert!(matches!(cantor_diagnostics(&g, 6), Err(Error::RasterTooCoarse(_))));
    }

    #[test]
    fn violations_display() {
        let v = Violation::Disjointness { first: 0, second: 1 };
        assert_eq!(v.to_string(), "closures of pieces 0 and 1 intersect");
    }
}
