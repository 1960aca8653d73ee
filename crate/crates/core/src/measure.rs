//! Area bookkeeping for puzzle levels.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::escape_radius;
use crate::error::{Error, Result};
use crate::mask::Grid;
use crate::moduli::WeightedTree;
use crate::puzzle::PuzzleComplex;

/// `λ(V^n)`: total area of the level-`n` pieces.
pub fn area_of_level(puzzle: &PuzzleComplex, n: usize) -> Result<f64> {
    if n > puzzle.depth {
        return Err(Error::DepthExceeded {
            requested: n,
            available: puzzle.depth,
        });
    }
    let pixels: usize = puzzle.pieces(n).iter().map(|p| p.mask.count()).sum();
    Ok(pixels as f64 * puzzle.grid.pixel_area())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub c: Complex64,
    pub resolution: usize,
    pub areas: Vec<f64>,
    pub boundary_areas: Vec<f64>,
    pub exterior_areas: Vec<f64>,
    /// `λ(V^n)/λ(V^{n−1})` for `n ≥ 1`.
    pub ratios: Vec<f64>,
    pub b_hat: Option<f64>,
    pub m: Vec<f64>,
}

pub fn area_report(puzzle: &PuzzleComplex, tree: Option<&WeightedTree>) -> Result<AreaReport> {
    let px = puzzle.grid.pixel_area();
    let mut areas = Vec::new();
    let mut boundary_areas = Vec::new();
    let mut exterior_areas = Vec::new();
    for n in 0..=puzzle.depth {
        let (inside, boundary, exterior) = puzzle.pixel_budget(n);
        areas.push(inside as f64 * px);
        boundary_areas.push(boundary as f64 * px);
        exterior_areas.push(exterior as f64 * px);
    }
    let ratios = areas.windows(2).map(|w| w[1] / w[0]).collect();
    let (b_hat, m) = match tree {
        Some(t) => (decay_from_areas(&areas, &t.m)?.b_hat, t.m.clone()),
        None => (None, Vec::new()),
    };
    Ok(AreaReport {
        c: puzzle.param.c,
        resolution: puzzle.grid.nx,
        areas,
        boundary_areas,
        exterior_areas,
        ratios,
        b_hat,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    /// `min_n −ln(λ_n/λ_0)/M_n` over levels with `M_n > 0`; `None` if there are none.
    pub b_hat: Option<f64>,
    /// `−ln(λ_n/λ_0) − b̂·M_n` per level (0 at the minimizing level).
    pub slack: Vec<f64>,
}

/// Fits `λ(V^n) ≤ exp(−b M_n) λ(V^0)` to the given areas.
pub fn decay_from_areas(areas: &[f64], m: &[f64]) -> Result<DecayCheck> {
    let len = areas.len().min(m.len());
    if len == 0 || !(areas[0] > 0.0) {
        return Err(Error::InvalidArgument("need a positive level-0 area".into()));
    }
    let drop = |n: usize| -(areas[n] / areas[0]).ln();
    let b_hat = (1..len)
        .filter(|&n| m[n] > 0.0)
        .map(|n| drop(n) / m[n])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    let slack = (0..len)
        .map(|n| drop(n) - b_hat.unwrap_or(0.0) * m[n])
        .collect();
    Ok(DecayCheck { b_hat, slack })
}

pub fn decay_check(puzzle: &PuzzleComplex, tree: &WeightedTree) -> Result<DecayCheck> {
    let areas: Vec<f64> = (0..=puzzle.depth)
        .map(|n| area_of_level(puzzle, n))
        .collect::<Result<_>>()?;
    decay_from_areas(&areas, &tree.m)
}

/// `λ(V^n) + boundary area at n`, an at-resolution bound for the area of
/// `J ∩ {G < h0}`; the second value is the boundary part.
pub fn julia_area_upper_bound_at(puzzle: &PuzzleComplex, n: usize) -> Result<(f64, f64)> {
    let inside = area_of_level(puzzle, n)?;
    let (_, boundary, _) = puzzle.pixel_budget(n);
    let slack = boundary as f64 * puzzle.grid.pixel_area();
    Ok((inside + slack, slack))
}

pub fn julia_area_upper_bound(puzzle: &PuzzleComplex) -> (f64, f64) {
    julia_area_upper_bound_at(puzzle, puzzle.depth).expect("depth is a valid level")
}

/// Area of the pixels of `grid` that may meet the Julia set of `z² + c`.
///
/// A pixel counts when its corners disagree about escaping within `budget`
/// steps, or when an escaping corner's distance estimate is below the pixel
/// diagonal.
pub fn box_cover_area(c: Complex64, grid: &Grid, budget: usize) -> f64 {
    let r2 = escape_radius(c).powi(2).max(1e6);
    let diag = grid.dx.hypot(grid.dy);
    // None when bounded, otherwise a distance estimate
    let probe = |z0: Complex64| -> Option<f64> {
        let (mut z, mut dz) = (z0, Complex64::new(1.0, 0.0));
        for _ in 0..budget {
            if z.norm_sqr() > r2 {
                let r = z.norm();
                return Some(r * r.ln() / dz.norm());
            }
            dz = 2.0 * z * dz;
            z = z * z + c;
        }
        None
    };
    let corners: Vec<Option<f64>> = (0..(grid.nx + 1) * (grid.ny + 1))
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % (grid.nx + 1), k / (grid.nx + 1));
            probe(Complex64::new(
                grid.x_min + ix as f64 * grid.dx,
                grid.y_min + iy as f64 * grid.dy,
            ))
        })
        .collect();
    let count: usize = (0..grid.len())
        .into_par_iter()
        .filter(|&i| {
            let (ix, iy) = (i % grid.nx, i / grid.nx);
            let at = |dx: usize, dy: usize| corners[(iy + dy) * (grid.nx + 1) + ix + dx];
            let cs = [at(0, 0), at(1, 0), at(0, 1), at(1, 1)];
            let escaping = cs.iter().filter(|v| v.is_some()).count();
            (escaping != 0 && escaping != 4) || cs.iter().flatten().any(|&d| d < diag)
        })
        .count();
    count as f64 * grid.pixel_area()
}

/// Writes `level,area,ratio,M_n,exp_neg_b_M_n` rows with 12 significant digits.
pub fn write_csv(report: &AreaReport, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "level,area,ratio,M_n,exp_neg_b_M_n")?;
    let num = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.11e}"));
    for (n, &a) in report.areas.iter().enumerate() {
        let ratio = if n == 0 { None } else { Some(report.ratios[n - 1]) };
        let m = report.m.get(n).copied();
        let bound = match (report.b_hat, m) {
            (Some(b), Some(m)) => Some((-b * m).exp()),
            _ => None,
        };
        writeln!(w, "{n},{},{},{},{}", num(Some(a)), num(ratio), num(m), num(bound))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::Modulus;
    use approx::assert_relative_eq;

    #[test]
    fn synthetic_uniform_tree() {
        let s = 0.3;
        let tree = WeightedTree::uniform(8, 2, Modulus::Finite(s));
        let areas: Vec<f64> = (0..=8).map(|n| 0.5f64.powi(n)).collect();
        let d = decay_from_areas(&areas, &tree.m).unwrap();
        assert_relative_eq!(d.b_hat.unwrap(), 2f64.ln() / s, max_relative = 1e-12);
        assert!(d.slack.iter().all(|&x| x.abs() < 1e-9));
    }

    #[test]
    fn zero_weights_leave_b_undefined() {
        let tree = WeightedTree::uniform(4, 2, Modulus::Finite(0.0));
        let d = decay_from_areas(&[1.0, 0.5, 0.25, 0.1, 0.05], &tree.m).unwrap();
        assert_eq!(d.b_hat, None);
    }

    #[test]
    fn circle_box_cover_is_linear() {
        let cover = |n: usize| {
            let g = Grid::square(1.5, n).unwrap();
            box_cover_area(Complex64::new(0.0, 0.0), &g, 200) / g.dx
        };
        // area ≈ k·h for a smooth curve, so area/h settles
        let (a, b) = (cover(256), cover(512));
        assert!((a / b - 1.0).abs() < 0.15, "{a} vs {b}");
    }

    #[test]
    fn csv_layout() {
        let report = AreaReport {
            c: Complex64::new(0.0, 1.0),
            resolution: 8,
            areas: vec![2.0, 1.0],
            boundary_areas: vec![0.0, 0.0],
            exterior_areas: vec![0.0, 0.0],
            ratios: vec![0.5],
            b_hat: Some(1.0),
            m: vec![0.0, 0.5],
        };
        let mut out = Vec::new();
        write_csv(&report, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level,area,ratio,M_n,exp_neg_b_M_n");
        assert_eq!(lines[1], "0,2.00000000000e0,,0.00000000000e0,1.00000000000e0");
        assert_eq!(lines[2], "1,1.00000000000e0,5.00000000000e-1,5.00000000000e-1,6.06530659713e-1");
    }
}
