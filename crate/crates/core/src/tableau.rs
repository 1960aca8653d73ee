//! Marked grids of the critical orbit and the τ-function.
//!
//! Row `i` is the puzzle level, column `j` the orbit time; cell `(i, j)` is
//! marked when `V^i(c_j)` is the critical piece of level `i`, where
//! `c_j = p_c^j(0)`.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::iterate;
use crate::error::{Error, Result};
use crate::puzzle::{Location, PuzzleComplex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridSource {
    FromDynamics { c: Complex64 },
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedGrid {
    pub depth: usize,
    pub width: usize,
    /// `marks[i][j]` for `i ≤ depth`, `j ≤ width`.
    pub marks: Vec<Vec<bool>>,
    pub source: GridSource,
}

impl MarkedGrid {
    /// A grid from explicit rows; all rows must have the same length.
    pub fn synthetic(marks: Vec<Vec<bool>>) -> Result<MarkedGrid> {
        let depth = marks.len().checked_sub(1).ok_or_else(|| {
            Error::InvalidArgument("a grid needs at least one row".into())
        })?;
        let width = marks[0].len().checked_sub(1).ok_or_else(|| {
            Error::InvalidArgument("a grid needs at least one column".into())
        })?;
        if marks.iter().any(|r| r.len() != width + 1) {
            return Err(Error::InvalidArgument("grid rows differ in length".into()));
        }
        Ok(MarkedGrid {
            depth,
            width,
            marks,
            source: GridSource::Synthetic,
        })
    }

    /// The tableau of a critical point of period `p`: marks at `(i, kp)`.
    pub fn periodic(p: usize, depth: usize, width: usize) -> MarkedGrid {
        let marks = (0..=depth)
            .map(|_| (0..=width).map(|j| j % p.max(1) == 0).collect())
            .collect();
        MarkedGrid {
            depth,
            width,
            marks,
            source: GridSource::Synthetic,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.marks[i][j]
    }

    /// Rows as `0`/`1` strings.
    pub fn row_strings(&self) -> Vec<String> {
        self.marks
            .iter()
            .map(|r| r.iter().map(|&m| if m { '1' } else { '0' }).collect())
            .collect()
    }
}

/// Marks `V^i(c_j)` for `i ≤ depth`, `j ≤ width`.
///
/// Only `depth ≤ puzzle.depth` is needed: every cell is located directly.
/// Cells below the first unmarked one in a column are unmarked without being
/// located, which keeps pieces around repelling orbits from having to be
/// resolved below pixel size.
pub fn marked_grid(puzzle: &PuzzleComplex, depth: usize, width: usize) -> Result<MarkedGrid> {
    if depth > puzzle.depth {
        return Err(Error::DepthExceeded {
            requested: depth,
            available: puzzle.depth,
        });
    }
    let c = puzzle.param.c;
    let mut orbit = Vec::with_capacity(width + 1);
    let mut z = Complex64::new(0.0, 0.0);
    for j in 0..=width {
        orbit.push(z);
        let it = iterate(c, z, 1)?;
        if it.escaped_at.is_some() {
            return Err(Error::CriticalOrbitEscaped { step: j + 1 });
        }
        z = it.value.ok_or(Error::CriticalOrbitEscaped { step: j + 1 })?;
    }
    let columns: Vec<Vec<bool>> = orbit
        .par_iter()
        .enumerate()
        .map(|(j, &z)| {
            let mut col = vec![false; depth + 1];
            // nesting: once off the critical nest, deeper rows stay unmarked
            for (i, cell) in col.iter_mut().enumerate() {
                *cell = match puzzle.locate(z, i)? {
                    Location::Piece(id) => id == puzzle.critical_id(i),
                    Location::Outside => false,
                    Location::OnBoundary => return Err(Error::OnBoundary { index: j, level: i }),
                };
                if !*cell {
                    break;
                }
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let marks = (0..=depth)
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    Ok(MarkedGrid {
        depth,
        width,
        marks,
        source: GridSource::FromDynamics { c },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Column 0 is entirely marked.
    Column0,
    /// A mark implies marks above it in the same column.
    Nesting,
    /// A mark at `(l, j)` copies the marks of the diagonal from `(l, 0)`.
    T1,
    /// A marked diagonal from `(l, j)` only hits marks the diagonal from `(l, 0)` has.
    T2,
    /// The first mark below a critical row excludes a mark on its diagonal.
    T3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: Rule,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at ({}, {})", self.rule, self.row, self.col)
    }
}

/// All violations of the marked-grid rules, in row-major cell order per rule.
pub fn check_rules(grid: &MarkedGrid) -> Vec<RuleViolation> {
    let m = &grid.marks;
    let mut out = Vec::new();
    let mut push = |rule, row, col| out.push(RuleViolation { rule, row, col });
    for i in 0..=grid.depth {
        if !m[i][0] {
            push(Rule::Column0, i, 0);
        }
    }
    for i in 1..=grid.depth {
        for j in 0..=grid.width {
            if m[i][j] && !m[i - 1][j] {
                push(Rule::Nesting, i - 1, j);
            }
        }
    }
    for l in 0..=grid.depth {
        for j in 1..=grid.width {
            if !m[l][j] {
                continue;
            }
            for i in 1..=l.min(grid.width - j) {
                let (reference, here) = (m[l - i][i], m[l - i][j + i]);
                if reference && !here {
                    push(Rule::T1, l - i, j + i);
                }
                if here && !reference {
                    push(Rule::T2, l - i, j + i);
                }
            }
        }
    }
    for l in 0..grid.depth {
        for j in 1..=grid.width {
            if !m[l][j] || m[l + 1][j] {
                continue;
            }
            // first critical cell on the diagonal from (l, 0), below row l
            let Some(k) = (1..=l).find(|&i| m[l - i][i]) else {
                continue;
            };
            if j + k <= grid.width && m[l + 1 - k][k] && m[l + 1 - k][j + k] {
                push(Rule::T3, l + 1 - k, j + k);
            }
        }
    }
    out
}

/// Largest `m < n` with `(m, n − m)` marked, or −1.
pub fn tau(grid: &MarkedGrid, n: usize) -> Result<i64> {
    if n > grid.depth || n > grid.width {
        return Err(Error::DepthExceeded {
            requested: n,
            available: grid.depth.min(grid.width),
        });
    }
    Ok((0..n)
        .rev()
        .find(|&m| grid.marks[m][n - m])
        .map_or(-1, |m| m as i64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum VerdictKind {
    PeriodicTableau(usize),
    NonRecurrentAtDepth(usize),
    PersistentlyRecurrentUpToDepth,
    RecurrentNotPersistentAtDepth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceVerdict {
    pub kind: VerdictKind,
    /// `τ(1), …, τ(depth_examined)`.
    pub tau_values: Vec<i64>,
    pub depth_examined: usize,
}

/// Finite-depth verdict on the critical recurrence.
pub fn recurrence_verdict(grid: &MarkedGrid) -> Result<RecurrenceVerdict> {
    if 3 * grid.width < 2 * grid.depth {
        return Err(Error::InsufficientDepth {
            depth: grid.depth,
            width: grid.width,
        });
    }
    let n_max = grid.depth.min(grid.width);
    let tau_values: Vec<i64> = (1..=n_max).map(|n| tau(grid, n)).collect::<Result<_>>()?;
    let kind = classify(grid, &tau_values);
    Ok(RecurrenceVerdict {
        kind,
        tau_values,
        depth_examined: n_max,
    })
}

fn classify(grid: &MarkedGrid, tau_values: &[i64]) -> VerdictKind {
    let n_max = tau_values.len();
    let at = |n: usize| tau_values[n - 1];
    let tail = (n_max / 2).max(1)..=n_max;
    if n_max >= 2 {
        let start = *tail.start() as i64;
        let p = start - at(*tail.start());
        if (1..=start).contains(&p) && tail.clone().all(|n| at(n) == n as i64 - p) {
            return VerdictKind::PeriodicTableau(p as usize);
        }
    }
    if let Some(n0) = (1..=grid.depth).find(|&i| !grid.marks[i][1..].iter().any(|&m| m)) {
        return VerdictKind::NonRecurrentAtDepth(n0);
    }
    // suffix minima of τ must keep growing
    let suffix_min = |n: usize| (n..=n_max).map(at).min().unwrap_or(-1);
    let (early, late) = ((n_max / 4).max(1), (n_max / 2).max(1));
    if n_max >= 4 && suffix_min(late) > suffix_min(early) && suffix_min(late) >= 1 {
        VerdictKind::PersistentlyRecurrentUpToDepth
    } else {
        VerdictKind::RecurrentNotPersistentAtDepth
    }
}

/// Longest univalent pull-back visible in the grid.
///
/// From a cell `(l, j)`, `j ≥ 1`, the unmarked run along the diagonal
/// `(l − t, j + t)` is a pull-back that never meets the critical point; the
/// result is the longest run. Runs that reach row 0 or the last column are
/// cut off by the grid, so the value is a lower bound there.
pub fn longest_univalent_pullback(grid: &MarkedGrid) -> usize {
    let mut best = 0;
    for l in 0..=grid.depth {
        for j in 1..=grid.width {
            let len = l.min(grid.width - j) + 1;
            let run = (0..len).find(|&t| grid.marks[l - t][j + t]).unwrap_or(len);
            best = best.max(run);
        }
    }
    best
}
