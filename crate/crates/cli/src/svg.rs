use std::fmt::Write;

use yoccoz::mask::Grid;

const STROKES: [&str; 6] = ["#000000", "#1f4e9c", "#2f8f4e", "#b8651b", "#8c2f8c", "#7a7a7a"];

/// Piece outlines of several levels, one `<path>` per level.
///
/// Coordinates are pixel units with `y` pointing down; `labels[n]` is the
/// row-major piece id map of level `n`.
pub fn outlines(grid: &Grid, labels: &[Vec<Option<usize>>]) -> String {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {nx} {ny}" width="{nx}" height="{ny}">"#
    );
    let _ = writeln!(
        out,
        "<desc>box [{}, {}] x [{}, {}]</desc>",
        grid.x_min,
        grid.x_max(),
        grid.y_min,
        grid.y_max()
    );
    out.push_str("<style>\n");
    for n in 0..labels.len() {
        let width = 0.5 + 2.0 / (n + 1) as f64;
        let _ = writeln!(
            out,
            ".level{n} {{ fill: none; stroke: {}; stroke-width: {width}; }}",
            STROKES[n % STROKES.len()]
        );
    }
    out.push_str("</style>\n");
    // deepest first so coarse outlines are drawn on top
    for (n, lab) in labels.iter().enumerate().rev() {
        let _ = write!(out, r#"<path class="level{n}" d=""#);
        let at = |ix: usize, iy: usize| lab[iy * nx + ix];
        // vertical edges between columns ix-1 and ix
        for ix in 0..=nx {
            let mut run: Option<usize> = None;
            for iy in 0..=ny {
                let edge = iy < ny && {
                    let a = if ix > 0 { at(ix - 1, iy) } else { None };
                    let b = if ix < nx { at(ix, iy) } else { None };
                    a != b
                };
                match (edge, run) {
                    (true, None) => run = Some(iy),
                    (false, Some(start)) => {
                        let _ = write!(out, "M{} {}V{}", ix, ny - start, ny - iy);
                        run = None;
                    }
                    _ => {}
                }
            }
        }
        // horizontal edges between rows iy-1 and iy
        for iy in 0..=ny {
            let mut run: Option<usize> = None;
            for ix in 0..=nx {
                let edge = ix < nx && {
                    let a = if iy > 0 { at(ix, iy - 1) } else { None };
                    let b = if iy < ny { at(ix, iy) } else { None };
                    a != b
                };
                match (edge, run) {
                    (true, None) => run = Some(ix),
                    (false, Some(start)) => {
                        let _ = write!(out, "M{} {}H{}", start, ny - iy, ix);
                        run = None;
                    }
                    _ => {}
                }
            }
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}
