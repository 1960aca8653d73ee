use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use yoccoz::dynamics::{escape_radius, fixed_points, step};
use yoccoz::measure::{area_report, julia_area_upper_bound, write_csv};
use yoccoz::moduli::{divergence_partial_sums, weighted_tree, Modulus, ModulusMethod, PartialSum};
use yoccoz::puzzle::{build_puzzle, BoundaryArc, PuzzleComplex, PuzzleConfig};
use yoccoz::renorm::{build_first_return_plm, cantor_diagnostics, plm_orbit_check, select_level, validate};
use yoccoz::tableau::{check_rules, longest_univalent_pullback, marked_grid, recurrence_verdict, VerdictKind};
use yoccoz::{Angle, Complex64};

use crate::args::{AreaArgs, Common, ModuliArgs, PuzzleArgs, RenderArgs, RenormArgs, TableauArgs};
use crate::error::CliError;
use crate::output::OutDir;
use crate::svg;

/// Files written by a command and the settings to record in the manifest.
pub struct Run {
    pub out: OutDir,
    pub settings: serde_json::Value,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn config(common: &Common, boundary_arcs: bool) -> PuzzleConfig {
    PuzzleConfig {
        depth: common.depth as usize,
        h0: common.h0,
        resolution: common.res as usize,
        boundary_arcs,
        ..PuzzleConfig::default()
    }
}

fn puzzle(common: &Common, boundary_arcs: bool) -> Result<(PuzzleComplex, PuzzleConfig), CliError> {
    let cfg = config(common, boundary_arcs);
    let param = fixed_points(common.c)?;
    Ok((build_puzzle(&param, &cfg)?, cfg))
}

fn settings(common: &Common, cfg: Option<&PuzzleConfig>, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "common": common,
        "puzzle": cfg,
        "solver_tolerance": yoccoz::moduli::SOLVER_TOL,
        "command": extra,
    })
}

pub fn render(a: &RenderArgs) -> Result<Run, CliError> {
    let c = a.common.c;
    let n = a.common.res as usize;
    let half = escape_radius(c);
    // symmetric integer numerators make z ↦ −z exact on the pixel centres
    let coord = |k: usize| (2.0 * k as f64 + 1.0 - n as f64) / n as f64 * half;
    let bailout = half * half;
    let rows: Vec<Vec<u8>> = (0..n)
        .into_par_iter()
        .map(|row| {
            let y = -coord(row);
            (0..n)
                .map(|col| {
                    let mut z = Complex64::new(coord(col), y);
                    for k in 0..a.iterations {
                        if z.norm_sqr() > bailout {
                            return 255 - (12 * k).min(191) as u8;
                        }
                        z = step(c, z);
                    }
                    0
                })
                .collect()
        })
        .collect();
    let pixels: Vec<u8> = rows.concat();
    let bounded = pixels.iter().filter(|&&v| v == 0).count();
    let symmetric = (0..n * n).all(|i| (pixels[i] == 0) == (pixels[n * n - 1 - i] == 0));

    let img = image::GrayImage::from_raw(n as u32, n as u32, pixels).expect("buffer matches size");
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)?;

    let mut out = OutDir::new(&a.common.out_dir);
    out.write("render.png", &png)?;
    out.write_json(
        "render.json",
        &json!({
            "c": pair(c),
            "resolution": n,
            "half_width": half,
            "iterations": a.iterations,
            "bounded_pixels": bounded,
            "bounded_area": bounded as f64 * (2.0 * half / n as f64).powi(2),
            "negation_symmetric": symmetric,
        }),
    )?;
    Ok(Run {
        out,
        settings: settings(&a.common, None, json!({ "iterations": a.iterations })),
    })
}

#[derive(Serialize)]
struct PieceJson<'a> {
    id: usize,
    parent_id: Option<usize>,
    children_ids: &'a [usize],
    is_critical: bool,
    symbol: u8,
    image_id: Option<usize>,
    image_agreement: f64,
    pixels: usize,
    area: f64,
    diameter: f64,
    angle_intervals: &'a [(Angle, Angle)],
    boundary: &'a [BoundaryArc],
}

pub fn puzzle_cmd(a: &PuzzleArgs) -> Result<Run, CliError> {
    let (pz, cfg) = puzzle(&a.common, true)?;
    let px = pz.grid.pixel_area();
    let levels: Vec<_> = (0..=pz.depth)
        .map(|n| {
            let pieces: Vec<PieceJson> = pz
                .pieces(n)
                .iter()
                .map(|p| PieceJson {
                    id: p.id,
                    parent_id: p.parent_id,
                    children_ids: &p.children_ids,
                    is_critical: p.is_critical,
                    symbol: p.symbol,
                    image_id: p.image_id,
                    image_agreement: p.image_agreement,
                    pixels: p.mask.count(),
                    area: p.mask.count() as f64 * px,
                    diameter: p.mask.diameter(),
                    angle_intervals: &p.angle_intervals,
                    boundary: &p.boundary,
                })
                .collect();
            json!({ "level": n, "critical_id": pz.critical_id(n), "pieces": pieces })
        })
        .collect();
    let g = pz.grid;
    let doc = json!({
        "c": pair(pz.param.c),
        "alpha": pair(pz.param.alpha),
        "depth": pz.depth,
        "h0": pz.h0,
        "resolution": g.nx,
        "box": [g.x_min, g.y_min, g.x_max(), g.y_max()],
        "ray_cycle": pz.ray_cycle,
        "levels": levels,
    });

    let mut out = OutDir::new(&a.common.out_dir);
    out.write_json("puzzle.json", &doc)?;
    let labels: Vec<_> = (0..=a.svg_levels.min(pz.depth)).map(|n| pz.label_map(n)).collect();
    out.write("puzzle.svg", svg::outlines(&g, &labels).as_bytes())?;
    if !a.no_masks {
        for n in 0..=pz.depth {
            out.write(&format!("masks/level{n}.bin"), &pz.level_mask(n).to_bytes())?;
            out.write(&format!("masks/critical{n}.bin"), &pz.critical_piece(n).mask.to_bytes())?;
        }
    }
    Ok(Run {
        out,
        settings: settings(&a.common, Some(&cfg), json!({ "svg_levels": a.svg_levels })),
    })
}

pub fn tableau(a: &TableauArgs) -> Result<Run, CliError> {
    let (pz, cfg) = puzzle(&a.common, false)?;
    let depth = pz.depth;
    let width = a.width.unwrap_or(depth);
    let grid = marked_grid(&pz, depth, width)?;
    let verdict = recurrence_verdict(&grid)?;
    let violations: Vec<String> = check_rules(&grid).iter().map(|v| v.to_string()).collect();
    let verdict_name = match verdict.kind {
        VerdictKind::PeriodicTableau(_) => "PeriodicTableau",
        VerdictKind::NonRecurrentAtDepth(_) => "NonRecurrentAtDepth",
        VerdictKind::PersistentlyRecurrentUpToDepth => "PersistentlyRecurrentUpToDepth",
        VerdictKind::RecurrentNotPersistentAtDepth => "RecurrentNotPersistentAtDepth",
    };
    let value = match verdict.kind {
        VerdictKind::PeriodicTableau(v) | VerdictKind::NonRecurrentAtDepth(v) => Some(v),
        _ => None,
    };
    let doc = json!({
        "c": pair(pz.param.c),
        "depth": grid.depth,
        "width": grid.width,
        "marks": grid.row_strings(),
        "tau": verdict.tau_values,
        "verdict": { "kind": verdict_name, "value": value },
        "rule_violations": violations,
        "longest_univalent_pullback": longest_univalent_pullback(&grid),
    });
    let mut out = OutDir::new(&a.common.out_dir);
    out.write_json("tableau.json", &doc)?;
    Ok(Run {
        out,
        settings: settings(&a.common, Some(&cfg), json!({ "width": width })),
    })
}

fn mu_json(m: Modulus) -> serde_json::Value {
    match m {
        Modulus::Finite(v) => json!(v),
        Modulus::Infinite => json!("inf"),
    }
}

pub fn moduli(a: &ModuliArgs) -> Result<Run, CliError> {
    let (pz, cfg) = puzzle(&a.common, false)?;
    let levels = a.tree_levels.unwrap_or(pz.depth);
    let tree = weighted_tree(&pz, levels)?;
    let mut pieces = Vec::new();
    for (n, row) in tree.levels.iter().enumerate() {
        for (id, v) in row.iter().enumerate() {
            let method = match v.method {
                ModulusMethod::Solved => "solved",
                ModulusMethod::Propagated => "propagated",
                ModulusMethod::Degenerate => "degenerate",
            };
            pieces.push(json!({
                "piece_id": id,
                "level": n,
                "parent_id": v.parent,
                "mu": mu_json(v.mu),
                "nu": v.nu,
                "method": method,
            }));
        }
    }
    let nest: Vec<PartialSum> = if a.nest_levels > 0 {
        divergence_partial_sums(&pz, pz.param.beta, a.nest_levels)?
    } else {
        Vec::new()
    };
    let nest: Vec<_> = nest
        .iter()
        .map(|s| json!({ "level": s.level, "mu": s.mu, "degenerate": s.degenerate, "sum": s.sum }))
        .collect();
    let doc = json!({
        "c": pair(pz.param.c),
        "levels": levels,
        "pieces": pieces,
        "M_n": tree.m,
        "beta_nest": nest,
    });
    let mut out = OutDir::new(&a.common.out_dir);
    out.write_json("moduli.json", &doc)?;
    Ok(Run {
        out,
        settings: settings(
            &a.common,
            Some(&cfg),
            json!({ "tree_levels": levels, "nest_levels": a.nest_levels }),
        ),
    })
}

pub fn area(a: &AreaArgs) -> Result<Run, CliError> {
    let (pz, cfg) = puzzle(&a.common, false)?;
    let tree = if a.no_tree {
        None
    } else {
        Some(weighted_tree(&pz, pz.depth)?)
    };
    let report = area_report(&pz, tree.as_ref())?;
    let mut csv = Vec::new();
    write_csv(&report, &mut csv).map_err(|source| CliError::Io {
        path: "area.csv".into(),
        source,
    })?;
    let (bound, slack) = julia_area_upper_bound(&pz);
    let doc = json!({
        "c": pair(pz.param.c),
        "resolution": report.resolution,
        "areas": report.areas,
        "boundary_areas": report.boundary_areas,
        "exterior_areas": report.exterior_areas,
        "ratios": report.ratios,
        "M_n": report.m,
        "b_hat": report.b_hat,
        "julia_area_upper_bound": bound,
        "upper_bound_slack": slack,
    });
    let mut out = OutDir::new(&a.common.out_dir);
    out.write("area.csv", &csv)?;
    out.write_json("area.json", &doc)?;
    Ok(Run {
        out,
        settings: settings(&a.common, Some(&cfg), json!({ "tree": !a.no_tree })),
    })
}

pub fn renorm(a: &RenormArgs) -> Result<Run, CliError> {
    let (pz, cfg) = puzzle(&a.common, false)?;
    let level = match a.level {
        Some(l) => l,
        None => select_level(&pz, a.budget)?,
    };
    let g = build_first_return_plm(&pz, level, a.budget)?;
    let checks = validate(&g, &pz).map_err(yoccoz::Error::ValidationFailed)?;
    let cantor = cantor_diagnostics(&g, a.cantor_depth)?;
    let pieces: Vec<_> = g
        .pieces
        .iter()
        .map(|p| json!({ "id": p.id, "level": p.level, "degree": p.degree, "l": p.return_time, "point": pair(p.point) }))
        .collect();
    let doc = json!({
        "c": pair(g.c),
        "level": g.level,
        "critical_id": g.critical_id,
        "returns": g.returns,
        "pieces": pieces,
        "checks": checks,
        "orbit_check": plm_orbit_check(&g, 2 * g.pieces.len().max(1)),
        "cantor": cantor,
    });
    let mut out = OutDir::new(&a.common.out_dir);
    out.write_json("plm.json", &doc)?;
    Ok(Run {
        out,
        settings: settings(
            &a.common,
            Some(&cfg),
            json!({ "level": level, "budget": a.budget, "cantor_depth": a.cantor_depth }),
        ),
    })
}
