//! Leveled Yoccoz partitions.
//!
//! Level 0 is the disk `{G < h0}` cut by the rays landing at α. A pixel belongs
//! to a level-`n` piece when its centre `z` has `G(z) < h0/2^n` and every
//! `p_c^k(z)`, `k ≤ n`, falls inside a level-0 piece; its level-0 symbols
//! `s_0 … s_n` form the itinerary. Level-`n` pieces are the 8-connected
//! components of pixels sharing a parent piece and the symbol `s_n`, which are
//! exactly the components of the `n`-th preimage of the level-0 partition.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::dynamics::{green_potential_with_budget, step, OrbitSegment, ParameterPoint};
use crate::error::{Error, Result};
use crate::mask::{Grid, RegionMask};
use crate::rays::{alpha_ray_cycle, ray_point, trace_external_ray_with, RayConfig, RayTrace};

const RAY: u8 = 254;
const EXTERIOR: u8 = 255;
const NONE: u8 = u8::MAX;

/// Build settings for [`build_puzzle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PuzzleConfig {
    pub depth: usize,
    /// Equipotential level bounding the level-0 pieces.
    pub h0: f64,
    /// Pixels along each side of the square raster.
    pub resolution: usize,
    /// Minimal half-width of the raster; grown when `{G < h0}` does not fit.
    pub half_width: f64,
    /// Pixel radius used for closures in [`PuzzleComplex::vn_neighborhood`].
    pub closure_radius: usize,
    /// Pixel radius searched by [`PuzzleComplex::locate`] for a piece with the
    /// point's itinerary.
    pub search_radius: usize,
    /// Whether to compute boundary arcs (one ray per boundary angle).
    pub boundary_arcs: bool,
    pub rays: RayConfig,
}

impl Default for PuzzleConfig {
    fn default() -> Self {
        PuzzleConfig {
            depth: 10,
            h0: 1.0,
            resolution: 2048,
            half_width: 2.5,
            closure_radius: 3,
            search_radius: 3,
            boundary_arcs: true,
            rays: RayConfig::default(),
        }
    }
}

/// One arc of a piece boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryArc {
    /// A ray of the α-cycle between two potentials.
    Ray { angle: Angle, potential_span: (f64, f64) },
    /// An arc of an equipotential, counterclockwise between two angles.
    Equipotential { potential: f64, angle_span: (Angle, Angle) },
    /// A ray whose `depth`-th image belongs to the α-cycle.
    PulledBack {
        angle: Angle,
        potential_span: (f64, f64),
        depth: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuzzlePiece {
    pub level: usize,
    pub id: usize,
    pub parent_id: Option<usize>,
    pub children_ids: Vec<usize>,
    pub is_critical: bool,
    /// Level-0 symbol of `p_c^level` on this piece.
    pub symbol: u8,
    /// Level-`(level − 1)` piece that `p_c` maps this piece onto.
    pub image_id: Option<usize>,
    /// Fraction of located sample images that land in `image_id`.
    pub image_agreement: f64,
    /// External-angle intervals of the outer equipotential arcs.
    pub angle_intervals: Vec<(Angle, Angle)>,
    pub boundary: Vec<BoundaryArc>,
    pub mask: RegionMask,
}

/// Result of [`PuzzleComplex::locate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Piece(usize),
    OnBoundary,
    Outside,
}

/// The string `U_0 … U_n` obtained by pulling a piece back along an orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackString {
    /// `(level, id)` of `U_0, …, U_n`.
    pub pieces: Vec<(usize, usize)>,
    /// Number of `U_k` containing the critical point.
    pub order: usize,
}

impl PullbackString {
    pub fn is_univalent(&self) -> bool {
        self.order == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PuzzleComplex {
    pub param: ParameterPoint,
    pub depth: usize,
    pub h0: f64,
    pub ray_cycle: Vec<Angle>,
    pub levels: Vec<Vec<PuzzlePiece>>,
    pub grid: Grid,
    pub closure_radius: usize,
    pub search_radius: usize,
    /// The α-cycle rays as traced for the level-0 cut.
    pub rays: Vec<RayTrace>,
    critical: Vec<Option<usize>>,
    /// Level-0 symbol per pixel (`RAY`, `EXTERIOR` for the rest).
    level0: Vec<u8>,
    /// Largest `n ≤ depth` with `G < h0/2^n`, or `EXTERIOR`.
    potential_level: Vec<u8>,
    /// Deepest level at which the pixel lies in a piece, or `NONE`.
    deepest: Vec<u8>,
    /// Piece id at `deepest`.
    leaf: Vec<u32>,
}

/// Builds the puzzle of `param` to `cfg.depth` levels.
pub fn build_puzzle(param: &ParameterPoint, cfg: &PuzzleConfig) -> Result<PuzzleComplex> {
    if !(cfg.h0 > 0.0 && cfg.h0.is_finite()) {
        return Err(Error::InvalidArgument(format!("h0 must be positive, got {}", cfg.h0)));
    }
    if cfg.depth > 60 {
        return Err(Error::InvalidArgument("depth above 60 is not supported".into()));
    }
    if cfg.resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "resolution {} is below the minimum of 8",
            cfg.resolution
        )));
    }
    let ray_cycle = alpha_ray_cycle(param, &cfg.rays)?;
    let q = ray_cycle.len();
    let c = param.c;
    let depth = cfg.depth;
    let h0 = cfg.h0;

    let half = cfg.half_width.max(equipotential_radius(c, h0) * 1.02);
    let grid = Grid::square(half, cfg.resolution)?;
    let npix = grid.len();

    let budget = depth + 64;
    let potential_level: Vec<u8> = (0..npix)
        .into_par_iter()
        .map(|i| {
            let g = green_potential_with_budget(c, grid.center_of(i), budget).value;
            potential_to_level(g, h0, depth)
        })
        .collect();

    // level-0 cut: the α-cycle rays from just outside {G < h0} down to α
    let rays: Vec<RayTrace> = ray_cycle
        .iter()
        .map(|&a| trace_external_ray_with(param, a, 1.1 * h0, 0.0, &cfg.rays))
        .collect::<Result<_>>()?;
    let mut level0 = vec![EXTERIOR; npix];
    for (i, l) in level0.iter_mut().enumerate() {
        if potential_level[i] != EXTERIOR {
            *l = 0;
        }
    }
    for ray in &rays {
        let mut poly: Vec<Complex64> = ray.samples.iter().map(|s| s.point).collect();
        poly.push(ray.landing_estimate.unwrap_or(param.alpha));
        rasterize_polyline(&grid, &poly, &mut level0);
    }
    let sector_labels = label_sectors(param, &ray_cycle, &grid, h0, &cfg.rays, &mut level0)?;
    debug_assert_eq!(sector_labels, q);

    // itineraries
    let stride = depth + 1;
    let mut itin = vec![NONE; npix * stride];
    let deepest: Vec<u8> = itin
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(i, row)| {
            let top = potential_level[i];
            if top == EXTERIOR {
                return NONE;
            }
            let mut z = grid.center_of(i);
            let mut last = NONE;
            for k in 0..=top as usize {
                let s = match grid.index_of(z) {
                    Some(j) => level0[j],
                    None => EXTERIOR,
                };
                if s == RAY || s == EXTERIOR {
                    break;
                }
                row[k] = s;
                last = k as u8;
                z = step(c, z);
            }
            last
        })
        .collect();

    // components, level by level
    let mut levels: Vec<Vec<PuzzlePiece>> = Vec::with_capacity(depth + 1);
    let mut current = vec![u32::MAX; npix];
    let mut leaf = vec![u32::MAX; npix];
    let mut level0_members: Vec<Vec<usize>> = vec![Vec::new(); q];
    for i in 0..npix {
        if deepest[i] != NONE {
            let s = itin[i * stride];
            current[i] = s as u32;
            leaf[i] = s as u32;
            level0_members[s as usize].push(i);
        }
    }
    let mut pieces0 = Vec::with_capacity(q);
    for (k, members) in level0_members.into_iter().enumerate() {
        if members.is_empty() {
            return Err(Error::RasterTooCoarse(format!("level-0 piece {k} has no pixels")));
        }
        pieces0.push(new_piece(&grid, 0, k, None, k as u8, members));
    }
    levels.push(pieces0);

    for n in 1..=depth {
        let mut next = vec![u32::MAX; npix];
        let mut pieces = Vec::new();
        let mut stack = Vec::new();
        for s in 0..npix {
            if deepest[s] == NONE || (deepest[s] as usize) < n || next[s] != u32::MAX {
                continue;
            }
            let parent = current[s];
            let sym = itin[s * stride + n];
            let id = pieces.len() as u32;
            next[s] = id;
            stack.push(s);
            let mut members = Vec::new();
            while let Some(i) = stack.pop() {
                members.push(i);
                let (ix, iy) = ((i % grid.nx) as i64, (i / grid.nx) as i64);
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        let (x, y) = (ix + dx, iy + dy);
                        if x < 0 || y < 0 || x >= grid.nx as i64 || y >= grid.ny as i64 {
                            continue;
                        }
                        let j = y as usize * grid.nx + x as usize;
                        if next[j] == u32::MAX
                            && deepest[j] != NONE
                            && deepest[j] as usize >= n
                            && current[j] == parent
                            && itin[j * stride + n] == sym
                        {
                            next[j] = id;
                            stack.push(j);
                        }
                    }
                }
            }
            members.sort_unstable();
            pieces.push(new_piece(&grid, n, id as usize, Some(parent as usize), sym, members));
        }
        for (id, p) in pieces.iter().enumerate() {
            let parent = p.parent_id.expect("levels above 0 have parents");
            levels[n - 1][parent].children_ids.push(id);
        }
        for i in 0..npix {
            if next[i] != u32::MAX {
                leaf[i] = next[i];
            }
        }
        current = next;
        levels.push(pieces);
    }
    drop(itin);

    let mut puzzle = PuzzleComplex {
        param: *param,
        depth,
        h0,
        ray_cycle,
        levels,
        grid,
        closure_radius: cfg.closure_radius,
        search_radius: cfg.search_radius,
        rays,
        critical: Vec::new(),
        level0,
        potential_level,
        deepest,
        leaf,
    };

    let zero = Complex64::new(0.0, 0.0);
    let mut critical = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        match puzzle.locate(zero, n)? {
            Location::Piece(id) => critical.push(Some(id)),
            _ => critical.push(None),
        }
    }
    if critical.iter().any(Option::is_none) {
        return Err(Error::RasterTooCoarse(
            "the critical point is not resolved inside a piece at every level".into(),
        ));
    }
    for (n, id) in critical.iter().enumerate() {
        puzzle.levels[n][id.unwrap()].is_critical = true;
    }
    puzzle.critical = critical;
    puzzle.assign_images();
    if cfg.boundary_arcs {
        puzzle.assign_boundaries(&cfg.rays);
    }
    Ok(puzzle)
}

fn new_piece(
    grid: &Grid,
    level: usize,
    id: usize,
    parent_id: Option<usize>,
    symbol: u8,
    members: Vec<usize>,
) -> PuzzlePiece {
    let mask = RegionMask::from_indices(*grid, members).cropped(0);
    PuzzlePiece {
        level,
        id,
        parent_id,
        children_ids: Vec::new(),
        is_critical: false,
        symbol,
        image_id: None,
        image_agreement: 0.0,
        angle_intervals: Vec::new(),
        boundary: Vec::new(),
        mask,
    }
}

fn potential_to_level(g: f64, h0: f64, depth: usize) -> u8 {
    if g >= h0 {
        return EXTERIOR;
    }
    let mut n = 0usize;
    let mut t = h0 * 0.5;
    while n < depth && g < t {
        n += 1;
        t *= 0.5;
    }
    n as u8
}

/// Radius of a disk containing `{G < h0}`.
fn equipotential_radius(c: Complex64, h0: f64) -> f64 {
    let mut r = h0.exp();
    loop {
        let min = (0..720)
            .map(|k| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 720.0);
                green_potential_with_budget(c, z, 64).value
            })
            .fold(f64::INFINITY, f64::min);
        if min >= h0 * 1.001 {
            return r;
        }
        r *= 1.02;
    }
}

// Marks every pixel the polyline passes through, keeping the mark 4-connected
// so that it separates 8-connected regions.
fn rasterize_polyline(grid: &Grid, poly: &[Complex64], labels: &mut [u8]) {
    let to_px = |z: Complex64| ((z.re - grid.x_min) / grid.dx, (z.im - grid.y_min) / grid.dy);
    let mark = |x: i64, y: i64, labels: &mut [u8]| {
        if x >= 0 && y >= 0 && (x as usize) < grid.nx && (y as usize) < grid.ny {
            let i = y as usize * grid.nx + x as usize;
            if labels[i] != EXTERIOR {
                labels[i] = RAY;
            }
        }
    };
    let mut prev: Option<(i64, i64)> = None;
    for w in poly.windows(2) {
        let (a, b) = (to_px(w[0]), to_px(w[1]));
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let steps = (len / 0.2).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = (a.0 + t * (b.0 - a.0)).floor() as i64;
            let y = (a.1 + t * (b.1 - a.1)).floor() as i64;
            if let Some((px, py)) = prev {
                if px != x && py != y {
                    mark(x, py, labels);
                }
            }
            mark(x, y, labels);
            prev = Some((x, y));
        }
    }
}

/// Midpoint of the counterclockwise arc from `a` to `b` (a full turn if equal).
fn mid_angle(a: Angle, b: Angle) -> Angle {
    let (an, ad) = (a.numerator() as u128, a.denominator() as u128);
    let (bn, bd) = (b.numerator() as u128, b.denominator() as u128);
    let mut num = bn * ad;
    let den = ad * bd;
    if b <= a {
        num += den;
    }
    num += an * bd;
    let den2 = 2 * den;
    let g = {
        let (mut x, mut y) = (num, den2);
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x
    };
    let (num, den) = (num / g % (den2 / g), den2 / g);
    if den <= u64::MAX as u128 {
        return Angle::new(num as u64, den as u64).expect("nonzero");
    }
    // fall back to a dyadic angle inside the arc
    let target = a.to_f64() + 0.5 * a.ccw_distance(b);
    let t = target.fract();
    Angle::new((t * (1u64 << 52) as f64) as u64, 1u64 << 52).expect("nonzero")
}

// Assigns each 8-connected component of level-0 pixels to the sector of the
// α-cycle it meets on the mid-angle ray; other components become boundary.
fn label_sectors(
    param: &ParameterPoint,
    cycle: &[Angle],
    grid: &Grid,
    h0: f64,
    rays: &RayConfig,
    level0: &mut [u8],
) -> Result<usize> {
    let q = cycle.len();
    let inside = RegionMask::from_indices(*grid, (0..level0.len()).filter(|&i| level0[i] == 0));
    let mut comp = vec![u32::MAX; level0.len()];
    let comps = inside.components();
    for (k, m) in comps.iter().enumerate() {
        let off = grid.offset_to(m.grid()).expect("component of the same lattice");
        for (ix, iy) in m.pixels() {
            let i = (iy as i64 + off.1) as usize * grid.nx + (ix as i64 + off.0) as usize;
            comp[i] = k as u32;
        }
    }
    let mut sector_of_comp: HashMap<u32, u8> = HashMap::new();
    for k in 0..q {
        let mid = mid_angle(cycle[k], cycle[(k + 1) % q]);
        let mut found = false;
        for frac in [0.5, 0.3, 0.7, 0.15, 0.85] {
            let z = ray_point(param, mid, frac * h0, rays)?;
            if let Some(i) = grid.index_of(z) {
                if comp[i] != u32::MAX {
                    sector_of_comp.insert(comp[i], k as u8);
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Err(Error::RasterTooCoarse(format!("level-0 sector {k} not resolved")));
        }
    }
    for i in 0..level0.len() {
        if level0[i] == 0 {
            level0[i] = match sector_of_comp.get(&comp[i]) {
                Some(&s) => s,
                None => RAY,
            };
        }
    }
    Ok(sector_of_comp.len())
}

impl PuzzleComplex {
    pub fn ray_cycle_len(&self) -> usize {
        self.ray_cycle.len()
    }

    pub fn pieces(&self, level: usize) -> &[PuzzlePiece] {
        &self.levels[level]
    }

    pub fn piece(&self, level: usize, id: usize) -> &PuzzlePiece {
        &self.levels[level][id]
    }

    /// Id of the critical piece `V^n(c)`.
    pub fn critical_id(&self, level: usize) -> usize {
        self.critical[level].expect("critical nest resolved at build time")
    }

    pub fn critical_piece(&self, level: usize) -> &PuzzlePiece {
        self.piece(level, self.critical_id(level))
    }

    /// The level-`to` ancestor of piece `(from, id)`.
    pub fn ancestor(&self, from: usize, id: usize, to: usize) -> usize {
        let mut id = id;
        for n in (to + 1..=from).rev() {
            id = self.levels[n][id].parent_id.expect("levels above 0 have parents");
        }
        id
    }

    /// Containment-tree path: ids of the ancestors from level 0 down to the piece.
    pub fn path(&self, level: usize, id: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..=level).map(|n| self.ancestor(level, id, n)).collect();
        out[level] = id;
        out
    }

    /// Symbols `s_0 … s_level` shared by all points of the piece.
    pub fn itinerary(&self, level: usize, id: usize) -> Vec<u8> {
        (0..=level)
            .map(|n| self.levels[n][self.ancestor(level, id, n)].symbol)
            .collect()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > self.depth {
            return Err(Error::DepthExceeded {
                requested: level,
                available: self.depth,
            });
        }
        Ok(())
    }

    /// Piece of the pixel at flat index `i`, at `level`, if any.
    fn pixel_piece(&self, i: usize, level: usize) -> Option<usize> {
        let d = self.deepest[i];
        (d != NONE && d as usize >= level)
            .then(|| self.ancestor(d as usize, self.leaf[i] as usize, level))
    }

    /// Exact level-0 symbols of `z, p_c(z), …, p_c^level(z)`, or `None` when the
    /// orbit meets the rasterized cut.
    fn point_itinerary(&self, z: Complex64, level: usize) -> Option<Vec<u8>> {
        let mut z = z;
        let mut out = Vec::with_capacity(level + 1);
        for _ in 0..=level {
            let s = self.level0[self.grid.index_of(z)?];
            if s == RAY || s == EXTERIOR {
                return None;
            }
            out.push(s);
            z = step(self.param.c, z);
        }
        Some(out)
    }

    pub fn potential_of(&self, z: Complex64) -> f64 {
        green_potential_with_budget(self.param.c, z, self.depth + 64).value
    }

    /// The level-`level` piece containing `z`.
    ///
    /// The point's own itinerary is computed exactly and matched against the
    /// pieces of nearby pixels, nearest first, up to `search_radius` pixels
    /// away. No match means the point sits on the boundary skeleton at this
    /// resolution.
    pub fn locate(&self, z: Complex64, level: usize) -> Result<Location> {
        self.check_level(level)?;
        if self.potential_of(z) >= self.h0 / 2f64.powi(level as i32) {
            return Ok(Location::Outside);
        }
        let Some((px, py)) = self.grid.pixel_of(z) else {
            return Ok(Location::Outside);
        };
        let Some(itin) = self.point_itinerary(z, level) else {
            return Ok(Location::OnBoundary);
        };
        let r = self.search_radius as i64;
        let mut offsets: Vec<(i64, i64)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .collect();
        offsets.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
        for (dx, dy) in offsets {
            let (x, y) = (px as i64 + dx, py as i64 + dy);
            if x < 0 || y < 0 || x >= self.grid.nx as i64 || y >= self.grid.ny as i64 {
                continue;
            }
            if let Some(id) = self.pixel_piece(y as usize * self.grid.nx + x as usize, level) {
                if self.itinerary(level, id) == itin {
                    return Ok(Location::Piece(id));
                }
            }
        }
        Ok(Location::OnBoundary)
    }

    /// Ids of the level-`n` pieces whose closure (within `closure_radius` pixels)
    /// contains `z`; together they make up `V^n(z)`.
    pub fn vn_neighborhood(&self, z: Complex64, n: usize) -> Result<Vec<usize>> {
        self.check_level(n)?;
        if self.locate(z, n)? == Location::Outside {
            return Err(Error::InvalidArgument(format!("{z} lies outside level {n}")));
        }
        let (px, py) = self.grid.pixel_of(z).expect("inside level implies inside grid");
        let r = self.closure_radius as i64;
        let mut ids = Vec::new();
        if let Location::Piece(id) = self.locate(z, n)? {
            ids.push(id);
        }
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (px as i64 + dx, py as i64 + dy);
                if x < 0 || y < 0 || x >= self.grid.nx as i64 || y >= self.grid.ny as i64 {
                    continue;
                }
                if let Some(id) = self.pixel_piece(y as usize * self.grid.nx + x as usize, n) {
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
            }
        }
        ids.sort_unstable();
        Ok(ids)
    }

    /// Pulls pieces back along `orbit`: `U_k = V^{terminal + n − k}(z_k)`.
    pub fn pullback_string(&self, orbit: &OrbitSegment, terminal_level: usize) -> Result<PullbackString> {
        let n = orbit.points.len().saturating_sub(1);
        self.check_level(terminal_level + n)?;
        let mut pieces = Vec::with_capacity(n + 1);
        let mut order = 0;
        for (k, &z) in orbit.points.iter().enumerate() {
            let level = terminal_level + n - k;
            match self.locate(z, level)? {
                Location::Piece(id) => {
                    if id == self.critical_id(level) {
                        order += 1;
                    }
                    pieces.push((level, id));
                }
                _ => return Err(Error::OnBoundary { index: k, level }),
            }
        }
        Ok(PullbackString { pieces, order })
    }

    /// `(max, mean)` Euclidean diameter of the level's pieces.
    pub fn diameter_stats(&self, level: usize) -> Result<(f64, f64)> {
        self.check_level(level)?;
        let d: Vec<f64> = self.levels[level].par_iter().map(|p| p.mask.diameter()).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        Ok((max, d.iter().sum::<f64>() / d.len().max(1) as f64))
    }

    /// Pixel counts `(in pieces, boundary, exterior)` at `level`.
    pub fn pixel_budget(&self, level: usize) -> (usize, usize, usize) {
        let (mut inside, mut boundary, mut exterior) = (0, 0, 0);
        for i in 0..self.grid.len() {
            let p = self.potential_level[i];
            if p == EXTERIOR || (p as usize) < level {
                exterior += 1;
            } else if self.deepest[i] != NONE && self.deepest[i] as usize >= level {
                inside += 1;
            } else {
                boundary += 1;
            }
        }
        (inside, boundary, exterior)
    }

    /// Pixels in no level-`level` piece but below the level's equipotential.
    pub fn boundary_mask(&self, level: usize) -> RegionMask {
        RegionMask::from_indices(
            self.grid,
            (0..self.grid.len()).filter(|&i| {
                let p = self.potential_level[i];
                p != EXTERIOR
                    && p as usize >= level
                    && (self.deepest[i] == NONE || (self.deepest[i] as usize) < level)
            }),
        )
    }

    /// Union of the level's piece masks on the full grid.
    pub fn level_mask(&self, level: usize) -> RegionMask {
        RegionMask::from_indices(
            self.grid,
            (0..self.grid.len())
                .filter(|&i| self.deepest[i] != NONE && self.deepest[i] as usize >= level),
        )
    }

    /// Id grid of the level: piece id per pixel, `None` outside every piece.
    pub fn label_map(&self, level: usize) -> Vec<Option<usize>> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.pixel_piece(i, level))
            .collect()
    }

    /// Records the level-`(n − 1)` piece each level-`n` piece maps onto.
    ///
    /// The image is a child of the parent's image carrying the piece's last
    /// symbol; when two siblings qualify, sample points decide.
    fn assign_images(&mut self) {
        for n in 1..=self.depth {
            let updates: Vec<(Option<usize>, f64)> = self.levels[n]
                .par_iter()
                .map(|p| {
                    let candidates: Vec<usize> = if n == 1 {
                        vec![p.symbol as usize]
                    } else {
                        let parent = &self.levels[n - 1][p.parent_id.expect("has parent")];
                        match parent.image_id {
                            Some(img) => self.levels[n - 2][img]
                                .children_ids
                                .iter()
                                .copied()
                                .filter(|&k| self.levels[n - 1][k].symbol == p.symbol)
                                .collect(),
                            None => Vec::new(),
                        }
                    };
                    self.image_of(p, n, &candidates)
                })
                .collect();
            for (p, (img, agree)) in self.levels[n].iter_mut().zip(updates) {
                p.image_id = img;
                p.image_agreement = agree;
            }
        }
    }

    fn image_of(&self, piece: &PuzzlePiece, level: usize, candidates: &[usize]) -> (Option<usize>, f64) {
        let g = piece.mask.grid();
        let pixels: Vec<(usize, usize)> = piece.mask.pixels().collect();
        let stride = (pixels.len() / 100).max(1);
        let mut counts: HashMap<usize, usize> = HashMap::new();
        let mut located = 0;
        for &(ix, iy) in pixels.iter().step_by(stride) {
            let w = step(self.param.c, g.center(ix, iy));
            if let Ok(Location::Piece(id)) = self.locate(w, level - 1) {
                located += 1;
                *counts.entry(id).or_default() += 1;
            }
        }
        let votes = |id: usize| counts.get(&id).copied().unwrap_or(0);
        let best = match candidates {
            [] => counts.iter().max_by_key(|&(&id, &n)| (n, std::cmp::Reverse(id))).map(|(&id, _)| id),
            [only] => Some(*only),
            many => many.iter().copied().max_by_key(|&id| (votes(id), std::cmp::Reverse(id))),
        };
        let agreement = match (best, located) {
            (Some(id), l) if l > 0 => votes(id) as f64 / l as f64,
            _ => 0.0,
        };
        (best, agreement)
    }

    /// Attaches external-angle intervals and boundary arcs to every piece.
    fn assign_boundaries(&mut self, rays: &RayConfig) {
        let mut angles: Vec<Angle> = self.ray_cycle.clone();
        for n in 0..=self.depth {
            if n > 0 {
                let Some(next) = angles
                    .iter()
                    .map(|a| a.preimages())
                    .collect::<Option<Vec<_>>>()
                else {
                    return;
                };
                angles = next.into_iter().flatten().collect();
            }
            angles.sort();
            angles.dedup();
            let potential = self.h0 / 2f64.powi(n as i32);
            let m = angles.len();
            let owners: Vec<Option<usize>> = (0..m)
                .into_par_iter()
                .map(|k| {
                    let mid = mid_angle(angles[k], angles[(k + 1) % m]);
                    for frac in [0.5, 0.3, 0.7] {
                        let Ok(z) = ray_point(&self.param, mid, frac * potential, rays) else {
                            continue;
                        };
                        if let Ok(Location::Piece(id)) = self.locate(z, n) {
                            return Some(id);
                        }
                    }
                    None
                })
                .collect();
            for (k, owner) in owners.into_iter().enumerate() {
                if let Some(id) = owner {
                    self.levels[n][id]
                        .angle_intervals
                        .push((angles[k], angles[(k + 1) % m]));
                }
            }
            let cycle = self.ray_cycle.clone();
            for piece in &mut self.levels[n] {
                piece.boundary = arcs_for(&piece.angle_intervals, potential, &cycle);
            }
        }
    }
}

fn ray_depth(angle: Angle, cycle: &[Angle]) -> u32 {
    let mut a = angle;
    for k in 0..64 {
        if cycle.contains(&a) {
            return k;
        }
        a = a.double();
    }
    u32::MAX
}

// Equipotential arcs in angular order, joined by the rays that bound them.
fn arcs_for(intervals: &[(Angle, Angle)], potential: f64, cycle: &[Angle]) -> Vec<BoundaryArc> {
    let mut sorted = intervals.to_vec();
    sorted.sort();
    let ray = |angle: Angle, span: (f64, f64)| match ray_depth(angle, cycle) {
        0 => BoundaryArc::Ray {
            angle,
            potential_span: span,
        },
        depth => BoundaryArc::PulledBack {
            angle,
            potential_span: span,
            depth,
        },
    };
    let mut arcs = Vec::with_capacity(3 * sorted.len());
    for (k, &(a, b)) in sorted.iter().enumerate() {
        arcs.push(BoundaryArc::Equipotential {
            potential,
            angle_span: (a, b),
        });
        arcs.push(ray(b, (potential, 0.0)));
        let next = sorted[(k + 1) % sorted.len()].0;
        arcs.push(ray(next, (0.0, potential)));
    }
    arcs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_levels() {
        assert_eq!(potential_to_level(1.5, 1.0, 10), EXTERIOR);
        assert_eq!(potential_to_level(0.6, 1.0, 10), 0);
        assert_eq!(potential_to_level(0.4, 1.0, 10), 1);
        assert_eq!(potential_to_level(0.0, 1.0, 10), 10);
    }

    #[test]
    fn midpoints() {
        let a = |p, q| Angle::new(p, q).unwrap();
        assert_eq!(mid_angle(a(1, 7), a(2, 7)), a(3, 14));
        assert_eq!(mid_angle(a(4, 7), a(1, 7)), a(6, 7));
        assert_eq!(mid_angle(a(1, 3), a(1, 3)), a(5, 6));
    }

    #[test]
    fn arcs_alternate() {
        let a = |p, q| Angle::new(p, q).unwrap();
        let cycle = [a(1, 7), a(2, 7), a(4, 7)];
        let arcs = arcs_for(&[(a(1, 7), a(2, 7))], 1.0, &cycle);
        assert_eq!(arcs.len(), 3);
        assert!(matches!(arcs[0], BoundaryArc::Equipotential { .. }));
        assert!(matches!(arcs[1], BoundaryArc::Ray { angle, .. } if angle == a(2, 7)));
        let arcs = arcs_for(&[(a(1, 14), a(1, 7))], 0.5, &cycle);
        assert!(matches!(arcs[2], BoundaryArc::PulledBack { depth: 1, .. }));
    }
}
