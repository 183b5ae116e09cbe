//! Connected components of `{phi = L}` on a grid, with circle certificates
//! for components enclosed by the rectangles around odd critical points.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigenfunction::TorusEigenfunction;
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::oscillation::{OscillationReport, PropertyReport};

/// A grid of `nx x ny` cells on `[x_lo, x_hi] x [y_lo, y_hi]`. A wrapped
/// axis has `n` nodes and identifies the last cell edge with the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub y_lo: f64,
    pub y_hi: f64,
    pub ny: usize,
    pub wrap_x: bool,
    pub wrap_y: bool,
    /// Number of translates of this grid that tile the torus in `y`.
    pub copies: u64,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_hi - self.y_lo) / self.ny as f64
    }

    fn nodes_x(&self) -> usize {
        if self.wrap_x {
            self.nx
        } else {
            self.nx + 1
        }
    }

    fn nodes_y(&self) -> usize {
        if self.wrap_y {
            self.ny
        } else {
            self.ny + 1
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + self.dx() * i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_lo + self.dy() * j as f64
    }

    pub fn refined(&self) -> GridSpec {
        GridSpec { nx: 2 * self.nx, ny: 2 * self.ny, ..*self }
    }

    /// One period `[-pi/m, pi/m)` in `y` around the `x` window, with `y = 0`
    /// on a grid line and `ny` rows (`ny` even).
    pub fn window(x_lo: f64, x_hi: f64, nx: usize, m: u64, ny: usize) -> GridSpec {
        let p = PI / m.max(1) as f64;
        GridSpec { x_lo, x_hi, nx, y_lo: -p, y_hi: p, ny: ny + ny % 2, wrap_x: false, wrap_y: true, copies: m.max(1) }
    }

    /// The whole torus `[0, 8) x [0, 2 pi)`.
    pub fn torus(nx: usize, ny: usize) -> GridSpec {
        GridSpec { x_lo: 0.0, x_hi: 8.0, nx, y_lo: 0.0, y_hi: 2.0 * PI, ny, wrap_x: true, wrap_y: true, copies: 1 }
    }
}

/// `R_j = [eta_{j+1}, eta_j] x [-pi/(2m), pi/(2m)]` around `(xi_j, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub j: usize,
    pub xi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_half: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub cells: Vec<(u32, u32)>,
    /// Cell-edge bounding box; meaningless along an axis it wraps around.
    pub bbox: (f64, f64, f64, f64),
    pub wraps: bool,
    /// Index `j` of the rectangle that contains the component, if any.
    pub rectangle: Option<usize>,
    pub circle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetComponents {
    pub grid: GridSpec,
    pub level: f64,
    pub marked_cells: usize,
    pub components: Vec<Component>,
    pub circle_flags: Vec<bool>,
    pub n_components: usize,
    pub n_circles: usize,
    /// `n_components * copies`.
    pub torus_count: u64,
    /// Circle components of distinct rectangles share no cell.
    pub disjoint: bool,
    /// Rectangles holding more than one component (no circle flagged there).
    pub crowded_rectangles: Vec<usize>,
    /// Component and circle counts on the refined grid, when computed.
    pub refined: Option<(usize, usize)>,
}

/// Rectangles `R_j` for odd `j` in `j0 ..= N-2` where every property holds,
/// from the interlaced `xi_j` and `eta_j` of the analysis.
pub fn circle_rectangles(report: &OscillationReport, props: &PropertyReport, m: u64) -> Vec<Rectangle> {
    let etas: Vec<f64> = report.level_crossings.iter().filter(|c| c.transversal).map(|c| c.x).collect();
    let failing: HashSet<usize> = props.failures.iter().map(|f| f.1).collect();
    let nodes = &report.nodes;
    let y_half = PI / (2.0 * m.max(1) as f64);
    let mut out = Vec::new();
    for j in (props.j0..=props.last).filter(|j| j % 2 == 1 && !failing.contains(j)) {
        let cps = report.criticals_in(nodes[j], nodes[j - 1]);
        let [c] = cps.as_slice() else { continue };
        let above = etas.iter().copied().filter(|&e| e > c.x).fold(f64::INFINITY, f64::min);
        let below = etas.iter().copied().filter(|&e| e < c.x).fold(f64::NEG_INFINITY, f64::max);
        if above.is_finite() && below.is_finite() {
            out.push(Rectangle { j, xi: c.x, x_lo: below, x_hi: above, y_half });
        }
    }
    out
}

/// `phi - level` on every node, evaluated column by column.
fn node_values(phi: &TorusEigenfunction, level: f64, g: &GridSpec) -> Result<Vec<Vec<f64>>> {
    (0..g.nodes_x())
        .into_par_iter()
        .map(|i| {
            let x = g.x(i);
            (0..g.nodes_y()).map(|j| phi.offset(x, g.y(j), level)).collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Sign changes of `phi - level` along `points`, counting zero as positive.
fn crossings(phi: &TorusEigenfunction, level: f64, points: &[(f64, f64)]) -> Result<usize> {
    let signs = points.iter().map(|&(x, y)| Ok(phi.offset(x, y, level)? >= 0.0)).collect::<Result<Vec<bool>>>()?;
    Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Odd number of crossings on each of the four axis rays from the center of
/// `r` to the snapped boundary `(lo, hi, y_lo, y_hi)`, sampled at grid
/// spacing in between.
fn separates_center(
    phi: &TorusEigenfunction,
    level: f64,
    r: &Rectangle,
    bounds: (f64, f64, f64, f64),
    g: &GridSpec,
) -> Result<bool> {
    let (dx, dy) = (g.dx(), g.dy());
    let ray = |to: f64, from: f64, step: f64| -> Vec<f64> {
        let dir = (to - from).signum();
        let n = ((to - from).abs() / step).ceil() as usize;
        let mut v: Vec<f64> = (0..n).map(|k| from + dir * step * k as f64).collect();
        v.push(to);
        v
    };
    let rays: [Vec<(f64, f64)>; 4] = [
        ray(bounds.1, r.xi, dx).into_iter().map(|x| (x, 0.0)).collect(),
        ray(bounds.0, r.xi, dx).into_iter().map(|x| (x, 0.0)).collect(),
        ray(bounds.3, 0.0, dy).into_iter().map(|y| (r.xi, y)).collect(),
        ray(bounds.2, 0.0, dy).into_iter().map(|y| (r.xi, y)).collect(),
    ];
    for pts in &rays {
        if crossings(phi, level, pts)? % 2 == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Marks the cells whose corners straddle `level`, joins them by
/// 4-connectivity (wrapping wrapped axes) and certifies circles in the
/// given rectangles, whose edges are snapped outward to grid lines.
pub fn count_level_components(
    phi: &TorusEigenfunction,
    level: f64,
    grid: &GridSpec,
    rects: &[Rectangle],
) -> Result<LevelSetComponents> {
    if grid.nx < 2 || grid.ny < 2 {
        return Err(Error::SpecViolation("level-set grid needs at least 2 x 2 cells".into()));
    }
    let vals = node_values(phi, level, grid)?;
    let (nnx, nny) = (grid.nodes_x(), grid.nodes_y());
    let above = |i: usize, j: usize| vals[i % nnx][j % nny] >= 0.0;
    let (cx, cy) = (grid.nx, grid.ny);
    let marked: Vec<bool> = (0..cx * cy)
        .map(|c| {
            let (i, j) = (c / cy, c % cy);
            let s = above(i, j);
            s != above(i + 1, j) || s != above(i, j + 1) || s != above(i + 1, j + 1)
        })
        .collect();
    let mut uf = UnionFind::<usize>::new(cx * cy);
    for i in 0..cx {
        for j in 0..cy {
            let c = i * cy + j;
            if !marked[c] {
                continue;
            }
            if i + 1 < cx || grid.wrap_x {
                let n = ((i + 1) % cx) * cy + j;
                if marked[n] {
                    uf.union(c, n);
                }
            }
            if j + 1 < cy || grid.wrap_y {
                let n = i * cy + (j + 1) % cy;
                if marked[n] {
                    uf.union(c, n);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(u32, u32)>> = BTreeMap::new();
    for c in (0..cx * cy).filter(|&c| marked[c]) {
        groups.entry(uf.find(c)).or_default().push(((c / cy) as u32, (c % cy) as u32));
    }
    let (dx, dy) = (grid.dx(), grid.dy());
    let snap = |r: &Rectangle| {
        let lo = grid.x_lo + ((r.x_lo - grid.x_lo) / dx).floor() * dx;
        let hi = grid.x_lo + ((r.x_hi - grid.x_lo) / dx).ceil() * dx;
        let yl = grid.y_lo + ((-r.y_half - grid.y_lo) / dy).floor() * dy;
        let yh = grid.y_lo + ((r.y_half - grid.y_lo) / dy).ceil() * dy;
        (lo, hi, yl, yh)
    };
    let mut components: Vec<Component> = groups
        .into_values()
        .enumerate()
        .map(|(id, cells)| {
            let mut bbox = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            let (mut at_x0, mut at_x1, mut at_y0, mut at_y1) = (false, false, false, false);
            for &(i, j) in &cells {
                let (i, j) = (i as usize, j as usize);
                bbox.0 = bbox.0.min(grid.x(i));
                bbox.1 = bbox.1.max(grid.x(i + 1));
                bbox.2 = bbox.2.min(grid.y(j));
                bbox.3 = bbox.3.max(grid.y(j + 1));
                at_x0 |= i == 0;
                at_x1 |= i + 1 == cx;
                at_y0 |= j == 0;
                at_y1 |= j + 1 == cy;
            }
            let wraps = (grid.wrap_x && at_x0 && at_x1) || (grid.wrap_y && at_y0 && at_y1);
            Component { id, cells, bbox, wraps, rectangle: None, circle: false }
        })
        .collect();
    let mut crowded = Vec::new();
    for r in rects {
        let (lo, hi, yl, yh) = snap(r);
        let tol = 1e-9 * dx.min(dy);
        let inside: Vec<usize> = components
            .iter()
            .filter(|c| {
                !c.wraps && c.bbox.0 >= lo - tol && c.bbox.1 <= hi + tol && c.bbox.2 >= yl - tol && c.bbox.3 <= yh + tol
            })
            .map(|c| c.id)
            .collect();
        for &id in &inside {
            components[id].rectangle = Some(r.j);
        }
        match inside.as_slice() {
            [id] => components[*id].circle = separates_center(phi, level, r, (lo, hi, yl, yh), grid)?,
            [] => {}
            _ => crowded.push(r.j),
        }
    }
    let circles: Vec<&Component> = components.iter().filter(|c| c.circle).collect();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut disjoint = true;
    for c in &circles {
        for cell in &c.cells {
            disjoint &= seen.insert(*cell);
        }
    }
    let n_components = components.len();
    let n_circles = circles.len();
    Ok(LevelSetComponents {
        grid: *grid,
        level,
        marked_cells: marked.iter().filter(|m| **m).count(),
        circle_flags: components.iter().map(|c| c.circle).collect(),
        components,
        n_components,
        n_circles,
        torus_count: n_components as u64 * grid.copies,
        disjoint,
        crowded_rectangles: crowded,
        refined: None,
    })
}

/// [`count_level_components`] on `grid` and on its 2x refinement; fails
/// with `UnderResolved` if the component or circle count changes.
pub fn count_with_refinement(
    phi: &TorusEigenfunction,
    level: f64,
    grid: &GridSpec,
    rects: &[Rectangle],
) -> Result<LevelSetComponents> {
    let mut coarse = count_level_components(phi, level, grid, rects)?;
    let fine = count_level_components(phi, level, &grid.refined(), rects)?;
    coarse.refined = Some((fine.n_components, fine.n_circles));
    if fine.n_components != coarse.n_components || fine.n_circles != coarse.n_circles {
        return Err(Error::UnderResolved { coarse: coarse.n_components, fine: fine.n_components });
    }
    Ok(coarse)
}

/// One row per marked cell: `component, ix, iy, x, y, circle`, with the
/// cell center as `(x, y)`.
pub fn levelset_table(ls: &LevelSetComponents) -> CsvTable {
    let mut t = CsvTable::new(&["component", "ix", "iy", "x", "y", "circle"]);
    let g = &ls.grid;
    for c in &ls.components {
        for &(i, j) in &c.cells {
            let x = g.x(i as usize) + 0.5 * g.dx();
            let y = g.y(j as usize) + 0.5 * g.dy();
            t.push(vec![c.id as f64, i as f64, j as f64, x, y, if c.circle { 1.0 } else { 0.0 }]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::smooth_kit::ProfileFunction;
    use crate::sturm_liouville::AnalyticSolution;
    use crate::torus::eigenfunction::{Phase, ResidualReport};

    fn lifted<F: Fn(f64) -> [f64; 3] + Sync + Send + 'static>(f: F, m: u64, lo: f64, hi: f64) -> TorusEigenfunction {
        TorusEigenfunction {
            m,
            lambda: 0.0,
            phase: Phase::Cos,
            level: 0.0,
            x_star: 0.0,
            q: ProfileFunction::constant(1.0),
            profile: Arc::new(AnalyticSolution { f, lo, hi, samples: 1000 }),
            residual: ResidualReport { max_residual: 0.0, max_phi: 0.0, relative: 0.0, separation_defect: 0.0, points: 0, worst_x: 0.0 },
        }
    }

    fn sine() -> TorusEigenfunction {
        let a = PI / 4.0;
        lifted(move |x: f64| [(a * x).sin(), a * (a * x).cos(), -a * a * (a * x).sin()], 0, 0.0, 8.0)
    }

    #[test]
    fn sine_zero_set_is_two_vertical_circles() {
        let phi = sine();
        let ls = count_with_refinement(&phi, 0.0, &GridSpec::torus(64, 16), &[]).unwrap();
        assert_eq!(ls.n_components, 2);
        assert!(ls.components.iter().all(|c| c.wraps));
        assert_eq!(ls.refined, Some((2, 0)));
        assert_eq!(levelset_table(&ls).rows.len(), ls.marked_cells);
    }

    #[test]
    fn level_above_maximum_is_empty() {
        let ls = count_level_components(&sine(), 5.0, &GridSpec::torus(64, 16), &[]).unwrap();
        assert_eq!(ls.n_components, 0);
    }

    #[test]
    fn bumps_give_one_circle_per_rectangle() {
        // F = 1 + 0.1 cos(x) near x in (-pi, 3 pi): level 1.05 cuts a blob
        // around each maximum of F cos(y) at y = 0
        let phi = lifted(|x: f64| [1.0 + 0.1 * x.cos(), -0.1 * x.sin(), -0.1 * x.cos()], 1, -4.0, 11.0);
        let g = GridSpec::window(-3.0, 9.0, 240, 1, 64);
        let xi = [0.0, 2.0 * PI];
        let eta = (0.5f64).acos();
        let rects: Vec<Rectangle> = xi
            .iter()
            .enumerate()
            .map(|(k, &c)| Rectangle { j: 2 * k + 1, xi: c, x_lo: c - eta - 0.2, x_hi: c + eta + 0.2, y_half: PI / 2.0 })
            .collect();
        let ls = count_with_refinement(&phi, 1.05, &g, &rects).unwrap();
        assert_eq!(ls.n_components, 2);
        assert_eq!(ls.n_circles, 2);
        assert!(ls.disjoint);
    }
}
