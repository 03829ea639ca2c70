//! Piecewise-affine microstructures on polygonal cell complexes: exact
//! elastic and interfacial energies, continuity certification, and the
//! canonical constructions (laminates, self-similar star blocks, and greedy
//! covers of star-shaped domains).

mod cover;
mod laminate;
mod star;

pub use cover::{
    cover_sampler, cover_summary, envelope_depth, greedy_cover, optimal_depth, optimal_depth_in,
    CoverSampler, CoverSummary,
};
pub use laminate::laminate;
pub use star::{
    star_best_depth, star_block, star_depth_for, star_elastic, star_surface, Triangle, RHO,
};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::algebra2d::{Mat2, UnitVec2, Vec2};
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;
use crate::wells::{WellMode, WellSet};

// ---------------------------------------------------------------------------
// Cell complexes
// ---------------------------------------------------------------------------

/// One (possibly partial) interface segment between cells, or a boundary
/// segment of the complex. Endpoints are stored geometrically because a cell
/// edge may be split where finer neighbors meet it.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub a: Vec2,
    pub b: Vec2,
    pub length: f64,
    /// Unit normal pointing from `left` towards `right`.
    pub normal: UnitVec2,
    pub left: usize,
    pub right: Option<usize>,
}

/// A conforming-up-to-hanging-nodes complex of convex CCW cells.
#[derive(Debug, Clone)]
pub struct CellComplex {
    pub vertices: Vec<Vec2>,
    pub cells: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
    diameter: f64,
}

impl CellComplex {
    pub fn cell_vertices(&self, c: usize) -> impl Iterator<Item = Vec2> + '_ {
        self.cells[c].iter().map(move |&i| self.vertices[i])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let vs: Vec<Vec2> = self.cell_vertices(c).collect();
        polygon_area(&vs)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn total_area(&self) -> f64 {
        let areas: Vec<f64> = (0..self.cells.len()).map(|c| self.cell_area(c)).collect();
        pairwise_sum(&areas)
    }
}

pub fn polygon_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    0.5 * (0..n).map(|i| vs[i].cross(vs[(i + 1) % n])).sum::<f64>()
}

/// Incremental builder with vertex deduplication and interface detection.
pub struct ComplexBuilder {
    tol: f64,
    vertices: Vec<Vec2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    cells: Vec<Vec<usize>>,
}

impl ComplexBuilder {
    /// `tol` is the absolute vertex-merge tolerance; it must be far below the
    /// smallest feature size of the cells being added.
    pub fn new(tol: f64) -> Self {
        ComplexBuilder {
            tol,
            vertices: Vec::new(),
            buckets: HashMap::new(),
            cells: Vec::new(),
        }
    }

    fn bucket_of(&self, p: Vec2) -> (i64, i64) {
        let s = (self.tol * 4.0).max(1e-300);
        ((p.x / s).floor() as i64, (p.y / s).floor() as i64)
    }

    fn add_vertex(&mut self, p: Vec2) -> usize {
        let (bx, by) = self.bucket_of(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.buckets.get(&(bx + dx, by + dy)) {
                    for &idx in list {
                        if (self.vertices[idx] - p).norm() <= self.tol {
                            return idx;
                        }
                    }
                }
            }
        }
        let idx = self.vertices.len();
        self.vertices.push(p);
        self.buckets.entry((bx, by)).or_default().push(idx);
        idx
    }

    /// Add a convex CCW cell; returns its index.
    pub fn add_cell(&mut self, poly: &[Vec2]) -> Result<usize> {
        if poly.len() < 3 {
            return Err(Error::BadPolygon("cell with fewer than 3 vertices".into()));
        }
        if polygon_area(poly) <= 0.0 {
            return Err(Error::BadPolygon("cell must be counter-clockwise".into()));
        }
        let ids: Vec<usize> = poly.iter().map(|&p| self.add_vertex(p)).collect();
        for k in 0..ids.len() {
            if ids[k] == ids[(k + 1) % ids.len()] {
                return Err(Error::DegenerateEdge(k));
            }
        }
        self.cells.push(ids);
        Ok(self.cells.len() - 1)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Detect interfaces, including partial overlaps where refinement levels
    /// meet, by sweeping collinear half-edges.
    pub fn build(self) -> Result<CellComplex> {
        let verts = self.vertices;
        let cells = self.cells;
        let mut diameter: f64 = 0.0;
        let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &verts {
            lo_x = lo_x.min(v.x);
            lo_y = lo_y.min(v.y);
            hi_x = hi_x.max(v.x);
            hi_y = hi_y.max(v.y);
        }
        if !verts.is_empty() {
            diameter = ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt();
        }
        let scale = diameter.max(1.0);
        let line_tol = 1e-9 * scale;

        // Half-edges with supporting-line keys (direction angle mod pi,
        // signed offset of the line from the origin).
        struct Half {
            theta: f64,
            offset: f64,
            t0: f64,
            t1: f64,
            plus_side: bool,
            cell: usize,
        }
        let mut halves: Vec<Half> = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            for k in 0..n {
                let p = verts[cell[k]];
                let q = verts[cell[(k + 1) % n]];
                let e = q - p;
                let len = e.norm();
                if len <= line_tol {
                    return Err(Error::DegenerateEdge(k));
                }
                let mut theta = e.angle_mod_pi();
                if theta > std::f64::consts::PI - 1e-9 {
                    theta -= std::f64::consts::PI;
                }
                let d = Vec2::from_angle(theta);
                let nrm = d.perp();
                let offset = p.dot(nrm);
                let (mut t0, mut t1) = (p.dot(d), q.dot(d));
                // The cell lies to the left of p -> q. Relative to the
                // canonical direction d, that is the +perp side when the edge
                // runs along +d.
                let plus_side = e.dot(d) > 0.0;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                halves.push(Half {
                    theta,
                    offset,
                    t0,
                    t1,
                    plus_side,
                    cell: c,
                });
            }
        }

        // Group half-edges into supporting lines: cluster by direction angle
        // first, then by signed offset within each direction class. Sorting on
        // the joint key (theta, offset) and chaining with tolerances is
        // unstable — distinct parallel lines whose angles differ only in the
        // last few bits interleave by offset and split same-line pairs apart.
        let mut order: Vec<usize> = (0..halves.len()).collect();
        order.sort_by(|&a, &b| halves[a].theta.partial_cmp(&halves[b].theta).unwrap());
        let mut edges: Vec<Edge> = Vec::new();
        let flush = |group: &[usize], edges: &mut Vec<Edge>| -> Result<()> {
            if group.is_empty() {
                return Ok(());
            }
            let theta = halves[group[0]].theta;
            let d = Vec2::from_angle(theta);
            let nrm = d.perp();
            let offset: f64 =
                group.iter().map(|&i| halves[i].offset).sum::<f64>() / group.len() as f64;
            // Elementary intervals from all endpoints on this line.
            let mut ts: Vec<f64> = Vec::with_capacity(group.len() * 2);
            for &i in group.iter() {
                ts.push(halves[i].t0);
                ts.push(halves[i].t1);
            }
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts.dedup_by(|a, b| (*a - *b).abs() <= line_tol);
            let mut pending: Option<(f64, f64, usize, Option<usize>, bool)> = None;
            for win in ts.windows(2) {
                let (ta, tb) = (win[0], win[1]);
                if tb - ta <= line_tol {
                    continue;
                }
                let tm = 0.5 * (ta + tb);
                let mut plus: Option<usize> = None;
                let mut minus: Option<usize> = None;
                for &i in group.iter() {
                    let h = &halves[i];
                    if h.t0 - line_tol <= tm && tm <= h.t1 + line_tol && h.t0 < tm && tm < h.t1 {
                        let slot = if h.plus_side { &mut plus } else { &mut minus };
                        if slot.is_some() {
                            return Err(Error::ConstructionFailed(
                                "overlapping cells share a line segment on the same side".into(),
                            ));
                        }
                        *slot = Some(h.cell);
                    }
                }
                let (left, right, from_plus) = match (plus, minus) {
                    (Some(a), b) => (a, b, true),
                    (None, Some(b)) => (b, None, false),
                    (None, None) => continue,
                };
                // Merge with the pending run when the cell pair continues.
                match &mut pending {
                    Some((_, pb, pl, pr, pp))
                        if *pl == left
                            && *pr == right
                            && *pp == from_plus
                            && (*pb - ta).abs() <= line_tol =>
                    {
                        *pb = tb;
                    }
                    _ => {
                        if let Some((pa, pb, pl, pr, pp)) = pending.take() {
                            edges.push(make_edge(d, nrm, offset, pa, pb, pl, pr, pp));
                        }
                        pending = Some((ta, tb, left, right, from_plus));
                    }
                }
            }
            if let Some((pa, pb, pl, pr, pp)) = pending.take() {
                edges.push(make_edge(d, nrm, offset, pa, pb, pl, pr, pp));
            }
            Ok(())
        };

        let mut cursor = 0;
        while cursor < order.len() {
            let mut end = cursor + 1;
            while end < order.len()
                && halves[order[end]].theta - halves[order[end - 1]].theta <= 1e-9
            {
                end += 1;
            }
            let mut cluster: Vec<usize> = order[cursor..end].to_vec();
            cluster.sort_by(|&a, &b| halves[a].offset.partial_cmp(&halves[b].offset).unwrap());
            let mut g0 = 0;
            for k in 0..cluster.len() {
                let last_in_line = k + 1 == cluster.len()
                    || halves[cluster[k + 1]].offset - halves[cluster[k]].offset > line_tol;
                if last_in_line {
                    flush(&cluster[g0..=k], &mut edges)?;
                    g0 = k + 1;
                }
            }
            cursor = end;
        }

        Ok(CellComplex {
            vertices: verts,
            cells,
            edges,
            diameter,
        })
    }
}

fn make_edge(
    d: Vec2,
    nrm: Vec2,
    offset: f64,
    t0: f64,
    t1: f64,
    left: usize,
    right: Option<usize>,
    left_is_plus: bool,
) -> Edge {
    let a = nrm * offset + d * t0;
    let b = nrm * offset + d * t1;
    // A plus-side cell (left of +d) has outward normal -perp(d).
    let n = if left_is_plus { -d.perp() } else { d.perp() };
    Edge {
        a,
        b,
        length: t1 - t0,
        normal: UnitVec2::new_raw(n),
        left,
        right,
    }
}

// ---------------------------------------------------------------------------
// Piecewise-affine fields
// ---------------------------------------------------------------------------

/// Interpretation of field values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Values are displacements; strains are symmetrized gradients.
    Displacement,
    /// Values are deformations; energies use the full gradient.
    Deformation,
}

/// A piecewise-affine field `x -> A_c x + b_c` on a cell complex.
#[derive(Debug, Clone)]
pub struct PAField {
    pub complex: CellComplex,
    pub maps: Vec<(Mat2, Vec2)>,
    pub mode: FieldMode,
}

impl PAField {
    pub fn new(complex: CellComplex, maps: Vec<(Mat2, Vec2)>, mode: FieldMode) -> Result<Self> {
        if complex.cells.len() != maps.len() {
            return Err(Error::GridMismatch(format!(
                "{} cells vs {} affine maps",
                complex.cells.len(),
                maps.len()
            )));
        }
        Ok(PAField {
            complex,
            maps,
            mode,
        })
    }

    pub fn value_in_cell(&self, c: usize, p: Vec2) -> Vec2 {
        let (a, b) = self.maps[c];
        a.apply(p) + b
    }

    pub fn build_locator(&self) -> CellLocator {
        CellLocator::new(&self.complex)
    }
}

/// Uniform-grid accelerator for point-in-cell queries.
pub struct CellLocator {
    lo: Vec2,
    inv_h: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
    tol: f64,
}

impl CellLocator {
    pub fn new(complex: &CellComplex) -> Self {
        let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &complex.vertices {
            lo_x = lo_x.min(v.x);
            lo_y = lo_y.min(v.y);
            hi_x = hi_x.max(v.x);
            hi_y = hi_y.max(v.y);
        }
        if complex.vertices.is_empty() {
            lo_x = 0.0;
            lo_y = 0.0;
            hi_x = 1.0;
            hi_y = 1.0;
        }
        let lo = Vec2::new(lo_x, lo_y);
        let hi = Vec2::new(hi_x, hi_y);
        let extent = (hi - lo).norm().max(1e-12);
        let n_cells = complex.cells.len().max(1);
        let target = (n_cells as f64).sqrt().ceil() as usize + 1;
        let nx = target.clamp(1, 512);
        let ny = nx;
        let h = ((hi.x - lo.x).max(hi.y - lo.y)).max(1e-12) / nx as f64;
        let inv_h = 1.0 / h;
        let mut bins = vec![Vec::new(); nx * ny];
        for (c, cell) in complex.cells.iter().enumerate() {
            let (mut clo_x, mut clo_y) = (f64::INFINITY, f64::INFINITY);
            let (mut chi_x, mut chi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &vi in cell {
                let v = complex.vertices[vi];
                clo_x = clo_x.min(v.x);
                clo_y = clo_y.min(v.y);
                chi_x = chi_x.max(v.x);
                chi_y = chi_y.max(v.y);
            }
            let i0 = (((clo_x - lo.x) * inv_h).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let i1 = (((chi_x - lo.x) * inv_h).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j0 = (((clo_y - lo.y) * inv_h).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let j1 = (((chi_y - lo.y) * inv_h).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for i in i0..=i1 {
                for j in j0..=j1 {
                    bins[j * nx + i].push(c as u32);
                }
            }
        }
        CellLocator {
            lo,
            inv_h,
            nx,
            ny,
            bins,
            tol: 1e-9 * extent,
        }
    }

    /// Cell containing the point, boundary-inclusive.
    pub fn locate(&self, complex: &CellComplex, p: Vec2) -> Option<usize> {
        // Clamp instead of rejecting so points exactly on the bounding box's
        // max edge land in the last bin; membership is still decided by the
        // exact per-cell test below.
        let i = (((p.x - self.lo.x) * self.inv_h).floor() as isize).clamp(0, self.nx as isize - 1);
        let j = (((p.y - self.lo.y) * self.inv_h).floor() as isize).clamp(0, self.ny as isize - 1);
        for &c in &self.bins[j as usize * self.nx + i as usize] {
            if point_in_convex(complex, c as usize, p, self.tol) {
                return Some(c as usize);
            }
        }
        None
    }

    /// Nearest vertex of the complex (used for extension outside all cells).
    pub fn nearest_vertex(&self, complex: &CellComplex, p: Vec2) -> Option<usize> {
        complex
            .vertices
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - p)
                    .norm_sq()
                    .partial_cmp(&(**b - p).norm_sq())
                    .unwrap()
            })
            .map(|(i, _)| i)
    }
}

fn point_in_convex(complex: &CellComplex, c: usize, p: Vec2, tol: f64) -> bool {
    let cell = &complex.cells[c];
    let n = cell.len();
    for k in 0..n {
        let a = complex.vertices[cell[k]];
        let b = complex.vertices[cell[(k + 1) % n]];
        if (b - a).cross(p - a) < -tol * (b - a).norm() {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Continuity and exact energy
// ---------------------------------------------------------------------------

/// Result of certifying a piecewise-affine field as continuous.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Max over interior edges of the second singular value of the gradient
    /// jump (zero iff every jump is rank-one).
    pub max_rank_residual: f64,
    /// Max over interior edges and their endpoints of the value mismatch.
    pub max_trace_mismatch: f64,
    pub interior_edges: usize,
    pub worst_edge: Option<usize>,
}

impl ContinuityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rank_residual <= tol && self.max_trace_mismatch <= tol
    }
}

/// Certify continuity across every interior interface: gradient jumps must
/// be rank-one with the interface normal and traces must agree.
pub fn check_continuity(f: &PAField) -> ContinuityReport {
    let mut rank_res: f64 = 0.0;
    let mut trace_res: f64 = 0.0;
    let mut worst = None;
    let mut count = 0usize;
    for (idx, e) in f.complex.edges.iter().enumerate() {
        let Some(right) = e.right else { continue };
        count += 1;
        let (al, bl) = f.maps[e.left];
        let (ar, br) = f.maps[right];
        let jump = al - ar;
        let (_, s2) = jump.singular_values();
        let t = (jump.apply(e.a) + bl - br)
            .norm()
            .max((jump.apply(e.b) + bl - br).norm());
        if s2.max(t) > rank_res.max(trace_res) {
            worst = Some(idx);
        }
        rank_res = rank_res.max(s2);
        trace_res = trace_res.max(t);
    }
    ContinuityReport {
        max_rank_residual: rank_res,
        max_trace_mismatch: trace_res,
        interior_edges: count,
        worst_edge: worst,
    }
}

/// Elastic and interfacial parts of the singularly perturbed energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub surface: f64,
}

impl EnergyBreakdown {
    pub const ZERO: EnergyBreakdown = EnergyBreakdown {
        elastic: 0.0,
        surface: 0.0,
    };

    pub fn total(&self, eps: f64) -> f64 {
        self.elastic + eps * self.surface
    }
}

/// Exact energy of a continuous piecewise-affine field:
/// sum of `area * dist^2(gradient, wells)` plus the interfacial measure
/// `sum of length * |gradient jump|` over interior interfaces.
pub fn exact_energy(f: &PAField, w: &WellSet) -> Result<EnergyBreakdown> {
    match (f.mode, w.mode()) {
        (FieldMode::Displacement, WellMode::Linear)
        | (FieldMode::Deformation, WellMode::Nonlinear) => {}
        _ => {
            return Err(Error::ModeMismatch(
                "field mode does not match well-set mode".into(),
            ))
        }
    }
    let report = check_continuity(f);
    let scale = f.complex.diameter().max(1.0);
    if !report.passes(1e-8 * scale) {
        return Err(Error::NotAdmissible(format!(
            "field is discontinuous: rank residual {:.3e}, trace mismatch {:.3e}",
            report.max_rank_residual, report.max_trace_mismatch
        )));
    }
    let mut elastic_terms = Vec::with_capacity(f.complex.cells.len());
    for c in 0..f.complex.cells.len() {
        let area = f.complex.cell_area(c);
        let (a, _) = f.maps[c];
        let d = match f.mode {
            FieldMode::Displacement => w.dist_strain(a.sym())?,
            FieldMode::Deformation => w.dist_gradient(a)?,
        };
        elastic_terms.push(area * d * d);
    }
    let mut surface_terms = Vec::new();
    for e in &f.complex.edges {
        if let Some(right) = e.right {
            let jump = f.maps[e.left].0 - f.maps[right].0;
            surface_terms.push(e.length * jump.frobenius_norm());
        }
    }
    Ok(EnergyBreakdown {
        elastic: pairwise_sum(&elastic_terms),
        surface: pairwise_sum(&surface_terms),
    })
}

// ---------------------------------------------------------------------------
// Convex clipping (shared by laminate and tests)
// ---------------------------------------------------------------------------

/// Clip a convex CCW polygon against the half-plane `x . n <= c`.
pub(crate) fn clip_halfplane(poly: &[Vec2], n: Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let k = poly.len();
    for i in 0..k {
        let p = poly[i];
        let q = poly[(i + 1) % k];
        let dp = p.dot(n) - c;
        let dq = q.dot(n) - c;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wells::hex_rhombic_wells;

    fn unit_square_cells() -> (CellComplex, Vec<(Mat2, Vec2)>) {
        // Two cells split by the vertical line x = 1/2.
        let mut b = ComplexBuilder::new(1e-12);
        b.add_cell(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        b.add_cell(&[
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.5, 1.0),
        ])
        .unwrap();
        let cx = b.build().unwrap();
        let maps = vec![(Mat2::ZERO, Vec2::ZERO), (Mat2::ZERO, Vec2::ZERO)];
        (cx, maps)
    }

    #[test]
    fn builder_detects_shared_edge() {
        let (cx, _) = unit_square_cells();
        let interior: Vec<&Edge> = cx.edges.iter().filter(|e| e.right.is_some()).collect();
        assert_eq!(interior.len(), 1);
        let e = interior[0];
        assert!((e.length - 1.0).abs() < 1e-12);
        assert!(
            e.normal.get().x.abs() > 0.99,
            "interface normal is horizontal"
        );
        let boundary = cx.edges.iter().filter(|e| e.right.is_none()).count();
        assert_eq!(boundary, 6);
        assert!((cx.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn builder_handles_hanging_nodes() {
        // Left: one tall cell. Right: two stacked half-height cells. The
        // shared vertical line has a hanging node at (0.5, 0.5).
        let mut b = ComplexBuilder::new(1e-12);
        b.add_cell(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        b.add_cell(&[
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.5, 0.5),
        ])
        .unwrap();
        b.add_cell(&[
            Vec2::new(0.5, 0.5),
            Vec2::new(1.0, 0.5),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.5, 1.0),
        ])
        .unwrap();
        let cx = b.build().unwrap();
        let interior: Vec<&Edge> = cx.edges.iter().filter(|e| e.right.is_some()).collect();
        // Two half-length interfaces on the split line plus the horizontal
        // interface between the stacked cells.
        assert_eq!(interior.len(), 3);
        let vertical_len: f64 = interior
            .iter()
            .filter(|e| e.normal.get().x.abs() > 0.99)
            .map(|e| e.length)
            .sum();
        assert!((vertical_len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuity_report_flags_bad_jumps() {
        let (cx, _) = unit_square_cells();
        // Full-rank jump: residual equals the second singular value.
        let maps = vec![
            (Mat2::diag(3.0, 2.0), Vec2::ZERO),
            (Mat2::ZERO, Vec2::new(1.5, 0.0)),
        ];
        let f = PAField::new(cx.clone(), maps, FieldMode::Displacement).unwrap();
        let rep = check_continuity(&f);
        assert!(
            (rep.max_rank_residual - 2.0).abs() < 1e-12,
            "sigma_2 of diag(3,2)"
        );
        assert!(!rep.passes(1e-10));

        // Rank-one jump with the interface normal and matching traces: passes.
        // A = e1 (x) e1 jumps across x = 1/2 with normal e1.
        let maps = vec![
            (Mat2::new(1.0, 0.0, 0.0, 0.0), Vec2::ZERO),
            (Mat2::ZERO, Vec2::new(0.5, 0.0)),
        ];
        let f = PAField::new(cx.clone(), maps, FieldMode::Displacement).unwrap();
        let rep = check_continuity(&f);
        assert!(rep.max_rank_residual < 1e-14);
        assert!(rep.max_trace_mismatch < 1e-14);
        assert!(rep.passes(1e-10));

        // Rank-one jump with the WRONG normal: rank residual is zero but the
        // trace mismatch catches it.
        let maps = vec![
            (Mat2::new(0.0, 1.0, 0.0, 0.0), Vec2::ZERO), // a (x) e2 jump across e1-normal edge
            (Mat2::ZERO, Vec2::ZERO),
        ];
        let f = PAField::new(cx, maps, FieldMode::Displacement).unwrap();
        let rep = check_continuity(&f);
        assert!(rep.max_rank_residual < 1e-14);
        assert!(rep.max_trace_mismatch > 0.4);
    }

    #[test]
    fn exact_energy_of_constant_strain() {
        let (cx, _) = unit_square_cells();
        let hex = hex_rhombic_wells();
        // Zero displacement on the unit square: elastic = area * dist(0, wells)^2 = 2.
        let maps = vec![(Mat2::ZERO, Vec2::ZERO), (Mat2::ZERO, Vec2::ZERO)];
        let f = PAField::new(cx.clone(), maps, FieldMode::Displacement).unwrap();
        let e = exact_energy(&f, &hex).unwrap();
        assert!((e.elastic - 2.0).abs() < 1e-12);
        assert_eq!(e.surface, 0.0);
        assert!((e.total(0.25) - 2.0).abs() < 1e-12);

        // Gradient exactly in a well: zero energy.
        let [e1, _, _] = crate::wells::hex_rhombic_strains();
        let a = e1.to_mat();
        let maps = vec![(a, Vec2::ZERO), (a, Vec2::ZERO)];
        let f = PAField::new(cx.clone(), maps, FieldMode::Displacement).unwrap();
        let e = exact_energy(&f, &hex).unwrap();
        assert!(e.elastic < 1e-24 && e.surface < 1e-12);

        // Discontinuous field is rejected.
        let maps = vec![(Mat2::diag(1.0, 1.0), Vec2::ZERO), (Mat2::ZERO, Vec2::ZERO)];
        let f = PAField::new(cx, maps, FieldMode::Displacement).unwrap();
        assert!(matches!(
            exact_energy(&f, &hex),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn energy_scales_exactly_under_dilation() {
        // For v_lambda(x) = lambda v(x / lambda): elastic scales by lambda^2,
        // surface by lambda.
        let hex = hex_rhombic_wells();
        let build = |lambda: f64| {
            let mut b = ComplexBuilder::new(1e-12 * lambda);
            b.add_cell(&[
                Vec2::new(0.0, 0.0),
                Vec2::new(0.5 * lambda, 0.0),
                Vec2::new(0.5 * lambda, lambda),
                Vec2::new(0.0, lambda),
            ])
            .unwrap();
            b.add_cell(&[
                Vec2::new(0.5 * lambda, 0.0),
                Vec2::new(lambda, 0.0),
                Vec2::new(lambda, 0.5 * lambda),
                Vec2::new(0.5 * lambda, 0.5 * lambda),
            ])
            .unwrap();
            b.add_cell(&[
                Vec2::new(0.5 * lambda, 0.5 * lambda),
                Vec2::new(lambda, 0.5 * lambda),
                Vec2::new(lambda, lambda),
                Vec2::new(0.5 * lambda, lambda),
            ])
            .unwrap();
            let cx = b.build().unwrap();
            // Continuous piecewise-affine: v = (max(x - lambda/2, 0), 0).
            let a = Mat2::new(1.0, 0.0, 0.0, 0.0);
            let maps = vec![
                (Mat2::ZERO, Vec2::ZERO),
                (a, Vec2::new(-0.5 * lambda, 0.0)),
                (a, Vec2::new(-0.5 * lambda, 0.0)),
            ];
            let f = PAField::new(cx, maps, FieldMode::Displacement).unwrap();
            exact_energy(&f, &hex).unwrap()
        };
        let e1 = build(1.0);
        for lambda in [0.5, 2.0, 3.0] {
            let el = build(lambda);
            assert!(
                (el.elastic - lambda * lambda * e1.elastic).abs()
                    <= 1e-12 * e1.elastic.max(1.0) * lambda * lambda
            );
            assert!(
                (el.surface - lambda * e1.surface).abs() <= 1e-12 * e1.surface.max(1.0) * lambda
            );
        }
    }

    #[test]
    fn locator_finds_cells() {
        let (cx, maps) = unit_square_cells();
        let f = PAField::new(cx, maps, FieldMode::Displacement).unwrap();
        let loc = f.build_locator();
        assert_eq!(loc.locate(&f.complex, Vec2::new(0.25, 0.5)), Some(0));
        assert_eq!(loc.locate(&f.complex, Vec2::new(0.75, 0.5)), Some(1));
        assert_eq!(loc.locate(&f.complex, Vec2::new(1.5, 0.5)), None);
    }
}
