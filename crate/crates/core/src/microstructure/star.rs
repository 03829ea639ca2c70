//! Self-similar star blocks: zero-boundary-data displacement fields on
//! equilateral triangles whose gradients live in the three linear variants
//! away from a geometrically shrinking core, built from nested rings of six
//! triangular cells.
//!
//! The ring geometry contracts by the factor `RHO = 2 - sqrt(3)` per level.
//! With depth `N` rings on a triangle of side `s`, the exact energies are
//!
//! ```text
//! elastic(N, s) = (sqrt(3)/2) * RHO^(2N) * s^2      (core misfit only)
//! surface(N, s) = 6 s (sqrt(6) + (1 - sqrt(6)) RHO^N)
//! ```
//!
//! so interfacial increments per added level form an exact geometric series
//! with ratio `RHO` while the core misfit decays like `RHO^(2N)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra2d::{Mat2, Vec2};
use crate::error::{Error, Result};
use crate::microstructure::{polygon_area, ComplexBuilder, FieldMode, PAField};
use crate::numerics::least_squares;
use crate::wells::{hex_rhombic_strains, WellMode, WellSet};

/// Contraction factor of the nested rings: `2 - sqrt(3)`.
pub const RHO: f64 = 0.267_949_192_431_122_7;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A non-degenerate counter-clockwise triangle.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    v: [Vec2; 3],
}

impl Triangle {
    pub fn new(v: [Vec2; 3]) -> Result<Self> {
        if v.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("triangle vertex"));
        }
        let area = polygon_area(&v);
        let scale = v.iter().map(|p| p.norm()).fold(0.0f64, f64::max).max(1.0);
        if area <= 1e-14 * scale * scale {
            return Err(Error::BadPolygon(
                "triangle must be counter-clockwise with positive area".into(),
            ));
        }
        Ok(Triangle { v })
    }

    pub fn vertices(&self) -> &[Vec2; 3] {
        &self.v
    }

    pub fn centroid(&self) -> Vec2 {
        (self.v[0] + self.v[1] + self.v[2]) * (1.0 / 3.0)
    }

    pub fn side(&self) -> f64 {
        let s01 = (self.v[1] - self.v[0]).norm();
        let s12 = (self.v[2] - self.v[1]).norm();
        let s20 = (self.v[0] - self.v[2]).norm();
        (s01 + s12 + s20) / 3.0
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.v)
    }
}

// ---------------------------------------------------------------------------
// Canonical solution (circumradius 1, vertices at 105, 225, 345 degrees)
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub(crate) struct CanonEdge {
    pub p: Vec2,
    pub q: Vec2,
    pub left: usize,
    pub right: Option<usize>,
}

/// Solved canonical star block at a given depth.
#[derive(Debug)]
pub(crate) struct CanonicalStar {
    /// Cell vertex lists (all CCW) and the linear variant (None = relaxed core).
    pub cells: Vec<(Vec<Vec2>, Option<usize>)>,
    /// Affine maps per cell: value = A x + b.
    pub maps: Vec<(Mat2, Vec2)>,
    pub edges: Vec<CanonEdge>,
}

fn canon_vertices() -> [Vec2; 3] {
    [
        Vec2::from_angle(105f64.to_radians()),
        Vec2::from_angle(225f64.to_radians()),
        Vec2::from_angle(345f64.to_radians()),
    ]
}

impl CanonicalStar {
    /// Index of the cell containing a canonical point (core as fallback).
    pub fn locate(&self, p: Vec2) -> usize {
        for (c, (verts, _)) in self.cells.iter().enumerate() {
            if point_in_tri(verts, p) {
                return c;
            }
        }
        self.cells.len() - 1
    }

    pub fn eval(&self, cell: usize, p: Vec2) -> Vec2 {
        let (a, b) = self.maps[cell];
        a.apply(p) + b
    }
}

fn point_in_tri(v: &[Vec2], p: Vec2) -> bool {
    debug_assert_eq!(v.len(), 3);
    let tol = 1e-12;
    for k in 0..3 {
        let a = v[k];
        let b = v[(k + 1) % 3];
        if (b - a).cross(p - a) < -tol * (b - a).norm() {
            return false;
        }
    }
    true
}

/// Six ring cells per level in a fixed order; variants are pinned by the
/// interface directions of the hexagonal-to-rhombic variants.
const RING_VARIANTS: [usize; 6] = [0, 1, 2, 0, 1, 2];

fn ring_cells(rings: &[[Vec2; 3]], level: usize) -> [[Vec2; 3]; 6] {
    let o = rings[level];
    let i = rings[level + 1];
    [
        [o[1], o[2], i[0]], // outer-edge cell opposite vertex 0
        [o[2], o[0], i[1]], // outer-edge cell opposite vertex 1
        [o[0], o[1], i[2]], // outer-edge cell opposite vertex 2
        [o[0], i[2], i[1]], // vertex fan at vertex 0
        [o[1], i[0], i[2]], // vertex fan at vertex 1
        [o[2], i[1], i[0]], // vertex fan at vertex 2
    ]
}

fn build_canonical(depth: usize) -> Result<CanonicalStar> {
    assert!(depth >= 1);
    let v = canon_vertices();
    let mut rings: Vec<[Vec2; 3]> = Vec::with_capacity(depth + 1);
    let mut scale = 1.0f64;
    for _ in 0..=depth {
        rings.push([v[0] * scale, v[1] * scale, v[2] * scale]);
        scale *= -RHO;
    }

    let mut cells: Vec<(Vec<Vec2>, Option<usize>)> = Vec::with_capacity(6 * depth + 1);
    for level in 0..depth {
        for (k, tri) in ring_cells(&rings, level).iter().enumerate() {
            debug_assert!(
                polygon_area(tri) > 0.0,
                "ring cells remain CCW at every level"
            );
            cells.push((tri.to_vec(), Some(RING_VARIANTS[k])));
        }
    }
    let core = rings[depth];
    debug_assert!(polygon_area(&core) > 0.0);
    cells.push((core.to_vec(), None));
    let core_idx = 6 * depth;

    // Interfaces: per level, six spokes between edge cells and vertex fans;
    // between levels, the fan's inner edge merges with the next level's
    // outer-edge cell (or the core at the last level). The outer boundary
    // carries zero displacement.
    let mut edges: Vec<CanonEdge> = Vec::new();
    for level in 0..depth {
        let base = 6 * level;
        let o = rings[level];
        let i = rings[level + 1];
        let spokes = [
            (o[2], i[0], base, base + 5), // edge cell 0 | fan at vertex 2
            (o[1], i[0], base, base + 4), // edge cell 0 | fan at vertex 1
            (o[2], i[1], base + 1, base + 5),
            (o[0], i[1], base + 1, base + 3),
            (o[0], i[2], base + 2, base + 3),
            (o[1], i[2], base + 2, base + 4),
        ];
        for (p, q, l, r) in spokes {
            edges.push(CanonEdge {
                p,
                q,
                left: l,
                right: Some(r),
            });
        }
        let next = if level + 1 < depth {
            [6 * (level + 1), 6 * (level + 1) + 1, 6 * (level + 1) + 2]
        } else {
            [core_idx; 3]
        };
        edges.push(CanonEdge {
            p: i[1],
            q: i[2],
            left: base + 3,
            right: Some(next[0]),
        });
        edges.push(CanonEdge {
            p: i[2],
            q: i[0],
            left: base + 4,
            right: Some(next[1]),
        });
        edges.push(CanonEdge {
            p: i[0],
            q: i[1],
            left: base + 5,
            right: Some(next[2]),
        });
    }
    let o = rings[0];
    edges.push(CanonEdge {
        p: o[1],
        q: o[2],
        left: 0,
        right: None,
    });
    edges.push(CanonEdge {
        p: o[2],
        q: o[0],
        left: 1,
        right: None,
    });
    edges.push(CanonEdge {
        p: o[0],
        q: o[1],
        left: 2,
        right: None,
    });

    // Least squares for the remaining per-cell freedoms (skew coefficient
    // and translation): A_c = E_c + w_c J, value = A_c x + b_c. Continuity
    // at both endpoints of every interface, zero trace on the boundary.
    let strains = hex_rhombic_strains();
    let e_of = |c: usize| -> Mat2 {
        match cells[c].1 {
            Some(j) => strains[j].to_mat(),
            None => Mat2::ZERO,
        }
    };
    let ncells = cells.len();
    let n_unknowns = 3 * ncells;
    let m_rows = 4 * edges.len();
    let mut a = vec![0.0f64; m_rows * n_unknowns];
    let mut rhs = vec![0.0f64; m_rows];
    let mut row = 0;
    for e in &edges {
        for pt in [e.p, e.q] {
            let jp = Mat2::J.apply(pt);
            for comp in 0..2 {
                let r = row * n_unknowns;
                let jpc = if comp == 0 { jp.x } else { jp.y };
                a[r + 3 * e.left] = jpc;
                a[r + 3 * e.left + 1 + comp] = 1.0;
                let el = e_of(e.left).apply(pt);
                let elc = if comp == 0 { el.x } else { el.y };
                match e.right {
                    Some(right) => {
                        a[r + 3 * right] = -jpc;
                        a[r + 3 * right + 1 + comp] = -1.0;
                        let er = e_of(right).apply(pt);
                        let erc = if comp == 0 { er.x } else { er.y };
                        rhs[row] = -(elc - erc);
                    }
                    None => {
                        rhs[row] = -elc;
                    }
                }
                row += 1;
            }
        }
    }
    let (x, residual) = least_squares(m_rows, n_unknowns, &a, &rhs)?;
    if residual > 1e-9 {
        return Err(Error::ConstructionFailed(format!(
            "ring construction is not exactly compatible at depth {depth}: residual {residual:.3e}"
        )));
    }
    let maps: Vec<(Mat2, Vec2)> = (0..ncells)
        .map(|c| {
            let w = x[3 * c];
            let b = Vec2::new(x[3 * c + 1], x[3 * c + 2]);
            (e_of(c) + Mat2::J * w, b)
        })
        .collect();
    Ok(CanonicalStar { cells, maps, edges })
}

pub(crate) fn canonical_star(depth: usize) -> Result<Arc<CanonicalStar>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CanonicalStar>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(found) = cache.lock().unwrap().get(&depth) {
        return Ok(found.clone());
    }
    let built = Arc::new(build_canonical(depth)?);
    cache.lock().unwrap().insert(depth, built.clone());
    Ok(built)
}

// ---------------------------------------------------------------------------
// Placement on a physical triangle
// ---------------------------------------------------------------------------

/// Similarity (optionally with a reflection) carrying the canonical frame
/// onto a physical equilateral triangle: `x = z0 + sigma * G x'`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StarPlacement {
    pub z0: Vec2,
    pub sigma: f64,
    pub g: Mat2,
}

impl StarPlacement {
    pub fn to_canonical(&self, x: Vec2) -> Vec2 {
        self.g.transpose().apply(x - self.z0) * (1.0 / self.sigma)
    }

    pub fn to_physical(&self, x: Vec2) -> Vec2 {
        self.z0 + self.g.apply(x) * self.sigma
    }

    /// Push an affine map `x' -> A' x' + b'` of the canonical displacement
    /// field forward to the physical frame.
    pub fn push_map(&self, a: Mat2, b: Vec2) -> (Mat2, Vec2) {
        let a_phys = self.g * a * self.g.transpose();
        let b_phys = self.g.apply(b) * self.sigma - a_phys.apply(self.z0);
        (a_phys, b_phys)
    }

    /// Physical displacement value from a canonical map.
    pub fn push_value(&self, v_canon: Vec2) -> Vec2 {
        self.g.apply(v_canon) * self.sigma
    }
}

fn angle_dist_mod(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

/// Find the placement for an equilateral triangle, or explain why its
/// orientation admits no compatible construction.
pub(crate) fn star_placement(tri: &Triangle) -> Result<StarPlacement> {
    let z0 = tri.centroid();
    let radii: Vec<f64> = tri.vertices().iter().map(|v| (*v - z0).norm()).collect();
    let sigma = (radii[0] + radii[1] + radii[2]) / 3.0;
    for r in &radii {
        if (r - sigma).abs() > 1e-9 * sigma {
            return Err(Error::NotAdmissible(
                "construction requires an equilateral triangle".into(),
            ));
        }
    }
    let alpha = (tri.vertices()[0] - z0).angle();
    let deg = alpha.to_degrees();
    let tol_deg = 1e-7;
    if angle_dist_mod(deg - 45.0, 60.0) <= tol_deg {
        // Direct class: rotate the canonical frame by a multiple of 60 deg.
        let beta = alpha - 105f64.to_radians();
        Ok(StarPlacement {
            z0,
            sigma,
            g: Mat2::rotation(beta),
        })
    } else if angle_dist_mod(deg - 15.0, 60.0) <= tol_deg {
        // Mirrored class: reflect across the x-axis, then rotate.
        let beta = alpha - 255f64.to_radians();
        let g = Mat2::rotation(beta) * Mat2::diag(1.0, -1.0);
        Ok(StarPlacement { z0, sigma, g })
    } else {
        Err(Error::IncompatibleOrientation(format!(
            "triangle vertex direction {:.4} deg from the centroid is not admissible; \
             vertex directions must lie at 45 + 60k deg (direct) or 15 + 60k deg (mirrored)",
            deg.rem_euclid(360.0)
        )))
    }
}

fn require_hex_wells(wells: &WellSet) -> Result<()> {
    if wells.mode() != WellMode::Linear {
        return Err(Error::ModeMismatch(
            "star construction requires the linear three-variant wells".into(),
        ));
    }
    let strains = wells.linear_strains()?;
    let hex = hex_rhombic_strains();
    if strains.len() != 3
        || strains
            .iter()
            .zip(hex.iter())
            .any(|(a, b)| (*a - *b).frobenius_norm() > 1e-10)
    {
        return Err(Error::NotAdmissible(
            "star construction is specific to the hexagonal-to-rhombic variants".into(),
        ));
    }
    Ok(())
}

/// Build the depth-`N` star construction on an equilateral triangle with an
/// admissible orientation, as a continuous piecewise-affine displacement
/// field vanishing on the triangle boundary.
pub fn star_block(tri: &Triangle, depth: usize, wells: &WellSet) -> Result<PAField> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "star depth must be at least 1".into(),
        ));
    }
    require_hex_wells(wells)?;
    let placement = star_placement(tri)?;
    let sigma = placement.sigma;
    if RHO.powi(depth as i32) * sigma <= 1e5 * 1e-12 * (2.0 * sigma) {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} is too deep to resolve distinct core vertices in floating point"
        )));
    }
    let canon = canonical_star(depth)?;

    let mut builder = ComplexBuilder::new(1e-12 * 2.0 * sigma);
    let mut maps: Vec<(Mat2, Vec2)> = Vec::with_capacity(canon.cells.len());
    for (c, (verts, _)) in canon.cells.iter().enumerate() {
        let mut phys: Vec<Vec2> = verts.iter().map(|&p| placement.to_physical(p)).collect();
        if polygon_area(&phys) < 0.0 {
            phys.reverse();
        }
        builder.add_cell(&phys)?;
        let (a, b) = canon.maps[c];
        maps.push(placement.push_map(a, b));
    }
    let complex = builder.build()?;
    let field = PAField::new(complex, maps, FieldMode::Displacement)?;

    // Certify the transformed instance: continuity across every recorded
    // interface and zero trace on the outer boundary.
    let tol = 1e-9 * (1.0 + sigma * (1.0 + depth as f64));
    let mut worst = 0.0f64;
    for e in &canon.edges {
        for pt in [e.p, e.q] {
            let x = placement.to_physical(pt);
            let (al, bl) = field.maps[e.left];
            let vl = al.apply(x) + bl;
            let v = match e.right {
                Some(r) => {
                    let (ar, br) = field.maps[r];
                    (vl - (ar.apply(x) + br)).norm()
                }
                None => vl.norm(),
            };
            worst = worst.max(v);
        }
    }
    if worst > tol {
        return Err(Error::ConstructionFailed(format!(
            "transformed construction failed certification: residual {worst:.3e} > {tol:.3e}"
        )));
    }
    Ok(field)
}

// ---------------------------------------------------------------------------
// Closed-form energies and depth selection
// ---------------------------------------------------------------------------

/// Exact elastic energy of the depth-`N` block on a triangle of side `s`:
/// only the core carries misfit, at energy density 2 over its area.
pub fn star_elastic(depth: usize, side: f64) -> f64 {
    (SQRT3 / 2.0) * RHO.powi(2 * depth as i32) * side * side
}

/// Exact interfacial measure of the depth-`N` block on side `s`.
pub fn star_surface(depth: usize, side: f64) -> f64 {
    let sqrt6 = 6.0f64.sqrt();
    6.0 * side * (sqrt6 + (1.0 - sqrt6) * RHO.powi(depth as i32))
}

/// Smallest depth whose core misfit is at most `eps * side`, and at least 1.
pub fn star_depth_for(eps: f64, side: f64) -> usize {
    if !(eps > 0.0) || !(side > 0.0) {
        return 1;
    }
    let need = (SQRT3 * side / (2.0 * eps)).ln() / (2.0 * (1.0 / RHO).ln());
    need.ceil().max(1.0) as usize
}

/// Depth minimizing the exact total `elastic + eps * surface`, with the
/// minimizing total.
pub fn star_best_depth(eps: f64, side: f64) -> (usize, f64) {
    let cap = star_depth_for(eps, side) + 4;
    let mut best = (1usize, f64::INFINITY);
    for n in 1..=cap {
        let total = star_elastic(n, side) + eps * star_surface(n, side);
        if total < best.1 {
            best = (n, total);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{check_continuity, exact_energy};
    use crate::wells::hex_rhombic_wells;

    fn canonical_triangle(side: f64) -> Triangle {
        let r = side / SQRT3;
        Triangle::new([
            Vec2::from_angle(105f64.to_radians()) * r,
            Vec2::from_angle(225f64.to_radians()) * r,
            Vec2::from_angle(345f64.to_radians()) * r,
        ])
        .unwrap()
    }

    #[test]
    fn canonical_solution_matches_closed_form_coefficients() {
        let canon = canonical_star(3).unwrap();
        // Ring level l: edge cells carry skew 1 - sqrt(3) l, vertex fans
        // carry 1 - sqrt(3)(l + 1); the core carries -sqrt(3) N.
        for level in 0..3 {
            for k in 0..6 {
                let (a, _) = canon.maps[6 * level + k];
                let w = a.skew_scalar();
                let expect = if k < 3 {
                    1.0 - SQRT3 * level as f64
                } else {
                    1.0 - SQRT3 * (level as f64 + 1.0)
                };
                assert!(
                    (w - expect).abs() < 1e-9,
                    "level {level} cell {k}: skew {w} vs {expect}"
                );
            }
        }
        let (a_core, _) = canon.maps[6 * 3];
        assert!((a_core.skew_scalar() - (-SQRT3 * 3.0)).abs() < 1e-9);
        // The core gradient is pure skew: symmetric part vanishes.
        assert!(a_core.sym().frobenius_norm() < 1e-9);
    }

    #[test]
    fn star_block_is_continuous_and_matches_closed_forms() {
        let wells = hex_rhombic_wells();
        for depth in 1..=5 {
            let tri = canonical_triangle(SQRT3);
            let f = star_block(&tri, depth, &wells).unwrap();
            assert_eq!(f.complex.cells.len(), 6 * depth + 1);
            let rep = check_continuity(&f);
            assert!(
                rep.passes(1e-10),
                "depth {depth}: rank {:.3e} trace {:.3e}",
                rep.max_rank_residual,
                rep.max_trace_mismatch
            );
            let e = exact_energy(&f, &wells).unwrap();
            let s = tri.side();
            assert!(
                (e.elastic - star_elastic(depth, s)).abs()
                    <= 1e-10 * star_elastic(depth, s).max(1e-10),
                "depth {depth}: elastic {:.12e} vs {:.12e}",
                e.elastic,
                star_elastic(depth, s)
            );
            assert!(
                (e.surface - star_surface(depth, s)).abs() <= 1e-9 * star_surface(depth, s),
                "depth {depth}: surface {:.12e} vs {:.12e}",
                e.surface,
                star_surface(depth, s)
            );
        }
    }

    #[test]
    fn surface_increments_are_geometric() {
        let s = 1.7;
        let mut prev = star_surface(2, s) - star_surface(1, s);
        for depth in 2..8 {
            let inc = star_surface(depth + 1, s) - star_surface(depth, s);
            assert!(
                (inc / prev - RHO).abs() < 1e-6,
                "increment ratio {:.9} vs RHO {:.9}",
                inc / prev,
                RHO
            );
            prev = inc;
        }
    }

    #[test]
    fn rotated_and_mirrored_triangles_are_admissible() {
        let wells = hex_rhombic_wells();
        // Direct class: vertex directions at 45 + 60k.
        for k in 0..6 {
            let beta = (60.0 * k as f64).to_radians();
            let g = Mat2::rotation(beta);
            let vs = canonical_triangle(1.0);
            let tri = Triangle::new([
                g.apply(vs.vertices()[0]),
                g.apply(vs.vertices()[1]),
                g.apply(vs.vertices()[2]),
            ])
            .unwrap();
            let f = star_block(&tri, 2, &wells).unwrap();
            assert!(
                check_continuity(&f).passes(1e-10),
                "rotation by {} deg",
                60 * k
            );
            let e = exact_energy(&f, &wells).unwrap();
            assert!((e.surface - star_surface(2, 1.0)).abs() < 1e-9 * star_surface(2, 1.0));
        }
        // Mirrored class: vertex directions at 15 + 60k.
        let p = Mat2::diag(1.0, -1.0);
        let vs = canonical_triangle(1.0);
        let mut mirrored = [
            p.apply(vs.vertices()[0]),
            p.apply(vs.vertices()[1]),
            p.apply(vs.vertices()[2]),
        ];
        mirrored.reverse(); // restore CCW after the reflection
        let tri = Triangle::new(mirrored).unwrap();
        let f = star_block(&tri, 2, &wells).unwrap();
        assert!(check_continuity(&f).passes(1e-10));
        let e = exact_energy(&f, &wells).unwrap();
        assert!((e.surface - star_surface(2, 1.0)).abs() < 1e-9 * star_surface(2, 1.0));
    }

    #[test]
    fn inadmissible_orientation_is_rejected_with_classes() {
        let wells = hex_rhombic_wells();
        let g = Mat2::rotation(0.3); // not a multiple of 60 degrees
        let vs = canonical_triangle(1.0);
        let tri = Triangle::new([
            g.apply(vs.vertices()[0]),
            g.apply(vs.vertices()[1]),
            g.apply(vs.vertices()[2]),
        ])
        .unwrap();
        match star_block(&tri, 2, &wells) {
            Err(Error::IncompatibleOrientation(msg)) => {
                assert!(
                    msg.contains("45 + 60k"),
                    "message lists the direct class: {msg}"
                );
                assert!(
                    msg.contains("15 + 60k"),
                    "message lists the mirrored class: {msg}"
                );
            }
            other => panic!("expected orientation rejection, got {other:?}"),
        }
        // Non-equilateral triangles are rejected as inadmissible.
        let tri = Triangle::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 2.0),
        ])
        .unwrap();
        assert!(matches!(
            star_block(&tri, 2, &wells),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn boundary_trace_vanishes() {
        let wells = hex_rhombic_wells();
        let tri = canonical_triangle(2.0);
        let f = star_block(&tri, 3, &wells).unwrap();
        let vs = tri.vertices();
        // Sample along each outer edge; the outer cells' affine maps must
        // vanish there.
        let loc = f.build_locator();
        for k in 0..3 {
            for t in [0.1, 0.35, 0.6, 0.9] {
                let x = vs[k] + (vs[(k + 1) % 3] - vs[k]) * t;
                // Nudge inwards so the locator lands in the outer ring.
                let inward = (tri.centroid() - x).normalized().unwrap().get();
                let xi = x + inward * 1e-12;
                let c = loc.locate(&f.complex, xi).expect("point inside");
                let v = f.value_in_cell(c, x);
                assert!(v.norm() < 1e-9, "trace {:.3e} at edge {k}, t {t}", v.norm());
            }
        }
    }

    #[test]
    fn energy_scales_exactly_with_side() {
        let wells = hex_rhombic_wells();
        for lambda in [0.5, 2.0, 3.0] {
            let f = star_block(&canonical_triangle(lambda), 3, &wells).unwrap();
            let e = exact_energy(&f, &wells).unwrap();
            let e1 = exact_energy(
                &star_block(&canonical_triangle(1.0), 3, &wells).unwrap(),
                &wells,
            )
            .unwrap();
            assert!((e.elastic - lambda * lambda * e1.elastic).abs() <= 1e-11 * (1.0 + e.elastic));
            assert!((e.surface - lambda * e1.surface).abs() <= 1e-10 * e.surface);
        }
    }

    #[test]
    fn depth_rules() {
        assert_eq!(star_depth_for(1.0, 1.0), 1);
        // The rule depth makes the core misfit at most eps * side.
        for eps in [0.25, 2f64.powi(-6), 2f64.powi(-10), 2f64.powi(-14)] {
            let n = star_depth_for(eps, 1.0);
            assert!(star_elastic(n, 1.0) <= eps * 1.0 + 1e-15);
            assert!(n == 1 || star_elastic(n - 1, 1.0) > eps);
        }
        // The argmin depth beats or equals the rule depth's total.
        for eps in [2f64.powi(-4), 2f64.powi(-8), 2f64.powi(-12)] {
            let (n_best, total_best) = star_best_depth(eps, 1.0);
            let n_rule = star_depth_for(eps, 1.0);
            let total_rule = star_elastic(n_rule, 1.0) + eps * star_surface(n_rule, 1.0);
            assert!(total_best <= total_rule + 1e-15);
            assert!(n_best >= 1);
        }
    }
}
