//! Domain geometry: validated polygons, boundary patches given as rotated
//! graphs, the frame fields of such a graph, and the boundary-flattening
//! diffeomorphism built from the normal map.

use serde::{Deserialize, Serialize};

use crate::algebra2d::{Mat2, UnitVec2, Vec2};
use crate::compatibility::NormalSet;
use crate::error::{Error, Result};
use crate::numerics::CubicSpline;

// ---------------------------------------------------------------------------
// Polygons
// ---------------------------------------------------------------------------

/// A simple polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn segments_properly_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

impl Polygon {
    /// Validate and build: at least three vertices, finite, counter-clockwise,
    /// no zero-length or collinear-consecutive edges, no self-intersection.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::BadPolygon(format!("{n} vertices, need at least 3")));
        }
        let mut scale: f64 = 0.0;
        for v in &vertices {
            if !v.is_finite() {
                return Err(Error::NonFinite("polygon vertex"));
            }
            scale = scale.max(v.norm());
        }
        let scale = scale.max(1.0);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (b - a).norm() <= 1e-12 * scale {
                return Err(Error::DegenerateEdge(i));
            }
        }
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            if orient(a, b, c).abs() <= 1e-12 * scale * scale {
                return Err(Error::BadPolygon(format!(
                    "collinear consecutive vertices at index {i}"
                )));
            }
        }
        let area2: f64 = (0..n)
            .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
            .sum();
        if area2 <= 0.0 {
            return Err(Error::BadPolygon(
                "vertices must be counter-clockwise".into(),
            ));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // Skip adjacent edges (they share a vertex).
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                if segments_properly_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(Error::BadPolygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                d = d.max((self.vertices[i] - self.vertices[j]).norm());
            }
        }
        d
    }

    /// Closed-set membership: boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        let scale = self.diameter().max(1.0);
        for (a, b) in self.edges() {
            if point_segment_distance(p, a, b) <= 1e-12 * scale {
                return true;
            }
        }
        // Even-odd ray cast along +x.
        let mut inside = false;
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let x_at = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_at {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Membership in the polygon scaled about the origin by `factor > 0`.
    pub fn contains_scaled(&self, p: Vec2, factor: f64) -> bool {
        if factor <= 0.0 {
            return false;
        }
        self.contains(p * (1.0 / factor))
    }

    /// True when the polygon is star-shaped about the origin (every boundary
    /// point is visible from 0). Sufficient check: 0 is inside and no edge's
    /// supporting half-plane separates it with wrong orientation.
    pub fn star_shaped_about_origin(&self) -> bool {
        if !self.contains(Vec2::ZERO) {
            return false;
        }
        // For a star-shaped-about-0 polygon, each directed CCW edge (a, b)
        // must keep the origin weakly on its left.
        self.edges()
            .all(|(a, b)| orient(a, b, Vec2::ZERO) >= -1e-12 * self.diameter().powi(2))
    }
}

/// The centered unit square `[-1/2, 1/2]^2`, star-shaped about the origin.
/// Its edge normals at 0 and 90 degrees avoid every zero-energy interface
/// direction of the hexagonal-to-rhombic variants.
pub fn unit_square() -> Polygon {
    Polygon::new(vec![
        Vec2::new(-0.5, -0.5),
        Vec2::new(0.5, -0.5),
        Vec2::new(0.5, 0.5),
        Vec2::new(-0.5, 0.5),
    ])
    .expect("unit square is a valid polygon")
}

/// Outward unit normals of the polygon edges, in edge order.
pub fn polygon_boundary_normals(p: &Polygon) -> Result<Vec<UnitVec2>> {
    p.edges()
        .map(|(a, b)| UnitVec2::new(-(b - a).perp()))
        .collect()
}

/// Domain classification relative to a set of zero-energy interface normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainClass {
    /// No edge normal lies in the set: only the logarithmic bound applies.
    Generic,
    /// At least one edge normal lies in the set.
    Compatible,
}

/// Per-edge compatibility flags and the overall class.
pub fn classify_polygon(
    p: &Polygon,
    normals: &NormalSet,
    tol_rad: f64,
) -> Result<(Vec<bool>, DomainClass)> {
    let ns = polygon_boundary_normals(p)?;
    let flags: Vec<bool> = ns.iter().map(|n| normals.contains(*n, tol_rad)).collect();
    let class = if flags.iter().any(|f| *f) {
        DomainClass::Compatible
    } else {
        DomainClass::Generic
    };
    Ok((flags, class))
}

// ---------------------------------------------------------------------------
// Graph patches and frame fields
// ---------------------------------------------------------------------------

/// Boundary profile function: the boundary is the rotated, translated graph
/// `{p0 + R^T (h(y), y)}`, with `h(0) = h'(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HFunc {
    /// Polynomial in `y` with coefficients in increasing degree.
    Poly { coeffs: Vec<f64> },
    /// Natural cubic spline through the given knots.
    Spline { knots: Vec<(f64, f64)> },
    /// Circular arc of the given radius tangent to the y-axis at the origin:
    /// `h(y) = radius - sqrt(radius^2 - y^2)`.
    Circle { radius: f64 },
}

impl HFunc {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            HFunc::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c),
            HFunc::Spline { knots } => spline_of(knots).eval(y),
            HFunc::Circle { radius } => radius - (radius * radius - y * y).sqrt(),
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        match self {
            HFunc::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * y + k as f64 * c;
                }
                acc
            }
            HFunc::Spline { knots } => spline_of(knots).deriv(y),
            HFunc::Circle { radius } => y / (radius * radius - y * y).sqrt(),
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        match self {
            HFunc::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(2).rev() {
                    acc = acc * y + (k * (k - 1)) as f64 * c;
                }
                acc
            }
            HFunc::Spline { knots } => spline_of(knots).deriv2(y),
            HFunc::Circle { radius } => {
                let r2 = radius * radius;
                r2 / (r2 - y * y).powf(1.5)
            }
        }
    }
}

fn spline_of(knots: &[(f64, f64)]) -> CubicSpline {
    CubicSpline::from_knots(knots).expect("validated at construction")
}

/// A boundary patch described as a rotated graph over a square of radius
/// `rho`, anchored at `p0` with frame rotation `frame` (local = frame * (global - p0)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPatch {
    pub h: HFunc,
    pub rho: f64,
    pub p0: Vec2,
    pub frame: Mat2,
}

impl GraphPatch {
    pub fn new(h: HFunc, rho: f64, p0: Vec2, frame: Mat2) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho = {rho} must be positive"
            )));
        }
        if !p0.is_finite() || !frame.is_finite() {
            return Err(Error::NonFinite("graph patch anchor"));
        }
        if !frame.is_rotation(1e-12) {
            return Err(Error::InvalidParameter(
                "patch frame must be a rotation".into(),
            ));
        }
        match &h {
            HFunc::Circle { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(
                        "circle radius must be positive".into(),
                    ));
                }
                if 2.0 * rho >= *radius {
                    return Err(Error::InvalidParameter(format!(
                        "circle profile needs 2 rho < radius (rho = {rho}, radius = {radius})"
                    )));
                }
            }
            HFunc::Spline { knots } => {
                // Validates knot ordering.
                CubicSpline::from_knots(knots)?;
            }
            HFunc::Poly { .. } => {}
        }
        let patch = GraphPatch { h, rho, p0, frame };
        let h0 = patch.h.eval(0.0);
        let h1 = patch.h.d1(0.0);
        if h0.abs() > 1e-12 || h1.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "profile must satisfy h(0) = h'(0) = 0 (got {h0:.2e}, {h1:.2e})"
            )));
        }
        Ok(patch)
    }

    pub fn to_local(&self, z: Vec2) -> Vec2 {
        self.frame.apply(z - self.p0)
    }

    pub fn to_global(&self, w: Vec2) -> Vec2 {
        self.p0 + self.frame.transpose().apply(w)
    }

    /// Boundary point (global coordinates) at parameter `y`.
    pub fn boundary_point(&self, y: f64) -> Vec2 {
        self.to_global(Vec2::new(self.h.eval(y), y))
    }
}

/// Frame fields of the graph in local coordinates:
/// `nu = (-1, h') / sqrt(1 + h'^2)`, `tau = (-h', -1) / sqrt(1 + h'^2)`,
/// `kappa = h'' / (1 + h'^2)`. Requires `|y| < 2 rho`.
pub fn frame_fields(patch: &GraphPatch, y: f64) -> Result<(UnitVec2, UnitVec2, f64)> {
    if !(y.abs() < 2.0 * patch.rho) {
        return Err(Error::OutOfRange(format!(
            "|y| = {} must be below 2 rho = {}",
            y.abs(),
            2.0 * patch.rho
        )));
    }
    let hp = patch.h.d1(y);
    let hpp = patch.h.d2(y);
    let s = (1.0 + hp * hp).sqrt();
    let nu = UnitVec2::new_raw(Vec2::new(-1.0 / s, hp / s));
    let tau = UnitVec2::new_raw(Vec2::new(-hp / s, -1.0 / s));
    let kappa = hpp / (1.0 + hp * hp);
    Ok((nu, tau, kappa))
}

/// Normal map of the patch in local coordinates:
/// `Phi(x, y) = (h(y), y) - x nu(y)`. Requires `|x| <= rho`, `|y| <= rho`.
pub fn boundary_normal_map(patch: &GraphPatch, x: f64, y: f64) -> Result<Vec2> {
    if x.abs() > patch.rho || y.abs() > patch.rho {
        return Err(Error::OutOfRange(format!(
            "({x}, {y}) outside the patch square of radius {}",
            patch.rho
        )));
    }
    let (nu, _, _) = frame_fields(patch, y)?;
    Ok(Vec2::new(patch.h.eval(y), y) - nu.get() * x)
}

/// Jacobian of the normal map: columns `[-nu | tau (x kappa - sqrt(1 + h'^2))]`.
pub fn grad_boundary_normal_map(patch: &GraphPatch, x: f64, y: f64) -> Result<Mat2> {
    if x.abs() > patch.rho || y.abs() > patch.rho {
        return Err(Error::OutOfRange(format!(
            "({x}, {y}) outside the patch square of radius {}",
            patch.rho
        )));
    }
    let hp = patch.h.d1(y);
    let s = (1.0 + hp * hp).sqrt();
    let (nu, tau, kappa) = frame_fields(patch, y)?;
    let col1 = -nu.get();
    let col2 = tau.get() * (x * kappa - s);
    Ok(Mat2::new(col1.x, col2.x, col1.y, col2.y))
}

// ---------------------------------------------------------------------------
// Boundary arcs for incompatibility sampling
// ---------------------------------------------------------------------------

/// A boundary point with its frame.
#[derive(Debug, Clone, Copy)]
pub struct FramePoint {
    pub point: Vec2,
    pub tau: UnitVec2,
    pub nu: UnitVec2,
    pub kappa: f64,
}

/// A parameterized boundary arc supporting pointwise frame evaluation.
#[derive(Debug, Clone)]
pub enum BoundaryPatch {
    /// Straight segment from `start` with tangent `dir`, parameter = arclength.
    Flat {
        start: Vec2,
        dir: UnitVec2,
        length: f64,
    },
    /// Graph patch boundary, parameter `y` in `[-rho, rho]`, local coordinates.
    Graph(GraphPatch),
    /// Same geometry as `inner` with parameter multiplied by `factor`.
    Scaled {
        inner: Box<BoundaryPatch>,
        factor: f64,
    },
}

impl BoundaryPatch {
    pub fn flat(start: Vec2, dir: UnitVec2, length: f64) -> Self {
        BoundaryPatch::Flat { start, dir, length }
    }

    pub fn interval(&self) -> (f64, f64) {
        match self {
            BoundaryPatch::Flat { length, .. } => (0.0, *length),
            BoundaryPatch::Graph(p) => (-p.rho, p.rho),
            BoundaryPatch::Scaled { inner, factor } => {
                let (a, b) = inner.interval();
                (a * factor, b * factor)
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<FramePoint> {
        match self {
            BoundaryPatch::Flat { start, dir, length } => {
                if t < -1e-12 || t > length + 1e-12 {
                    return Err(Error::OutOfRange(format!("t = {t} outside [0, {length}]")));
                }
                Ok(FramePoint {
                    point: *start + dir.get() * t,
                    tau: *dir,
                    nu: UnitVec2::new_raw(-dir.get().perp()),
                    kappa: 0.0,
                })
            }
            BoundaryPatch::Graph(p) => {
                let (nu, tau, kappa) = frame_fields(p, t)?;
                Ok(FramePoint {
                    point: Vec2::new(p.h.eval(t), t),
                    tau,
                    nu,
                    kappa,
                })
            }
            BoundaryPatch::Scaled { inner, factor } => inner.eval(t / factor),
        }
    }

    /// Same geometry, parameter scaled by `factor > 0`.
    pub fn reparameterized(&self, factor: f64) -> BoundaryPatch {
        BoundaryPatch::Scaled {
            inner: Box::new(self.clone()),
            factor,
        }
    }
}

// ---------------------------------------------------------------------------
// Boundary flattening
// ---------------------------------------------------------------------------

/// Measured deviation bounds of a flattening map on its square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeoBounds {
    /// sup of `|grad F - R|` (Frobenius).
    pub sup_grad_dev: f64,
    /// sup of `|det grad F - 1|`.
    pub sup_det_dev: f64,
    /// sup of `|c - 1|` where `c` is the tangential metric factor.
    pub sup_c_dev: f64,
}

/// Boundary-flattening diffeomorphism `F(z) = Phi^{-1}(frame (z - p0))`.
///
/// `F` maps the boundary to `{x = 0}` and the interior side to `{x > 0}`,
/// with `F(p0) = 0` and `grad F(p0) = frame`.
#[derive(Debug, Clone)]
pub struct Diffeo {
    pub patch: GraphPatch,
    /// Half side of the flat square this map is certified on.
    pub r: f64,
    /// Largest certified radius for this patch.
    pub r0: f64,
    pub bounds: DiffeoBounds,
}

fn jacobian_deviation_op(patch: &GraphPatch, x: f64, y: f64) -> Result<f64> {
    let j = grad_boundary_normal_map(patch, x, y)?;
    let inv = j.inverse()?;
    Ok((inv - Mat2::IDENTITY).singular_values().0)
}

fn max_deviation_on_square(patch: &GraphPatch, r: f64, n: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let x = -r + 2.0 * r * i as f64 / n as f64;
        for j in 0..=n {
            let y = -r + 2.0 * r * j as f64 / n as f64;
            worst = worst.max(jacobian_deviation_op(patch, x, y)?);
        }
    }
    Ok(worst)
}

/// Largest square radius (up to `rho`) on which the inverse Jacobian of the
/// normal map stays within 0.5 of the identity in operator norm.
pub fn invertibility_radius(patch: &GraphPatch) -> Result<f64> {
    let full = max_deviation_on_square(patch, patch.rho, 48);
    if let Ok(d) = full {
        if d <= 0.5 {
            return Ok(patch.rho);
        }
    }
    let mut lo = 0.0;
    let mut hi = patch.rho;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let ok = matches!(max_deviation_on_square(patch, mid, 32), Ok(d) if d <= 0.5);
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Build the flattening map on the square of radius `r` around `p0`.
pub fn flatten_patch(patch: &GraphPatch, r: f64) -> Result<Diffeo> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
    }
    let r0 = invertibility_radius(patch)?;
    if r > r0 {
        return Err(Error::RadiusExceedsInvertible { r, r0 });
    }
    let mut sup_grad = 0.0f64;
    let mut sup_det = 0.0f64;
    let mut sup_c = 0.0f64;
    let n = 64;
    for i in 0..=n {
        let x = -r + 2.0 * r * i as f64 / n as f64;
        for j in 0..=n {
            let y = -r + 2.0 * r * j as f64 / n as f64;
            let jac = grad_boundary_normal_map(patch, x, y)?;
            let inv = jac.inverse()?;
            sup_grad = sup_grad.max((inv - Mat2::IDENTITY).frobenius_norm());
            let c = jac.det();
            sup_det = sup_det.max((1.0 / c - 1.0).abs());
            sup_c = sup_c.max((c - 1.0).abs());
        }
    }
    Ok(Diffeo {
        patch: patch.clone(),
        r,
        r0,
        bounds: DiffeoBounds {
            sup_grad_dev: sup_grad,
            sup_det_dev: sup_det,
            sup_c_dev: sup_c,
        },
    })
}

impl Diffeo {
    /// Forward map: global point to flat coordinates, by damped Newton on the
    /// normal map.
    pub fn forward(&self, z: Vec2) -> Result<Vec2> {
        let target = self.patch.to_local(z);
        let scale = target.norm().max(1.0);
        let mut w = target;
        // Clamp the seed into the patch square.
        w.x = w.x.clamp(-self.patch.rho, self.patch.rho);
        w.y = w.y.clamp(-self.patch.rho, self.patch.rho);
        let mut res = boundary_normal_map(&self.patch, w.x, w.y)? - target;
        for _ in 0..60 {
            if res.norm() <= 1e-13 * scale {
                return Ok(w);
            }
            let jac = grad_boundary_normal_map(&self.patch, w.x, w.y)?;
            let step = jac.inverse()?.apply(res);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = Vec2::new(
                    (w.x - t * step.x).clamp(-self.patch.rho, self.patch.rho),
                    (w.y - t * step.y).clamp(-self.patch.rho, self.patch.rho),
                );
                let cand_res = boundary_normal_map(&self.patch, cand.x, cand.y)? - target;
                if cand_res.norm() < res.norm() {
                    w = cand;
                    res = cand_res;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res.norm() <= 1e-10 * scale {
            Ok(w)
        } else {
            Err(Error::NoConvergence(format!(
                "flattening Newton stalled at residual {:.3e}",
                res.norm()
            )))
        }
    }

    /// Inverse map in closed form: flat coordinates to the global point.
    pub fn inverse(&self, w: Vec2) -> Result<Vec2> {
        let local = boundary_normal_map(&self.patch, w.x, w.y)?;
        Ok(self.patch.to_global(local))
    }

    /// Gradient of the forward map at a global point.
    pub fn grad_forward(&self, z: Vec2) -> Result<Mat2> {
        let w = self.forward(z)?;
        let jac = grad_boundary_normal_map(&self.patch, w.x, w.y)?;
        Ok(jac.inverse()? * self.patch.frame)
    }

    /// Tangential metric factor `c(z) = sqrt(1 + h'^2) - x kappa` at `F(z)`.
    pub fn tangential_factor(&self, z: Vec2) -> Result<f64> {
        let w = self.forward(z)?;
        Ok(grad_boundary_normal_map(&self.patch, w.x, w.y)?.det())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_patch(rho: f64) -> GraphPatch {
        GraphPatch::new(
            HFunc::Poly { coeffs: vec![] },
            rho,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap()
    }

    #[test]
    fn polygon_validation() {
        let sq = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((sq.area() - 1.0).abs() < 1e-15);
        // Clockwise: rejected.
        assert!(Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ])
        .is_err());
        // Duplicate vertex: degenerate edge.
        assert!(matches!(
            Polygon::new(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
            ]),
            Err(Error::DegenerateEdge(_))
        ));
        // Self-intersecting bowtie: rejected.
        assert!(Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ])
        .is_err());
        // Two vertices: rejected.
        assert!(Polygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn polygon_membership_and_star_shape() {
        let sq = Polygon::new(vec![
            Vec2::new(-0.5, -0.5),
            Vec2::new(0.5, -0.5),
            Vec2::new(0.5, 0.5),
            Vec2::new(-0.5, 0.5),
        ])
        .unwrap();
        assert!(sq.contains(Vec2::ZERO));
        assert!(
            sq.contains(Vec2::new(0.5, 0.5)),
            "boundary counts as inside"
        );
        assert!(!sq.contains(Vec2::new(0.6, 0.0)));
        assert!(sq.contains_scaled(Vec2::new(0.26, 0.0), 0.6));
        assert!(!sq.contains_scaled(Vec2::new(0.31, 0.0), 0.6));
        assert!(sq.star_shaped_about_origin());
        let off = Polygon::new(vec![
            Vec2::new(1.0, 1.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(1.0, 2.0),
        ])
        .unwrap();
        assert!(!off.star_shaped_about_origin());
    }

    #[test]
    fn polygon_normals_and_classification() {
        let sq = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let ns = polygon_boundary_normals(&sq).unwrap();
        assert!((ns[0].get() - Vec2::new(0.0, -1.0)).norm() < 1e-15);
        assert!((ns[1].get() - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((ns[2].get() - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((ns[3].get() - Vec2::new(-1.0, 0.0)).norm() < 1e-15);

        // Against the hexagonal-to-rhombic normals the axis-aligned square is
        // generic; a triangle with edge tangents 15/75/135 degrees is
        // compatible on every edge.
        let hexset = crate::compatibility::hex_rhombic_normal_set();
        let (_flags, class) = classify_polygon(&sq, &hexset, 1e-9).unwrap();
        assert_eq!(class, DomainClass::Generic);

        let r = 1.0 / 3.0f64.sqrt();
        let tri = Polygon::new(
            [105.0f64, 225.0, 345.0]
                .iter()
                .map(|a| Vec2::from_angle(a.to_radians()) * r)
                .collect(),
        )
        .unwrap();
        let (flags, class) = classify_polygon(&tri, &hexset, 1e-9).unwrap();
        assert_eq!(class, DomainClass::Compatible);
        assert!(flags.iter().all(|f| *f));
    }

    #[test]
    fn frame_fields_flat_and_circle() {
        let p = flat_patch(0.5);
        let (nu, tau, kappa) = frame_fields(&p, 0.3).unwrap();
        assert!((nu.get() - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((tau.get() - Vec2::new(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(kappa, 0.0);
        assert!(frame_fields(&p, 1.1).is_err());

        let c = GraphPatch::new(
            HFunc::Circle { radius: 2.0 },
            0.5,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let (_, _, k0) = frame_fields(&c, 0.0).unwrap();
        assert!((k0 - 0.5).abs() < 1e-14, "kappa(0) = 1/radius");
        // Frames stay orthonormal along the arc.
        for k in -9..=9 {
            let y = 0.09 * k as f64;
            let (nu, tau, _) = frame_fields(&c, y).unwrap();
            assert!(nu.get().dot(tau.get()).abs() < 1e-14);
        }
    }

    #[test]
    fn parabola_frame_matches_derivatives() {
        // h(y) = y^2 / 2: h' = y, h'' = 1.
        let p = GraphPatch::new(
            HFunc::Poly {
                coeffs: vec![0.0, 0.0, 0.5],
            },
            0.5,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let y = 0.4;
        let s = (1.0f64 + y * y).sqrt();
        let (nu, tau, kappa) = frame_fields(&p, y).unwrap();
        assert!((nu.get() - Vec2::new(-1.0 / s, y / s)).norm() < 1e-15);
        assert!((tau.get() - Vec2::new(-y / s, -1.0 / s)).norm() < 1e-15);
        assert!((kappa - 1.0 / (1.0 + y * y)).abs() < 1e-15);
    }

    #[test]
    fn normal_map_and_jacobian() {
        let p = flat_patch(0.5);
        // Flat profile: Phi(x, y) = (x, y).
        let w = boundary_normal_map(&p, 0.2, -0.3).unwrap();
        assert!((w - Vec2::new(0.2, -0.3)).norm() < 1e-15);
        let j = grad_boundary_normal_map(&p, 0.2, -0.3).unwrap();
        assert!((j - Mat2::IDENTITY).frobenius_norm() < 1e-15);
        assert!(boundary_normal_map(&p, 0.6, 0.0).is_err());

        // On the boundary (x = 0) the map returns the graph point.
        let c = GraphPatch::new(
            HFunc::Poly {
                coeffs: vec![0.0, 0.0, 0.5, -0.3],
            },
            0.4,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let y = 0.25;
        let w = boundary_normal_map(&c, 0.0, y).unwrap();
        assert!((w - Vec2::new(c.h.eval(y), y)).norm() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = GraphPatch::new(
            HFunc::Poly {
                coeffs: vec![0.0, 0.0, 0.4, 0.2, -0.1],
            },
            0.4,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let pts = [
            (0.1, 0.2),
            (-0.15, -0.1),
            (0.3, 0.05),
            (0.0, 0.0),
            (-0.2, 0.3),
        ];
        for (x, y) in pts {
            let j = grad_boundary_normal_map(&p, x, y).unwrap();
            let d = 1e-6;
            let fx = (boundary_normal_map(&p, x + d, y).unwrap()
                - boundary_normal_map(&p, x - d, y).unwrap())
                * (0.5 / d);
            let fy = (boundary_normal_map(&p, x, y + d).unwrap()
                - boundary_normal_map(&p, x, y - d).unwrap())
                * (0.5 / d);
            let fd = Mat2::new(fx.x, fy.x, fx.y, fy.y);
            assert!(
                (j - fd).frobenius_norm() < 1e-6,
                "FD mismatch at ({x}, {y}): {:.2e}",
                (j - fd).frobenius_norm()
            );
        }
    }

    #[test]
    fn flatten_flat_boundary_is_rigid() {
        let frame = Mat2::rotation(0.7);
        let p0 = Vec2::new(1.0, -2.0);
        let p = GraphPatch::new(HFunc::Poly { coeffs: vec![] }, 0.5, p0, frame).unwrap();
        let f = flatten_patch(&p, 0.4).unwrap();
        assert!(f.bounds.sup_grad_dev < 1e-12);
        assert!(f.bounds.sup_det_dev < 1e-12);
        assert!(f.bounds.sup_c_dev < 1e-12);
        assert!(
            (f.r0 - 0.5).abs() < 1e-12,
            "flat patch is invertible up to rho"
        );
        // F is exactly the rigid motion w = frame (z - p0).
        let z = p0 + frame.transpose().apply(Vec2::new(0.3, -0.2));
        let w = f.forward(z).unwrap();
        assert!((w - Vec2::new(0.3, -0.2)).norm() < 1e-12);
        assert!((f.grad_forward(z).unwrap() - frame).frobenius_norm() < 1e-10);
        assert!((f.tangential_factor(z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flatten_circle_roundtrip_and_anchoring() {
        let patch = GraphPatch::new(
            HFunc::Circle { radius: 1.0 },
            0.45,
            Vec2::new(0.3, 0.4),
            Mat2::rotation(-0.3),
        )
        .unwrap();
        let f = flatten_patch(&patch, 0.2).unwrap();
        // Anchoring invariants.
        let w0 = f.forward(patch.p0).unwrap();
        assert!(w0.norm() <= 1e-12, "F(p0) = 0");
        assert!((f.grad_forward(patch.p0).unwrap() - patch.frame).frobenius_norm() <= 1e-10);
        // Boundary maps to {x = 0}; interior side to x > 0.
        for k in -5..=5 {
            let y = 0.19 * k as f64 / 5.0;
            let z = patch.boundary_point(y);
            let w = f.forward(z).unwrap();
            assert!(
                w.x.abs() < 1e-10,
                "boundary maps to the axis, got x = {}",
                w.x
            );
            let (nu, _, _) = frame_fields(&patch, y).unwrap();
            let inward = patch.to_global(Vec2::new(patch.h.eval(y), y) - nu.get() * 0.05)
                - patch.boundary_point(y);
            let wi = f.forward(z + inward).unwrap();
            assert!(wi.x > 0.0, "interior side has positive first coordinate");
        }
        // Round trips.
        for i in -4..=4 {
            for j in -4..=4 {
                let w = Vec2::new(0.2 * i as f64 / 4.0, 0.2 * j as f64 / 4.0);
                let z = f.inverse(w).unwrap();
                let back = f.forward(z).unwrap();
                assert!(
                    (back - w).norm() <= 1e-9,
                    "roundtrip error {:.2e}",
                    (back - w).norm()
                );
            }
        }
        // Gradient deviation shrinks with curvature radius: bounds are small.
        assert!(f.bounds.sup_grad_dev < 0.5);
        assert!(f.bounds.sup_c_dev < 0.5);
    }

    #[test]
    fn flatten_rejects_radius_beyond_certified() {
        // Strong curvature: h(y) = 2 y^2 has kappa(0) = 4; the normal map
        // folds at x = 1/4, so r0 < rho and large r must be rejected.
        let patch = GraphPatch::new(
            HFunc::Poly {
                coeffs: vec![0.0, 0.0, 2.0],
            },
            0.45,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let r0 = invertibility_radius(&patch).unwrap();
        assert!(r0 < 0.45, "r0 = {r0} must be strictly inside rho");
        assert!(matches!(
            flatten_patch(&patch, r0 + 0.05),
            Err(Error::RadiusExceedsInvertible { .. })
        ));
        // And the certified radius itself works.
        let f = flatten_patch(&patch, r0 * 0.9).unwrap();
        let z = Vec2::new(0.1, 0.05);
        let w = f.forward(z).unwrap();
        let back = f.inverse(w).unwrap();
        assert!((back - z).norm() < 1e-9);
    }

    #[test]
    fn flatten_halving_radius_shrinks_bounds() {
        let patch = GraphPatch::new(
            HFunc::Circle { radius: 1.0 },
            0.45,
            Vec2::ZERO,
            Mat2::IDENTITY,
        )
        .unwrap();
        let big = flatten_patch(&patch, 0.2).unwrap();
        let small = flatten_patch(&patch, 0.1).unwrap();
        assert!(small.bounds.sup_grad_dev < big.bounds.sup_grad_dev);
        assert!(small.bounds.sup_c_dev < big.bounds.sup_c_dev);
        // First-order scaling: halving r roughly halves the c-deviation;
        // allow a factor-4 corridor.
        let ratio = big.bounds.sup_c_dev / small.bounds.sup_c_dev;
        assert!(ratio > 1.2 && ratio < 8.0, "ratio = {ratio}");
    }

    #[test]
    fn boundary_patch_eval_and_reparam() {
        let p = BoundaryPatch::flat(Vec2::ZERO, UnitVec2::from_angle(0.0), 2.0);
        let fp = p.eval(1.0).unwrap();
        assert!((fp.point - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((fp.nu.get() - Vec2::new(0.0, -1.0)).norm() < 1e-15);
        let q = p.reparameterized(2.0);
        assert_eq!(q.interval(), (0.0, 4.0));
        let fq = q.eval(2.0).unwrap();
        assert!((fq.point - fp.point).norm() < 1e-15);
        assert_eq!(fq.tau.get(), fp.tau.get());
    }

    #[test]
    fn spline_profile_patch() {
        let knots: Vec<(f64, f64)> = (-8..=8)
            .map(|k| {
                let y = k as f64 / 8.0;
                (y, 0.3 * y * y)
            })
            .collect();
        let p = GraphPatch::new(HFunc::Spline { knots }, 0.4, Vec2::ZERO, Mat2::IDENTITY).unwrap();
        // Derivatives approximate the quadratic they interpolate.
        assert!((p.h.eval(0.5) - 0.075).abs() < 1e-3);
        assert!((p.h.d1(0.5) - 0.3).abs() < 2e-2);
        let f = flatten_patch(&p, 0.2).unwrap();
        let z = Vec2::new(0.15, -0.1);
        let w = f.forward(z).unwrap();
        assert!((f.inverse(w).unwrap() - z).norm() < 1e-9);
    }

    #[test]
    fn anchor_invariant_is_enforced() {
        // h(0) != 0.
        assert!(GraphPatch::new(
            HFunc::Poly { coeffs: vec![0.1] },
            0.5,
            Vec2::ZERO,
            Mat2::IDENTITY
        )
        .is_err());
        // h'(0) != 0.
        assert!(GraphPatch::new(
            HFunc::Poly {
                coeffs: vec![0.0, 0.2]
            },
            0.5,
            Vec2::ZERO,
            Mat2::IDENTITY
        )
        .is_err());
        // Non-rotation frame.
        assert!(GraphPatch::new(
            HFunc::Poly { coeffs: vec![] },
            0.5,
            Vec2::ZERO,
            Mat2::diag(1.0, 2.0)
        )
        .is_err());
    }
}
