//! Simple austenite/variant laminates: zero elastic energy, interfacial
//! energy proportional to the number of bands.

use crate::algebra2d::{Mat2, UnitVec2, Vec2};
use crate::compatibility::austenite_normals_linear;
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::microstructure::{clip_halfplane, ComplexBuilder, FieldMode, PAField};
use crate::wells::WellSet;

/// Build a simple laminate between austenite (zero strain) and linear
/// variant `j`, with bands normal to `normal`, band period `period`, and
/// variant volume fraction `theta` in `(0, 1]`, clipped to the convex
/// polygon `strip`.
///
/// The displacement is `v(x) = a S(x . n)` with `sym(a (x) n)` equal to the
/// variant strain, `S` continuous with slope 1 on variant bands and slope 0
/// on austenite bands, so `e(v)` takes only the values `0` and the variant
/// strain. Relative to a well set augmented with the zero strain
/// ([`WellSet::with_zero_strain`]) the field is exactly stress-free and all
/// energy lives on the band interfaces; relative to the martensite-only set
/// the austenite bands pay the transformation penalty `dist(0, wells)^2`.
pub fn laminate(
    wells: &WellSet,
    j: usize,
    normal: UnitVec2,
    period: f64,
    theta: f64,
    strip: &Polygon,
) -> Result<PAField> {
    let strains = wells.linear_strains()?;
    if j >= strains.len() {
        return Err(Error::OutOfRange(format!(
            "variant index {} out of range for {} wells",
            j,
            strains.len()
        )));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(
            "laminate period must be positive".into(),
        ));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(
            "variant fraction must lie in (0, 1]".into(),
        ));
    }
    let e = strains[j];
    let ns = austenite_normals_linear(e);
    if !ns.contains(normal, 1e-8) {
        return Err(Error::NotAdmissible(format!(
            "direction at {:.6} deg is not a zero-energy interface normal of variant {}",
            normal.get().y.atan2(normal.get().x).to_degrees(),
            j
        )));
    }
    // Rank-one amplitude for this normal: a = 2 e n - (n . e n) n.
    let n = normal.get();
    let en = e.apply(n);
    let a = en * 2.0 - n * n.dot(en);
    let an = Mat2::outer(a, n);
    debug_assert!((an.sym() - e).frobenius_norm() <= 1e-9 * e.frobenius_norm().max(1.0));

    // Convexity check: every vertex weakly inside every edge half-plane.
    let vs = strip.vertices();
    let k = vs.len();
    let scale = strip.diameter().max(1.0);
    for i in 0..k {
        let p = vs[i];
        let q = vs[(i + 1) % k];
        let edge = q - p;
        for v in vs {
            if edge.cross(*v - p) < -1e-9 * scale * edge.norm() {
                return Err(Error::BadPolygon("laminate region must be convex".into()));
            }
        }
    }

    let mut builder = ComplexBuilder::new(1e-12 * scale);
    let mut maps: Vec<(Mat2, Vec2)> = Vec::new();

    if theta == 1.0 {
        // Pure variant: one affine cell, no interfaces.
        builder.add_cell(vs)?;
        maps.push((an, Vec2::ZERO));
        let complex = builder.build()?;
        return PAField::new(complex, maps, FieldMode::Displacement);
    }

    // Band index range covering the strip's projection onto the normal.
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vs {
        let t = v.dot(n);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    let k_min = (t_min / period).floor() as i64 - 1;
    let k_max = (t_max / period).ceil() as i64 + 1;

    let area_tol = 1e-14 * scale * scale;
    // Clipping a band boundary through a polygon vertex leaves a duplicated
    // corner; drop near-coincident ring vertices so cells never carry edges
    // below the builder's merge tolerance.
    let dedup = |mut ring: Vec<Vec2>| -> Vec<Vec2> {
        let tol = 8e-12 * scale;
        let mut out: Vec<Vec2> = Vec::with_capacity(ring.len());
        for p in ring.drain(..) {
            if out.last().map_or(true, |q| (p - *q).norm() > tol) {
                out.push(p);
            }
        }
        while out.len() >= 2 && (out[0] - *out.last().unwrap()).norm() <= tol {
            out.pop();
        }
        out
    };
    for band in k_min..=k_max {
        let t0 = band as f64 * period;
        let t1 = t0 + theta * period;
        let t2 = (band + 1) as f64 * period;
        // Variant part: t0 <= x.n <= t1. Profile S(t) = k theta p + (t - k p).
        let variant = dedup(clip_halfplane(&clip_halfplane(vs, n, t1), -n, -t0));
        if variant.len() >= 3 && super::polygon_area(&variant) > area_tol {
            builder.add_cell(&variant)?;
            let b = a * (band as f64 * period * (theta - 1.0));
            maps.push((an, b));
        }
        // Austenite part: t1 <= x.n <= t2. Profile S(t) = (k + 1) theta p.
        let austenite = dedup(clip_halfplane(&clip_halfplane(vs, n, t2), -n, -t1));
        if austenite.len() >= 3 && super::polygon_area(&austenite) > area_tol {
            builder.add_cell(&austenite)?;
            let b = a * ((band + 1) as f64 * theta * period);
            maps.push((Mat2::ZERO, b));
        }
    }
    if maps.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let complex = builder.build()?;
    PAField::new(complex, maps, FieldMode::Displacement)
}
