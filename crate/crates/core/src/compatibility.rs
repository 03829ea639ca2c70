//! Kinematic compatibility: rank-one connections between wells, the
//! directions of zero-energy planar interfaces, and the incompatibility
//! constant of a boundary arc relative to a well set.

use serde::{Deserialize, Serialize};

use crate::algebra2d::{sym_rank_one_decompose, Mat2, SymMat2, UnitVec2, Vec2};
use crate::error::{Error, Result};
use crate::geometry::BoundaryPatch;
use crate::numerics::golden_section_min;
use crate::wells::{WellMode, WellSet};

/// Where a set of interface normals came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LinearHex,
    NonlinearN3,
    NonlinearN4,
    Custom,
}

/// A finite set of unit directions identified up to sign, kept sorted by
/// their representative angle in `[0, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalSet {
    pub directions: Vec<UnitVec2>,
    pub provenance: Provenance,
    /// Sentinel: every direction belongs to the set (zero-strain case).
    pub all_directions: bool,
}

impl NormalSet {
    /// Canonicalize, sort by angle mod pi, and merge directions closer than
    /// 1e-8 radians.
    pub fn new(dirs: Vec<UnitVec2>, provenance: Provenance) -> Self {
        let mut angles: Vec<f64> = dirs.iter().map(|d| d.angle_mod_pi()).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut merged: Vec<f64> = Vec::new();
        for t in angles {
            let dup = merged.iter().any(|m| {
                let d = (t - m).abs();
                d < 1e-8 || (std::f64::consts::PI - d).abs() < 1e-8
            });
            if !dup {
                merged.push(t);
            }
        }
        NormalSet {
            directions: merged.into_iter().map(UnitVec2::from_angle).collect(),
            provenance,
            all_directions: false,
        }
    }

    pub fn all(provenance: Provenance) -> Self {
        NormalSet {
            directions: Vec::new(),
            provenance,
            all_directions: true,
        }
    }

    /// Membership up to sign within an angular tolerance (radians).
    pub fn contains(&self, dir: UnitVec2, tol_rad: f64) -> bool {
        if self.all_directions {
            return true;
        }
        let t = dir.angle_mod_pi();
        self.directions.iter().any(|d| {
            let delta = (d.angle_mod_pi() - t).abs();
            delta <= tol_rad || (std::f64::consts::PI - delta).abs() <= tol_rad
        })
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        self.directions
            .iter()
            .map(|d| d.angle_mod_pi().to_degrees())
            .collect()
    }
}

/// Normals of zero-energy interfaces between a single linear well `E` and
/// the zero strain: two directions when `det E < 0`, one when `det E = 0`
/// (nonzero `E`), none when `det E > 0`, and the full circle for `E = 0`.
pub fn austenite_normals_linear(e: SymMat2) -> NormalSet {
    if e.frobenius_norm() == 0.0 {
        return NormalSet::all(Provenance::Custom);
    }
    match sym_rank_one_decompose(e) {
        None => NormalSet::new(Vec::new(), Provenance::Custom),
        Some(_) => {
            // Collect every admissible normal (decompose returns the one with
            // the smaller representative angle; reconstruct both from the
            // eigensystem for the det < 0 case).
            let tol = 1e-12 * e.frobenius_norm_sq().max(1.0);
            let (l1, u1, l2, u2) = e.eigen();
            let mut dirs = Vec::new();
            if e.det() < -tol {
                let alpha = (l2.max(0.0) / -l1.min(0.0)).sqrt().atan();
                let (s, c) = alpha.sin_cos();
                for sign in [1.0, -1.0] {
                    let tau = u2.get() * c + u1.get() * (sign * s);
                    dirs.push(UnitVec2::new(tau.perp()).unwrap());
                }
            } else {
                // det = 0 within tolerance: the kernel eigenvector is the
                // unique interface tangent.
                let tau = if l1.abs() <= l2.abs() { u1 } else { u2 };
                dirs.push(UnitVec2::new(tau.get().perp()).unwrap());
            }
            NormalSet::new(dirs, Provenance::Custom)
        }
    }
}

/// The six interface normals of the hexagonal-to-rhombic well set
/// (angles 15 + 30k degrees, k = 0..5, mod 180).
pub fn hex_rhombic_normal_set() -> NormalSet {
    let mut dirs = Vec::new();
    for k in 0..3 {
        let q = Mat2::rotation(2.0 * std::f64::consts::PI * k as f64 / 3.0);
        for v in [Vec2::new(1.0, 1.0), Vec2::new(1.0, -1.0)] {
            dirs.push(UnitVec2::new(q.apply(v)).unwrap());
        }
    }
    NormalSet {
        provenance: Provenance::LinearHex,
        ..NormalSet::new(dirs, Provenance::LinearHex)
    }
}

/// One solution of the twinning equation `Q U = Id + a (x) n`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwinningSolution {
    pub q: Mat2,
    pub a: Vec2,
    pub n: UnitVec2,
    /// Signed rotation angle of `q`.
    pub rotation_angle: f64,
    /// `U` itself is a rotation: `Q = U^T` and `a = 0` (n is conventional).
    pub degenerate: bool,
}

/// Solve `Q U = Id + a (x) n` over rotations `Q`.
///
/// The rotation angle satisfies `A cos t + B sin t = C` with `A = tr U`,
/// `B = U12 - U21`, `C = 1 + det U`; solutions exist iff `A^2 + B^2 >= C^2`.
/// A tangency (double root) is reported once. `det U <= 0` is an error.
pub fn twinning_with_identity(u: Mat2) -> Result<Vec<TwinningSolution>> {
    if !u.is_finite() {
        return Err(Error::NonFinite("twinning input"));
    }
    let det = u.det();
    if det <= 0.0 {
        return Err(Error::OrientationReversingWell(det));
    }
    let a_c = u.trace();
    let b_c = u.a12 - u.a21;
    let c_c = 1.0 + det;
    let r = (a_c * a_c + b_c * b_c).sqrt();
    let scale = u.frobenius_norm().max(1.0);

    if r < c_c * (1.0 - 1e-14) {
        return Ok(Vec::new());
    }
    let phi = b_c.atan2(a_c);
    let half = (c_c / r).clamp(-1.0, 1.0).acos();
    let mut thetas = vec![phi + half, phi - half];
    // Tangency: the two roots coincide.
    if (thetas[0] - thetas[1]).abs() < 1e-9 {
        thetas.truncate(1);
    }

    let mut out = Vec::new();
    for theta in thetas {
        // Normalize angle to (-pi, pi].
        let theta = theta.rem_euclid(2.0 * std::f64::consts::PI);
        let theta = if theta > std::f64::consts::PI {
            theta - 2.0 * std::f64::consts::PI
        } else {
            theta
        };
        let q = Mat2::rotation(theta);
        let m = q * u - Mat2::IDENTITY;
        if m.frobenius_norm() <= 1e-12 * scale {
            out.push(TwinningSolution {
                q,
                a: Vec2::ZERO,
                n: UnitVec2::e1(),
                rotation_angle: theta,
                degenerate: true,
            });
            continue;
        }
        // m is rank-one by construction; its rows are multiples of n^T.
        let r1 = Vec2::new(m.a11, m.a12);
        let r2 = Vec2::new(m.a21, m.a22);
        let n_dir = if r1.norm() >= r2.norm() { r1 } else { r2 };
        let n = UnitVec2::new(n_dir)?;
        let a = m.apply(n.get());
        let residual = (m - Mat2::outer(a, n.get())).frobenius_norm();
        if residual > 1e-10 * scale {
            return Err(Error::ConstructionFailed(format!(
                "twinning residual {residual:.3e} exceeds tolerance"
            )));
        }
        out.push(TwinningSolution {
            q,
            a,
            n,
            rotation_angle: theta,
            degenerate: false,
        });
    }
    out.sort_by(|x, y| x.rotation_angle.partial_cmp(&y.rotation_angle).unwrap());
    Ok(out)
}

/// Union of the twinning normals of all variants of a nonlinear well set
/// against the identity, deduplicated up to sign.
pub fn nonlinear_normal_set(w: &WellSet) -> Result<NormalSet> {
    let (variants, ngon, degenerate) = match w {
        WellSet::Nonlinear {
            variants,
            ngon,
            degenerate,
            ..
        } => (variants, *ngon, *degenerate),
        WellSet::Linear { .. } => {
            return Err(Error::ModeMismatch("nonlinear well set required".into()))
        }
    };
    if degenerate {
        return Err(Error::DegenerateWellSet(
            "unit stretch has no twinning interfaces with the identity".into(),
        ));
    }
    let mut dirs = Vec::new();
    for v in variants {
        for s in twinning_with_identity(*v)? {
            if !s.degenerate {
                dirs.push(s.n);
            }
        }
    }
    let provenance = match ngon {
        3 => Provenance::NonlinearN3,
        4 => Provenance::NonlinearN4,
        _ => Provenance::Custom,
    };
    Ok(NormalSet::new(dirs, provenance))
}

/// Result of minimizing the pointwise boundary incompatibility over an arc.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IncompatibilityResult {
    /// Minimal incompatibility value over the arc.
    pub d: f64,
    /// Arc parameter attaining the minimum.
    pub argmin_point: f64,
    /// Well index attaining the minimum there.
    pub argmin_well_index: usize,
    pub mode: WellMode,
}

/// Pointwise incompatibility of a tangent direction with one well:
/// `|tau . E_j tau|` in the linear theory, `||U_j tau| - 1|` in the
/// nonlinear theory.
pub fn pointwise_incompatibility(tau: UnitVec2, w: &WellSet, j: usize) -> Result<f64> {
    match w {
        WellSet::Linear { strains } => {
            let e = strains
                .get(j)
                .ok_or_else(|| Error::OutOfRange(format!("well index {j} out of range")))?;
            Ok(e.quad_form(tau.get()).abs())
        }
        WellSet::Nonlinear { variants, .. } => {
            let u = variants
                .get(j)
                .ok_or_else(|| Error::OutOfRange(format!("well index {j} out of range")))?;
            Ok((u.apply(tau.get()).norm() - 1.0).abs())
        }
    }
}

/// Nonlinear pointwise incompatibility in its unreduced form
/// `min_{Q in SO(2)} |Q U_j tau - tau|`, minimized by an angle grid plus
/// golden-section refinement. Used as an independent cross-check of the
/// closed form `||U_j tau| - 1|`.
pub fn pointwise_incompatibility_fullform(tau: UnitVec2, u: Mat2, grid_n: usize) -> f64 {
    let t = tau.get();
    let f = |theta: f64| ((Mat2::rotation(theta) * u).apply(t) - t).norm();
    let mut best = f64::INFINITY;
    let mut best_theta = 0.0;
    for k in 0..grid_n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / grid_n as f64;
        let v = f(theta);
        if v < best {
            best = v;
            best_theta = theta;
        }
    }
    let half = std::f64::consts::PI / grid_n as f64;
    let (_, v) = golden_section_min(&f, best_theta - half, best_theta + half, 200);
    v.min(best)
}

/// Minimize the pointwise incompatibility over a boundary arc and all wells.
///
/// Samples at least 2048 parameters, then refines around the best sample by
/// golden section per well. Zero exactly when some sampled tangent is a
/// zero-energy interface direction of some well.
pub fn incompatibility_constant(
    patch: &BoundaryPatch,
    w: &WellSet,
) -> Result<IncompatibilityResult> {
    let (t0, t1) = patch.interval();
    if !(t1 > t0) {
        return Err(Error::EmptyPatch);
    }
    let nwells = match w {
        WellSet::Linear { strains } => strains.len(),
        WellSet::Nonlinear { variants, .. } => variants.len(),
    };
    if nwells == 0 {
        return Err(Error::DegenerateWellSet("empty well set".into()));
    }

    let n = 2048usize;
    let mut best = f64::INFINITY;
    let mut best_t = t0;
    let mut best_j = 0usize;
    for k in 0..=n {
        let t = t0 + (t1 - t0) * k as f64 / n as f64;
        let tau = patch.eval(t)?.tau;
        for j in 0..nwells {
            let v = pointwise_incompatibility(tau, w, j)?;
            if v < best {
                best = v;
                best_t = t;
                best_j = j;
            }
        }
    }
    // Golden refinement around the best sample, per well.
    let half = (t1 - t0) / n as f64;
    for j in 0..nwells {
        let f = |t: f64| {
            let tc = t.clamp(t0, t1);
            match patch.eval(tc) {
                Ok(fr) => pointwise_incompatibility(fr.tau, w, j).unwrap_or(f64::INFINITY),
                Err(_) => f64::INFINITY,
            }
        };
        let (tj, vj) =
            golden_section_min(&f, (best_t - half).max(t0), (best_t + half).min(t1), 120);
        if vj < best {
            best = vj;
            best_t = tj.clamp(t0, t1);
            best_j = j;
        }
    }
    // Certify: recompute at the reported argmin.
    let tau = patch.eval(best_t)?.tau;
    let recomputed = pointwise_incompatibility(tau, w, best_j)?;
    if (recomputed - best).abs() > 1e-10 * best.abs().max(1.0) {
        return Err(Error::ConstructionFailed(format!(
            "incompatibility argmin does not certify: {recomputed} vs {best}"
        )));
    }
    Ok(IncompatibilityResult {
        d: best,
        argmin_point: best_t,
        argmin_well_index: best_j,
        mode: w.mode(),
    })
}

/// The four lower bounds on boundary-trace oscillation at scale `d * length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationThresholds {
    pub nonlinear_general: f64,
    pub linear_general: f64,
    pub square_nonlinear: f64,
    pub square_linear: f64,
}

/// Oscillation thresholds implied by an incompatibility constant `d` on an
/// arc of the given length.
pub fn oscillation_thresholds(d: f64, length: f64) -> Result<OscillationThresholds> {
    if !(d >= 0.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need d >= 0 and length > 0 (got d = {d}, length = {length})"
        )));
    }
    let dl = d * length;
    Ok(OscillationThresholds {
        nonlinear_general: dl / 208.0,
        linear_general: dl / (64.0 * 17.0 * 9.0 * 2.0f64.sqrt()),
        square_nonlinear: dl / 104.0,
        square_linear: dl / 104.0,
    })
}

/// Oscillation (diameter) of sampled boundary values: the maximum of
/// `|v(x1) - v(x2)|` over all sample pairs, optionally after subtracting the
/// identity map. Exact for piecewise-affine traces sampled at their knots.
pub fn trace_oscillation(points: &[Vec2], values: &[Vec2], subtract_identity: bool) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "points ({}) and values ({}) must have equal length",
            points.len(),
            values.len()
        )));
    }
    if values.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two trace samples".into(),
        ));
    }
    let vs: Vec<Vec2> = if subtract_identity {
        points.iter().zip(values).map(|(p, v)| *v - *p).collect()
    } else {
        values.to_vec()
    };
    let mut best: f64 = 0.0;
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            best = best.max((vs[i] - vs[j]).norm());
        }
    }
    Ok(best)
}

/// Which scaling envelope to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    Linear,
    Log,
}

/// The two scaling envelopes: `min(eps, 1)` and `min(1, eps(|ln eps| + 1))`.
pub fn lower_envelope(eps: f64, kind: EnvelopeKind) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must be positive"
        )));
    }
    Ok(match kind {
        EnvelopeKind::Linear => eps.min(1.0),
        EnvelopeKind::Log => (eps * (eps.ln().abs() + 1.0)).min(1.0),
    })
}
