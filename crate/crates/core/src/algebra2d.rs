//! Exact small-dimension linear algebra: 2x2 matrices, symmetrization,
//! rotations, symmetrized rank-one decomposition, and the closest-rotation
//! (Procrustes) distance used by the nonlinear well distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::sym_eigen_2x2;

/// A point or direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite Vec2");
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Counterclockwise quarter turn: `J v = (-y, x)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// 2D cross product `self.x * o.y - self.y * o.x`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Angle reduced modulo pi into `[0, pi)`; directions `v` and `-v` agree.
    pub fn angle_mod_pi(self) -> f64 {
        let mut t = self.angle() % std::f64::consts::PI;
        if t < 0.0 {
            t += std::f64::consts::PI;
        }
        if t >= std::f64::consts::PI {
            t -= std::f64::consts::PI;
        }
        t
    }

    pub fn normalized(self) -> Result<UnitVec2> {
        UnitVec2::new(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        *self = *self + o;
    }
}

impl std::ops::SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        *self = *self - o;
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// A unit direction; the constructor normalizes and rejects zero vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec2", into = "Vec2")]
pub struct UnitVec2(Vec2);

impl UnitVec2 {
    pub fn new(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(UnitVec2(Vec2::new(v.x / n, v.y / n)))
    }

    pub fn from_angle(theta: f64) -> Self {
        UnitVec2(Vec2::from_angle(theta))
    }

    /// Wrap a vector already known to be unit (debug-checked only); unlike
    /// [`UnitVec2::new`] this never rescales, so exact components survive.
    pub fn new_raw(v: Vec2) -> Self {
        debug_assert!(
            (v.norm() - 1.0).abs() < 1e-9,
            "new_raw expects a unit vector"
        );
        UnitVec2(v)
    }

    pub fn e1() -> Self {
        UnitVec2(Vec2::new(1.0, 0.0))
    }

    pub fn e2() -> Self {
        UnitVec2(Vec2::new(0.0, 1.0))
    }

    pub fn get(self) -> Vec2 {
        self.0
    }

    pub fn perp(self) -> UnitVec2 {
        UnitVec2(self.0.perp())
    }

    pub fn angle(self) -> f64 {
        self.0.angle()
    }

    pub fn angle_mod_pi(self) -> f64 {
        self.0.angle_mod_pi()
    }

    /// Canonical mod-sign representative: nonnegative first component,
    /// positive second component if the first vanishes.
    pub fn canonical_sign(self) -> UnitVec2 {
        let v = self.0;
        if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
            UnitVec2(-v)
        } else {
            UnitVec2(v)
        }
    }
}

impl TryFrom<Vec2> for UnitVec2 {
    type Error = Error;
    fn try_from(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "unit vector norm {n} deviates from 1"
            )));
        }
        UnitVec2::new(v)
    }
}

impl From<UnitVec2> for Vec2 {
    fn from(u: UnitVec2) -> Vec2 {
        u.0
    }
}

/// A general 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        a11: 0.0,
        a12: 0.0,
        a21: 0.0,
        a22: 0.0,
    };
    pub const IDENTITY: Mat2 = Mat2 {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
    };
    /// Counterclockwise quarter turn; the generator of the skew part.
    pub const J: Mat2 = Mat2 {
        a11: 0.0,
        a12: -1.0,
        a21: 1.0,
        a22: 0.0,
    };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        debug_assert!(
            a11.is_finite() && a12.is_finite() && a21.is_finite() && a22.is_finite(),
            "non-finite Mat2"
        );
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    /// Counterclockwise rotation by `phi`.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// Rank-one product `a ⊗ b = a bᵗ`.
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Mat2::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn frobenius_norm_sq(self) -> f64 {
        self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22
    }

    pub fn frobenius_norm(self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_inner(self, o: Mat2) -> f64 {
        self.a11 * o.a11 + self.a12 * o.a12 + self.a21 * o.a21 + self.a22 * o.a22
    }

    /// Checked inverse; the tolerance is relative to the matrix scale.
    pub fn inverse(self) -> Result<Mat2> {
        let det = self.det();
        let tol = 1e-12 * self.frobenius_norm_sq().max(1.0);
        if det.abs() <= tol {
            return Err(Error::Singular {
                det: det.abs(),
                tol,
            });
        }
        Ok(Mat2::new(
            self.a22 / det,
            -self.a12 / det,
            -self.a21 / det,
            self.a11 / det,
        ))
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }

    /// Symmetric part `(M + Mᵗ)/2`.
    pub fn sym(self) -> SymMat2 {
        SymMat2::new(self.a11, 0.5 * (self.a12 + self.a21), self.a22)
    }

    /// Scalar `w` of the skew part `w·J`.
    pub fn skew_scalar(self) -> f64 {
        0.5 * (self.a21 - self.a12)
    }

    pub fn is_finite(self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    /// True when the matrix is a rotation within `tol` (Frobenius).
    pub fn is_rotation(self, tol: f64) -> bool {
        let gram = self.transpose() * self;
        (gram - Mat2::IDENTITY).frobenius_norm() <= tol && self.det() > 0.0
    }

    /// Singular values `(sigma_max, sigma_min)`, both nonnegative.
    pub fn singular_values(self) -> (f64, f64) {
        let s = self.frobenius_norm_sq();
        let d = self.det();
        let disc = (s * s - 4.0 * d * d).max(0.0).sqrt();
        let hi = ((s + disc) / 2.0).max(0.0).sqrt();
        let lo = ((s - disc) / 2.0).max(0.0).sqrt();
        (hi, lo)
    }
}

impl std::ops::Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + o.a11,
            self.a12 + o.a12,
            self.a21 + o.a21,
            self.a22 + o.a22,
        )
    }
}

impl std::ops::Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - o.a11,
            self.a12 - o.a12,
            self.a21 - o.a21,
            self.a22 - o.a22,
        )
    }
}

impl std::ops::Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::new(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl std::ops::AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl std::ops::SubAssign for Mat2 {
    fn sub_assign(&mut self, o: Mat2) {
        *self = *self - o;
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl std::ops::Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

/// A symmetric 2x2 matrix; `a21` is implied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
    };
    pub const IDENTITY: SymMat2 = SymMat2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        debug_assert!(
            a11.is_finite() && a12.is_finite() && a22.is_finite(),
            "non-finite SymMat2"
        );
        SymMat2 { a11, a12, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        SymMat2::new(d1, 0.0, d2)
    }

    /// Checked conversion; rejects skew content above the relative tolerance.
    pub fn try_from_mat(m: Mat2) -> Result<Self> {
        let skew = (m.a12 - m.a21).abs();
        let tol = 1e-12 * m.frobenius_norm().max(1.0);
        if skew > tol {
            return Err(Error::NotSymmetric { skew, tol });
        }
        Ok(m.sym())
    }

    /// Symmetrized rank-one product `a ⊙ n = (a nᵗ + n aᵗ)/2`.
    pub fn sym_outer(a: Vec2, n: Vec2) -> Self {
        SymMat2::new(a.x * n.x, 0.5 * (a.x * n.y + a.y * n.x), a.y * n.y)
    }

    pub fn to_mat(self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a12, self.a22)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn frobenius_norm_sq(self) -> f64 {
        self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22
    }

    pub fn frobenius_norm(self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a12 * v.x + self.a22 * v.y,
        )
    }

    /// Quadratic form `v · (E v)`.
    pub fn quad_form(self, v: Vec2) -> f64 {
        v.dot(self.apply(v))
    }

    /// Conjugation `Q E Qᵗ` (symmetric for orthogonal or general Q E Qᵗ with Q rotation/reflection).
    pub fn conjugate(self, q: Mat2) -> SymMat2 {
        (q * self.to_mat() * q.transpose()).sym()
    }

    /// Eigenpairs `(l1, v1, l2, v2)` with `l1 <= l2`, orthonormal vectors.
    pub fn eigen(self) -> (f64, UnitVec2, f64, UnitVec2) {
        let (l1, v1, l2, v2) = sym_eigen_2x2(self.a11, self.a12, self.a22);
        (
            l1,
            UnitVec2(Vec2::new(v1[0], v1[1])),
            l2,
            UnitVec2(Vec2::new(v2[0], v2[1])),
        )
    }

    pub fn is_finite(self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }
}

impl std::ops::Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl std::ops::Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl std::ops::Neg for SymMat2 {
    type Output = SymMat2;
    fn neg(self) -> SymMat2 {
        SymMat2::new(-self.a11, -self.a12, -self.a22)
    }
}

impl std::ops::Mul<f64> for SymMat2 {
    type Output = SymMat2;
    fn mul(self, s: f64) -> SymMat2 {
        SymMat2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }
}

/// Relative determinant tolerance deciding symmetrized rank-one decomposability.
pub fn decomposability_tol(e: SymMat2) -> f64 {
    1e-12 * e.frobenius_norm_sq().max(1.0)
}

/// Decompose a symmetric matrix as `E = a ⊙ n` with `n` a unit vector.
///
/// Such a decomposition exists iff `det E <= 0` (up to tolerance). Returns
/// `None` for positive determinant. Of the generically two admissible normal
/// directions the one with smaller mod-pi angle is returned, with the sign of
/// `n` canonicalized (nonnegative first component, positive second if the
/// first vanishes) and `a` determined by `n`.
pub fn sym_rank_one_decompose(e: SymMat2) -> Option<(Vec2, UnitVec2)> {
    if e.det() > decomposability_tol(e) {
        return None;
    }
    if e == SymMat2::ZERO {
        return Some((Vec2::ZERO, UnitVec2::e1()));
    }
    let (l1, u1, l2, u2) = e.eigen();
    // Effective signs: l1 <= 0 <= l2 up to the determinant tolerance.
    let lneg = l1.min(0.0);
    let lpos = l2.max(0.0);
    let u1 = u1.get();
    let u2 = u2.get();

    // Zero-strain tangents tau: solutions of lpos cos^2(alpha) + lneg sin^2(alpha) = 0
    // for tau = u2 cos(alpha) +/- u1 sin(alpha).
    let tangents: Vec<Vec2> = if lneg == 0.0 {
        // E is PSD rank-one (det within tolerance): the kernel direction.
        vec![u1]
    } else if lpos == 0.0 {
        vec![u2]
    } else {
        let alpha = (lpos / -lneg).sqrt().atan();
        let (s, c) = alpha.sin_cos();
        vec![u2 * c + u1 * s, u2 * c - u1 * s]
    };

    let mut best: Option<(f64, Vec2, UnitVec2)> = None;
    for tau in tangents {
        let n = match UnitVec2::new(tau.perp()) {
            Ok(n) => n.canonical_sign(),
            Err(_) => continue,
        };
        let nv = n.get();
        let en = e.apply(nv);
        let a = en * 2.0 - nv * nv.dot(en);
        let angle = n.angle_mod_pi();
        match best {
            Some((best_angle, _, _)) if angle >= best_angle => {}
            _ => best = Some((angle, a, n)),
        }
    }
    best.map(|(_, a, n)| (a, n))
}

/// Frobenius distance from `F` to the rotation orbit `SO(2)·U`, in closed
/// form: `min_Q ‖F − QU‖² = ‖F‖² + ‖U‖² − 2·sqrt((tr M)² + (M21 − M12)²)`
/// with `M = F Uᵗ`.
pub fn dist_to_rotated_well(f: Mat2, u: Mat2) -> f64 {
    let m = f * u.transpose();
    let t = m.trace();
    let s = m.a21 - m.a12;
    let d2 = f.frobenius_norm_sq() + u.frobenius_norm_sq() - 2.0 * (t * t + s * s).sqrt();
    d2.max(0.0).sqrt()
}

/// The rotation attaining `dist_to_rotated_well` (any maximizer of
/// `<F Uᵗ, Q>`); returns `Id` when `F Uᵗ` has no preferred phase.
pub fn closest_rotation_factor(f: Mat2, u: Mat2) -> Mat2 {
    let m = f * u.transpose();
    let t = m.trace();
    let s = m.a21 - m.a12;
    let r = (t * t + s * s).sqrt();
    if r == 0.0 {
        return Mat2::IDENTITY;
    }
    // Q = [[c, -s], [s, c]] maximizing c*t + s*s_term.
    let c = t / r;
    let sn = s / r;
    Mat2::new(c, -sn, sn, c)
}
