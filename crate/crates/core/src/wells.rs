//! Well sets: the stress-free strains (linear theory) or deformation
//! gradients (nonlinear theory) of the martensite variants, together with the
//! lattice point groups that generate them.

use serde::{Deserialize, Serialize};

use crate::algebra2d::{dist_to_rotated_well, Mat2, SymMat2};
use crate::error::{Error, Result};

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Which energy the well set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellMode {
    /// Geometrically linear: wells are symmetric strain matrices.
    Linear,
    /// Geometrically nonlinear: wells are SO(2)-orbits of deformation gradients.
    Nonlinear,
}

/// Selector for the two rotations making an oblique well compatible with the
/// identity; `Minus` is the branch with the smaller signed rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

/// A finite family of energy wells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WellSet {
    Linear {
        strains: Vec<SymMat2>,
    },
    Nonlinear {
        base: Mat2,
        variants: Vec<Mat2>,
        /// Rotation `Q(a)` making `Q(a)·base` rank-one compatible with `Id`.
        rotation_branch: Mat2,
        a: f64,
        ngon: u32,
        point_group: Vec<Mat2>,
        /// True when `a = 1` collapses all variants to the identity.
        degenerate: bool,
    },
}

impl WellSet {
    pub fn mode(&self) -> WellMode {
        match self {
            WellSet::Linear { .. } => WellMode::Linear,
            WellSet::Nonlinear { .. } => WellMode::Nonlinear,
        }
    }

    pub fn linear_strains(&self) -> Result<&[SymMat2]> {
        match self {
            WellSet::Linear { strains } => Ok(strains),
            WellSet::Nonlinear { .. } => {
                Err(Error::ModeMismatch("expected a linear well set".into()))
            }
        }
    }

    pub fn nonlinear_variants(&self) -> Result<&[Mat2]> {
        match self {
            WellSet::Nonlinear { variants, .. } => Ok(variants),
            WellSet::Linear { .. } => {
                Err(Error::ModeMismatch("expected a nonlinear well set".into()))
            }
        }
    }

    /// Distance from a strain to the nearest linear well.
    pub fn dist_strain(&self, e: SymMat2) -> Result<f64> {
        let strains = self.linear_strains()?;
        Ok(strains
            .iter()
            .map(|w| (e - *w).frobenius_norm())
            .fold(f64::INFINITY, f64::min))
    }

    /// Distance from a deformation gradient to the nearest rotated well.
    pub fn dist_gradient(&self, f: Mat2) -> Result<f64> {
        match self {
            WellSet::Nonlinear {
                variants,
                rotation_branch,
                ..
            } => Ok(variants
                .iter()
                .map(|u| dist_to_rotated_well(f, *rotation_branch * *u))
                .fold(f64::INFINITY, f64::min)),
            WellSet::Linear { .. } => {
                Err(Error::ModeMismatch("expected a nonlinear well set".into()))
            }
        }
    }

    /// A copy of a linear well set with the zero strain (austenite) appended
    /// after the variants. Mixed austenite/martensite states such as simple
    /// laminates are stress-free relative to this augmented set, while
    /// relative to the martensite-only set the austenite phase pays the full
    /// transformation penalty.
    pub fn with_zero_strain(&self) -> Result<WellSet> {
        let strains = self.linear_strains()?;
        let mut out = strains.to_vec();
        out.push(SymMat2::ZERO);
        Ok(WellSet::Linear { strains: out })
    }

    /// Index of the nearest linear well.
    pub fn nearest_strain_index(&self, e: SymMat2) -> Result<usize> {
        let strains = self.linear_strains()?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, w) in strains.iter().enumerate() {
            let d = (e - *w).frobenius_norm();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        Ok(best)
    }
}

/// Gradient-valued argument for [`dist_to_well_set`]: a full matrix for the
/// nonlinear theory, a symmetric strain for the linear theory.
#[derive(Debug, Clone, Copy)]
pub enum WellArg {
    Full(Mat2),
    Strain(SymMat2),
}

/// Distance from a gradient value to a well set; the argument kind must
/// match the well-set mode.
pub fn dist_to_well_set(g: WellArg, w: &WellSet) -> Result<f64> {
    match (g, w) {
        (WellArg::Strain(e), WellSet::Linear { .. }) => w.dist_strain(e),
        (WellArg::Full(f), WellSet::Nonlinear { .. }) => w.dist_gradient(f),
        _ => Err(Error::ModeMismatch(
            "argument kind does not match well-set mode".into(),
        )),
    }
}

/// The three traceless strains of the hexagonal-to-rhombic transformation.
pub fn hex_rhombic_strains() -> [SymMat2; 3] {
    [
        SymMat2::new(0.5, -SQRT3 / 2.0, -0.5),
        SymMat2::new(-1.0, 0.0, 1.0),
        SymMat2::new(0.5, SQRT3 / 2.0, -0.5),
    ]
}

/// Linear well set of the hexagonal-to-rhombic transformation.
pub fn hex_rhombic_wells() -> WellSet {
    WellSet::Linear {
        strains: hex_rhombic_strains().to_vec(),
    }
}

/// Lattice point-group selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointGroupKind {
    Square,
    Hexagonal,
}

/// The fixed representative lists of the square and hexagonal point groups
/// (one representative per +/- coset, which is all conjugation can see).
pub fn point_group(kind: PointGroupKind) -> Vec<Mat2> {
    match kind {
        PointGroupKind::Square => vec![
            Mat2::IDENTITY,
            Mat2::new(-1.0, 0.0, 0.0, 1.0),
            Mat2::new(0.0, -1.0, 1.0, 0.0),
            Mat2::new(0.0, 1.0, 1.0, 0.0),
        ],
        PointGroupKind::Hexagonal => vec![
            Mat2::IDENTITY,
            Mat2::new(-1.0, 0.0, 0.0, 1.0),
            Mat2::new(0.5, SQRT3 / 2.0, -SQRT3 / 2.0, 0.5),
            Mat2::new(-0.5, SQRT3 / 2.0, SQRT3 / 2.0, 0.5),
            Mat2::new(0.5, -SQRT3 / 2.0, SQRT3 / 2.0, 0.5),
            Mat2::new(0.5, SQRT3 / 2.0, SQRT3 / 2.0, -0.5),
        ],
    }
}

/// Dihedral symmetry group of a regular n-gon (2n elements), used for
/// n-gon families other than the square and hexagonal special cases.
fn dihedral_group(n: u32) -> Vec<Mat2> {
    let mut g = Vec::with_capacity(2 * n as usize);
    let mirror = Mat2::diag(1.0, -1.0);
    for k in 0..n {
        let q = Mat2::rotation(2.0 * std::f64::consts::PI * k as f64 / n as f64);
        g.push(q);
        g.push(q * mirror);
    }
    g
}

/// Base oblique deformation of the n-gon-to-oblique family:
/// `U1 = [[a, (a^{-1}-a)/tan(phi)], [0, a^{-1}]]` with `phi = (n-2)pi/(2n)`.
pub fn oblique_base(ngon: u32, a: f64) -> Result<Mat2> {
    if ngon < 3 {
        return Err(Error::InvalidParameter(format!("ngon = {ngon} < 3")));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
    }
    let phi = (ngon as f64 - 2.0) / (2.0 * ngon as f64) * std::f64::consts::PI;
    Ok(Mat2::new(a, (1.0 / a - a) / phi.tan(), 0.0, 1.0 / a))
}

/// Construct the nonlinear oblique well family for a regular n-gon lattice.
///
/// Variants are produced by conjugating the base with the lattice point
/// group; the rotation branch is the solution of the twinning equation with
/// the identity selected by `branch` (two rotations exist for `a != 1`).
/// `a = 1` yields the degenerate single-well set `{Id}`.
pub fn oblique_wells(ngon: u32, a: f64, branch: Branch) -> Result<WellSet> {
    let base = oblique_base(ngon, a)?;
    let group = match ngon {
        4 => point_group(PointGroupKind::Square),
        3 => point_group(PointGroupKind::Hexagonal),
        _ => dihedral_group(ngon),
    };
    let degenerate = (a - 1.0).abs() < 1e-14;

    let mut variants: Vec<Mat2> = Vec::new();
    for p in &group {
        let v = *p * base * p.transpose();
        if !variants.iter().any(|w| (*w - v).frobenius_norm() <= 1e-10) {
            variants.push(v);
        }
    }

    let rotation_branch = if degenerate {
        Mat2::IDENTITY
    } else {
        let sols = crate::compatibility::twinning_with_identity(base)?;
        let mut angles: Vec<(f64, Mat2)> = sols
            .iter()
            .filter(|s| !s.degenerate)
            .map(|s| (s.rotation_angle, s.q))
            .collect();
        if angles.is_empty() {
            return Err(Error::DegenerateWellSet(format!(
                "no rotation makes the base well compatible with the identity (ngon {ngon}, a {a})"
            )));
        }
        angles.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        match branch {
            Branch::Minus => angles.first().unwrap().1,
            Branch::Plus => angles.last().unwrap().1,
        }
    };

    Ok(WellSet::Nonlinear {
        base,
        variants,
        rotation_branch,
        a,
        ngon,
        point_group: group,
        degenerate,
    })
}
