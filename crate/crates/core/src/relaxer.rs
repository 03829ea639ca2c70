//! Finite-difference discretization and numerical minimization of the
//! elastic-plus-interfacial energies under Dirichlet data, with slice
//! diagnostics and interpolation from piecewise-affine fields.
//!
//! The minimizer only brackets the infimum from above: it reports the best
//! energy found over deterministic multi-starts, with every accepted
//! iteration nonincreasing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra2d::{closest_rotation_factor, dist_to_rotated_well, Mat2, SymMat2, Vec2};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::microstructure::{EnergyBreakdown, FieldMode, PAField};
use crate::numerics::pairwise_sum;
use crate::wells::{WellMode, WellSet};

/// Uniform cell grid covering a polygonal domain's bounding box, with a
/// per-cell inside mask; nodes live at cell corners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Vec2,
    inside: Vec<bool>,
}

impl Grid {
    /// Build a grid for `domain` with `resolution` cells across the longer
    /// bounding-box side; both axes are clamped to at least 8 cells. A cell
    /// counts as inside when its four corners and its center lie in the
    /// polygon (boundary-inclusive).
    pub fn for_polygon(domain: &Polygon, resolution: usize) -> Result<Grid> {
        if resolution < 8 {
            return Err(Error::InvalidParameter(
                "grid resolution must be at least 8 cells".into(),
            ));
        }
        let vs = domain.vertices();
        let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in vs {
            lo_x = lo_x.min(v.x);
            lo_y = lo_y.min(v.y);
            hi_x = hi_x.max(v.x);
            hi_y = hi_y.max(v.y);
        }
        let w = hi_x - lo_x;
        let hgt = hi_y - lo_y;
        let h = w.max(hgt) / resolution as f64;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::BadPolygon("degenerate bounding box".into()));
        }
        let nx = ((w / h - 1e-12).ceil() as usize).max(8);
        let ny = ((hgt / h - 1e-12).ceil() as usize).max(8);
        let origin = Vec2::new(lo_x, lo_y);
        let mut inside = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p00 = origin + Vec2::new(i as f64 * h, j as f64 * h);
                let probe = [
                    p00,
                    p00 + Vec2::new(h, 0.0),
                    p00 + Vec2::new(0.0, h),
                    p00 + Vec2::new(h, h),
                    p00 + Vec2::new(0.5 * h, 0.5 * h),
                ];
                inside[j * nx + i] = probe.iter().all(|&p| domain.contains(p));
            }
        }
        if !inside.iter().any(|&b| b) {
            return Err(Error::GridMismatch(
                "no grid cell lies inside the domain; increase the resolution".into(),
            ));
        }
        Ok(Grid {
            nx,
            ny,
            h,
            origin,
            inside,
        })
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node_pos(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn cell_inside(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.nx + i]
    }

    /// Total masked area.
    pub fn inside_area(&self) -> f64 {
        self.inside.iter().filter(|&&b| b).count() as f64 * self.h * self.h
    }

    /// True when the node touches at least one inside cell.
    fn node_touches_inside(&self, i: usize, j: usize) -> bool {
        self.incident_cells(i, j)
            .any(|(ci, cj)| self.cell_inside(ci, cj))
    }

    /// True when the node touches an inside cell and also borders a missing
    /// or outside cell; such nodes carry the Dirichlet data.
    fn node_on_boundary(&self, i: usize, j: usize) -> bool {
        if !self.node_touches_inside(i, j) {
            return false;
        }
        let mut incident = 0;
        let mut inside = 0;
        for di in [-1i64, 0] {
            for dj in [-1i64, 0] {
                let ci = i as i64 + di;
                let cj = j as i64 + dj;
                incident += 1;
                if ci >= 0
                    && cj >= 0
                    && (ci as usize) < self.nx
                    && (cj as usize) < self.ny
                    && self.cell_inside(ci as usize, cj as usize)
                {
                    inside += 1;
                }
            }
        }
        inside < incident
    }

    fn incident_cells(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        [(-1i64, -1i64), (0, -1), (-1, 0), (0, 0)]
            .into_iter()
            .filter_map(move |(di, dj)| {
                let ci = i as i64 + di;
                let cj = j as i64 + dj;
                (ci >= 0 && cj >= 0 && (ci as usize) < nx && (cj as usize) < ny)
                    .then_some((ci as usize, cj as usize))
            })
    }
}

/// Nodal field on a [`Grid`]: displacements (linear mode) or deformations
/// (nonlinear mode), with per-node Dirichlet pins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteField {
    pub grid: Grid,
    pub mode: FieldMode,
    pub values: Vec<Vec2>,
    pub fixed: Vec<Option<Vec2>>,
}

impl DiscreteField {
    /// Field with Dirichlet data `bc` (a total function of position) pinned
    /// on every node that is not a free interior degree of freedom: boundary
    /// nodes of the masked region and nodes not touching any inside cell.
    /// Free nodes start from the mode's natural background (zero
    /// displacement, identity deformation).
    pub fn with_boundary<F: Fn(Vec2) -> Vec2>(grid: Grid, mode: FieldMode, bc: F) -> DiscreteField {
        let n = grid.n_nodes();
        let mut values = vec![Vec2::ZERO; n];
        let mut fixed = vec![None; n];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let id = grid.node_index(i, j);
                let p = grid.node_pos(i, j);
                let free = grid.node_touches_inside(i, j) && !grid.node_on_boundary(i, j);
                if free {
                    values[id] = match mode {
                        FieldMode::Displacement => Vec2::ZERO,
                        FieldMode::Deformation => p,
                    };
                } else {
                    let v = bc(p);
                    values[id] = v;
                    fixed[id] = Some(v);
                }
            }
        }
        DiscreteField {
            grid,
            mode,
            values,
            fixed,
        }
    }

    /// Austenite data: zero displacement, or the identity deformation.
    pub fn austenite(grid: Grid, mode: FieldMode) -> DiscreteField {
        match mode {
            FieldMode::Displacement => Self::with_boundary(grid, mode, |_| Vec2::ZERO),
            FieldMode::Deformation => Self::with_boundary(grid, mode, |p| p),
        }
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.grid.n_nodes();
        if self.values.len() != n || self.fixed.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} nodes expected, got {} values / {} pins",
                n,
                self.values.len(),
                self.fixed.len()
            )));
        }
        Ok(())
    }
}

/// Cell-centered gradient of the bilinear nodal interpolant; exact for
/// globally affine fields.
fn cell_gradient(grid: &Grid, values: &[Vec2], i: usize, j: usize) -> Mat2 {
    let v00 = values[grid.node_index(i, j)];
    let v10 = values[grid.node_index(i + 1, j)];
    let v01 = values[grid.node_index(i, j + 1)];
    let v11 = values[grid.node_index(i + 1, j + 1)];
    let inv = 1.0 / (2.0 * grid.h);
    let gx = ((v10 + v11) - (v00 + v01)) * inv;
    let gy = ((v01 + v11) - (v00 + v10)) * inv;
    Mat2::new(gx.x, gy.x, gx.y, gy.y)
}

fn all_gradients(grid: &Grid, values: &[Vec2]) -> Vec<Mat2> {
    let mut g = vec![Mat2::ZERO; grid.nx * grid.ny];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if grid.cell_inside(i, j) {
                g[j * grid.nx + i] = cell_gradient(grid, values, i, j);
            }
        }
    }
    g
}

/// Huber smoothing of `|t|`: quadratic below `delta`, affine above, C¹ at
/// the junction.
pub fn huber(t: f64, delta: f64) -> f64 {
    let t = t.abs();
    if t <= delta {
        0.5 * t * t / delta
    } else {
        t - 0.5 * delta
    }
}

fn check_mode(mode: FieldMode, wells: &WellSet) -> Result<()> {
    let ok = matches!(
        (mode, wells.mode()),
        (FieldMode::Displacement, WellMode::Linear) | (FieldMode::Deformation, WellMode::Nonlinear)
    );
    if ok {
        Ok(())
    } else {
        Err(Error::ModeMismatch(
            "displacement fields require linear wells, deformation fields nonlinear wells".into(),
        ))
    }
}

fn well_distance(g: Mat2, mode: FieldMode, wells: &WellSet) -> Result<f64> {
    match mode {
        FieldMode::Displacement => wells.dist_strain(g.sym()),
        FieldMode::Deformation => wells.dist_gradient(g),
    }
}

/// Per-cell combined forward-difference norm of the gradient field; the
/// isotropic total-variation density `t_c` such that
/// `surface = sum_c huber(t_c, delta) * h`.
fn tv_norms(grid: &Grid, grads: &[Mat2]) -> Vec<f64> {
    let mut t = vec![0.0; grid.nx * grid.ny];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.cell_inside(i, j) {
                continue;
            }
            let c = j * grid.nx + i;
            let mut s = 0.0;
            if i + 1 < grid.nx && grid.cell_inside(i + 1, j) {
                s += (grads[c + 1] - grads[c]).frobenius_norm_sq();
            }
            if j + 1 < grid.ny && grid.cell_inside(i, j + 1) {
                s += (grads[c + grid.nx] - grads[c]).frobenius_norm_sq();
            }
            t[c] = s.sqrt();
        }
    }
    t
}

/// Discrete energy of a nodal field: cell-centered well distances plus the
/// Huber-smoothed isotropic total variation of the gradient field. The
/// breakdown is `eps`-free; weight the surface part with
/// [`EnergyBreakdown::total`].
pub fn discrete_energy(
    f: &DiscreteField,
    wells: &WellSet,
    cfg: &RelaxConfig,
) -> Result<EnergyBreakdown> {
    f.check_shape()?;
    check_mode(f.mode, wells)?;
    cfg.validate()?;
    let grid = &f.grid;
    let grads = all_gradients(grid, &f.values);
    let tv = tv_norms(grid, &grads);
    let area = grid.h * grid.h;
    let mut elastic_terms = Vec::new();
    let mut surface_terms = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.cell_inside(i, j) {
                continue;
            }
            let c = j * grid.nx + i;
            let d = well_distance(grads[c], f.mode, wells)?;
            elastic_terms.push(area * d * d);
            surface_terms.push(huber(tv[c], cfg.huber_delta) * grid.h);
        }
    }
    Ok(EnergyBreakdown {
        elastic: pairwise_sum(&elastic_terms),
        surface: pairwise_sum(&surface_terms),
    })
}

/// Relaxation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    /// Huber smoothing width for the total-variation term.
    pub huber_delta: f64,
    /// Outer iteration cap per restart.
    pub max_iters: usize,
    /// Relative energy-decrease threshold; ten consecutive sub-threshold
    /// iterations count as converged.
    pub tol: f64,
    /// Number of restarts (the unperturbed start plus warm starts count
    /// toward this; extra restarts perturb the base field).
    pub restarts: usize,
    /// Seed for the restart perturbations.
    pub seed: u64,
    /// Conjugate-gradient iteration cap for the linear-mode inner solves.
    pub cg_max_iters: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            huber_delta: 1e-3,
            max_iters: 500,
            tol: 1e-8,
            restarts: 8,
            seed: 0,
            cg_max_iters: 400,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.huber_delta > 0.0 && self.huber_delta.is_finite()) {
            return Err(Error::InvalidParameter(
                "huber_delta must be positive".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "restarts must be at least 1".into(),
            ));
        }
        if self.max_iters == 0 || self.cg_max_iters == 0 {
            return Err(Error::InvalidParameter(
                "iteration caps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`minimize`]: the best field over all restarts.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub field: DiscreteField,
    pub energy: EnergyBreakdown,
    /// Accepted total energies of the winning restart, starting with its
    /// initial energy.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub best_restart: usize,
    pub iterations: usize,
}

struct RunResult {
    values: Vec<Vec2>,
    total: f64,
    breakdown: EnergyBreakdown,
    trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn dot(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(*y)).sum()
}

/// Back-propagate per-cell gradient sensitivities to nodal forces.
fn accumulate_nodal(grid: &Grid, cell_force: &[Mat2], out: &mut [Vec2]) {
    for v in out.iter_mut() {
        *v = Vec2::ZERO;
    }
    let inv = 1.0 / (2.0 * grid.h);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let m = cell_force[j * grid.nx + i];
            let qx = Vec2::new(m.a11, m.a21) * inv;
            let qy = Vec2::new(m.a12, m.a22) * inv;
            out[grid.node_index(i, j)] += -qx - qy;
            out[grid.node_index(i + 1, j)] += qx - qy;
            out[grid.node_index(i, j + 1)] += -qx + qy;
            out[grid.node_index(i + 1, j + 1)] += qx + qy;
        }
    }
}

fn mask_free(free: &[bool], v: &mut [Vec2]) {
    for (f, x) in free.iter().zip(v.iter_mut()) {
        if !*f {
            *x = Vec2::ZERO;
        }
    }
}

/// Quadratic model for the linear-mode inner solve: frozen well assignments
/// and frozen iteratively-reweighted TV weights.
struct QuadModel<'a> {
    grid: &'a Grid,
    free: &'a [bool],
    eps: f64,
    weights: &'a [f64],
    targets: &'a [SymMat2],
}

impl QuadModel<'_> {
    /// Gradient of the model at `values`, restricted to free nodes. With
    /// `homogeneous` the affine targets are dropped, which turns this into
    /// the quadratic-form operator needed by conjugate gradients.
    fn gradient(&self, values: &[Vec2], homogeneous: bool) -> Vec<Vec2> {
        let grid = self.grid;
        let ncells = grid.nx * grid.ny;
        let area = grid.h * grid.h;
        let mut cell_force = vec![Mat2::ZERO; ncells];
        let grads = all_gradients(grid, values);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if !grid.cell_inside(i, j) {
                    continue;
                }
                let c = j * grid.nx + i;
                let mut s = grads[c].sym();
                if !homogeneous {
                    s = s - self.targets[c];
                }
                cell_force[c] += s.to_mat() * (2.0 * area);
                let coef = self.eps * grid.h * self.weights[c];
                if i + 1 < grid.nx && grid.cell_inside(i + 1, j) {
                    let d = (grads[c + 1] - grads[c]) * coef;
                    cell_force[c + 1] += d;
                    cell_force[c] -= d;
                }
                if j + 1 < grid.ny && grid.cell_inside(i, j + 1) {
                    let d = (grads[c + grid.nx] - grads[c]) * coef;
                    cell_force[c + grid.nx] += d;
                    cell_force[c] -= d;
                }
            }
        }
        let mut out = vec![Vec2::ZERO; values.len()];
        accumulate_nodal(grid, &cell_force, &mut out);
        mask_free(self.free, &mut out);
        out
    }

    /// Approximately solve `A delta = -grad` by conjugate gradients from
    /// zero; monotone in the model objective.
    fn solve(&self, values: &[Vec2], cg_max: usize) -> Vec<Vec2> {
        let n = values.len();
        let mut delta = vec![Vec2::ZERO; n];
        let mut r = self.gradient(values, false);
        for x in r.iter_mut() {
            *x = -*x;
        }
        let rs0 = dot(&r, &r);
        if rs0 <= 1e-300 {
            return delta;
        }
        let mut p = r.clone();
        let mut rs = rs0;
        for _ in 0..cg_max {
            let ap = self.gradient(&p, true);
            let pap = dot(&p, &ap);
            if pap <= 1e-300 {
                break;
            }
            let alpha = rs / pap;
            for k in 0..n {
                delta[k] += p[k] * alpha;
                r[k] -= ap[k] * alpha;
            }
            let rs_new = dot(&r, &r);
            if rs_new <= rs0 * 1e-16 {
                break;
            }
            let beta = rs_new / rs;
            for k in 0..n {
                p[k] = r[k] + p[k] * beta;
            }
            rs = rs_new;
        }
        delta
    }
}

/// True (non-majorized) gradient of the total energy in nonlinear mode.
fn nonlinear_gradient(
    grid: &Grid,
    values: &[Vec2],
    free: &[bool],
    u_eff: &[Mat2],
    eps: f64,
    delta: f64,
) -> Vec<Vec2> {
    let ncells = grid.nx * grid.ny;
    let area = grid.h * grid.h;
    let grads = all_gradients(grid, values);
    let tv = tv_norms(grid, &grads);
    let mut cell_force = vec![Mat2::ZERO; ncells];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.cell_inside(i, j) {
                continue;
            }
            let c = j * grid.nx + i;
            let g = grads[c];
            let mut best = f64::INFINITY;
            let mut proj = Mat2::ZERO;
            for u in u_eff {
                let d = dist_to_rotated_well(g, *u);
                if d < best {
                    best = d;
                    proj = closest_rotation_factor(g, *u) * *u;
                }
            }
            cell_force[c] += (g - proj) * (2.0 * area);
            let phi = if tv[c] <= delta {
                1.0 / delta
            } else {
                1.0 / tv[c]
            };
            let coef = eps * grid.h * phi;
            if i + 1 < grid.nx && grid.cell_inside(i + 1, j) {
                let d = (grads[c + 1] - grads[c]) * coef;
                cell_force[c + 1] += d;
                cell_force[c] -= d;
            }
            if j + 1 < grid.ny && grid.cell_inside(i, j + 1) {
                let d = (grads[c + grid.nx] - grads[c]) * coef;
                cell_force[c + grid.nx] += d;
                cell_force[c] -= d;
            }
        }
    }
    let mut out = vec![Vec2::ZERO; values.len()];
    accumulate_nodal(grid, &cell_force, &mut out);
    mask_free(free, &mut out);
    out
}

fn total_energy(
    grid: &Grid,
    values: &[Vec2],
    mode: FieldMode,
    wells: &WellSet,
    eps: f64,
    delta: f64,
) -> Result<(f64, EnergyBreakdown)> {
    let grads = all_gradients(grid, values);
    let tv = tv_norms(grid, &grads);
    let area = grid.h * grid.h;
    let mut elastic_terms = Vec::new();
    let mut surface_terms = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !grid.cell_inside(i, j) {
                continue;
            }
            let c = j * grid.nx + i;
            let d = well_distance(grads[c], mode, wells)?;
            elastic_terms.push(area * d * d);
            surface_terms.push(huber(tv[c], delta) * grid.h);
        }
    }
    let bd = EnergyBreakdown {
        elastic: pairwise_sum(&elastic_terms),
        surface: pairwise_sum(&surface_terms),
    };
    Ok((bd.total(eps), bd))
}

#[allow(clippy::too_many_arguments)]
fn run_descent(
    grid: &Grid,
    mode: FieldMode,
    wells: &WellSet,
    eps: f64,
    cfg: &RelaxConfig,
    free: &[bool],
    start: Vec<Vec2>,
) -> Result<RunResult> {
    let mut z = start;
    let (mut e_cur, mut bd_cur) = total_energy(grid, &z, mode, wells, eps, cfg.huber_delta)?;
    let mut trace = vec![e_cur];
    let mut streak = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    let ncells = grid.nx * grid.ny;

    let strains = match mode {
        FieldMode::Displacement => Some(wells.linear_strains()?.to_vec()),
        FieldMode::Deformation => None,
    };
    let u_eff: Vec<Mat2> = match wells {
        WellSet::Nonlinear {
            variants,
            rotation_branch,
            ..
        } => variants.iter().map(|u| *rotation_branch * *u).collect(),
        WellSet::Linear { .. } => Vec::new(),
    };
    // Nonlinear line-search step carried across iterations.
    let mut step = grid.h;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let mut accepted = false;
        let mut decrease = 0.0;
        match &strains {
            Some(strains) => {
                // Alternation: nearest-well assignment, then one reweighted
                // quadratic solve (both majorize the true objective, so the
                // full step is already nonincreasing; the halving loop only
                // guards against inexact inner solves).
                let grads = all_gradients(grid, &z);
                let tv = tv_norms(grid, &grads);
                let mut targets = vec![SymMat2::ZERO; ncells];
                let mut weights = vec![0.0; ncells];
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        if !grid.cell_inside(i, j) {
                            continue;
                        }
                        let c = j * grid.nx + i;
                        let s = grads[c].sym();
                        let mut best = 0usize;
                        let mut best_d = f64::INFINITY;
                        for (k, w) in strains.iter().enumerate() {
                            let d = (s - *w).frobenius_norm();
                            if d < best_d {
                                best_d = d;
                                best = k;
                            }
                        }
                        targets[c] = strains[best];
                        weights[c] = if tv[c] <= cfg.huber_delta {
                            1.0 / cfg.huber_delta
                        } else {
                            1.0 / tv[c]
                        };
                    }
                }
                let model = QuadModel {
                    grid,
                    free,
                    eps,
                    weights: &weights,
                    targets: &targets,
                };
                let delta = model.solve(&z, cfg.cg_max_iters);
                let mut scale = 1.0;
                while scale >= 1.0 / 1024.0 {
                    let trial: Vec<Vec2> =
                        z.iter().zip(&delta).map(|(v, d)| *v + *d * scale).collect();
                    let (e_t, bd_t) =
                        total_energy(grid, &trial, mode, wells, eps, cfg.huber_delta)?;
                    if e_t.is_finite() && e_t <= e_cur + 1e-12 * (1.0 + e_cur.abs()) {
                        decrease = e_cur - e_t;
                        z = trial;
                        e_cur = e_t;
                        bd_cur = bd_t;
                        accepted = true;
                        break;
                    }
                    scale *= 0.5;
                }
            }
            None => {
                let grad = nonlinear_gradient(grid, &z, free, &u_eff, eps, cfg.huber_delta);
                let g2 = dot(&grad, &grad);
                if g2 <= 1e-30 {
                    converged = true;
                    break;
                }
                let mut s = step;
                while s >= 1e-18 {
                    let trial: Vec<Vec2> = z.iter().zip(&grad).map(|(v, g)| *v - *g * s).collect();
                    let (e_t, bd_t) =
                        total_energy(grid, &trial, mode, wells, eps, cfg.huber_delta)?;
                    if e_t.is_finite() && e_t <= e_cur - 1e-4 * s * g2 {
                        decrease = e_cur - e_t;
                        z = trial;
                        e_cur = e_t;
                        bd_cur = bd_t;
                        accepted = true;
                        step = (s * 1.8).min(1e6);
                        break;
                    }
                    s *= 0.5;
                }
                if !accepted {
                    step = (step * 0.25).max(1e-18);
                }
            }
        }
        if accepted {
            trace.push(e_cur);
            let rel = decrease / e_cur.abs().max(1.0);
            if rel < cfg.tol {
                streak += 1;
            } else {
                streak = 0;
            }
        } else {
            streak += 1;
        }
        if streak >= 10 {
            converged = true;
            break;
        }
    }
    Ok(RunResult {
        values: z,
        total: e_cur,
        breakdown: bd_cur,
        trace,
        converged,
        iterations,
    })
}

/// Minimize the discrete energy from `base` (whose pins define the Dirichlet
/// data), trying the unperturbed start, every warm start (with its pinned
/// nodes overwritten by the base data), and seeded perturbations of the base
/// until `cfg.restarts` runs are reached. Returns the best run; accepted
/// iterations never increase the energy, so the result is never worse than
/// any start.
pub fn minimize(
    base: &DiscreteField,
    wells: &WellSet,
    eps: f64,
    cfg: &RelaxConfig,
    warm_starts: &[DiscreteField],
) -> Result<RelaxOutcome> {
    base.check_shape()?;
    check_mode(base.mode, wells)?;
    cfg.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(
            "eps must be positive and finite".into(),
        ));
    }
    let grid = &base.grid;
    let n = grid.n_nodes();
    for w in warm_starts {
        w.check_shape()?;
        if w.grid.nx != grid.nx || w.grid.ny != grid.ny || w.mode != base.mode {
            return Err(Error::GridMismatch(
                "warm start grid shape or mode differs from the base field".into(),
            ));
        }
    }

    let mut free = vec![false; n];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let id = grid.node_index(i, j);
            free[id] = base.fixed[id].is_none()
                && grid.node_touches_inside(i, j)
                && !grid.node_on_boundary(i, j);
        }
    }

    let pin = |mut values: Vec<Vec2>| -> Vec<Vec2> {
        for (k, f) in base.fixed.iter().enumerate() {
            if let Some(v) = f {
                values[k] = *v;
            }
        }
        values
    };

    let mut starts: Vec<Vec<Vec2>> = Vec::new();
    starts.push(base.values.clone());
    for w in warm_starts {
        starts.push(pin(w.values.clone()));
    }
    let total_runs = cfg.restarts.max(starts.len());
    let amp = 0.5 * grid.h;
    for k in starts.len()..total_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9 + k as u64));
        let mut v = base.values.clone();
        for (id, val) in v.iter_mut().enumerate() {
            if free[id] {
                *val += Vec2::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
            }
        }
        starts.push(v);
    }

    let results: Vec<(usize, Result<RunResult>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(idx, start)| {
            (
                idx,
                run_descent(grid, base.mode, wells, eps, cfg, &free, start),
            )
        })
        .collect();

    let mut best: Option<(usize, RunResult)> = None;
    for (idx, r) in results {
        let r = r?;
        let better = match &best {
            None => true,
            Some((bi, br)) => r.total < br.total || (r.total == br.total && idx < *bi),
        };
        if better {
            best = Some((idx, r));
        }
    }
    let (best_restart, run) = best.expect("at least one restart runs");
    let field = DiscreteField {
        grid: grid.clone(),
        mode: base.mode,
        values: run.values,
        fixed: base.fixed.clone(),
    };
    Ok(RelaxOutcome {
        field,
        energy: run.breakdown,
        trace: run.trace,
        converged: run.converged,
        best_restart,
        iterations: run.iterations,
    })
}

/// Slice energy of a piecewise-affine field along the vertical segment
/// `{x} × (y0, y1)`: the 1D integral of the squared well distance plus the
/// total variation of the gradient along the slice (no `eps` weight).
pub fn slice_energy(f: &PAField, wells: &WellSet, x: f64, y0: f64, y1: f64) -> Result<f64> {
    check_mode(f.mode, wells)?;
    if !(y1 > y0 && x.is_finite() && y0.is_finite() && y1.is_finite()) {
        return Err(Error::InvalidParameter(
            "slice interval must be nonempty".into(),
        ));
    }
    let scale = f.complex.diameter().max(1.0);
    let tol = 1e-9 * scale;
    let mut runs: Vec<(f64, f64, usize)> = Vec::new();
    for c in 0..f.complex.cells.len() {
        let vs: Vec<Vec2> = f.complex.cell_vertices(c).collect();
        let (mut lo, mut hi) = (y0, y1);
        let mut empty = false;
        let k = vs.len();
        for i in 0..k {
            let a = vs[i];
            let b = vs[(i + 1) % k];
            let e = b - a;
            // Inside the CCW cell: e x (p(t) - a) >= -tol, linear in t.
            let slope = e.x;
            let c0 = -e.y * (x - a.x) - e.x * a.y;
            let tol_e = tol * e.norm().max(1e-300);
            if slope.abs() <= 1e-300 {
                // Constraint independent of t.
                if slope.mul_add(0.5 * (y0 + y1), c0) < -tol_e {
                    empty = true;
                    break;
                }
            } else if slope > 0.0 {
                lo = lo.max((-tol_e - c0) / slope);
            } else {
                hi = hi.min((-tol_e - c0) / slope);
            }
        }
        if !empty && hi - lo > tol {
            runs.push((lo, hi, c));
        }
    }
    runs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut elastic_terms = Vec::new();
    let mut tv_terms = Vec::new();
    let mut covered = y0;
    let mut prev_cell: Option<usize> = None;
    for (lo, hi, c) in runs {
        if lo > covered + tol {
            return Err(Error::OutOfRange(format!(
                "slice x = {x} leaves the field's cells near y = {covered:.6}"
            )));
        }
        let d = well_distance(f.maps[c].0, f.mode, wells)?;
        elastic_terms.push((hi - covered.max(lo)).max(0.0) * d * d);
        if let Some(p) = prev_cell {
            if p != c {
                tv_terms.push((f.maps[p].0 - f.maps[c].0).frobenius_norm());
            }
        }
        prev_cell = Some(c);
        covered = covered.max(hi);
        if covered >= y1 - tol {
            break;
        }
    }
    if covered < y1 - tol {
        return Err(Error::OutOfRange(format!(
            "slice x = {x} leaves the field's cells near y = {covered:.6}"
        )));
    }
    Ok(pairwise_sum(&elastic_terms) + pairwise_sum(&tv_terms))
}

/// Slice energy of a discrete field along `{x} × (y0, y1)`: quadrature of
/// the well distance over the grid-cell column containing `x` plus the raw
/// (un-smoothed) total variation of the gradient between vertically adjacent
/// cells.
pub fn slice_energy_discrete(
    f: &DiscreteField,
    wells: &WellSet,
    x: f64,
    y0: f64,
    y1: f64,
) -> Result<f64> {
    f.check_shape()?;
    check_mode(f.mode, wells)?;
    if !(y1 > y0 && x.is_finite() && y0.is_finite() && y1.is_finite()) {
        return Err(Error::InvalidParameter(
            "slice interval must be nonempty".into(),
        ));
    }
    let grid = &f.grid;
    let rel = (x - grid.origin.x) / grid.h;
    if rel < 0.0 || rel >= grid.nx as f64 {
        return Err(Error::OutOfRange(format!("slice x = {x} outside the grid")));
    }
    let ix = rel.floor() as usize;
    let mut elastic_terms = Vec::new();
    let mut tv_terms = Vec::new();
    let mut prev: Option<Mat2> = None;
    for j in 0..grid.ny {
        let cy0 = grid.origin.y + j as f64 * grid.h;
        let cy1 = cy0 + grid.h;
        let overlap = y1.min(cy1) - y0.max(cy0);
        if overlap <= 1e-12 * grid.h {
            continue;
        }
        if !grid.cell_inside(ix, j) {
            return Err(Error::OutOfRange(format!(
                "slice x = {x} crosses a cell outside the domain mask at row {j}"
            )));
        }
        let g = cell_gradient(grid, &f.values, ix, j);
        let d = well_distance(g, f.mode, wells)?;
        elastic_terms.push(overlap * d * d);
        if let Some(p) = prev {
            tv_terms.push((g - p).frobenius_norm());
        }
        prev = Some(g);
    }
    if elastic_terms.is_empty() {
        return Err(Error::OutOfRange(
            "slice does not meet any grid cell".into(),
        ));
    }
    Ok(pairwise_sum(&elastic_terms) + pairwise_sum(&tv_terms))
}

/// Sample a piecewise-affine field onto grid nodes. Nodes outside every cell
/// take the affine extension of the cell nearest to them; the returned flag
/// reports whether any node needed that extension.
pub fn interpolate(f: &PAField, grid: &Grid) -> Result<(DiscreteField, bool)> {
    if f.complex.cells.is_empty() {
        return Err(Error::GridMismatch(
            "cannot interpolate an empty complex".into(),
        ));
    }
    let locator = f.build_locator();
    let mut vertex_cell = vec![u32::MAX; f.complex.vertices.len()];
    for (c, cell) in f.complex.cells.iter().enumerate() {
        for &vi in cell {
            vertex_cell[vi] = c as u32;
        }
    }
    let mut values = vec![Vec2::ZERO; grid.n_nodes()];
    let mut extended = false;
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let p = grid.node_pos(i, j);
            let c = match locator.locate(&f.complex, p) {
                Some(c) => c,
                None => {
                    extended = true;
                    let vi = locator
                        .nearest_vertex(&f.complex, p)
                        .ok_or_else(|| Error::GridMismatch("empty complex".into()))?;
                    vertex_cell[vi] as usize
                }
            };
            values[grid.node_index(i, j)] = f.value_in_cell(c, p);
        }
    }
    Ok((
        DiscreteField {
            grid: grid.clone(),
            mode: f.mode,
            values,
            fixed: vec![None; grid.n_nodes()],
        },
        extended,
    ))
}
