//! Built-in invariant suite: fast, deterministic re-checks of each module's
//! characteristic identities, runnable from the command line as a pass/fail
//! table.
//!
//! Each check is a pure function returning either a one-line success detail
//! or a failure message; [`run_all`] never panics on a failing check.

use crate::algebra2d::{closest_rotation_factor, dist_to_rotated_well, sym_rank_one_decompose};
use crate::compatibility::{
    austenite_normals_linear, hex_rhombic_normal_set, incompatibility_constant, lower_envelope,
    nonlinear_normal_set, twinning_with_identity, EnvelopeKind,
};
use crate::geometry::{
    classify_polygon, flatten_patch, grad_boundary_normal_map, unit_square, BoundaryPatch,
    DomainClass, GraphPatch, HFunc,
};
use crate::microstructure::{
    check_continuity, cover_summary, envelope_depth, exact_energy, laminate, optimal_depth,
    star_block, star_elastic, star_surface, FieldMode, Triangle,
};
use crate::relaxer::{discrete_energy, interpolate, minimize, DiscreteField, Grid, RelaxConfig};
use crate::scaling::{
    fit_dichotomy, parse_report, render_report, Metadata, ReportFormat, SweepReport, SweepRow,
    Verdict,
};
use crate::scenario::{self, SweepSource};
use crate::wells::{hex_rhombic_strains, hex_rhombic_wells, oblique_wells, Branch};
use crate::{Mat2, SymMat2, UnitVec2, Vec2};

type CheckFn = fn() -> Result<String, String>;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !($cond) {
            return Err(format!($($msg)*));
        }
    };
}

fn lift<T>(r: crate::error::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Algebra
// ---------------------------------------------------------------------------

fn check_sym_rank_one() -> Result<String, String> {
    let mut worst = 0.0f64;
    for k in 0..12 {
        let theta = 0.3 + k as f64 * 0.51;
        let n = UnitVec2::from_angle(theta);
        let a = Vec2::new(1.3 - 0.21 * k as f64, -0.4 + 0.07 * k as f64);
        let e = SymMat2::sym_outer(a, n.get());
        let Some((b, m)) = sym_rank_one_decompose(e) else {
            return Err(format!("decomposition missing at sample {k}"));
        };
        let err = (SymMat2::sym_outer(b, m.get()) - e).frobenius_norm();
        worst = worst.max(err);
    }
    ensure!(
        worst <= 1e-12,
        "reconstruction error {worst:.3e} above 1e-12"
    );
    ensure!(
        sym_rank_one_decompose(SymMat2::new(1.0, 0.0, 1.0)).is_none(),
        "positive-definite matrix wrongly decomposed"
    );
    Ok(format!("12 samples, max reconstruction error {worst:.2e}"))
}

fn check_closest_rotation() -> Result<String, String> {
    let u = Mat2::new(1.3, 0.2, 0.0, 0.9);
    let mut worst = 0.0f64;
    for k in 0..8 {
        let r = Mat2::rotation(0.1 + 0.77 * k as f64);
        let q = closest_rotation_factor(r * u, u);
        worst = worst.max((q - r).frobenius_norm());
    }
    ensure!(worst <= 1e-12, "recovered rotation off by {worst:.3e}");
    Ok(format!("8 rotations recovered, max error {worst:.2e}"))
}

fn check_rotated_well_distance() -> Result<String, String> {
    let u = Mat2::new(1.2, 0.3, -0.1, 0.85);
    let f = Mat2::new(0.9, 0.4, 0.2, 1.1);
    let closed = dist_to_rotated_well(f, u);
    let mut grid = f64::INFINITY;
    let n = 20_000;
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        grid = grid.min((f - Mat2::rotation(theta) * u).frobenius_norm());
    }
    let err = (closed - grid).abs();
    ensure!(err <= 1e-6, "closed form {closed:.9} vs grid {grid:.9}");
    Ok(format!(
        "closed form matches {n}-point angle grid to {err:.2e}"
    ))
}

// ---------------------------------------------------------------------------
// Wells
// ---------------------------------------------------------------------------

fn check_hex_strain_algebra() -> Result<String, String> {
    let strains = hex_rhombic_strains();
    for (j, e) in strains.iter().enumerate() {
        ensure!(
            e.trace().abs() <= 1e-15,
            "strain {j} has trace {}",
            e.trace()
        );
        ensure!(e.det() < 0.0, "strain {j} has det {} >= 0", e.det());
    }
    for j in 0..3 {
        for k in (j + 1)..3 {
            let d = strains[j] - strains[k];
            ensure!(
                d.det() <= 1e-15,
                "difference {j}-{k} has det {} > 0 (not symmetrized rank-one)",
                d.det()
            );
        }
    }
    Ok("3 trace-free strains, all pairs symmetrized rank-one connected".into())
}

fn check_oblique_variant_counts() -> Result<String, String> {
    for (ngon, want) in [(4u32, 4usize), (3, 6)] {
        for a in [0.8, 1.25] {
            let w = lift(oblique_wells(ngon, a, Branch::Minus))?;
            let variants = lift(w.nonlinear_variants())?;
            ensure!(
                variants.len() == want,
                "ngon {ngon}, a {a}: {} variants, expected {want}",
                variants.len()
            );
            for v in variants {
                ensure!(
                    (v.det() - 1.0).abs() <= 1e-12,
                    "variant det {} != 1",
                    v.det()
                );
            }
        }
    }
    Ok("square parent gives 4 unimodular variants, hexagonal gives 6".into())
}

// ---------------------------------------------------------------------------
// Compatibility
// ---------------------------------------------------------------------------

fn check_normal_set_angles() -> Result<String, String> {
    let set = hex_rhombic_normal_set();
    ensure!(
        set.directions.len() == 6,
        "{} directions, expected 6",
        set.directions.len()
    );
    let mut worst = 0.0f64;
    for dir in &set.directions {
        let deg = dir.get().angle().to_degrees().rem_euclid(180.0);
        let nearest = ((deg - 15.0) / 30.0).round() * 30.0 + 15.0;
        worst = worst.max((deg - nearest).abs());
    }
    ensure!(worst <= 1e-10, "angle deviation {worst:.3e} degrees");
    for e in hex_rhombic_strains() {
        for d in &austenite_normals_linear(e).directions {
            ensure!(
                set.contains(*d, 1e-10),
                "per-variant normal missing from the union"
            );
        }
    }
    Ok("6 directions at 15 + 30k degrees, union matches per-variant normals".into())
}

fn check_twinning_normal_counts() -> Result<String, String> {
    let mut seen = Vec::new();
    for (ngon, cap) in [(4u32, 8usize), (3, 12)] {
        for a in [0.8, 0.9, 1.1, 1.25] {
            let w = lift(oblique_wells(ngon, a, Branch::Minus))?;
            let set = lift(nonlinear_normal_set(&w))?;
            ensure!(
                set.directions.len() <= cap,
                "ngon {ngon}, a {a}: {} normals exceed cap {cap}",
                set.directions.len()
            );
            seen.push(set.directions.len());
        }
    }
    Ok(format!(
        "normal counts {seen:?} within caps 8 (square) / 12 (hexagonal)"
    ))
}

fn check_twinning_residuals() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut n_solutions = 0;
    for a in [0.8, 1.25] {
        let w = lift(oblique_wells(4, a, Branch::Minus))?;
        for u in lift(w.nonlinear_variants())? {
            for s in lift(twinning_with_identity(*u))? {
                let lhs = s.q * *u;
                let rhs = Mat2::IDENTITY + Mat2::outer(s.a, s.n.get());
                worst = worst.max((lhs - rhs).frobenius_norm());
                n_solutions += 1;
            }
        }
    }
    ensure!(worst <= 1e-10, "twinning residual {worst:.3e} above 1e-10");
    Ok(format!(
        "{n_solutions} solutions certified, max residual {worst:.2e}"
    ))
}

fn check_incompatibility_dichotomy() -> Result<String, String> {
    let wells = hex_rhombic_wells();
    let flat =
        |deg: f64| BoundaryPatch::flat(Vec2::ZERO, UnitVec2::from_angle(deg.to_radians()), 1.0);
    let d15 = lift(incompatibility_constant(&flat(15.0), &wells))?.d;
    ensure!(
        d15 <= 1e-10,
        "interface-direction tangent has d = {d15:.3e}"
    );
    let d0 = lift(incompatibility_constant(&flat(0.0), &wells))?.d;
    ensure!(
        (d0 - 0.5).abs() <= 1e-9,
        "horizontal tangent has d = {d0}, expected 1/2"
    );
    Ok(format!("d(15 deg) = {d15:.1e}, d(0 deg) = {d0:.3}"))
}

fn check_envelope_shapes() -> Result<String, String> {
    let mut prev_lin = 0.0;
    let mut prev_log = 0.0;
    for k in 1..=40 {
        let eps = k as f64 / 41.0;
        let lin = lift(lower_envelope(eps, EnvelopeKind::Linear))?;
        let log = lift(lower_envelope(eps, EnvelopeKind::Log))?;
        ensure!(
            lin <= log + 1e-15,
            "linear envelope above log envelope at eps = {eps}"
        );
        ensure!(
            log <= 1.0 && lin <= 1.0,
            "envelope exceeds its cap at eps = {eps}"
        );
        ensure!(
            lin >= prev_lin && log >= prev_log - 1e-15,
            "envelope not monotone at eps = {eps}"
        );
        prev_lin = lin;
        prev_log = log;
    }
    ensure!(
        lower_envelope(-1.0, EnvelopeKind::Linear).is_err(),
        "negative eps accepted"
    );
    Ok("both envelopes monotone, capped at 1, log above linear".into())
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

fn check_domain_classification() -> Result<String, String> {
    let normals = hex_rhombic_normal_set();
    let (_, sq) = lift(classify_polygon(&unit_square(), &normals, 1e-9))?;
    ensure!(sq == DomainClass::Generic, "unit square classified {sq:?}");
    let tri = scenario::compatible_triangle();
    let (flags, cls) = lift(classify_polygon(&tri, &normals, 1e-9))?;
    ensure!(
        cls == DomainClass::Compatible,
        "triangle classified {cls:?}"
    );
    ensure!(flags.iter().all(|f| *f), "triangle edge flags {flags:?}");
    Ok("unit square generic, equilateral triangle compatible on every edge".into())
}

fn check_normal_map_gradient() -> Result<String, String> {
    let patch = lift(GraphPatch::new(
        HFunc::Circle { radius: 1.0 },
        0.4,
        Vec2::ZERO,
        Mat2::IDENTITY,
    ))?;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for &(x, y) in &[(0.05, 0.1), (-0.08, -0.2), (0.12, 0.25)] {
        let g = lift(grad_boundary_normal_map(&patch, x, y))?;
        let fx = (lift(crate::geometry::boundary_normal_map(&patch, x + h, y))?
            - lift(crate::geometry::boundary_normal_map(&patch, x - h, y))?)
            * (0.5 / h);
        let fy = (lift(crate::geometry::boundary_normal_map(&patch, x, y + h))?
            - lift(crate::geometry::boundary_normal_map(&patch, x, y - h))?)
            * (0.5 / h);
        let fd = Mat2::new(fx.x, fy.x, fx.y, fy.y);
        worst = worst.max((g - fd).frobenius_norm() / g.frobenius_norm());
    }
    ensure!(
        worst <= 1e-6,
        "gradient vs finite differences off by {worst:.3e}"
    );
    Ok(format!(
        "analytic gradient matches finite differences to {worst:.2e}"
    ))
}

fn check_flattening_is_first_order() -> Result<String, String> {
    let patch = lift(GraphPatch::new(
        HFunc::Circle { radius: 1.0 },
        0.4,
        Vec2::new(0.2, -0.1),
        Mat2::rotation(0.3),
    ))?;
    let r = 0.1;
    let d1 = lift(flatten_patch(&patch, r))?.bounds.sup_grad_dev / r;
    let d2 = lift(flatten_patch(&patch, r / 2.0))?.bounds.sup_grad_dev / (r / 2.0);
    let ratio = (d1 / d2).max(d2 / d1);
    ensure!(
        ratio <= 4.0,
        "sup|grad F - R|/r ratio {ratio:.2} across r, r/2 exceeds 4"
    );
    Ok(format!(
        "sup|grad F - R|/r stable across halving (ratio {ratio:.2})"
    ))
}

// ---------------------------------------------------------------------------
// Microstructure
// ---------------------------------------------------------------------------

fn check_star_block() -> Result<String, String> {
    let tri = scenario::compatible_triangle();
    let vs = tri.vertices();
    let tri = lift(Triangle::new([vs[0], vs[1], vs[2]]))?;
    let side = 1.0;
    let wells = hex_rhombic_wells();
    let field = lift(star_block(&tri, 2, &wells))?;
    let report = check_continuity(&field);
    ensure!(
        report.passes(1e-10),
        "continuity residuals {:.3e} / {:.3e}",
        report.max_rank_residual,
        report.max_trace_mismatch
    );
    let e = lift(exact_energy(&field, &wells))?;
    let elastic_err = (e.elastic - star_elastic(2, side)).abs();
    let surface_err = (e.surface - star_surface(2, side)).abs();
    ensure!(
        elastic_err <= 1e-12,
        "elastic off closed form by {elastic_err:.3e}"
    );
    ensure!(
        surface_err <= 1e-9,
        "surface off closed form by {surface_err:.3e}"
    );
    // Surface increments between consecutive depths form a geometric
    // sequence with the self-similarity ratio.
    let incr = |n: usize| star_surface(n + 1, side) - star_surface(n, side);
    let ratio_err = (incr(2) / incr(1) - incr(3) / incr(2)).abs();
    ensure!(
        ratio_err <= 1e-6,
        "surface increments not geometric: {ratio_err:.3e}"
    );
    Ok("depth-2 block continuous, matches closed forms, geometric surface increments".into())
}

fn check_laminate_energy() -> Result<String, String> {
    let wells = hex_rhombic_wells();
    let n = austenite_normals_linear(hex_rhombic_strains()[1]).directions[0];
    let f = lift(laminate(&wells, 1, n, 0.25, 0.5, &unit_square()))?;
    let two_phase = lift(wells.with_zero_strain())?;
    let mixed = lift(exact_energy(&f, &two_phase))?;
    ensure!(
        mixed.elastic <= 1e-12,
        "two-phase elastic {:.3e}",
        mixed.elastic
    );
    let pure = lift(exact_energy(&f, &wells))?;
    let austenite_area: f64 = (0..f.complex.cells.len())
        .filter(|&c| f.maps[c].0.frobenius_norm() < 1e-12)
        .map(|c| f.complex.cell_area(c))
        .sum();
    let expected = 2.0 * austenite_area;
    ensure!(
        (pure.elastic - expected).abs() <= 1e-9,
        "martensite-only elastic {} vs 2 * austenite area {expected}",
        pure.elastic
    );
    Ok(format!(
        "zero elastic against the augmented set; {expected:.3} against variants alone"
    ))
}

fn check_cover_accounting() -> Result<String, String> {
    let wells = hex_rhombic_wells();
    let eps = 2f64.powi(-6);
    let s = lift(cover_summary(&unit_square(), 5, &wells, eps))?;
    ensure!(
        s.counts.len() == 6,
        "{} count rows for m = 5",
        s.counts.len()
    );
    for (l, &c) in s.counts.iter().enumerate() {
        let bound = 420usize << l;
        ensure!(c <= bound, "level {l}: {c} blocks exceed bound {bound}");
    }
    ensure!(
        s.covered_area <= s.domain_area + 1e-12,
        "covered {} exceeds domain {}",
        s.covered_area,
        s.domain_area
    );
    let filler = 2.0 * (s.domain_area - s.covered_area);
    ensure!(
        s.breakdown.elastic >= filler - 1e-12,
        "elastic {} below uncovered-layer misfit {filler}",
        s.breakdown.elastic
    );
    Ok(format!(
        "counts {:?} within 420 * 2^l, covered {:.4} of {:.4}",
        s.counts, s.covered_area, s.domain_area
    ))
}

fn check_depth_rules() -> Result<String, String> {
    let (m_half, _) = lift(optimal_depth(0.5))?;
    ensure!(m_half <= 2, "optimal depth at eps = 1/2 is {m_half}");
    let mut prev = 0;
    for k in 4..=10 {
        let (m, _) = lift(optimal_depth(2f64.powi(-k)))?;
        ensure!(m >= prev, "optimal depth shrinks as eps does, at 2^-{k}");
        prev = m;
    }
    ensure!(
        lift(envelope_depth(2f64.powi(-10)))? == 10,
        "envelope depth at 2^-10"
    );
    ensure!(
        envelope_depth(1.5).is_err(),
        "eps >= 1 accepted by envelope depth"
    );
    Ok("optimal depth small at coarse eps and monotone; envelope depth = ceil(log2(1/eps))".into())
}

// ---------------------------------------------------------------------------
// Relaxer
// ---------------------------------------------------------------------------

fn check_discrete_energies() -> Result<String, String> {
    let grid = lift(Grid::for_polygon(&unit_square(), 16))?;
    let cfg = RelaxConfig::default();
    let wells = hex_rhombic_wells();
    let zero = DiscreteField::austenite(grid.clone(), FieldMode::Displacement);
    let e = lift(discrete_energy(&zero, &wells, &cfg))?;
    let want = 2.0 * grid.inside_area();
    ensure!(
        (e.elastic - want).abs() <= 1e-12,
        "zero field elastic {} vs {want}",
        e.elastic
    );
    ensure!(e.surface.abs() <= 1e-15, "zero field surface {}", e.surface);

    let a = hex_rhombic_strains()[0].to_mat();
    let mut affine =
        DiscreteField::with_boundary(grid.clone(), FieldMode::Displacement, |p| a.apply(p));
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let id = grid.node_index(i, j);
            affine.values[id] = a.apply(grid.node_pos(i, j));
        }
    }
    let e = lift(discrete_energy(&affine, &wells, &cfg))?;
    ensure!(
        e.elastic <= 1e-20,
        "well-valued affine field has elastic {}",
        e.elastic
    );
    Ok(format!(
        "zero field pays 2 * area = {want:.3}; well-valued affine field pays {:.1e}",
        e.elastic
    ))
}

fn check_interpolated_laminate() -> Result<String, String> {
    let wells = hex_rhombic_wells();
    let n = austenite_normals_linear(hex_rhombic_strains()[1]).directions[0];
    let f = lift(laminate(&wells, 1, n, 0.25, 0.5, &unit_square()))?;
    let exact = lift(exact_energy(&f, &lift(wells.with_zero_strain())?))?;
    let grid = lift(Grid::for_polygon(&unit_square(), 96))?;
    let (df, extended) = lift(interpolate(&f, &grid))?;
    ensure!(
        !extended,
        "interpolation needed extension on a covering complex"
    );
    let e = lift(discrete_energy(&df, &wells, &RelaxConfig::default()))?;
    let rel = (e.surface - exact.surface).abs() / exact.surface;
    ensure!(
        rel <= 0.10,
        "interpolant surface off by {:.1}%",
        100.0 * rel
    );
    Ok(format!(
        "grid surface within {:.1}% of the exact interfacial energy",
        100.0 * rel
    ))
}

fn check_minimize_descends() -> Result<String, String> {
    let wells = hex_rhombic_wells();
    let grid = lift(Grid::for_polygon(&unit_square(), 12))?;
    let base = DiscreteField::austenite(grid.clone(), FieldMode::Displacement);
    let cfg = RelaxConfig {
        max_iters: 8,
        restarts: 2,
        ..Default::default()
    };
    let out = lift(minimize(&base, &wells, 1.0, &cfg, &[]))?;
    for w in out.trace.windows(2) {
        ensure!(
            w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()),
            "trace not monotone"
        );
    }
    let cap = 2.0 * grid.inside_area() + 1e-9;
    let total = out.energy.total(1.0);
    ensure!(
        total <= cap,
        "minimized total {total} above zero-field cap {cap}"
    );
    Ok(format!(
        "monotone descent to {total:.4} (zero-field start pays {:.4})",
        cap - 1e-9
    ))
}

// ---------------------------------------------------------------------------
// Scaling and scenarios
// ---------------------------------------------------------------------------

fn check_fit_recovery() -> Result<String, String> {
    let rows: Vec<SweepRow> = (4..=12)
        .map(|k| {
            let eps = 2f64.powi(-k);
            let e = 3.0 * lift(lower_envelope(eps, EnvelopeKind::Linear))?;
            Ok(SweepRow {
                eps,
                depth: 1,
                elastic_construction: 0.0,
                surface_construction: e / eps,
                total_construction: e,
                total_warm: None,
                total_relaxed: None,
                flags: "planted".into(),
            })
        })
        .collect::<Result<_, String>>()?;
    let report = SweepReport {
        scenario: "planted".into(),
        metadata: Metadata {
            domain_hash: "0".repeat(16),
            wells_hash: "0".repeat(16),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: 0,
        },
        rows,
    };
    let fit = lift(fit_dichotomy(&report, SweepSource::Construction))?;
    ensure!(
        (fit.c_lin - 3.0).abs() <= 3e-10,
        "planted constant 3 fitted as {}",
        fit.c_lin
    );
    ensure!(
        fit.verdict == Verdict::Linear,
        "planted linear data got {:?}",
        fit.verdict
    );
    let csv = lift(render_report(
        &report,
        &[(SweepSource::Construction, fit)],
        ReportFormat::Csv,
    ))?;
    let back = lift(parse_report(&csv))?;
    ensure!(back == report, "CSV round-trip changed the report");
    Ok("planted constant recovered exactly, CSV round-trips bit-for-bit".into())
}

fn check_scenario_presets() -> Result<String, String> {
    for name in ["unit_square", "compatible_triangle"] {
        lift(lift(scenario::preset(name))?.resolve())?;
    }
    ensure!(
        scenario::preset("no_such_domain").is_err(),
        "unknown preset accepted"
    );
    let mut bad = lift(scenario::preset("unit_square"))?;
    bad.wells = scenario::WellsSpec::Oblique {
        ngon: 4,
        a: 1.3,
        branch: Branch::Minus,
    };
    ensure!(
        bad.resolve().is_err(),
        "nonlinear wells accepted for a sweep"
    );
    Ok("presets resolve; unknown presets and mode mismatches rejected".into())
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// All checks with stable names, in module order.
pub fn checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("algebra/sym-rank-one-decomposition", check_sym_rank_one),
        ("algebra/closest-rotation", check_closest_rotation),
        ("algebra/rotated-well-distance", check_rotated_well_distance),
        ("wells/hex-strain-algebra", check_hex_strain_algebra),
        ("wells/oblique-variant-counts", check_oblique_variant_counts),
        ("compatibility/normal-set-angles", check_normal_set_angles),
        (
            "compatibility/twinning-normal-counts",
            check_twinning_normal_counts,
        ),
        ("compatibility/twinning-residuals", check_twinning_residuals),
        (
            "compatibility/incompatibility-dichotomy",
            check_incompatibility_dichotomy,
        ),
        ("compatibility/envelope-shapes", check_envelope_shapes),
        (
            "geometry/domain-classification",
            check_domain_classification,
        ),
        ("geometry/normal-map-gradient", check_normal_map_gradient),
        (
            "geometry/flattening-first-order",
            check_flattening_is_first_order,
        ),
        ("microstructure/star-block", check_star_block),
        ("microstructure/laminate-energy", check_laminate_energy),
        ("microstructure/cover-accounting", check_cover_accounting),
        ("microstructure/depth-rules", check_depth_rules),
        ("relaxer/discrete-energies", check_discrete_energies),
        ("relaxer/interpolated-laminate", check_interpolated_laminate),
        ("relaxer/minimize-descends", check_minimize_descends),
        ("scaling/fit-recovery", check_fit_recovery),
        ("scenario/presets", check_scenario_presets),
    ]
}

/// Run every check, collecting per-check pass/fail and detail.
pub fn run_all() -> Vec<CheckResult> {
    checks()
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckResult {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckResult {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        let results = run_all();
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
        assert_eq!(results.len(), checks().len());
    }
}
