//! Epsilon sweeps and the linear-vs-logarithmic scaling-law fit.
//!
//! A sweep builds, for each epsilon on a strictly decreasing grid, the
//! domain's explicit competitor (the self-similar triangular block on an
//! admissible triangle, the greedy dyadic cover otherwise), records its
//! exact energy split, and optionally relaxes it on a grid. The resulting
//! rows are fitted against the two one-parameter envelopes
//! `c * min(eps, 1)` and `c * min(1, eps(|ln eps| + 1))`, and the verdict is
//! decided by the ratio of relative residuals.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra2d::Vec2;
use crate::compatibility::{lower_envelope, EnvelopeKind};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::microstructure::{
    cover_sampler, cover_summary, envelope_depth, star_best_depth, star_block, star_elastic,
    star_surface, FieldMode, Triangle,
};
use crate::relaxer::{discrete_energy, interpolate, minimize, DiscreteField, Grid, RelaxConfig};
use crate::scenario::{self, ExperimentSpec, Resolved, Scenario, SweepSource};
use crate::wells::WellSet;

// ---------------------------------------------------------------------------
// Specs and reports
// ---------------------------------------------------------------------------

/// What to sweep: a scenario, an epsilon grid, and the energy sources to
/// evaluate per epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Preset name or scenario file path, resolved by [`scenario::load`].
    pub scenario: String,
    /// Strictly decreasing, all positive.
    pub eps: Vec<f64>,
    pub sources: Vec<SweepSource>,
    /// Grid resolution for the relaxed source.
    pub resolution: usize,
    /// Relaxation parameters for the relaxed source.
    pub relax: RelaxConfig,
}

impl SweepSpec {
    /// Build a spec from a scenario document's sweep experiment.
    pub fn from_scenario(source: &str, s: &Scenario) -> Result<SweepSpec> {
        let ExperimentSpec::Sweep(p) = &s.experiment else {
            return Err(Error::Scenario(format!(
                "scenario '{}' does not define a sweep experiment",
                s.name
            )));
        };
        Ok(SweepSpec {
            scenario: source.to_string(),
            eps: p.eps_grid()?,
            sources: p.sources.clone(),
            resolution: p.resolution,
            relax: p.relax.clone().unwrap_or_default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::InvalidParameter("empty eps list".into()));
        }
        for &e in &self.eps {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "eps values must be positive and finite, got {e}"
                )));
            }
        }
        for w in self.eps.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "eps values must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.sources.is_empty() {
            return Err(Error::InvalidParameter("no sweep sources selected".into()));
        }
        let mut seen = Vec::new();
        for s in &self.sources {
            if seen.contains(s) {
                return Err(Error::InvalidParameter("duplicate sweep source".into()));
            }
            seen.push(*s);
        }
        if self.sources.contains(&SweepSource::Relaxed) {
            self.relax.validate()?;
            if self.resolution < 8 {
                return Err(Error::InvalidParameter(format!(
                    "relaxed source needs resolution >= 8, got {}",
                    self.resolution
                )));
            }
        }
        Ok(())
    }

    fn wants(&self, s: SweepSource) -> bool {
        self.sources.contains(&s)
    }
}

/// One epsilon's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    /// Construction depth: block depth on a triangle, finest cover level
    /// otherwise.
    pub depth: usize,
    pub elastic_construction: f64,
    pub surface_construction: f64,
    pub total_construction: f64,
    /// Grid energy of the interpolated construction (the relaxer's warm
    /// start), when the relaxed source ran.
    pub total_warm: Option<f64>,
    pub total_relaxed: Option<f64>,
    /// Semicolon-separated markers (construction kind, convergence, ...).
    pub flags: String,
}

/// Provenance attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub domain_hash: String,
    pub wells_hash: String,
    pub version: String,
    pub seed: u64,
}

/// All rows of a sweep, ordered by decreasing epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub metadata: Metadata,
    pub rows: Vec<SweepRow>,
}

/// Verdict of the dichotomy fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Linear,
    Logarithmic,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Linear => "linear",
            Verdict::Logarithmic => "logarithmic",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// One-parameter fits of both envelopes and the residual-ratio verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub c_lin: f64,
    pub c_log: f64,
    /// Root-mean-square of the per-point relative residuals `(E - c g)/E`.
    pub rms_lin: f64,
    pub rms_log: f64,
    pub verdict: Verdict,
}

// ---------------------------------------------------------------------------
// Sweeping
// ---------------------------------------------------------------------------

fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(16);
    for b in &digest[..8] {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn metadata_for(domain: &Polygon, wells: &WellSet, seed: u64) -> Result<Metadata> {
    let domain_json = serde_json::to_vec(domain)?;
    let wells_json = serde_json::to_vec(wells)?;
    Ok(Metadata {
        domain_hash: short_hash(&domain_json),
        wells_hash: short_hash(&wells_json),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
    })
}

enum ConstructionKind {
    /// Equilateral triangle admitting the stress-free block; side length.
    Star { tri: Triangle, side: f64 },
    /// Greedy dyadic cover of a star-shaped polygon.
    Cover,
}

fn construction_kind(domain: &Polygon, wells: &WellSet) -> Result<ConstructionKind> {
    let vs = domain.vertices();
    if vs.len() == 3 {
        let tri = Triangle::new([vs[0], vs[1], vs[2]])?;
        // Cheap admissibility probe; depth 1 builds seven cells.
        star_block(&tri, 1, wells)?;
        let side = (vs[1] - vs[0]).norm();
        Ok(ConstructionKind::Star { tri, side })
    } else {
        Ok(ConstructionKind::Cover)
    }
}

/// Grid energy of a warm start after overwriting its pinned entries, i.e.
/// the energy the relaxer's descent actually starts from.
fn pinned_energy(
    warm: &DiscreteField,
    base: &DiscreteField,
    wells: &WellSet,
    eps: f64,
    cfg: &RelaxConfig,
) -> Result<f64> {
    let mut pinned = warm.clone();
    for (k, f) in base.fixed.iter().enumerate() {
        if let Some(v) = f {
            pinned.values[k] = *v;
        }
    }
    Ok(discrete_energy(&pinned, wells, cfg)?.total(eps))
}

fn sweep_row(
    eps: f64,
    kind: &ConstructionKind,
    resolved: &Resolved,
    spec: &SweepSpec,
) -> Result<SweepRow> {
    let domain = resolved.require_polygon()?;
    let wells = &resolved.wells;
    let mut flags: Vec<String> = Vec::new();

    let (depth, elastic, surface) = match kind {
        ConstructionKind::Star { side, .. } => {
            let (depth, _) = star_best_depth(eps, *side);
            flags.push("star".into());
            (
                depth,
                star_elastic(depth, *side),
                star_surface(depth, *side),
            )
        }
        ConstructionKind::Cover => {
            // The envelope-balancing depth, not the measured argmin: the
            // sweep exhibits the logarithmic shape, and only this depth rule
            // makes the totals track `eps (|ln eps| + 1)` with one constant.
            let m = envelope_depth(eps)?;
            let summary = cover_summary(domain, m, wells, eps)?;
            flags.push("cover".into());
            (m, summary.breakdown.elastic, summary.breakdown.surface)
        }
    };
    let total_construction = elastic + eps * surface;

    let (mut total_warm, mut total_relaxed) = (None, None);
    if spec.wants(SweepSource::Relaxed) {
        let grid = Grid::for_polygon(domain, spec.resolution)?;
        let base =
            DiscreteField::with_boundary(grid.clone(), FieldMode::Displacement, |_| Vec2::ZERO);
        let warm = match kind {
            ConstructionKind::Star { tri, .. } => {
                let field = star_block(tri, depth, wells)?;
                let (warm, extended) = interpolate(&field, &grid)?;
                if extended {
                    flags.push("warm_extended".into());
                }
                warm
            }
            ConstructionKind::Cover => {
                let sampler = cover_sampler(domain, depth, wells, eps)?;
                let mut warm = base.clone();
                for j in 0..=grid.ny {
                    for i in 0..=grid.nx {
                        let id = grid.node_index(i, j);
                        warm.values[id] = sampler.eval(grid.node_pos(i, j));
                    }
                }
                warm
            }
        };
        let warm_total = pinned_energy(&warm, &base, wells, eps, &spec.relax)?;
        let out = minimize(&base, wells, eps, &spec.relax, std::slice::from_ref(&warm))?;
        flags.push(if out.converged {
            "converged".into()
        } else {
            "max_iters".into()
        });
        let relaxed_total = out.energy.total(eps);
        if relaxed_total > warm_total + 1e-9 {
            return Err(Error::NoConvergence(format!(
                "relaxed energy {relaxed_total} exceeds its warm start {warm_total}"
            )));
        }
        total_warm = Some(warm_total);
        total_relaxed = Some(relaxed_total);
    }

    Ok(SweepRow {
        eps,
        depth,
        elastic_construction: elastic,
        surface_construction: surface,
        total_construction,
        total_warm,
        total_relaxed,
        flags: flags.join(";"),
    })
}

/// Run a sweep: resolve the scenario, build rows for every epsilon
/// concurrently, and assemble them in grid order. Rows are independent, so
/// the result does not depend on the worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let resolved = scenario::load(&spec.scenario)?.resolve()?;
    let domain = resolved.require_polygon()?;
    let kind = construction_kind(domain, &resolved.wells)?;
    let metadata = metadata_for(domain, &resolved.wells, spec.relax.seed)?;

    let rows: Vec<SweepRow> = spec
        .eps
        .par_iter()
        .map(|&eps| {
            sweep_row(eps, &kind, &resolved, spec)
                .map_err(|e| Error::ConstructionFailed(format!("eps = {eps:.6e}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepReport {
        scenario: resolved.name,
        metadata,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Dichotomy fit
// ---------------------------------------------------------------------------

fn envelope(eps: f64, kind: EnvelopeKind) -> f64 {
    lower_envelope(eps, kind).expect("eps validated upstream")
}

fn fit_one(pairs: &[(f64, f64)], kind: EnvelopeKind) -> (f64, f64) {
    // Minimize the per-point relative residual sum over the single scale c:
    // with q_i = g(eps_i)/E_i, the optimum of sum (1 - c q_i)^2 is
    // c = sum q / sum q^2. Relative residuals make rows of very different
    // magnitude count equally, matching multiplicative noise.
    let mut sum_q = 0.0;
    let mut sum_q2 = 0.0;
    for &(eps, e) in pairs {
        let q = envelope(eps, kind) / e;
        sum_q += q;
        sum_q2 += q * q;
    }
    let c = (sum_q / sum_q2).max(0.0);
    let mut ss = 0.0;
    for &(eps, e) in pairs {
        let r = 1.0 - c * envelope(eps, kind) / e;
        ss += r * r;
    }
    (c, (ss / pairs.len() as f64).sqrt())
}

/// Fit one source's totals against both envelopes and decide the verdict by
/// the residual-ratio rule: a model wins when its relative RMS is at most
/// half the other's.
pub fn fit_dichotomy(report: &SweepReport, source: SweepSource) -> Result<FitResult> {
    let pairs: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| {
            let e = match source {
                SweepSource::Construction => Some(r.total_construction),
                SweepSource::Relaxed => r.total_relaxed,
            }?;
            Some((r.eps, e))
        })
        .collect();
    let small = pairs
        .iter()
        .filter(|&&(eps, _)| eps <= 0.0625 * (1.0 + 1e-12))
        .count();
    if small < 5 {
        return Err(Error::InsufficientData(format!(
            "dichotomy fit needs at least 5 rows with eps <= 2^-4, got {small}"
        )));
    }
    if pairs.iter().any(|&(_, e)| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InsufficientData(
            "dichotomy fit needs positive finite energies".into(),
        ));
    }
    let (c_lin, rms_lin) = fit_one(&pairs, EnvelopeKind::Linear);
    let (c_log, rms_log) = fit_one(&pairs, EnvelopeKind::Log);
    let lin_wins = rms_lin <= 0.5 * rms_log;
    let log_wins = rms_log <= 0.5 * rms_lin;
    let verdict = match (lin_wins, log_wins) {
        (true, false) => Verdict::Linear,
        (false, true) => Verdict::Logarithmic,
        _ => Verdict::Inconclusive,
    };
    Ok(FitResult {
        c_lin,
        c_log,
        rms_lin,
        rms_log,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}' (expected csv, json, or svg)"
            ))),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x}"))
}

const CSV_HEADER: &str = "eps,depth,elastic_construction,surface_construction,\
total_construction,total_warm,total_relaxed,flags,verdict_running";

/// Render a report to text in the requested format.
///
/// * CSV: metadata as leading `#` comments, then one row per epsilon with a
///   running construction-fit verdict in the last column (`pending` until
///   enough rows accumulate).
/// * JSON: the full report plus the supplied fits.
/// * SVG: a self-contained 800x600 log2-log2 chart with both fitted
///   envelopes and one polyline per data source.
pub fn render_report(
    report: &SweepReport,
    fits: &[(SweepSource, FitResult)],
    format: ReportFormat,
) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::InsufficientData(
            "cannot render an empty report".into(),
        ));
    }
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => {
            let fits_doc: Vec<serde_json::Value> = fits
                .iter()
                .map(|(s, f)| serde_json::json!({ "source": s, "fit": f }))
                .collect();
            let doc = serde_json::json!({ "report": report, "fits": fits_doc });
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        ReportFormat::Svg => render_svg(report, fits),
    }
}

/// Render and write to `path`.
pub fn emit_report(
    report: &SweepReport,
    fits: &[(SweepSource, FitResult)],
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let text = render_report(report, fits, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn render_csv(report: &SweepReport) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# scenario: {}\n", report.scenario));
    out.push_str(&format!("# domain_hash: {}\n", report.metadata.domain_hash));
    out.push_str(&format!("# wells_hash: {}\n", report.metadata.wells_hash));
    out.push_str(&format!("# version: {}\n", report.metadata.version));
    out.push_str(&format!("# seed: {}\n", report.metadata.seed));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, row) in report.rows.iter().enumerate() {
        if row.flags.contains(',') || row.flags.contains('\n') {
            return Err(Error::InvalidParameter(format!(
                "row flags must not contain commas or newlines: {:?}",
                row.flags
            )));
        }
        let prefix = SweepReport {
            scenario: report.scenario.clone(),
            metadata: report.metadata.clone(),
            rows: report.rows[..=i].to_vec(),
        };
        let running = match fit_dichotomy(&prefix, SweepSource::Construction) {
            Ok(f) => f.verdict.to_string(),
            Err(_) => "pending".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.eps,
            row.depth,
            row.elastic_construction,
            row.surface_construction,
            row.total_construction,
            fmt_opt(row.total_warm),
            fmt_opt(row.total_relaxed),
            row.flags,
            running
        ));
    }
    Ok(out)
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("line {line_no}: bad float {field:?}")))
}

fn parse_opt(field: &str, line_no: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line_no).map(Some)
    }
}

/// Parse a CSV report produced by [`render_report`]; the derived
/// `verdict_running` column is checked for presence but not stored.
pub fn parse_report(text: &str) -> Result<SweepReport> {
    let mut scenario = String::new();
    let mut meta = Metadata {
        domain_hash: String::new(),
        wells_hash: String::new(),
        version: String::new(),
        seed: 0,
    };
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "scenario" => scenario = value.to_string(),
                    "domain_hash" => meta.domain_hash = value.to_string(),
                    "wells_hash" => meta.wells_hash = value.to_string(),
                    "version" => meta.version = value.to_string(),
                    "seed" => {
                        meta.seed = value.parse().map_err(|_| {
                            Error::InvalidParameter(format!("line {line_no}: bad seed {value:?}"))
                        })?;
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::InvalidParameter(format!(
                    "line {line_no}: unexpected header {line:?}"
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::InvalidParameter(format!(
                "line {line_no}: expected 9 fields, got {}",
                fields.len()
            )));
        }
        rows.push(SweepRow {
            eps: parse_f64(fields[0], line_no)?,
            depth: fields[1].parse().map_err(|_| {
                Error::InvalidParameter(format!("line {line_no}: bad depth {:?}", fields[1]))
            })?,
            elastic_construction: parse_f64(fields[2], line_no)?,
            surface_construction: parse_f64(fields[3], line_no)?,
            total_construction: parse_f64(fields[4], line_no)?,
            total_warm: parse_opt(fields[5], line_no)?,
            total_relaxed: parse_opt(fields[6], line_no)?,
            flags: fields[7].to_string(),
        });
    }
    if !saw_header {
        return Err(Error::InvalidParameter("missing CSV header".into()));
    }
    Ok(SweepReport {
        scenario,
        metadata: meta,
        rows,
    })
}

// ---------------------------------------------------------------------------
// SVG chart
// ---------------------------------------------------------------------------

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 770.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 540.0;

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = if self.x1 > self.x0 {
            (x - self.x0) / (self.x1 - self.x0)
        } else {
            0.5
        };
        let fy = if self.y1 > self.y0 {
            (y - self.y0) / (self.y1 - self.y0)
        } else {
            0.5
        };
        (
            Self::LEFT + fx * (Self::RIGHT - Self::LEFT),
            Self::BOTTOM - fy * (Self::BOTTOM - Self::TOP),
        )
    }
}

fn polyline(points: &[(f64, f64)], frame: &Frame, class: &str, style: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| {
            let (px, py) = frame.map(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    format!(
        "  <polyline class=\"{class}\" points=\"{}\" fill=\"none\" {style}/>\n",
        coords.join(" ")
    )
}

fn render_svg(report: &SweepReport, fits: &[(SweepSource, FitResult)]) -> Result<String> {
    let fit = fits
        .iter()
        .find(|(s, _)| *s == SweepSource::Construction)
        .or_else(|| fits.first())
        .map(|(_, f)| f)
        .ok_or_else(|| {
            Error::InvalidParameter("svg output needs at least one fit for the envelopes".into())
        })?;

    // Series in log2-log2 coordinates.
    let mut series: Vec<(&str, &str, Vec<(f64, f64)>)> = Vec::new();
    let construction: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.eps.log2(), r.total_construction.log2()))
        .collect();
    series.push((
        "data data-construction",
        "stroke=\"#1f77b4\" stroke-width=\"2\"",
        construction,
    ));
    let relaxed: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| r.total_relaxed.map(|t| (r.eps.log2(), t.log2())))
        .collect();
    if !relaxed.is_empty() {
        series.push((
            "data data-relaxed",
            "stroke=\"#2ca02c\" stroke-width=\"2\"",
            relaxed,
        ));
    }

    let eps_lo = report.rows.last().expect("nonempty").eps;
    let eps_hi = report.rows.first().expect("nonempty").eps;
    let n_env = 64;
    let mut env_lin = Vec::with_capacity(n_env);
    let mut env_log = Vec::with_capacity(n_env);
    for k in 0..n_env {
        let t = k as f64 / (n_env - 1) as f64;
        let eps = eps_hi * (eps_lo / eps_hi).powf(t);
        if fit.c_lin > 0.0 {
            env_lin.push((
                eps.log2(),
                (fit.c_lin * envelope(eps, EnvelopeKind::Linear)).log2(),
            ));
        }
        if fit.c_log > 0.0 {
            env_log.push((
                eps.log2(),
                (fit.c_log * envelope(eps, EnvelopeKind::Log)).log2(),
            ));
        }
    }

    let mut frame = Frame {
        x0: f64::INFINITY,
        x1: f64::NEG_INFINITY,
        y0: f64::INFINITY,
        y1: f64::NEG_INFINITY,
    };
    for (_, _, pts) in &series {
        for &(x, y) in pts {
            frame.x0 = frame.x0.min(x);
            frame.x1 = frame.x1.max(x);
            frame.y0 = frame.y0.min(y);
            frame.y1 = frame.y1.max(y);
        }
    }
    for pts in [&env_lin, &env_log] {
        for &(_, y) in pts {
            frame.y0 = frame.y0.min(y);
            frame.y1 = frame.y1.max(y);
        }
    }
    if !frame.x0.is_finite() || !frame.y0.is_finite() {
        return Err(Error::InsufficientData("svg needs positive totals".into()));
    }
    frame.y0 -= 0.5;
    frame.y1 += 0.5;

    let mut svg = String::new();
    svg.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" \
         width=\"800\" height=\"600\">\n",
    );
    svg.push_str("  <rect width=\"800\" height=\"600\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{} (verdict: {})</text>\n",
        report.scenario, fit.verdict
    ));

    // Axes with integer log2 ticks.
    svg.push_str(&format!(
        "  <line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = Frame::LEFT,
        r = Frame::RIGHT,
        b = Frame::BOTTOM
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = Frame::LEFT,
        t = Frame::TOP,
        b = Frame::BOTTOM
    ));
    let x_stride = (((frame.x1 - frame.x0) / 10.0).ceil() as i64).max(1);
    let mut tick = frame.x0.ceil() as i64;
    while (tick as f64) <= frame.x1 {
        let (px, _) = frame.map(tick as f64, frame.y0);
        svg.push_str(&format!(
            "  <line x1=\"{px:.2}\" y1=\"{b}\" x2=\"{px:.2}\" y2=\"{b2}\" stroke=\"black\"/>\n  \
             <text x=\"{px:.2}\" y=\"{ty}\" text-anchor=\"middle\" font-size=\"12\">{tick}</text>\n",
            b = Frame::BOTTOM,
            b2 = Frame::BOTTOM + 6.0,
            ty = Frame::BOTTOM + 22.0,
        ));
        tick += x_stride;
    }
    let y_stride = (((frame.y1 - frame.y0) / 10.0).ceil() as i64).max(1);
    let mut tick = frame.y0.ceil() as i64;
    while (tick as f64) <= frame.y1 {
        let (_, py) = frame.map(frame.x0, tick as f64);
        svg.push_str(&format!(
            "  <line x1=\"{l2}\" y1=\"{py:.2}\" x2=\"{l}\" y2=\"{py:.2}\" stroke=\"black\"/>\n  \
             <text x=\"{tx}\" y=\"{py2:.2}\" text-anchor=\"end\" font-size=\"12\">{tick}</text>\n",
            l = Frame::LEFT,
            l2 = Frame::LEFT - 6.0,
            tx = Frame::LEFT - 10.0,
            py2 = py + 4.0,
        ));
        tick += y_stride;
    }
    svg.push_str(
        "  <text x=\"425\" y=\"580\" text-anchor=\"middle\" font-size=\"14\">log2(eps)</text>\n",
    );
    svg.push_str(
        "  <text x=\"24\" y=\"290\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 24 290)\">log2(energy)</text>\n",
    );

    svg.push_str(&polyline(
        &env_lin,
        &frame,
        "envelope envelope-linear",
        "stroke=\"#d62728\" stroke-dasharray=\"6 3\"",
    ));
    svg.push_str(&polyline(
        &env_log,
        &frame,
        "envelope envelope-log",
        "stroke=\"#9467bd\" stroke-dasharray=\"2 3\"",
    ));
    for (class, style, pts) in &series {
        svg.push_str(&polyline(pts, &frame, class, style));
    }
    let mut legend_y = 60.0;
    for (label, color) in [
        ("construction", "#1f77b4"),
        ("relaxed", "#2ca02c"),
        ("c_lin * min(eps, 1)", "#d62728"),
        ("c_log * min(1, eps(|ln eps|+1))", "#9467bd"),
    ] {
        svg.push_str(&format!(
            "  <line x1=\"600\" y1=\"{y}\" x2=\"640\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n  \
             <text x=\"648\" y=\"{ty}\" font-size=\"12\">{label}</text>\n",
            y = legend_y,
            ty = legend_y + 4.0,
        ));
        legend_y += 20.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic_report(pairs: &[(f64, f64)]) -> SweepReport {
        SweepReport {
            scenario: "synthetic".into(),
            metadata: Metadata {
                domain_hash: "0".repeat(16),
                wells_hash: "1".repeat(16),
                version: "test".into(),
                seed: 0,
            },
            rows: pairs
                .iter()
                .map(|&(eps, e)| SweepRow {
                    eps,
                    depth: 1,
                    elastic_construction: 0.0,
                    surface_construction: e / eps,
                    total_construction: e,
                    total_warm: None,
                    total_relaxed: None,
                    flags: "synthetic".into(),
                })
                .collect(),
        }
    }

    fn dyadic_grid(hi_exp: i32, lo_exp: i32) -> Vec<f64> {
        (lo_exp..=hi_exp).rev().map(|k| 2f64.powi(k)).collect()
    }

    #[test]
    fn planted_envelopes_are_recovered_exactly() {
        let grid = dyadic_grid(-4, -12);
        let lin: Vec<(f64, f64)> = grid
            .iter()
            .map(|&e| (e, 3.0 * envelope(e, EnvelopeKind::Linear)))
            .collect();
        let f = fit_dichotomy(&synthetic_report(&lin), SweepSource::Construction).unwrap();
        assert!((f.c_lin - 3.0).abs() <= 1e-10 * 3.0, "c_lin = {}", f.c_lin);
        assert!(f.rms_lin <= 1e-12);
        assert_eq!(f.verdict, Verdict::Linear);

        let log: Vec<(f64, f64)> = grid
            .iter()
            .map(|&e| (e, 0.2 * envelope(e, EnvelopeKind::Log)))
            .collect();
        let f = fit_dichotomy(&synthetic_report(&log), SweepSource::Construction).unwrap();
        assert!((f.c_log - 0.2).abs() <= 1e-10 * 0.2, "c_log = {}", f.c_log);
        assert!(f.rms_log <= 1e-12);
        assert_eq!(f.verdict, Verdict::Logarithmic);
    }

    #[test]
    fn too_few_small_eps_rows_are_rejected() {
        let pairs: Vec<(f64, f64)> = dyadic_grid(-1, -4).iter().map(|&e| (e, e)).collect();
        match fit_dichotomy(&synthetic_report(&pairs), SweepSource::Construction) {
            Err(Error::InsufficientData(_)) => {}
            other => panic!("expected InsufficientData, got {other:?}"),
        }
        // Relaxed source with no relaxed totals is insufficient too.
        let pairs: Vec<(f64, f64)> = dyadic_grid(-4, -10).iter().map(|&e| (e, e)).collect();
        match fit_dichotomy(&synthetic_report(&pairs), SweepSource::Relaxed) {
            Err(Error::InsufficientData(_)) => {}
            other => panic!("expected InsufficientData, got {other:?}"),
        }
    }

    #[test]
    fn noisy_verdicts_stay_correct() {
        // 5% multiplicative noise on each envelope over six dyadic decades;
        // at least 95 of 100 seeded trials must classify correctly.
        let grid = dyadic_grid(-4, -10);
        for (kind, want) in [
            (EnvelopeKind::Linear, Verdict::Linear),
            (EnvelopeKind::Log, Verdict::Logarithmic),
        ] {
            let mut correct = 0;
            for seed in 0..100u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pairs: Vec<(f64, f64)> = grid
                    .iter()
                    .map(|&e| {
                        let noise = 1.0 + rng.gen_range(-0.05..0.05);
                        (e, 0.7 * envelope(e, kind) * noise)
                    })
                    .collect();
                let f =
                    fit_dichotomy(&synthetic_report(&pairs), SweepSource::Construction).unwrap();
                if f.verdict == want {
                    correct += 1;
                }
            }
            assert!(
                correct >= 95,
                "{kind:?}: only {correct}/100 verdicts correct"
            );
        }
    }

    #[test]
    fn eps_grid_validation_rejects_bad_specs() {
        let base = SweepSpec {
            scenario: "unit_square".into(),
            eps: vec![],
            sources: vec![SweepSource::Construction],
            resolution: 32,
            relax: RelaxConfig::default(),
        };
        assert!(matches!(base.validate(), Err(Error::InvalidParameter(_))));
        let bad_order = SweepSpec {
            eps: vec![0.25, 0.5],
            ..base.clone()
        };
        assert!(matches!(
            bad_order.validate(),
            Err(Error::InvalidParameter(_))
        ));
        let negative = SweepSpec {
            eps: vec![0.5, -0.25],
            ..base.clone()
        };
        assert!(matches!(
            negative.validate(),
            Err(Error::InvalidParameter(_))
        ));
        let dup = SweepSpec {
            eps: vec![0.5],
            sources: vec![SweepSource::Construction, SweepSource::Construction],
            ..base.clone()
        };
        assert!(matches!(dup.validate(), Err(Error::InvalidParameter(_))));
        let ok = SweepSpec {
            eps: vec![0.5, 0.25],
            ..base
        };
        ok.validate().unwrap();
    }

    #[test]
    fn triangle_sweep_scales_linearly() {
        let spec = SweepSpec::from_scenario(
            "compatible_triangle",
            &scenario::preset("compatible_triangle").unwrap(),
        )
        .unwrap();
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 11);
        for row in &report.rows {
            // The chosen depth keeps the residual core misfit below eps
            // (side length 1).
            assert!(
                row.elastic_construction <= row.eps * (1.0 + 1e-12),
                "eps = {}: elastic = {}",
                row.eps,
                row.elastic_construction
            );
            assert!(row.flags.contains("star"));
        }
        let fit = fit_dichotomy(&report, SweepSource::Construction).unwrap();
        assert_eq!(fit.verdict, Verdict::Linear, "{fit:?}");
        assert!(fit.rms_lin <= 0.1, "rms_lin = {}", fit.rms_lin);
    }

    #[test]
    fn square_sweep_scales_logarithmically() {
        let spec =
            SweepSpec::from_scenario("unit_square", &scenario::preset("unit_square").unwrap())
                .unwrap();
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 7);
        for row in &report.rows {
            assert!(row.flags.contains("cover"));
            assert_eq!(row.depth as f64, row.eps.log2().abs().ceil());
        }
        // Totals stay within a fixed band around eps (|log2 eps| + 1).
        let ratios: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.total_construction / (r.eps * (r.eps.log2().abs() + 1.0)))
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(lo > 0.0);
        assert!(hi / lo <= 3.0, "ratio band [{lo}, {hi}] too wide");
        let fit = fit_dichotomy(&report, SweepSource::Construction).unwrap();
        assert_eq!(fit.verdict, Verdict::Logarithmic, "{fit:?}");
        assert!(fit.rms_log <= 0.15, "rms_log = {}", fit.rms_log);
    }

    #[test]
    fn sweep_rows_do_not_depend_on_worker_count() {
        let spec = SweepSpec {
            scenario: "compatible_triangle".into(),
            eps: dyadic_grid(-4, -9),
            sources: vec![SweepSource::Construction],
            resolution: 32,
            relax: RelaxConfig::default(),
        };
        let parallel = run_sweep(&spec).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec))
            .unwrap();
        assert_eq!(parallel, single);
    }

    #[test]
    fn relaxed_source_never_worsens_its_warm_start() {
        let spec = SweepSpec {
            scenario: "compatible_triangle".into(),
            eps: vec![2f64.powi(-4), 2f64.powi(-5)],
            sources: vec![SweepSource::Construction, SweepSource::Relaxed],
            resolution: 16,
            relax: RelaxConfig {
                max_iters: 5,
                restarts: 1,
                ..Default::default()
            },
        };
        let report = run_sweep(&spec).unwrap();
        for row in &report.rows {
            let warm = row.total_warm.expect("relaxed source ran");
            let relaxed = row.total_relaxed.expect("relaxed source ran");
            assert!(relaxed <= warm + 1e-9, "relaxed {relaxed} vs warm {warm}");
            assert!(row.flags.contains("star"));
        }
    }

    #[test]
    fn csv_round_trips_and_tracks_a_running_verdict() {
        let grid = dyadic_grid(-4, -12);
        let mut report = synthetic_report(
            &grid
                .iter()
                .map(|&e| (e, 2.5 * envelope(e, EnvelopeKind::Linear)))
                .collect::<Vec<_>>(),
        );
        report.rows[0].total_warm = Some(0.125);
        report.rows[0].total_relaxed = Some(0.0625);
        let fit = fit_dichotomy(&report, SweepSource::Construction).unwrap();
        let csv = render_report(
            &report,
            &[(SweepSource::Construction, fit)],
            ReportFormat::Csv,
        )
        .unwrap();
        let parsed = parse_report(&csv).unwrap();
        assert_eq!(parsed, report);
        let lines: Vec<&str> = csv.lines().collect();
        let first_row = lines
            .iter()
            .position(|l| !l.starts_with('#') && !l.starts_with("eps"))
            .unwrap();
        assert!(lines[first_row].ends_with("pending"));
        assert!(lines.last().unwrap().ends_with("linear"));
    }

    #[test]
    fn json_and_svg_have_the_documented_structure() {
        let grid = dyadic_grid(-4, -12);
        let mut report = synthetic_report(
            &grid
                .iter()
                .map(|&e| (e, 1.5 * envelope(e, EnvelopeKind::Log)))
                .collect::<Vec<_>>(),
        );
        for row in report.rows.iter_mut() {
            row.total_relaxed = Some(row.total_construction * 0.5);
        }
        let fit = fit_dichotomy(&report, SweepSource::Construction).unwrap();
        let fits = vec![(SweepSource::Construction, fit)];

        let json = render_report(&report, &fits, ReportFormat::Json).unwrap();
        assert!(json.contains("\"verdict\": \"logarithmic\""), "{json}");
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["report"]["rows"].as_array().unwrap().len(), 9);

        let svg = render_report(&report, &fits, ReportFormat::Svg).unwrap();
        // Two envelope polylines plus one polyline per data source.
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("class=\"envelope").count(), 2);
        assert!(svg.contains("log2(eps)"));
        assert!(svg.contains("log2(energy)"));
        assert!(svg.contains("viewBox=\"0 0 800 600\""));
    }

    #[test]
    fn reports_are_refused_when_empty() {
        let report = synthetic_report(&[]);
        assert!(matches!(
            render_report(&report, &[], ReportFormat::Csv),
            Err(Error::InsufficientData(_))
        ));
    }
}
