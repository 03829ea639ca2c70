//! Command-line driver: wires scenario documents to the library and emits
//! machine-readable outputs (JSON to stdout, or CSV/JSON/SVG reports via
//! `--out`).
//!
//! Exit codes: 0 success, 1 runtime or data failure (including a failing
//! `selftest`), 2 usage errors, 3 scenario load/parse failures (JSON parse
//! errors carry line and column).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use martenscale::compatibility::austenite_normals_linear;
use martenscale::geometry::{classify_polygon, invertibility_radius, DomainClass};
use martenscale::microstructure::cover_sampler;
use martenscale::relaxer::DiscreteField;
use martenscale::scenario::{self, EdgeSelection, ExperimentSpec, FlattenParams, RelaxParams};
use martenscale::wells::{hex_rhombic_wells, oblique_wells, Branch, WellMode, WellSet};
use martenscale::{
    check_continuity, discrete_energy, envelope_depth, exact_energy, fit_dichotomy, flatten_patch,
    greedy_cover, hex_rhombic_normal_set, incompatibility_constant, interpolate, minimize,
    parse_report, render_report, run_sweep, star_best_depth, star_block, BoundaryPatch, Error,
    FieldMode, FitResult, Grid, ReportFormat, SweepSource, SweepSpec, Triangle, UnitVec2, Vec2,
};

#[derive(Parser)]
#[command(
    name = "martenscale",
    version,
    about = "Multiwell elastic scaling laws on polygonal domains",
    after_help = "Env: MARTENSCALE_LOG={error,info,debug} controls logging (default error)."
)]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed for relaxation restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format for `sweep` (other commands always emit JSON).
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a well set (transformation strains or deformation variants).
    Wells(WellsArgs),
    /// Print the zero-energy interface normals of a well set.
    Normals(WellsArgs),
    /// Boundary incompatibility constant, edge by edge, for a scenario domain.
    Dcheck(ScenarioArgs),
    /// Build one explicit competitor field and print its exact energy.
    Construct(ConstructArgs),
    /// Relax a scenario on a grid, optionally warm-started by a construction.
    Relax(RelaxArgs),
    /// Sweep epsilon, fit both scaling envelopes, and emit a report.
    Sweep(SweepArgs),
    /// Re-fit the scaling envelopes to a previously saved CSV report.
    Fit(FitArgs),
    /// Flatten a curved boundary patch and print the certified bounds.
    Flatten(ScenarioArgs),
    /// Run the built-in invariant suite and print a pass/fail table.
    Selftest,
}

#[derive(Args)]
struct WellsArgs {
    /// Scenario file or preset supplying the well set (overrides --wells).
    #[arg(long, value_name = "PATH")]
    scenario: Option<String>,
    /// Named family: "hex_rhombic" or "oblique".
    #[arg(long, default_value = "hex_rhombic")]
    wells: String,
    /// Parent symmetry for the oblique family (4 = square, 3 = hexagonal).
    #[arg(long, default_value_t = 4)]
    ngon: u32,
    /// Lattice aspect parameter for the oblique family.
    #[arg(long, default_value_t = 1.2)]
    aspect: f64,
    /// Rotation branch for the oblique family: "plus" or "minus".
    #[arg(long, default_value = "minus")]
    branch: String,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file or preset name.
    #[arg(long, value_name = "PATH")]
    scenario: String,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Interface-energy weight (overrides the scenario's construct block).
    #[arg(long)]
    eps: Option<f64>,
    /// Construction depth (default: balanced against eps).
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct RelaxArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Interface-energy weight (overrides the scenario's relax block).
    #[arg(long)]
    eps: Option<f64>,
    /// Grid resolution (cells across the longer bounding-box side).
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Coarsest epsilon (overrides the scenario grid).
    #[arg(long)]
    eps_max: Option<f64>,
    /// Finest epsilon (overrides the scenario grid).
    #[arg(long)]
    eps_min: Option<f64>,
    /// Number of log-spaced epsilon values (overrides the scenario grid).
    #[arg(long)]
    eps_count: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV report produced by `sweep --format csv`.
    #[arg(value_name = "REPORT")]
    report: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MARTENSCALE_LOG", "error"))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExitWith::Failure(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Scenario(_) | Error::Json(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
        Err(ExitWith::ChecksFailed) => ExitCode::from(1),
    }
}

enum ExitWith {
    Failure(Error),
    ChecksFailed,
}

impl From<Error> for ExitWith {
    fn from(e: Error) -> Self {
        ExitWith::Failure(e)
    }
}

fn run(cli: &Cli) -> Result<(), ExitWith> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Wells(a) => cmd_wells(a, seed, cli.out.as_deref())?,
        Command::Normals(a) => cmd_normals(a, seed, cli.out.as_deref())?,
        Command::Dcheck(a) => cmd_dcheck(a, seed, cli.out.as_deref())?,
        Command::Construct(a) => cmd_construct(a, seed, cli.out.as_deref())?,
        Command::Relax(a) => cmd_relax(a, cli.seed, cli.out.as_deref())?,
        Command::Sweep(a) => cmd_sweep(a, cli.seed, &cli.format, cli.out.as_deref())?,
        Command::Fit(a) => cmd_fit(a, seed, cli.out.as_deref())?,
        Command::Flatten(a) => cmd_flatten(a, seed, cli.out.as_deref())?,
        Command::Selftest => return cmd_selftest(),
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            // A closed pipe downstream (e.g. `| head`) is not an error.
            if let Err(e) = writeln!(stdout, "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn emit_json(doc: &serde_json::Value, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(doc)?;
    emit(&text, out)
}

fn well_set(a: &WellsArgs) -> Result<WellSet, Error> {
    if let Some(src) = &a.scenario {
        return Ok(scenario::load(src)?.resolve()?.wells);
    }
    match a.wells.as_str() {
        "hex_rhombic" => Ok(hex_rhombic_wells()),
        "oblique" => {
            let branch = match a.branch.as_str() {
                "plus" => Branch::Plus,
                "minus" => Branch::Minus,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown branch '{other}' (expected 'plus' or 'minus')"
                    )))
                }
            };
            oblique_wells(a.ngon, a.aspect, branch)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown well family '{other}' (expected 'hex_rhombic' or 'oblique')"
        ))),
    }
}

fn mode_name(mode: WellMode) -> &'static str {
    match mode {
        WellMode::Linear => "linear",
        WellMode::Nonlinear => "nonlinear",
    }
}

fn cmd_wells(a: &WellsArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let wells = well_set(a)?;
    let count = match &wells {
        w if w.mode() == WellMode::Linear => w.linear_strains()?.len(),
        w => w.nonlinear_variants()?.len(),
    };
    emit_json(
        &serde_json::json!({
            "seed": seed,
            "mode": mode_name(wells.mode()),
            "variant_count": count,
            "wells": wells,
        }),
        out,
    )
}

fn normal_set(wells: &WellSet) -> Result<martenscale::NormalSet, Error> {
    match wells.mode() {
        WellMode::Linear => {
            let strains = wells.linear_strains()?;
            let hex = hex_rhombic_wells();
            if hex.linear_strains().map(|s| s == strains).unwrap_or(false) {
                return Ok(hex_rhombic_normal_set());
            }
            let mut dirs = Vec::new();
            for &e in strains {
                dirs.extend(austenite_normals_linear(e).directions);
            }
            Ok(martenscale::NormalSet::new(
                dirs,
                martenscale::compatibility::Provenance::Custom,
            ))
        }
        WellMode::Nonlinear => martenscale::nonlinear_normal_set(wells),
    }
}

fn cmd_normals(a: &WellsArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let wells = well_set(a)?;
    let set = normal_set(&wells)?;
    let directions: Vec<[f64; 2]> = set
        .directions
        .iter()
        .map(|d| [d.get().x, d.get().y])
        .collect();
    emit_json(
        &serde_json::json!({
            "seed": seed,
            "mode": mode_name(wells.mode()),
            "count": directions.len(),
            "angles_deg": set.angles_deg(),
            "directions": directions,
        }),
        out,
    )
}

fn cmd_dcheck(a: &ScenarioArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let resolved = scenario::load(&a.scenario)?.resolve()?;
    let polygon = resolved.require_polygon()?;
    let vs = polygon.vertices();
    let selected: Vec<usize> = match &resolved.austenite_edges {
        EdgeSelection::All => (0..vs.len()).collect(),
        EdgeSelection::Indices(idx) => idx.clone(),
    };
    let normals = normal_set(&resolved.wells)?;
    let (edge_compat, class) = classify_polygon(polygon, &normals, 1e-9)?;

    let mut edges = Vec::new();
    let mut d_min = f64::INFINITY;
    for &k in &selected {
        let from = vs[k];
        let to = vs[(k + 1) % vs.len()];
        let dir = UnitVec2::new(to - from)?;
        let patch = BoundaryPatch::flat(from, dir, (to - from).norm());
        let inc = incompatibility_constant(&patch, &resolved.wells)?;
        d_min = d_min.min(inc.d);
        edges.push(serde_json::json!({
            "edge": k,
            "from": [from.x, from.y],
            "to": [to.x, to.y],
            "tangent_deg": dir.angle_mod_pi().to_degrees(),
            "d": inc.d,
            "nearest_well": inc.argmin_well_index,
            "compatible": edge_compat[k],
        }));
    }
    emit_json(
        &serde_json::json!({
            "seed": seed,
            "scenario": resolved.name,
            "class": match class { DomainClass::Compatible => "compatible", DomainClass::Generic => "generic" },
            "d": d_min,
            "edges": edges,
        }),
        out,
    )
}

fn construct_eps_depth(
    resolved: &scenario::Resolved,
    eps_flag: Option<f64>,
    depth_flag: Option<usize>,
) -> Result<(f64, Option<usize>), Error> {
    let (mut eps, mut depth) = (None, depth_flag);
    if let ExperimentSpec::Construct(p) = &resolved.experiment {
        eps = Some(p.eps);
        depth = depth.or(p.depth);
    }
    if let Some(e) = eps_flag {
        eps = Some(e);
    }
    let eps = eps.ok_or_else(|| {
        Error::Scenario("construct needs --eps or a scenario construct block".into())
    })?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must be positive"
        )));
    }
    Ok((eps, depth))
}

fn cmd_construct(a: &ConstructArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let resolved = scenario::load(&a.scenario.scenario)?.resolve()?;
    let polygon = resolved.require_polygon()?;
    let wells = &resolved.wells;
    let (eps, depth) = construct_eps_depth(&resolved, a.eps, a.depth)?;

    let vs = polygon.vertices();
    let star = if vs.len() == 3 {
        let tri = Triangle::new([vs[0], vs[1], vs[2]])?;
        star_block(&tri, 1, wells).ok().map(|_| tri)
    } else {
        None
    };

    let doc = if let Some(tri) = star {
        let side = (vs[1] - vs[0]).norm();
        let depth = depth.unwrap_or_else(|| star_best_depth(eps, side).0);
        let field = star_block(&tri, depth, wells)?;
        let energy = exact_energy(&field, wells)?;
        let report = check_continuity(&field);
        log::info!(
            "star construction: depth {depth}, {} cells, total {}",
            field.complex.cells.len(),
            energy.total(eps)
        );
        serde_json::json!({
            "seed": seed,
            "scenario": resolved.name,
            "kind": "star",
            "eps": eps,
            "depth": depth,
            "cells": field.complex.cells.len(),
            "elastic": energy.elastic,
            "surface": energy.surface,
            "total": energy.total(eps),
            "continuity": {
                "max_rank_residual": report.max_rank_residual,
                "max_trace_mismatch": report.max_trace_mismatch,
                "interior_edges": report.interior_edges,
            },
        })
    } else {
        let depth = match depth {
            Some(m) => m,
            None => envelope_depth(eps)?,
        };
        let (field, energy, summary) = greedy_cover(polygon, depth, wells, eps)?;
        log::info!(
            "cover construction: depth {depth}, {} cells, total {}",
            field.complex.cells.len(),
            energy.total(eps)
        );
        serde_json::json!({
            "seed": seed,
            "scenario": resolved.name,
            "kind": "cover",
            "eps": eps,
            "depth": depth,
            "cells": field.complex.cells.len(),
            "elastic": energy.elastic,
            "surface": energy.surface,
            "total": energy.total(eps),
            "cover": {
                "counts": summary.counts,
                "domain_area": summary.domain_area,
                "covered_area": summary.covered_area,
                "exposed_length": summary.exposed_length,
            },
        })
    };
    emit_json(&doc, out)
}

fn cmd_relax(a: &RelaxArgs, seed: Option<u64>, out: Option<&Path>) -> Result<(), Error> {
    let resolved = scenario::load(&a.scenario.scenario)?.resolve()?;
    let polygon = resolved.require_polygon()?;
    let wells = &resolved.wells;

    let params = match &resolved.experiment {
        ExperimentSpec::Relax(p) => p.clone(),
        _ => RelaxParams {
            eps: a.eps.ok_or_else(|| {
                Error::Scenario("relax needs --eps or a scenario relax block".into())
            })?,
            resolution: a.resolution.unwrap_or(64),
            config: None,
            warm_start: true,
        },
    };
    let eps = a.eps.unwrap_or(params.eps);
    let resolution = a.resolution.unwrap_or(params.resolution);
    let mut cfg = params.config.clone().unwrap_or_default();
    if let Some(s) = seed {
        cfg.seed = s;
    }

    let grid = Grid::for_polygon(polygon, resolution)?;
    let base = DiscreteField::with_boundary(grid.clone(), FieldMode::Displacement, |_| Vec2::ZERO);

    let mut warm_starts = Vec::new();
    let mut warm_total = None;
    if params.warm_start && wells.mode() == WellMode::Linear {
        let vs = polygon.vertices();
        let mut warm = if vs.len() == 3 {
            let tri = Triangle::new([vs[0], vs[1], vs[2]])?;
            let side = (vs[1] - vs[0]).norm();
            let field = star_block(&tri, star_best_depth(eps, side).0, wells)?;
            interpolate(&field, &grid)?.0
        } else {
            let sampler = cover_sampler(polygon, envelope_depth(eps)?, wells, eps)?;
            let mut warm = base.clone();
            for j in 0..=grid.ny {
                for i in 0..=grid.nx {
                    let id = grid.node_index(i, j);
                    warm.values[id] = sampler.eval(grid.node_pos(i, j));
                }
            }
            warm
        };
        // Report the energy the descent actually starts from: the warm
        // start with the base field's pinned nodes reimposed.
        for (k, f) in base.fixed.iter().enumerate() {
            if let Some(v) = f {
                warm.values[k] = *v;
            }
        }
        warm_total = Some(discrete_energy(&warm, wells, &cfg)?.total(eps));
        warm_starts.push(warm);
    }

    let outcome = minimize(&base, wells, eps, &cfg, &warm_starts)?;
    log::info!(
        "relaxed total {} after {} iterations (converged: {})",
        outcome.energy.total(eps),
        outcome.iterations,
        outcome.converged
    );
    emit_json(
        &serde_json::json!({
            "seed": cfg.seed,
            "scenario": resolved.name,
            "eps": eps,
            "resolution": resolution,
            "elastic": outcome.energy.elastic,
            "surface": outcome.energy.surface,
            "total": outcome.energy.total(eps),
            "total_warm": warm_total,
            "converged": outcome.converged,
            "iterations": outcome.iterations,
            "best_restart": outcome.best_restart,
        }),
        out,
    )
}

fn cmd_sweep(
    a: &SweepArgs,
    seed: Option<u64>,
    format: &str,
    out: Option<&Path>,
) -> Result<(), Error> {
    let format: ReportFormat = format.parse()?;
    let source = &a.scenario.scenario;
    let doc = scenario::load(source)?;
    let mut spec = SweepSpec::from_scenario(source, &doc)?;

    if a.eps_max.is_some() || a.eps_min.is_some() || a.eps_count.is_some() {
        let ExperimentSpec::Sweep(p) = &doc.experiment else {
            unreachable!()
        };
        let mut p = p.clone();
        if let Some(x) = a.eps_max {
            p.eps_max = x;
        }
        if let Some(x) = a.eps_min {
            p.eps_min = x;
        }
        if let Some(n) = a.eps_count {
            p.eps_count = n;
        }
        spec.eps = p.eps_grid()?;
    }
    if let Some(s) = seed {
        spec.relax.seed = s;
    }

    log::info!(
        "sweeping {} epsilons in [{:.3e}, {:.3e}], seed {}",
        spec.eps.len(),
        spec.eps.last().copied().unwrap_or(f64::NAN),
        spec.eps.first().copied().unwrap_or(f64::NAN),
        spec.relax.seed
    );
    let report = run_sweep(&spec)?;

    let mut fits: Vec<(SweepSource, FitResult)> = Vec::new();
    for &s in &spec.sources {
        match fit_dichotomy(&report, s) {
            Ok(fit) => {
                eprintln!(
                    "{}: verdict {} (c_lin {:.4}, rms_lin {:.4}; c_log {:.4}, rms_log {:.4})",
                    source_name(s),
                    fit.verdict,
                    fit.c_lin,
                    fit.rms_lin,
                    fit.c_log,
                    fit.rms_log
                );
                fits.push((s, fit));
            }
            Err(e) => eprintln!("{}: fit unavailable: {e}", source_name(s)),
        }
    }

    let text = render_report(&report, &fits, format)?;
    emit(&text, out)
}

fn source_name(s: SweepSource) -> &'static str {
    match s {
        SweepSource::Construction => "construction",
        SweepSource::Relaxed => "relaxed",
    }
}

fn cmd_fit(a: &FitArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let text = std::fs::read_to_string(&a.report)?;
    let report = parse_report(&text)?;
    let mut sources = vec![SweepSource::Construction];
    if report.rows.iter().any(|r| r.total_relaxed.is_some()) {
        sources.push(SweepSource::Relaxed);
    }
    let mut fits = Vec::new();
    for s in sources {
        let fit = fit_dichotomy(&report, s)?;
        eprintln!("{}: verdict {}", source_name(s), fit.verdict);
        fits.push(serde_json::json!({ "source": source_name(s), "fit": fit }));
    }
    emit_json(
        &serde_json::json!({
            "seed": seed,
            "scenario": report.scenario,
            "rows": report.rows.len(),
            "fits": fits,
        }),
        out,
    )
}

fn cmd_flatten(a: &ScenarioArgs, seed: u64, out: Option<&Path>) -> Result<(), Error> {
    let resolved = scenario::load(&a.scenario)?.resolve()?;
    let patch = resolved.require_patch()?;
    let params = match &resolved.experiment {
        ExperimentSpec::Flatten(p) => p.clone(),
        _ => FlattenParams {
            radius: None,
            samples: 256,
        },
    };
    let r = match params.radius {
        Some(r) => r,
        None => invertibility_radius(patch)?,
    };
    let diffeo = flatten_patch(patch, r)?;

    // Round-trip residual of inverse-then-forward on a uniform sample of the
    // certified flat square.
    let n = (params.samples as f64).sqrt().ceil() as usize;
    let mut roundtrip = 0.0f64;
    for j in 0..n.max(1) {
        for i in 0..n.max(1) {
            let frac = |k: usize| (k as f64 + 0.5) / n as f64;
            let w = Vec2::new(r * (2.0 * frac(i) - 1.0), r * (2.0 * frac(j) - 1.0));
            let z = diffeo.inverse(w)?;
            let w2 = diffeo.forward(z)?;
            roundtrip = roundtrip.max((w2 - w).norm());
        }
    }
    emit_json(
        &serde_json::json!({
            "seed": seed,
            "scenario": resolved.name,
            "radius": diffeo.r,
            "certified_radius": diffeo.r0,
            "sup_grad_dev": diffeo.bounds.sup_grad_dev,
            "sup_det_dev": diffeo.bounds.sup_det_dev,
            "sup_c_dev": diffeo.bounds.sup_c_dev,
            "roundtrip_max": roundtrip,
            "samples": n * n,
        }),
        out,
    )
}

fn cmd_selftest() -> Result<(), ExitWith> {
    let results = martenscale::run_all();
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut failed = 0usize;
    let mut table = String::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        if !r.passed {
            failed += 1;
        }
        table.push_str(&format!("{status}  {:<width$}  {}\n", r.name, r.detail));
    }
    table.push_str(&format!(
        "{}/{} checks passed",
        results.len() - failed,
        results.len()
    ));
    emit(&table, None).map_err(ExitWith::Failure)?;
    if failed > 0 {
        return Err(ExitWith::ChecksFailed);
    }
    Ok(())
}
