//! Scenario documents: one JSON artifact describing the domain, the well
//! set, the boundary data, and the experiment to run on them.
//!
//! A scenario is deliberately plain data. [`Scenario::resolve`] turns it
//! into concrete geometry and wells, validating cross-field consistency
//! (presets exist, the well mode suits the experiment, the domain kind suits
//! the experiment) without running anything.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_square, GraphPatch, Polygon};
use crate::relaxer::RelaxConfig;
use crate::wells::{hex_rhombic_wells, oblique_wells, Branch, WellMode, WellSet};
use crate::Vec2;

/// Top-level scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainSpec,
    pub wells: WellsSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    pub experiment: ExperimentSpec,
}

/// Domain description: a named preset, an explicit polygon, or a boundary
/// graph patch (for flattening experiments).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    /// `"unit_square"` or `"compatible_triangle"`.
    Preset(String),
    /// Counter-clockwise vertex list.
    Polygon(Vec<[f64; 2]>),
    GraphPatch(GraphPatch),
}

/// Well-set description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellsSpec {
    /// The three hexagonal-to-rhombic transformation strains.
    HexRhombic,
    /// A nonlinear oblique family derived from an `ngon`-symmetric parent.
    Oblique { ngon: u32, a: f64, branch: Branch },
}

/// Which domain edges carry austenite Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSelection {
    All,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub austenite_edges: EdgeSelection,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            austenite_edges: EdgeSelection::All,
        }
    }
}

/// Which energy sources an epsilon sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSource {
    /// Exact energy of the explicit construction.
    Construction,
    /// Grid relaxation seeded with the construction.
    Relaxed,
}

/// Log-spaced epsilon grid plus source selection for a sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_count: usize,
    #[serde(default = "default_sources")]
    pub sources: Vec<SweepSource>,
    /// Grid resolution for the relaxed source (cells across the longer
    /// bounding-box side).
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub relax: Option<RelaxConfig>,
}

fn default_sources() -> Vec<SweepSource> {
    vec![SweepSource::Construction]
}

fn default_resolution() -> usize {
    64
}

impl SweepParams {
    /// Strictly decreasing log-spaced grid from `eps_max` down to `eps_min`.
    pub fn eps_grid(&self) -> Result<Vec<f64>> {
        if !(self.eps_min > 0.0) || !(self.eps_max >= self.eps_min) {
            return Err(Error::Scenario(format!(
                "need 0 < eps_min <= eps_max, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.eps_count == 0 {
            return Err(Error::Scenario("eps_count must be positive".into()));
        }
        if self.eps_count == 1 {
            return Ok(vec![self.eps_max]);
        }
        if self.eps_min == self.eps_max {
            return Err(Error::Scenario(
                "eps grid with more than one point needs eps_min < eps_max".into(),
            ));
        }
        let ratio = self.eps_min / self.eps_max;
        let n = self.eps_count;
        Ok((0..n)
            .map(|k| self.eps_max * ratio.powf(k as f64 / (n - 1) as f64))
            .collect())
    }

    pub fn wants(&self, source: SweepSource) -> bool {
        self.sources.contains(&source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxParams {
    pub eps: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub config: Option<RelaxConfig>,
    /// Warm-start with the scenario's construction at this epsilon.
    #[serde(default)]
    pub warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructParams {
    pub eps: f64,
    /// Fixed construction depth; chosen from `eps` when absent.
    #[serde(default)]
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlattenParams {
    /// Patch radius to flatten; the certified invertibility radius when absent.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_flatten_samples")]
    pub samples: usize,
}

fn default_flatten_samples() -> usize {
    256
}

/// The experiment a scenario runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentSpec {
    Sweep(SweepParams),
    Relax(RelaxParams),
    Construct(ConstructParams),
    Normals,
    Dcheck,
    Flatten(FlattenParams),
}

impl ExperimentSpec {
    fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Sweep(_) => "sweep",
            ExperimentSpec::Relax(_) => "relax",
            ExperimentSpec::Construct(_) => "construct",
            ExperimentSpec::Normals => "normals",
            ExperimentSpec::Dcheck => "dcheck",
            ExperimentSpec::Flatten(_) => "flatten",
        }
    }
}

/// A scenario with geometry and wells materialized and cross-checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub polygon: Option<Polygon>,
    pub patch: Option<GraphPatch>,
    pub wells: WellSet,
    pub austenite_edges: EdgeSelection,
    pub experiment: ExperimentSpec,
}

impl Resolved {
    /// The polygonal domain, or a scenario error naming the experiment.
    pub fn require_polygon(&self) -> Result<&Polygon> {
        self.polygon.as_ref().ok_or_else(|| {
            Error::Scenario(format!(
                "experiment '{}' needs a polygonal domain",
                self.experiment.kind()
            ))
        })
    }

    /// The boundary graph patch, or a scenario error.
    pub fn require_patch(&self) -> Result<&GraphPatch> {
        self.patch.as_ref().ok_or_else(|| {
            Error::Scenario(format!(
                "experiment '{}' needs a graph-patch domain",
                self.experiment.kind()
            ))
        })
    }
}

/// The equilateral triangle of side 1 whose edge normals are all
/// zero-energy interface directions of the hexagonal-to-rhombic wells
/// (vertices at 105, 225, and 345 degrees, circumradius `1/sqrt(3)`).
pub fn compatible_triangle() -> Polygon {
    let r = 1.0 / 3f64.sqrt();
    let vertex = |deg: f64| {
        let t = deg.to_radians();
        Vec2::new(r * t.cos(), r * t.sin())
    };
    Polygon::new(vec![vertex(105.0), vertex(225.0), vertex(345.0)])
        .expect("equilateral triangle is a valid polygon")
}

fn preset_polygon(name: &str) -> Result<Polygon> {
    match name {
        "unit_square" => Ok(unit_square()),
        "compatible_triangle" => Ok(compatible_triangle()),
        other => Err(Error::Scenario(format!(
            "unknown domain preset '{other}' (expected 'unit_square' or 'compatible_triangle')"
        ))),
    }
}

/// Built-in scenario for a preset name, with its default epsilon grid.
///
/// * `unit_square`: hexagonal-to-rhombic wells on the centered unit square
///   (no edge normal is an interface direction), epsilon from `2^-8` down
///   to `2^-14`.
/// * `compatible_triangle`: the same wells on the side-1 equilateral
///   triangle whose edges all admit stress-free interfaces, epsilon from
///   `2^-4` down to `2^-14`.
pub fn preset(name: &str) -> Result<Scenario> {
    let (eps_max, eps_min, eps_count) = match name {
        "unit_square" => (2f64.powi(-8), 2f64.powi(-14), 7),
        "compatible_triangle" => (2f64.powi(-4), 2f64.powi(-14), 11),
        other => {
            return Err(Error::Scenario(format!(
            "unknown scenario preset '{other}' (expected 'unit_square' or 'compatible_triangle')"
        )))
        }
    };
    Ok(Scenario {
        name: name.to_string(),
        domain: DomainSpec::Preset(name.to_string()),
        wells: WellsSpec::HexRhombic,
        boundary: BoundarySpec::default(),
        experiment: ExperimentSpec::Sweep(SweepParams {
            eps_max,
            eps_min,
            eps_count,
            sources: default_sources(),
            resolution: default_resolution(),
            relax: None,
        }),
    })
}

/// Parse a scenario document from JSON text.
pub fn from_json(text: &str) -> Result<Scenario> {
    Ok(serde_json::from_str(text)?)
}

/// Load a scenario from a preset name or a JSON file path.
pub fn load(source: &str) -> Result<Scenario> {
    if matches!(source, "unit_square" | "compatible_triangle") {
        return preset(source);
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| Error::Scenario(format!("cannot read scenario '{source}': {e}")))?;
    from_json(&text)
}

impl Scenario {
    /// Materialize geometry and wells and validate cross-field consistency.
    pub fn resolve(&self) -> Result<Resolved> {
        let (polygon, patch) = match &self.domain {
            DomainSpec::Preset(name) => (Some(preset_polygon(name)?), None),
            DomainSpec::Polygon(vs) => {
                let vertices = vs.iter().map(|&[x, y]| Vec2::new(x, y)).collect();
                (Some(Polygon::new(vertices)?), None)
            }
            DomainSpec::GraphPatch(p) => (None, Some(p.clone())),
        };
        let wells = match &self.wells {
            WellsSpec::HexRhombic => hex_rhombic_wells(),
            WellsSpec::Oblique { ngon, a, branch } => oblique_wells(*ngon, *a, *branch)?,
        };

        // The explicit constructions are displacement fields of the linear
        // theory; sweeps and constructions therefore need linear wells.
        if matches!(
            self.experiment,
            ExperimentSpec::Sweep(_) | ExperimentSpec::Construct(_)
        ) && wells.mode() != WellMode::Linear
        {
            return Err(Error::Scenario(format!(
                "experiment '{}' builds linear-theory constructions but the well set is nonlinear",
                self.experiment.kind()
            )));
        }

        if let ExperimentSpec::Sweep(p) = &self.experiment {
            // Fail early on an unusable grid; run_sweep re-reads it.
            p.eps_grid()?;
        }

        if let EdgeSelection::Indices(idx) = &self.boundary.austenite_edges {
            let n_edges = polygon.as_ref().map_or(1, |p| p.vertices().len());
            if let Some(&bad) = idx.iter().find(|&&i| i >= n_edges) {
                return Err(Error::Scenario(format!(
                    "boundary edge index {bad} out of range (domain has {n_edges} edges)"
                )));
            }
        }

        let resolved = Resolved {
            name: self.name.clone(),
            polygon,
            patch,
            wells,
            austenite_edges: self.boundary.austenite_edges.clone(),
            experiment: self.experiment.clone(),
        };
        match &resolved.experiment {
            ExperimentSpec::Sweep(_)
            | ExperimentSpec::Relax(_)
            | ExperimentSpec::Construct(_)
            | ExperimentSpec::Dcheck => {
                resolved.require_polygon()?;
            }
            ExperimentSpec::Flatten(_) => {
                resolved.require_patch()?;
            }
            ExperimentSpec::Normals => {}
        }
        Ok(resolved)
    }
}
