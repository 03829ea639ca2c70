//! Two-dimensional multiwell elasticity at desk scale.
//!
//! The crate models singularly perturbed elastic energies of the form
//! `elastic + eps * surface`, where the elastic part integrates the squared
//! distance of a gradient (or symmetrized gradient) field to a finite union of
//! energy wells, and the surface part is the total variation of the gradient.
//! It provides:
//!
//! * exact 2x2 algebra for well distances and symmetrized rank-one
//!   decompositions ([`algebra2d`]),
//! * the hexagonal-to-rhombic linear well set and the square/hexagonal-to-oblique
//!   nonlinear families with their point groups ([`wells`]),
//! * jump-condition solvers, austenite-martensite normal enumeration, and
//!   boundary incompatibility constants ([`compatibility`]),
//! * polygonal domains, boundary graph patches, and a certified flattening
//!   diffeomorphism for curved boundary arcs ([`geometry`]),
//! * exact piecewise-affine microstructures: laminates, a self-similar
//!   stress-free triangular building block, and a dyadic greedy covering
//!   ([`microstructure`]),
//! * a grid relaxer that brackets infimal energies from above ([`relaxer`]),
//! * epsilon sweeps and the linear-vs-logarithmic scaling-law fit ([`scaling`]).
//!
//! All public operations are pure and safe to call concurrently; energy sums
//! are accumulated with deterministic pairwise reductions.

pub mod algebra2d;
pub mod compatibility;
pub mod error;
pub mod geometry;
pub mod microstructure;
pub mod numerics;
pub mod relaxer;
pub mod scaling;
pub mod scenario;
pub mod selftest;
pub mod wells;

pub use algebra2d::{dist_to_rotated_well, sym_rank_one_decompose, Mat2, SymMat2, UnitVec2, Vec2};
pub use compatibility::{
    austenite_normals_linear, hex_rhombic_normal_set, incompatibility_constant, lower_envelope,
    nonlinear_normal_set, oscillation_thresholds, trace_oscillation, twinning_with_identity,
    EnvelopeKind, IncompatibilityResult, NormalSet,
};
pub use error::{Error, Result};
pub use geometry::{
    flatten_patch, frame_fields, polygon_boundary_normals, BoundaryPatch, Diffeo, GraphPatch,
    Polygon,
};
pub use microstructure::{
    check_continuity, cover_summary, envelope_depth, exact_energy, greedy_cover, laminate,
    optimal_depth, optimal_depth_in, star_best_depth, star_block, star_depth_for, star_elastic,
    star_surface, CellComplex, CoverSummary, EnergyBreakdown, FieldMode, PAField, Triangle,
};
pub use relaxer::{
    discrete_energy, interpolate, minimize, slice_energy, slice_energy_discrete, DiscreteField,
    Grid, RelaxConfig, RelaxOutcome,
};
pub use scaling::{
    emit_report, fit_dichotomy, parse_report, render_report, run_sweep, FitResult, ReportFormat,
    SweepReport, SweepRow, SweepSpec, Verdict,
};
pub use scenario::{Scenario, SweepSource};
pub use selftest::{all_passed, run_all, CheckResult};
pub use wells::{
    dist_to_well_set, hex_rhombic_wells, oblique_wells, point_group, Branch, WellMode, WellSet,
};
