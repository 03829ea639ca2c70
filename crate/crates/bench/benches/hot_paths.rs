//! Benchmarks for the kernels that dominate sweep and relaxation runtime:
//! pointwise well distances, the self-similar block construction, the greedy
//! cover descent, and one grid energy evaluation.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use martenscale::geometry::unit_square;
use martenscale::relaxer::{discrete_energy, DiscreteField, Grid, RelaxConfig};
use martenscale::scenario::compatible_triangle;
use martenscale::wells::{dist_to_well_set, hex_rhombic_wells, oblique_wells, Branch, WellArg};
use martenscale::{cover_summary, star_block, FieldMode, Mat2, SymMat2, Triangle, Vec2};

fn bench_well_distance(c: &mut Criterion) {
    let linear = hex_rhombic_wells();
    let nonlinear = oblique_wells(4, 1.2, Branch::Minus).unwrap();
    let gradients: Vec<Mat2> = (0..256)
        .map(|k| {
            let t = k as f64 * 0.137;
            Mat2::new(
                1.0 + 0.3 * t.sin(),
                0.2 * t.cos(),
                -0.1 * (2.0 * t).sin(),
                0.9,
            )
        })
        .collect();
    let strains: Vec<SymMat2> = (0..256)
        .map(|k| {
            let t = k as f64 * 0.137;
            SymMat2::new(0.4 * t.sin(), 0.3 * t.cos(), -0.4 * t.sin())
        })
        .collect();

    c.bench_function("dist_linear_wells_256", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for e in &strains {
                acc += dist_to_well_set(WellArg::Strain(black_box(*e)), &linear).unwrap();
            }
            acc
        })
    });
    c.bench_function("dist_rotated_wells_256", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for g in &gradients {
                acc += dist_to_well_set(WellArg::Full(black_box(*g)), &nonlinear).unwrap();
            }
            acc
        })
    });
}

fn bench_star_block(c: &mut Criterion) {
    let wells = hex_rhombic_wells();
    let poly = compatible_triangle();
    let vs = poly.vertices();
    let tri = Triangle::new([vs[0], vs[1], vs[2]]).unwrap();
    c.bench_function("star_block_depth4", |b| {
        b.iter(|| star_block(black_box(&tri), 4, &wells).unwrap())
    });
}

fn bench_cover_descent(c: &mut Criterion) {
    let wells = hex_rhombic_wells();
    let domain = unit_square();
    c.bench_function("cover_summary_depth8", |b| {
        b.iter(|| cover_summary(black_box(&domain), 8, &wells, 2f64.powi(-8)).unwrap())
    });
}

fn bench_grid_energy(c: &mut Criterion) {
    let wells = hex_rhombic_wells();
    let grid = Grid::for_polygon(&unit_square(), 128).unwrap();
    let cfg = RelaxConfig::default();
    let mut field = DiscreteField::austenite(grid.clone(), FieldMode::Displacement);
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let p = grid.node_pos(i, j);
            let id = grid.node_index(i, j);
            if field.fixed[id].is_none() {
                field.values[id] = Vec2::new((7.0 * p.y).sin(), (5.0 * p.x).cos()) * (0.1 * grid.h);
            }
        }
    }
    c.bench_function("discrete_energy_128", |b| {
        b.iter(|| discrete_energy(black_box(&field), &wells, &cfg).unwrap())
    });
}

criterion_group!(
    hot_paths,
    bench_well_distance,
    bench_star_block,
    bench_cover_descent,
    bench_grid_energy
);
criterion_main!(hot_paths);
