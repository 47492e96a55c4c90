//! Step-rate smoke checks, ignored by default. Run with
//! `cargo test -p maflow --test perf -- --ignored --nocapture`.

use std::f64::consts::PI;
use std::time::Instant;

use maflow::flow::{run_flow, FlowConfig, FlowKind};
use maflow::{Background, Grid, HermitianMatrix, Pencil, ScalarField, Wave};

fn degenerate_pencil(res: usize) -> Pencil {
    let grid = Grid::new(1, res).unwrap();
    let shape = ScalarField::synth(
        grid.clone(),
        &[Wave::new(vec![1, 0], -1.0 / (PI * PI), 0.0)],
    )
    .unwrap();
    let omega0 = Background::new(HermitianMatrix::Dim1(2.0), shape.clone()).unwrap();
    let omega_inf = Background::new(HermitianMatrix::Dim1(1.0), shape).unwrap();
    let density = ScalarField::constant(grid, 1.0).unwrap();
    Pencil::new(omega0, omega_inf, density, true).unwrap()
}

#[test]
#[ignore]
fn step_rate_n1_128() {
    let pencil = degenerate_pencil(128);
    let grid = pencil.grid().clone();
    let mut config = FlowConfig::new(FlowKind::Plain, &grid, 0.5);
    config.record_every = 2000;
    config.checkpoint_times = vec![];
    let t0 = Instant::now();
    let trace = run_flow(&config, &pencil).unwrap();
    let dt_wall = t0.elapsed().as_secs_f64();
    println!(
        "N=128 n=1: {} steps in {:.2}s -> {:.0} us/step, min eig seen {:.4}, retreats {}",
        trace.steps,
        dt_wall,
        dt_wall / trace.steps as f64 * 1e6,
        trace.min_eigenvalue_seen,
        trace.positivity_retreats
    );
}

#[test]
#[ignore]
fn step_rate_n2_16() {
    let grid = Grid::new(2, 16).unwrap();
    let shape = ScalarField::synth(
        grid.clone(),
        &[Wave::new(vec![1, 0, 0, 0], -0.2 / (4.0 * PI * PI), 0.0)],
    )
    .unwrap();
    let omega0 = Background::new(
        HermitianMatrix::two_by_two(2.0, 1.0, rustfft_complex(0.0, 0.0)),
        shape,
    )
    .unwrap();
    let omega_inf = Background::constant(grid.clone(), HermitianMatrix::identity(2).unwrap()).unwrap();
    let density = ScalarField::constant(grid.clone(), 1.0).unwrap();
    let pencil = Pencil::new(omega0, omega_inf, density, true).unwrap();
    let mut config = FlowConfig::new(FlowKind::Plain, &grid, 0.2);
    config.record_every = 100;
    config.checkpoint_times = vec![];
    let t0 = Instant::now();
    let trace = run_flow(&config, &pencil).unwrap();
    let dt_wall = t0.elapsed().as_secs_f64();
    println!(
        "N=16 n=2: {} steps in {:.2}s -> {:.0} us/step, min eig seen {:.4}",
        trace.steps,
        dt_wall,
        dt_wall / trace.steps as f64 * 1e6,
        trace.min_eigenvalue_seen
    );
}

fn rustfft_complex(re: f64, im: f64) -> rustfft::num_complex::Complex64 {
    rustfft::num_complex::Complex64::new(re, im)
}
