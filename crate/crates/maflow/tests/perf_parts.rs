//! Transform-component timing, ignored by default.
use std::time::Instant;
use maflow::{Grid, ScalarField, Wave};

#[test]
#[ignore]
fn component_times_n1_128() {
    let grid = Grid::new(1, 128).unwrap();
    let f = ScalarField::synth(
        grid.clone(),
        &[Wave::new(vec![1, 0], 0.3, 0.0), Wave::new(vec![3, 2], 0.05, 1.0)],
    )
    .unwrap();
    // hessian via the public API (fwd + symbol + inv, fresh workspace per call)
    let t0 = Instant::now();
    let reps = 200;
    for _ in 0..reps {
        std::hint::black_box(f.complex_hessian());
    }
    println!("complex_hessian (incl. workspace alloc): {:8.1} us", t0.elapsed().as_secs_f64() / reps as f64 * 1e6);

    // gradient for comparison
    let t0 = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f.gradient_z());
    }
    println!("gradient_z: {:8.1} us", t0.elapsed().as_secs_f64() / reps as f64 * 1e6);
}
