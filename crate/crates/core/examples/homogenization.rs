//! Convergence of `u_eps` to the homogenized solution on cellular flow.
//!
//!     cargo run --release --example homogenization

use gflame::experiments::{run_homogenization, HomogenizationParams, Tolerances};

fn main() -> gflame::Result<()> {
    let params = HomogenizationParams {
        epsilons: vec![0.25, 0.125],
        h: 1.0 / 128.0,
        ..Default::default()
    };
    let report = run_homogenization(&params, &Tolerances::default(), None)?;
    print!("{}", report.to_text());
    Ok(())
}
