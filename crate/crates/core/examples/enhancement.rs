//! Front-speed enhancement on a shear `V = (0, A sin x1)`: none across the
//! shear (`H(e1) = 1`), strict along it (`H(e2) = 1 + A`).
//!
//!     cargo run --release --example enhancement

use gflame::experiments::{run_enhancement, EnhancementParams, Tolerances};

fn main() -> gflame::Result<()> {
    let params = EnhancementParams {
        amplitudes: vec![0.5, 1.0, 2.0],
        horizon: 10.0,
        ..Default::default()
    };
    let report = run_enhancement(&params, &Tolerances::default(), None)?;
    print!("{}", report.to_text());
    Ok(())
}
