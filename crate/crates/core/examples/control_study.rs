//! Random-control drift study: schedule moments and the drift of
//! `X_t / t` as the switching scale `delta` shrinks.
//!
//!     cargo run --release --example control_study

use gflame::experiments::{run_random_control_study, ControlStudyParams, Tolerances};

fn main() -> gflame::Result<()> {
    let params = ControlStudyParams {
        horizon: 500.0,
        realizations: 4,
        gamma_horizon: 160.0,
        ..Default::default()
    };
    let report = run_random_control_study(&params, &Tolerances::default(), 1, None)?;
    print!("{}", report.to_text());
    Ok(())
}
