//! Run selected acceptance criteria by number (all of them by default).
//!
//!     cargo run --release --example acceptance -- 1 2 13

use gflame::experiments::{run_acceptance, AcceptanceContext, Profile, Tolerances};

fn main() {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let ctx = AcceptanceContext::new(Profile::Quick, 1, Tolerances::default(), None);
    let out = run_acceptance(&ctx, &ids, |o| println!("{}", o.summary()));
    let passed = out.iter().filter(|o| o.passed()).count();
    println!("{passed}/{} pass", out.len());
}
