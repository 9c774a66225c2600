//! The heavy-tailed shear on which the flow can trap the front: the trapping
//! time `delta` has an infinite mean when the gap law has shape below 2, so
//! its running mean keeps growing.
//!
//!     cargo run --release --example counterexample -- 1.5 10000

use gflame::experiments::counterexample::sample_counterexample;
use gflame::stats::{hill_tail_index, prefix_means};

fn main() -> gflame::Result<()> {
    let mut args = std::env::args().skip(1);
    let shape: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let s = sample_counterexample(shape, n, 64.0, 1, 0)?;
    let sizes: Vec<usize> = [10, 100, 1000, 10_000, 100_000].into_iter().filter(|k| *k <= n).collect();
    for (k, m) in sizes.iter().zip(prefix_means(&s.deltas, &sizes)) {
        println!("running mean of delta over {k:>6} realizations: {m:.3}");
    }
    let k = n / 10;
    println!("Hill tail index (k = {k}): {:.3}", hill_tail_index(&s.deltas, k)?);
    let worst = s.bounds.iter().zip(&s.deltas).map(|((up, down), d)| up + down - d).fold(f64::INFINITY, f64::min);
    println!("min over realizations of theta(e2) + theta(-e2) - delta: {worst:.4}");
    Ok(())
}
