//! Time constants `q(v) = lim theta(0, t v) / t` on cellular flow, the
//! bounds `|v| / M <= q(v) <= |v|`, convexity, and the shape `{q <= 1}`.
//!
//!     cargo run --release --example time_constant

use gflame::homogenize::{support_table, MinTimeConfig, Orientation};
use gflame::FieldSpec;

fn main() -> gflame::Result<()> {
    let a = 1.0;
    let spec = FieldSpec::cellular(a);
    let radii: Vec<f64> = (0..17).map(|i| 6.0 + 0.25 * i as f64).collect();
    let cfg = MinTimeConfig {
        h: 1.0 / 24.0,
        ..Default::default()
    };
    let t = support_table::<2>(&spec, &[0], 16, &radii, &cfg, Orientation::Forward)?;
    println!("{:>8} {:>8} {:>8}", "v1", "v2", "q");
    for e in &t.estimates {
        println!("{:>8.4} {:>8.4} {:>8.4}", e.direction[0], e.direction[1], e.q_bar);
    }
    let m = a + 1.0;
    println!("bounds violation {:+.4} (|v|/M = {:.3})", t.bounds_violation(m), 1.0 / m);
    println!("convexity violation {:+.4}", t.convexity_violation());
    println!("Lipschitz violation {:+.4}", t.lipschitz_violation());
    println!("shape hull has {} vertices", t.hull().len());
    Ok(())
}
