//! Sample one realization of each field family, check that it is
//! divergence-free and that its certified bound holds, and print its spatial
//! mean.
//!
//!     cargo run --release --example field_realization -- 42

use gflame::field::{divergence_estimate, mean_velocity_estimate, FieldFamily};
use gflame::vecops::norm;
use gflame::{make_field, FieldSpec};

fn main() -> gflame::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let specs = [
        ("cellular", FieldSpec::cellular(2.0)),
        ("shear", FieldSpec::shear(1.0)),
        ("random phase", FieldSpec::new(FieldFamily::default_random_phase(0.5))),
        ("poisson bumps", FieldSpec::poisson_bumps(0.5, 0.5, 1.0).with_drift(vec![0.2, 0.0])),
        ("counterexample", FieldSpec::counterexample(1.5)),
    ];
    println!("{:<15} {:>8} {:>10} {:>12} {:>18}", "family", "v_max", "max |V|", "max |div V|", "mean over [-50,50]^2");
    for (name, spec) in specs {
        let f = make_field::<2>(&spec, seed)?;
        let (mut sup, mut div) = (0.0f64, 0.0f64);
        for i in 0..40 {
            for j in 0..40 {
                let x = [-10.0 + 0.4871 * i as f64, -10.0 + 0.5113 * j as f64];
                sup = sup.max(norm(&f.eval(&x)));
                div = div.max(divergence_estimate(&f, &x, 1e-4).abs());
            }
        }
        let m = mean_velocity_estimate(&f, 50.0, 20_000)?;
        println!("{name:<15} {:>8.3} {sup:>10.3} {div:>12.2e}   ({:+.3}, {:+.3})", f.v_max(), m[0], m[1]);
    }
    // realizations are pure functions of (spec, seed)
    let rec = make_field::<2>(&FieldSpec::poisson_bumps(0.5, 0.5, 1.0), seed)?.record();
    println!("\nrecord: {}", serde_json::to_string(&rec).unwrap());
    Ok(())
}
