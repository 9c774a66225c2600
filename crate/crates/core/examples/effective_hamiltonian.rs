//! Three independent estimates of the effective Hamiltonian `H(p)` on
//! cellular flow: support-function duality on the time constants, the
//! discounted cell problem and the long-time limit of the G-equation.
//!
//!     cargo run --release --example effective_hamiltonian

use gflame::homogenize::{
    effective_hamiltonian_discounted, effective_hamiltonian_dual, effective_hamiltonian_time, support_table, CellConfig,
    HamiltonianEstimate, MinTimeConfig, Orientation,
};
use gflame::FieldSpec;

fn main() -> gflame::Result<()> {
    let spec = FieldSpec::cellular(1.0);
    let radii: Vec<f64> = (0..17).map(|i| 6.0 + 0.25 * i as f64).collect();
    let table = support_table::<2>(&spec, &[0], 16, &radii, &MinTimeConfig::default(), Orientation::Backward)?;
    let cell = CellConfig::default();
    for p in [[1.0, 0.0], [0.0, 1.0], [std::f64::consts::FRAC_1_SQRT_2; 2]] {
        let dual = effective_hamiltonian_dual(&table, &p)?;
        let disc = effective_hamiltonian_discounted::<2>(&spec, &[0], p, &[0.2, 0.1, 0.05], &cell)?;
        let time = effective_hamiltonian_time::<2>(&spec, &[0], p, 20.0, &cell)?;
        let est = HamiltonianEstimate::new(p.to_vec(), dual, disc.extrapolated, time, vec![0.0, 0.0]);
        println!(
            "p = ({:.3}, {:.3}): dual {:.4}  discounted {:.4}  time {:.4}  disagreement {:.2}%",
            p[0],
            p[1],
            est.h_dual,
            est.h_disc,
            est.h_time,
            100.0 * est.disagreement
        );
    }
    Ok(())
}
