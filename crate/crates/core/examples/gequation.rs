//! The G-equation `u_t = |Du| + <V(x/eps), Du>` with affine data `<p, x>`:
//! as `eps` shrinks `u_eps(t, x)` approaches `<p, x> + t H(p)`.
//!
//!     cargo run --release --example gequation

use gflame::experiments::oracle::shear_vertical_hamiltonian;
use gflame::experiments::{homogenization::homogenization_error, HomogenizationParams};
use gflame::FieldSpec;

fn main() -> gflame::Result<()> {
    // on a shear V = (0, A sin x) the vertical Hamiltonian is 1 + A
    let h_bar = shear_vertical_hamiltonian(|x| 1.5 * (2.0 * std::f64::consts::PI * x).sin(), 1.0, 1.0, 4096);
    println!("shear A = 1.5: H(e2) = {h_bar:.4}");

    let params = HomogenizationParams {
        field: FieldSpec::shear(1.5),
        p: [0.0, 1.0],
        epsilons: vec![0.25, 0.125],
        h: 1.0 / 128.0,
        ..Default::default()
    };
    for &eps in &params.epsilons {
        let err = homogenization_error(&params, eps, h_bar)?;
        println!("eps = {eps:<6} sup |u_eps(1, .) - <p, x> - H| = {err:.4}");
    }
    Ok(())
}
