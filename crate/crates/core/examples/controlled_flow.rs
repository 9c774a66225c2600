//! Trajectories of `x' = a(t) + V(x)`: a constant control on cellular flow,
//! then a random piecewise-constant control whose average direction is
//! `base`, with its drift statistic `|X_t / t - base|`.
//!
//!     cargo run --release --example controlled_flow

use gflame::dynamics::{drift_statistic, integrate, sample_random_control, schedule_average, Control, OdeOptions};
use gflame::experiments::control::collinearity;
use gflame::{make_field, FieldSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gflame::Result<()> {
    let field = make_field::<2>(&FieldSpec::cellular(2.0), 0)?;

    let a = [0.3, 0.2];
    let (speed, orth) = collinearity(&field, a, 500.0)?;
    println!("constant control {a:?}: |X_T / T| = {speed:.4}, orthogonal part {:.2}%", 100.0 * orth);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for delta in [0.2, 0.1, 0.05] {
        let sched = sample_random_control(a, 0.2, delta, 200.0, &mut rng)?;
        let traj = integrate(&field, [0.0, 0.0], 0.0, Control::Schedule(&sched), 200.0, OdeOptions::default())?;
        let avg = schedule_average(&sched);
        println!(
            "delta = {delta:<5} {} switches, schedule mean ({:+.3}, {:+.3}), drift statistic {:.4}, end {:?}",
            sched.switches.len() - 1,
            avg[0],
            avg[1],
            drift_statistic(&traj, &a),
            traj.end().map(|v| (v * 100.0).round() / 100.0)
        );
    }
    Ok(())
}
