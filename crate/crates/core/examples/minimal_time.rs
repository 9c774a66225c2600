//! Minimal time `theta(0, .)` for `x' = a + V(x)`, `|a| <= 1`: the eikonal
//! check on the zero field, then reachable-set growth on cellular flow.
//!
//!     cargo run --release --example minimal_time

use gflame::hj::Grid;
use gflame::homogenize::{min_time, reachable_set, MinTimeMethod};
use gflame::vecops::norm;
use gflame::{make_field, FieldSpec};

fn main() -> gflame::Result<()> {
    let method = MinTimeMethod::Graph { rho: 6 };

    let zero = make_field::<2>(&FieldSpec::zero(), 0)?;
    let grid = Grid::<2>::open(0.02, 2.0)?;
    let solve = min_time(&zero, [0.0, 0.0], &grid, method, Vec::new(), None)?;
    let trusted = solve.trusted_time(zero.speed_bound());
    let worst = (0..grid.len())
        .filter_map(|i| solve.theta.get(i).filter(|t| *t <= trusted).map(|t| (t - norm(&grid.point(i))).abs()))
        .fold(0.0, f64::max);
    println!("V = 0: max |theta - |y|| = {worst:.4} (h = {})", grid.h);

    // against the flow the reachable sets still grow at least like a disc
    let cell = make_field::<2>(&FieldSpec::cellular(2.0), 0)?;
    let grid = Grid::<2>::open(1.0 / 32.0, 6.0)?;
    let solve = min_time(&cell, [0.0, 0.0], &grid, method, Vec::new(), Some(2.0 + grid.h))?;
    println!("cellular A = 2:");
    println!("{:>5} {:>10} {:>14} {:>12}", "t", "volume", "sqrt(vol)/t", "perimeter");
    for t in [0.5, 1.0, 1.5, 2.0] {
        let r = reachable_set(&solve, cell.speed_bound(), t)?;
        println!("{t:>5} {:>10.4} {:>14.4} {:>12.4}", r.volume, r.volume.sqrt() / t, r.perimeter.unwrap_or(f64::NAN));
    }
    println!("sqrt(pi) = {:.4}", std::f64::consts::PI.sqrt());
    Ok(())
}
