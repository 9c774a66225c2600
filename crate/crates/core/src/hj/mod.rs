//! Monotone finite-difference, semi-Lagrangian and graph solvers for the time-dependent G-equation, the
//! discounted cell problem and the static minimal-time equation.

mod discounted;
mod graph;
mod grid;
mod min_time;
mod scalar;
mod scheme;
mod semi_lagrangian;
mod time_dependent;

pub use graph::{dijkstra_oracle, GraphOptions, max_speed, segment_time, solve_min_time_graph, stencil, straight_time, SegmentRule};
pub use discounted::{solve_discounted, Discounted};
pub use grid::{Boundary, Grid};
pub use min_time::{solve_min_time, MinTimeSolve};
pub use scalar::{FieldKind, ScalarField};
pub use semi_lagrangian::{
    control_directions, solve_discounted_sl, solve_time_dependent_sl, time_dependent_rate_sl, Feet, SlParams,
};
pub use scheme::{ascent_hamiltonian, hamiltonian, node_velocities, numerical_hamiltonian, SchemeParams};
pub use time_dependent::{solve_time_dependent, time_dependent_rate, InitialData, TimeOptions, TimeSeries};
