//! Trajectory data model, file ingestion, exact LTI simulation and process
//! noise generation.

mod expm;
mod grid;
mod io;
mod noise;
mod signal;
mod simulate;
mod trajectory;

pub use expm::matrix_exponential;
pub use grid::{merged_breakpoints, UniformGrid};
pub use io::{
    load_trajectory, sidecar_path, trajectory_from_csv, trajectory_to_csv, write_trajectory,
    TrajectoryMeta, TIME_TOL,
};
pub use noise::gaussian_white_noise;
pub use signal::{Interpolation, Signal};
pub use simulate::simulate_lti;
pub use trajectory::Trajectory;
