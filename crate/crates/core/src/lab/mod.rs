//! The linearized message operators and the diagnostics built on them.

mod basis;
mod operators;
mod projection;
mod trajectory;
mod vector;

pub use basis::{
    build_eig_basis, m_eigenvalues, m_matrix, pair_index, s3_ratio, s5_ratio, zeta_coefficients,
    EigBasis, SpectralConstants, PAIRS,
};
pub use operators::{apply_b, apply_b_prime, apply_k, apply_l, apply_l_single, apply_m};
pub use projection::{
    is_feasible, projections, target_deviation, y_from_x, Feasibility, Projections,
};
pub use trajectory::{
    trajectory_diagnostics, write_series_csv, TrajectoryConfig, TrajectoryPoint, TrajectoryRecord,
};
pub use vector::{norm2, scaled_norm, ArcVector};
