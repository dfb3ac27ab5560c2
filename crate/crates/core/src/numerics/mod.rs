//! Small numerical kernels shared by the physics modules: a globally
//! adaptive Gauss-Kronrod integrator, the exponentially scaled modified
//! Bessel term of the stationary intensity distribution, a robust real
//! cubic solver, golden-section minimization, and a few statistics
//! helpers for trajectory analysis.

pub mod bessel;
pub mod cubic;
pub mod golden;
pub mod quad;
pub mod stats;
