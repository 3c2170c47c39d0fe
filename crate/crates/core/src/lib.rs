//! Normal forms at fixed points of analytic germs, and the holomorphic-motion
//! construction that produces them as limits of quasiconformal gluings.

pub mod gluing;
pub mod motions;
pub mod normal_forms;
pub mod series;

pub use num_complex::Complex64;
