//! Dense linear algebra kernels with deterministic summation order.

pub mod decomp;
pub mod matrix;
pub mod quadrature;
