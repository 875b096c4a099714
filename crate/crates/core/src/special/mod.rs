//! Special functions and quadrature used by the closed-form energy and
//! contact-distance expressions.
//!
//! Everything here is a pure function of its arguments.

mod gamma;
mod hypergeometric;
mod lambert;
mod quadrature;

pub use gamma::{gamma_fn, sin_pi};
pub use hypergeometric::{gauss_2f1, gauss_2f1_partial, MAX_SERIES_TERMS};
pub use lambert::lambert_w0;
pub use quadrature::{integrate, integrate_semi_infinite, QuadSpec};
