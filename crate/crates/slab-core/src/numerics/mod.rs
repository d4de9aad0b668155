//! Numerical building blocks shared by the physics modules.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod special;
pub mod sum;
