//! Discrete spectral geometry on triangle meshes and audits of universal
//! eigenvalue inequalities.

pub mod audit;
pub mod commutator;
pub mod curvature;
pub mod dec;
pub mod eigensolve;
pub mod heisenberg;
pub mod mesh;
pub mod sparse;
