//! Relativistic collision geometry and collision-operator quadrature.
//!
//! The crate evaluates, at desk scale, the computable structure of the
//! relativistic Boltzmann collision theory without angular cutoff:
//!
//! * [`minkowski`] — mass-shell four-vectors and the explicit
//!   center-of-momentum Lorentz transformation;
//! * [`geometry`] — collision invariants, the post-collisional map, pre-post
//!   Jacobians, dual-frame quantities and the pointwise inequality sweep;
//! * [`kernels`] — the hard/soft non-cutoff kernel family and the dyadic
//!   partition of the grazing region;
//! * [`equilibrium`] — the Jüttner distribution, modified Bessel functions
//!   and equilibrium moments;
//! * [`operator`] — the collision operator and trilinear forms in the
//!   scattering-sphere, Carleman-surface and transverse-plane representations;
//! * [`linearized`] — hydrodynamic projection, Dirichlet form and the norm
//!   part with its coercivity diagnostics;
//! * [`norms`] — weighted and fractional norms plus the dyadic
//!   frequency decomposition on a momentum lattice;
//! * [`diagnostics`] — the cancellation-lemma counterexample, reduced kernel
//!   bounds, exponential bounds and the Jacobian scan;
//! * [`config`], [`report`], [`suites`] — run configuration, JSON/CSV report
//!   emission and the batch verification suites behind the `relkin` binary.
//!
//! Everything is pure and thread-safe; parallel reductions use a fixed
//! summation order so results are reproducible across worker counts.

pub mod config;
pub mod dd;
pub mod diagnostics;
pub mod equilibrium;
pub mod geometry;
pub mod kernels;
pub mod linearized;
pub mod minkowski;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod suites;
pub mod testfn;

pub use equilibrium::Normalization;
pub use kernels::{Family, KernelSpec};
pub use minkowski::{FourMomentum, LorentzMatrix, Vec3};
pub use operator::OpContext;
pub use quadrature::QuadratureSpec;
pub use testfn::TestFunction;
