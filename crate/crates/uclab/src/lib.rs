//! Numerical laboratory for quantitative unique continuation of Schrödinger
//! operators `(-Δ + W·∇ + V)u = 0`.
//!
//! The crate is organised around the objects that appear in the quantitative
//! theory:
//!
//! * [`geometry`] — box domains, erosions/collars, coverings, broken lines and
//!   the two ball-chain constructions (path chains and cone chains).
//! * [`fields`] — scalar/vector fields with gradient access and all quadrature
//!   (L^p norms over regions, sphere integrals, frequency integrands).
//! * [`potentials`] — potentials and drifts with integrability bookkeeping,
//!   the level-set truncation split and manufactured exact solutions.
//! * [`solver`] — finite-difference Dirichlet solver on boxes plus the
//!   discrete Sobolev-constant optimizer.
//! * [`constants`] — every explicit named constant and profile function,
//!   evaluated from its closed-form definition.
//! * [`frequency`] — the Almgren frequency-function machinery: profiles,
//!   derivative identities, the frequency bound, doubling and vanishing order.
//! * [`verifiers`] — inequality verifiers (Caccioppoli, three-ball, Carleman
//!   scaling, propagation of smallness, global UC, doubling, vanishing order,
//!   Cauchy-data UC) in explicit or constant-fitting mode.
//! * [`report`] — report records shared by the verifiers and the CLI.

pub mod constants;
pub mod error;
pub mod fields;
pub mod frequency;
pub mod geometry;
pub mod potentials;
pub mod report;
pub mod solver;
pub mod verifiers;

pub use error::{UcError, UcResult};
