//! Phase-field (Navier-Stokes/Allen-Cahn) two-phase flow solver together with
//! closed-form sharp-interface reference flows and the relative-entropy
//! diagnostics used to measure convergence of the diffuse interface towards the
//! sharp one.
//!
//! The crate is organised bottom-up:
//!
//! * [`potential`]: double-well potential, surface tension, optimal profile.
//! * [`geometry`]: analytic interfaces, distance/projection, calibration fields.
//! * [`fields`]: Cartesian grid, stencils, quadrature and linear solvers.
//! * [`nsac`]: time integration of the phase-field system.
//! * [`reference`]: exact solutions of the mobility-modified sharp-interface flow.
//! * [`diagnostics`]: relative entropy, bulk error, coercivity checks, contours.
//! * [`harness`]: configuration, epsilon sweeps, rate fits and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod nsac;
pub mod potential;
pub mod reference;
pub mod snapshot;

pub use error::{Error, Result};

/// Two-dimensional vector used for points, normals and velocities.
pub type Vec2 = nalgebra::Vector2<f64>;
