//! Sedimentation of many small spheres in Stokes flow at three scales.
//!
//! * [`kernels`]: closed-form Stokes fields of spheres and exact surface means.
//! * [`micro`]: particle configurations, the method of reflections and
//!   explicit time stepping with aggregation diagnostics.
//! * [`meso`]: cube-averaged densities, weighted sup norms and the
//!   mesoscale velocity.
//! * [`macroscale`]: a Lagrangian blob solver for the transport-Stokes limit.
//!
//! Lengths and times are in rescaled units; the driving vector `e` folds
//! density contrast, gravity and viscosity into one input.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod density;
pub mod kernels;
pub mod linalg;
pub mod macroscale;
pub mod math;
pub mod meso;
pub mod micro;
pub mod quadrature;

pub use linalg::{Mat3, Vec3};
