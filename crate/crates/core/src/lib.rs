//! Stationary and time-dependent scattering of a particle on one-dimensional
//! rectangular barriers and wells.
//!
//! The crate computes four competing length scales that turn into tunneling
//! times when divided by the free velocity `ħk/m`:
//!
//! * the phase length `D_phase`, from the k-derivative of the transmission phase;
//! * the dwell length `D_dwell`, the probability stored in the barrier per unit
//!   incident flux;
//! * the transmission-channel width `d_eff`;
//! * the starting-point shift `x_start` of the transmitted sub-ensemble.
//!
//! Closed forms live in [`timescales`], the exact transfer-matrix solution in
//! [`scattering`], the transmission/reflection split in [`decomposition`],
//! Gaussian wave packets in [`packet`] and the spin-precession measurement in
//! [`larmor`].
//!
//! Units are eV for energies, nm for lengths and ps for times.

pub mod decomposition;
pub mod error;
pub mod larmor;
pub mod model;
pub mod numeric;
pub mod packet;
pub mod par;
pub mod scattering;
pub mod timescales;

pub use error::{Error, Result};
pub use model::{BarrierSpec, ParticleSpec, PiecewisePotential, Regime};
