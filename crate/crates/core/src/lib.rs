//! Simulation and optimization library for a three-column vacuum distillation
//! train recovering an amine product from a wide-boiling organic feed.
//!
//! The crate is layered bottom-up:
//!
//! * [`thermo`] - ideal Raoult's-law vapor/liquid equilibrium on an extended
//!   Antoine correlation, bubble points and isothermal flashes.
//! * [`column`] - equilibrium-stage column model under constant molar overflow,
//!   solved with a bubble-point (tridiagonal) sweep.
//! * [`flowsheet`] - wiring of the three-column train, staged initialization
//!   and spec checks.
//! * [`economics`] - investment and operating cost model, annualized profit.
//! * [`scenarios`] - feed composition scenarios and the weighted fitness.
//! * [`localsearch`] - bounded derivative-free search over the operating
//!   variables of one scenario.
//! * [`evolution`] - self-adaptive evolution strategy over the discrete design
//!   variables, with memoized evaluation and checkpointing.
//! * [`config`] - serde-backed loaders for the shipped data and run files.
//!
//! Unit conventions used throughout: temperature in K, pressure in kPa, molar
//! flow in kmol/h, mass flow in kg/h, enthalpy of vaporization in kJ/kmol,
//! duty in kW, money in EUR.

pub mod column;
pub mod config;
pub mod economics;
pub mod evolution;
pub mod flowsheet;
pub mod localsearch;
pub mod scenarios;
pub mod thermo;
