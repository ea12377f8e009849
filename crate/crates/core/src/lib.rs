//! Simulator for a flux-biased SQUID ring damped by an Ohmic bath with a
//! finite (Drude-like) cutoff: builds the first- and second-order master
//! equations, their Lindblad completions, and steady-state observables.

pub mod bath;
pub mod bch;
pub mod error;
pub mod hamiltonian;
pub mod master;
pub mod operators;
pub mod observables;
pub mod params;
pub mod io;
pub mod plot;
pub mod steady;
pub mod verify;

pub use error::{Error, Result};
