//! Two coupled qubits in a common thermal bath: Lindblad generator,
//! conversion to Kraus form, and entanglement dynamics.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod generator;
pub mod kraus;
pub mod linalg;
pub mod model;
pub mod qops;

pub use error::{Error, Result};
