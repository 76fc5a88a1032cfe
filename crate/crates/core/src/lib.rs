//! Simulator and verification harness for linear-optical circuits built
//! from directionally unbiased Grover four-ports, using a symmetry,
//! direction and polarization qubit encoding.

pub mod circuit;
pub mod closedform;
pub mod components;
pub mod gates;
pub mod linalg;
pub mod modespace;
pub mod par;
pub mod photon_state;
pub mod twophoton;
pub mod dsl;
pub mod cli;
