//! Three-phase phase-field simulator: two immiscible fluids and a solid that precipitates
//! from or dissolves into fluid 1, coupled through a Cahn–Hilliard system, incompressible
//! flow with a fluid-fraction constraint, and ion transport.

pub mod energetics;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod ops;
pub mod params;
pub mod phasefield;
pub mod state;
pub mod diagnostics;
pub mod init;
pub mod runner;
pub mod snapshot;
pub mod scenarios;
pub mod config;
pub mod cli;
