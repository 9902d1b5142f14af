//! Instance files, configuration, synthetic benchmarks and plotting for the
//! `q4rpd` routing solver.

pub mod benchmark;
pub mod config;
pub mod dataset;
pub mod generator;
pub mod io;
pub mod svg;
