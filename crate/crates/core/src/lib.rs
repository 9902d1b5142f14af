//! Iterative sub-route decomposition for heterogeneous package delivery with
//! top-priority deadlines.
//!
//! Each iteration picks a truck and a trajectory type, builds a constrained
//! quadratic model for that single (sub-)route, solves it locally and stitches
//! the result into the truck's depot-to-depot route.
//!
//! The crate is `no_std` with `alloc`; enable the `std` feature to record
//! solver wall time.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baseline;
pub mod cqm;
pub mod model;
pub mod orchestrator;
pub mod solvers;
pub mod srp;
pub mod validation;

pub use cqm::{Assignment, CqmModel};
pub use model::{build_travel_matrix, validate_instance, Delivery, Location, Ownership, ProblemInstance, Truck, TravelMatrix};
pub use orchestrator::{run, Q4rpdConfig, Q4rpdSolution};
pub use solvers::{solve, Backend, SolverConfig};
pub use srp::{build_srp_model, SrpRoute, SrpSpec};
pub use validation::{validate_solution, ValidationReport};
