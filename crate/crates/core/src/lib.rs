// SPDX-License-Identifier: Apache-2.0

//! duostress runs one set of pure-compute stress kernels in two execution
//! domains: a host domain that calls them directly and an isolated domain
//! that models an enclave boundary. Both load the same kernel artifact, so
//! any throughput difference comes from the boundary, not the code.
//!
//! - [`artifact`] loads and audits the shared kernel object.
//! - [`boundary`] provides the domains, the stop flag and the gate.
//! - [`runner`] orchestrates workers, timekeeping and signals.
//! - [`metrics`] aggregates records and writes CSV/JSON reports.
//! - [`cli`] is the command-line front end.

pub mod artifact;
pub mod boundary;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod runner;

pub use duostress_kernels as kernels;
pub use error::{Error, Result};
