// SPDX-License-Identifier: Apache-2.0

//! Stressor kernels for duostress.
//!
//! Every kernel in this crate is pure compute: no clock, no allocator, no
//! file or network access. The crate is `no_std` without `alloc`, so the
//! compiler rejects any attempt to reach those services. The same code is
//! compiled into the loadable kernel artifact that both execution domains
//! run, which is what makes host and isolated measurements comparable.
//!
//! A kernel is a [`KernelSpec`]: a single bogo-op step function, a
//! fixed-input self-check, and the scratch size and polling cadence the
//! runner must honour. [`execute_kernel`] is the shared polling loop.

#![cfg_attr(not(test), no_std)]
#![warn(rust_2018_idioms)]

pub mod abi;
mod catalog;
mod check;
mod driver;
pub mod rng;
pub mod stressors;

pub use catalog::{catalog, lookup, KernelSpec, Port, StepFn, VerifyFn};
pub use check::{ValueKind, VerifyReport};
pub use driver::{
    execute_kernel, Ctx, ExecError, Fault, HostCalls, KernelState, NoHost, StopView,
    SCRATCH_HEADER_WORDS,
};

/// Seed used when a run does not override it.
pub const DEFAULT_SEED: u64 = 0x5353_4758_5345_5353;
