// SPDX-License-Identifier: Apache-2.0

//! C ABI shared by the kernel artifact and the process that loads it.
//!
//! Each exported entry is `extern "C" fn(*mut KernelEnv) -> u64`. The
//! environment carries everything the kernel may touch: a stop flag, a
//! caller-owned scratch buffer and a single service callback. The callback
//! is the only way out of the kernel; the loader decides which services it
//! honours.

use core::ffi::c_void;
use core::sync::atomic::AtomicU32;

use crate::catalog::lookup;
use crate::check::VerifyReport;
use crate::driver::{execute_kernel, ExecError, HostCalls, KernelState};

pub const ABI_VERSION: u32 = 1;

pub const OP_STRESS: u32 = 0;
pub const OP_VERIFY: u32 = 1;

pub const STATUS_OK: u32 = 0;
pub const STATUS_FAULT: u32 = 1;
pub const STATUS_BAD_ENV: u32 = 2;

/// A bare exit-and-re-enter round trip.
pub const SERVICE_OCALL: u32 = 1;
/// Services a kernel has no business asking for. They exist so the
/// loader's refusal path can be exercised.
pub const SERVICE_CLOCK: u32 = 2;
pub const SERVICE_ALLOC: u32 = 3;
pub const SERVICE_FILE: u32 = 4;

pub type ServiceFn = unsafe extern "C" fn(ctx: *mut c_void, service: u32, arg: u64) -> u64;
pub type EntryFn = unsafe extern "C" fn(env: *mut KernelEnv) -> u64;

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KernelResult {
    pub bogo_ops: u64,
    pub status: u32,
    pub fault_ptr: *const u8,
    pub fault_len: usize,
    pub verify: VerifyReport,
}

impl KernelResult {
    pub const fn empty() -> Self {
        KernelResult {
            bogo_ops: 0,
            status: STATUS_OK,
            fault_ptr: core::ptr::null(),
            fault_len: 0,
            verify: VerifyReport::exact(0, 0),
        }
    }

    /// Fault message, if the kernel reported one.
    ///
    /// # Safety
    /// The artifact that produced the result must still be loaded.
    pub unsafe fn fault_message(&self) -> Option<&str> {
        if self.fault_ptr.is_null() {
            return None;
        }
        let bytes = core::slice::from_raw_parts(self.fault_ptr, self.fault_len);
        core::str::from_utf8(bytes).ok()
    }
}

#[repr(C)]
pub struct KernelEnv {
    pub abi_version: u32,
    pub op: u32,
    pub stop: *const AtomicU32,
    pub scratch: *mut u64,
    pub scratch_words: usize,
    pub seed: u64,
    /// Bogo-ops bookkeeping carried across entries.
    pub bogo_count: u64,
    pub poll_interval: u64,
    /// `u64::MAX` means no budget.
    pub budget: u64,
    pub service: Option<ServiceFn>,
    pub service_ctx: *mut c_void,
    pub result: *mut KernelResult,
}

struct ServiceGate {
    service: Option<ServiceFn>,
    ctx: *mut c_void,
}

impl HostCalls for ServiceGate {
    fn ocall(&self) {
        if let Some(f) = self.service {
            // SAFETY: the loader supplied the callback together with its
            // context and keeps both alive for the duration of the entry.
            unsafe {
                f(self.ctx, SERVICE_OCALL, 0);
            }
        }
    }
}

/// Body of every exported entry point.
///
/// Returns the bogo-ops completed (stress) or the pass flag (verify);
/// details go to `env.result`.
///
/// # Safety
/// `env` must point to a valid environment whose pointers describe live
/// memory for the duration of the call.
pub unsafe fn run_entry(env: *mut KernelEnv, id: &str) -> u64 {
    let Some(env) = env.as_mut() else {
        return 0;
    };
    let Some(result) = env.result.as_mut() else {
        return 0;
    };
    *result = KernelResult::empty();
    let spec = match lookup(id) {
        Some(s) if env.abi_version == ABI_VERSION => s,
        _ => {
            result.status = STATUS_BAD_ENV;
            return 0;
        }
    };

    if env.op == OP_VERIFY {
        return match spec.verify() {
            Some(report) => {
                result.verify = report;
                report.passed() as u64
            }
            None => {
                result.status = STATUS_BAD_ENV;
                0
            }
        };
    }

    let Some(stop) = env.stop.as_ref() else {
        result.status = STATUS_BAD_ENV;
        return 0;
    };
    if env.scratch.is_null() {
        result.status = STATUS_BAD_ENV;
        return 0;
    }
    let scratch = core::slice::from_raw_parts_mut(env.scratch, env.scratch_words);
    let mut state = KernelState::new(env.seed, scratch);
    state.bogo_count = env.bogo_count;
    let start = env.bogo_count;
    let gate = ServiceGate {
        service: env.service,
        ctx: env.service_ctx,
    };
    let budget = (env.budget != u64::MAX).then_some(env.budget);
    let outcome = execute_kernel(spec, &mut state, stop, env.poll_interval, budget, &gate);
    env.bogo_count = state.bogo_count;
    match outcome {
        Ok(n) => {
            result.bogo_ops = n;
            n
        }
        Err(ExecError::KernelPanic(fault)) => {
            result.status = STATUS_FAULT;
            result.fault_ptr = fault.0.as_ptr();
            result.fault_len = fault.0.len();
            result.bogo_ops = state.bogo_count - start;
            0
        }
        Err(_) => {
            result.status = STATUS_BAD_ENV;
            0
        }
    }
}
