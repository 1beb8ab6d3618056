// SPDX-License-Identifier: Apache-2.0

//! The two execution domains and the gate between them.
//!
//! A [`DomainSession`] calls kernel entry points out of one loaded
//! [`KernelArtifact`]. In the host domain that is a plain call. In the
//! isolated domain every call is bracketed by a gate crossing on the way in
//! and on the way out, the kernel may only ask for the `ocall` round trip,
//! and any other service request is a [`Error::DomainViolation`].

use std::ffi::c_void;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use duostress_kernels::abi::{
    EntryFn, KernelEnv, KernelResult, ABI_VERSION, OP_STRESS, OP_VERIFY, SERVICE_ALLOC,
    SERVICE_CLOCK, SERVICE_FILE, SERVICE_OCALL, STATUS_BAD_ENV, STATUS_FAULT, STATUS_OK,
};
use duostress_kernels::{lookup, KernelSpec, KernelState, VerifyReport};
use serde::{Deserialize, Serialize};

use crate::artifact::KernelArtifact;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Host,
    Isolated,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Host => "host",
            Domain::Isolated => "isolated",
        })
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "host" => Ok(Domain::Host),
            "isolated" => Ok(Domain::Isolated),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

const RUN: u32 = 0;
const STOP: u32 = 1;

/// Write side of the stop flag. There is exactly one per campaign and it
/// cannot be cloned; readers get a [`StopReader`].
#[derive(Debug)]
pub struct StopFlag {
    cell: Arc<AtomicU32>,
}

impl StopFlag {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        StopFlag {
            cell: Arc::new(AtomicU32::new(RUN)),
        }
    }

    pub fn reader(&self) -> StopReader {
        StopReader {
            cell: Arc::clone(&self.cell),
        }
    }

    /// Flip RUN to STOP. Returns false if the flag was already stopped.
    pub fn stop(&self) -> bool {
        self.cell
            .compare_exchange(RUN, STOP, Ordering::Release, Ordering::Relaxed)
            .is_ok()
    }

    pub fn is_stopped(&self) -> bool {
        self.cell.load(Ordering::Acquire) == STOP
    }
}

#[derive(Debug, Clone)]
pub struct StopReader {
    cell: Arc<AtomicU32>,
}

impl StopReader {
    pub fn is_stopped(&self) -> bool {
        self.cell.load(Ordering::Acquire) == STOP
    }

    fn as_ptr(&self) -> *const AtomicU32 {
        Arc::as_ptr(&self.cell)
    }
}

/// What one entry into a domain produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fragment {
    pub bogo_ops: u64,
    /// Transition pairs performed by this entry, including its own.
    pub transitions: u64,
}

/// Register-state save and restore plus serialising fences: the cost shape
/// of an enclave entry or exit without the hardware.
#[repr(C, align(64))]
struct GateArea([u8; 512]);

#[inline(never)]
fn cross(area: &mut GateArea, delay: Duration) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: the area is 512 bytes and 64-byte aligned as fxsave64
    // requires; fxrstor64 reloads exactly the state just saved.
    unsafe {
        std::arch::asm!(
            "fxsave64 [{area}]",
            "mfence",
            "fxrstor64 [{area}]",
            "lfence",
            area = in(reg) area.0.as_mut_ptr(),
            options(nostack, preserves_flags),
        );
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        std::hint::black_box(&mut area.0);
        std::sync::atomic::fence(Ordering::SeqCst);
    }
    if !delay.is_zero() {
        let until = Instant::now() + delay;
        while Instant::now() < until {
            std::hint::spin_loop();
        }
    }
}

struct ServiceCtx<'a> {
    domain: Domain,
    gate: &'a mut GateArea,
    delay: Duration,
    transitions: u64,
    violation: Option<&'static str>,
    epoch: Instant,
}

impl ServiceCtx<'_> {
    fn handle(&mut self, service: u32) -> u64 {
        match (self.domain, service) {
            (Domain::Isolated, SERVICE_OCALL) => {
                // Exit to the host and come straight back.
                cross(self.gate, self.delay);
                cross(self.gate, self.delay);
                self.transitions += 1;
                0
            }
            (Domain::Host, SERVICE_OCALL) => 0,
            (Domain::Host, SERVICE_CLOCK) => self.epoch.elapsed().as_nanos() as u64,
            (Domain::Isolated, other) => {
                self.violation.get_or_insert(service_name(other));
                0
            }
            (Domain::Host, _) => 0,
        }
    }
}

fn service_name(service: u32) -> &'static str {
    match service {
        SERVICE_CLOCK => "clock",
        SERVICE_ALLOC => "allocation",
        SERVICE_FILE => "file",
        _ => "unknown",
    }
}

unsafe extern "C" fn service_trampoline(ctx: *mut c_void, service: u32, _arg: u64) -> u64 {
    let ctx = &mut *(ctx as *mut ServiceCtx<'_>);
    ctx.handle(service)
}

/// One worker's view of one domain. Sessions are not shared between
/// threads.
pub struct DomainSession {
    domain: Domain,
    artifact: Arc<KernelArtifact>,
    content_hash: String,
    stop: StopReader,
    transition_count: u64,
    delay: Duration,
    gate: Box<GateArea>,
}

impl fmt::Debug for DomainSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSession")
            .field("domain", &self.domain)
            .field("content_hash", &self.content_hash)
            .field("transition_count", &self.transition_count)
            .finish()
    }
}

impl DomainSession {
    pub fn new(domain: Domain, artifact: Arc<KernelArtifact>, stop: StopReader) -> Self {
        DomainSession {
            domain,
            content_hash: artifact.content_hash().to_string(),
            artifact,
            stop,
            transition_count: 0,
            delay: Duration::ZERO,
            gate: Box::new(GateArea([0; 512])),
        }
    }

    /// Extra busy-wait added to every gate crossing.
    pub fn with_transition_delay(mut self, ns: u64) -> Self {
        self.delay = Duration::from_nanos(ns);
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Hash of the artifact as recorded when the session was opened.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    pub fn transition_count(&self) -> u64 {
        self.transition_count
    }

    pub fn stop_flag_address(&self) -> *const AtomicU32 {
        self.stop.as_ptr()
    }

    fn resolve(&self, kernel_id: &str) -> Result<(&'static KernelSpec, EntryFn)> {
        let spec = lookup(kernel_id).ok_or_else(|| Error::UnknownKernel(kernel_id.into()))?;
        if !spec.is_ported() {
            return Err(Error::NotPorted(kernel_id.into()));
        }
        let entry = self
            .artifact
            .entry(kernel_id)
            .ok_or_else(|| Error::SymbolMissing(kernel_id.into()))?;
        Ok((spec, entry))
    }

    /// Run `kernel_id` inside the domain until the stop flag trips or the
    /// budget is spent.
    pub fn enter(
        &mut self,
        kernel_id: &str,
        state: &mut KernelState<'_>,
        poll_interval: u64,
        budget: Option<u64>,
    ) -> Result<Fragment> {
        let (spec, entry) = self.resolve(kernel_id)?;
        if poll_interval == 0 {
            return Err(Error::Config("poll interval must be at least 1".into()));
        }
        if state.scratch.len() < spec.scratch_len() {
            return Err(Error::Config(format!(
                "scratch for `{kernel_id}` needs {} words, got {}",
                spec.scratch_len(),
                state.scratch.len()
            )));
        }
        // SAFETY: `entry` was resolved from the artifact this session holds.
        unsafe { self.enter_raw(kernel_id, entry, state, poll_interval, budget) }
    }

    /// [`enter`](Self::enter) with a caller-supplied entry point.
    ///
    /// # Safety
    /// `entry` must follow the kernel ABI and stay valid for the call.
    pub unsafe fn enter_raw(
        &mut self,
        kernel_id: &str,
        entry: EntryFn,
        state: &mut KernelState<'_>,
        poll_interval: u64,
        budget: Option<u64>,
    ) -> Result<Fragment> {
        let mut result = KernelResult::empty();
        let mut env = KernelEnv {
            abi_version: ABI_VERSION,
            op: OP_STRESS,
            stop: self.stop.as_ptr(),
            scratch: state.scratch.as_mut_ptr(),
            scratch_words: state.scratch.len(),
            seed: state.seed,
            bogo_count: state.bogo_count,
            poll_interval,
            budget: budget.unwrap_or(u64::MAX),
            service: None,
            service_ctx: std::ptr::null_mut(),
            result: &mut result,
        };
        let (svc_transitions, violation) = self.call(entry, &mut env);
        state.bogo_count = env.bogo_count;

        if let Some(service) = violation {
            return Err(Error::DomainViolation {
                kernel: kernel_id.into(),
                service,
            });
        }
        match result.status {
            STATUS_OK => Ok(Fragment {
                bogo_ops: result.bogo_ops,
                transitions: match self.domain {
                    Domain::Host => 0,
                    Domain::Isolated => 1 + svc_transitions,
                },
            }),
            STATUS_FAULT => Err(Error::KernelPanic {
                kernel: kernel_id.into(),
                message: result
                    .fault_message()
                    .unwrap_or("unknown fault")
                    .to_string(),
            }),
            STATUS_BAD_ENV => Err(Error::BadEnvironment(kernel_id.into())),
            other => Err(Error::KernelPanic {
                kernel: kernel_id.into(),
                message: format!("unexpected status {other}"),
            }),
        }
    }

    /// Cross in, run, cross out. Returns the `ocall` pairs the kernel made
    /// and the first forbidden service it asked for.
    unsafe fn call(&mut self, entry: EntryFn, env: &mut KernelEnv) -> (u64, Option<&'static str>) {
        let isolated = self.domain == Domain::Isolated;
        if isolated {
            cross(&mut self.gate, self.delay);
        }
        let mut svc = ServiceCtx {
            domain: self.domain,
            gate: &mut self.gate,
            delay: self.delay,
            transitions: 0,
            violation: None,
            epoch: Instant::now(),
        };
        env.service = Some(service_trampoline);
        env.service_ctx = &mut svc as *mut ServiceCtx<'_> as *mut c_void;
        entry(env);
        env.service_ctx = std::ptr::null_mut();
        let (made, violation) = (svc.transitions, svc.violation);
        if isolated {
            cross(&mut self.gate, self.delay);
            self.transition_count += 1 + made;
        }
        (made, violation)
    }

    /// One exit-and-re-enter round trip doing no work. Isolated only.
    pub fn transition_pair(&mut self) -> Result<()> {
        if self.domain != Domain::Isolated {
            return Err(Error::Config(
                "transition pairs exist only in the isolated domain".into(),
            ));
        }
        cross(&mut self.gate, self.delay);
        cross(&mut self.gate, self.delay);
        self.transition_count += 1;
        Ok(())
    }

    /// Run the kernel's fixed-input self-check inside the domain.
    pub fn verify(&mut self, kernel_id: &str) -> Result<VerifyReport> {
        let (_, entry) = self.resolve(kernel_id)?;
        let mut result = KernelResult::empty();
        let mut env = KernelEnv {
            abi_version: ABI_VERSION,
            op: OP_VERIFY,
            stop: self.stop.as_ptr(),
            scratch: std::ptr::null_mut(),
            scratch_words: 0,
            seed: 0,
            bogo_count: 0,
            poll_interval: 1,
            budget: 0,
            service: None,
            service_ctx: std::ptr::null_mut(),
            result: &mut result,
        };
        // SAFETY: entry resolved from this session's artifact; env is live.
        let (_, violation) = unsafe { self.call(entry, &mut env) };
        if let Some(service) = violation {
            return Err(Error::DomainViolation {
                kernel: kernel_id.into(),
                service,
            });
        }
        match result.status {
            STATUS_OK => Ok(result.verify),
            _ => Err(Error::BadEnvironment(kernel_id.into())),
        }
    }
}
