// SPDX-License-Identifier: Apache-2.0

//! The polling loop every kernel runs under.

use core::fmt;
use core::sync::atomic::{AtomicU32, Ordering};

use crate::catalog::{KernelSpec, Port};
use crate::rng::Rng;

/// Words at the start of every scratch buffer reserved for the driver.
/// Word 0 holds the generator state so a run can resume across entries.
pub const SCRATCH_HEADER_WORDS: usize = 1;

/// Read side of the stop flag.
///
/// `completed` is the number of bogo-ops finished so far in the current
/// entry; the production flag ignores it, instrumented views use it to
/// trip at an exact count.
pub trait StopView {
    fn stop_requested(&self, completed: u64) -> bool;
}

impl StopView for AtomicU32 {
    #[inline]
    fn stop_requested(&self, _completed: u64) -> bool {
        self.load(Ordering::Acquire) != 0
    }
}

/// Requests a kernel may make of whoever hosts it. Only `ocall` uses this.
pub trait HostCalls {
    /// One exit-and-re-enter round trip with no work on the other side.
    fn ocall(&self);
}

/// Host that does nothing on `ocall`.
pub struct NoHost;

impl HostCalls for NoHost {
    fn ocall(&self) {}
}

/// Per-worker kernel state. The scratch buffer is borrowed and never
/// resized; kernels do not allocate.
pub struct KernelState<'a> {
    pub seed: u64,
    pub scratch: &'a mut [u64],
    pub bogo_count: u64,
}

impl<'a> KernelState<'a> {
    pub fn new(seed: u64, scratch: &'a mut [u64]) -> Self {
        KernelState {
            seed,
            scratch,
            bogo_count: 0,
        }
    }
}

/// What one bogo-op step sees.
pub struct Ctx<'a> {
    pub work: &'a mut [u64],
    pub rng: &'a mut Rng,
    host: &'a dyn HostCalls,
}

impl<'a> Ctx<'a> {
    pub fn new(work: &'a mut [u64], rng: &'a mut Rng, host: &'a dyn HostCalls) -> Self {
        Ctx { work, rng, host }
    }

    #[inline]
    pub fn ocall(&self) {
        self.host.ocall()
    }
}

/// Internal consistency check failure inside a kernel step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault(pub &'static str);

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecError {
    NotPorted,
    ScratchTooSmall { need: usize, have: usize },
    ZeroPollInterval,
    /// A kernel's own consistency check failed mid-loop.
    KernelPanic(Fault),
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecError::NotPorted => f.write_str("kernel is not ported"),
            ExecError::ScratchTooSmall { need, have } => {
                write!(f, "scratch too small: need {need} words, have {have}")
            }
            ExecError::ZeroPollInterval => f.write_str("poll interval must be at least 1"),
            ExecError::KernelPanic(fault) => write!(f, "kernel consistency check failed: {fault}"),
        }
    }
}

/// Run `spec` until the stop view trips or `budget` bogo-ops are done.
///
/// The stop view is consulted before the first bogo-op and then after
/// every `poll_interval` bogo-ops, so a stop is honoured within at most
/// `poll_interval` further bogo-ops. Returns the bogo-ops completed in
/// this call, which is also the increase of `state.bogo_count`.
pub fn execute_kernel<S: StopView + ?Sized>(
    spec: &KernelSpec,
    state: &mut KernelState<'_>,
    stop: &S,
    poll_interval: u64,
    budget: Option<u64>,
    host: &dyn HostCalls,
) -> Result<u64, ExecError> {
    let step = match spec.port {
        Port::Ported { step, .. } => step,
        Port::NotPorted => return Err(ExecError::NotPorted),
    };
    if poll_interval == 0 {
        return Err(ExecError::ZeroPollInterval);
    }
    let need = spec.scratch_len();
    if state.scratch.len() < need {
        return Err(ExecError::ScratchTooSmall {
            need,
            have: state.scratch.len(),
        });
    }

    let (header, work) = state.scratch[..need].split_at_mut(SCRATCH_HEADER_WORDS);
    let mut rng = if header[0] == 0 {
        Rng::new(state.seed)
    } else {
        Rng::new(header[0])
    };
    let limit = budget.unwrap_or(u64::MAX);
    let start = state.bogo_count;
    let mut done = 0u64;
    let mut outcome = Ok(());

    'run: while done < limit && !stop.stop_requested(done) {
        let batch = poll_interval.min(limit - done);
        let mut ctx = Ctx::new(work, &mut rng, host);
        for _ in 0..batch {
            if let Err(fault) = step(&mut ctx) {
                outcome = Err(ExecError::KernelPanic(fault));
                break 'run;
            }
            done += 1;
            state.bogo_count += 1;
        }
    }

    header[0] = rng.state();
    debug_assert_eq!(state.bogo_count - start, done);
    outcome.map(|()| done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookup;
    use std::cell::Cell;

    /// Trips once `at` bogo-ops are complete and counts polls.
    struct TripAt {
        at: u64,
        polls: Cell<u64>,
    }

    impl StopView for TripAt {
        fn stop_requested(&self, completed: u64) -> bool {
            self.polls.set(self.polls.get() + 1);
            completed >= self.at
        }
    }

    fn scratch_for(spec: &KernelSpec) -> std::vec::Vec<u64> {
        std::vec![0; spec.scratch_len()]
    }

    #[test]
    fn pre_stopped_loop_does_nothing() {
        let spec = lookup("loop").unwrap();
        let mut buf = scratch_for(spec);
        let mut st = KernelState::new(1, &mut buf);
        let flag = AtomicU32::new(1);
        let n = execute_kernel(spec, &mut st, &flag, 1, None, &NoHost).unwrap();
        assert!(n <= 1);
        assert_eq!(st.bogo_count, n);
    }

    #[test]
    fn gcd_trip_after_thousand() {
        let spec = lookup("gcd").unwrap();
        for poll in [1u64, 7, 64, 1024] {
            let mut buf = scratch_for(spec);
            let mut st = KernelState::new(1, &mut buf);
            let trip = TripAt {
                at: 1000,
                polls: Cell::new(0),
            };
            let n = execute_kernel(spec, &mut st, &trip, poll, None, &NoHost).unwrap();
            assert!((1000..1000 + poll).contains(&n), "poll {poll}: {n}");
            assert_eq!(st.bogo_count, n);
        }
    }

    #[test]
    fn single_forced_bogo_op() {
        let spec = lookup("sieve").unwrap();
        let mut buf = scratch_for(spec);
        let mut st = KernelState::new(1, &mut buf);
        st.bogo_count = 41;
        let flag = AtomicU32::new(0);
        let n = execute_kernel(spec, &mut st, &flag, 1, Some(1), &NoHost).unwrap();
        assert_eq!(n, 1);
        assert_eq!(st.bogo_count, 42);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = lookup("gcd").unwrap();
        let flag = AtomicU32::new(0);
        let mut small = [0u64; 0];
        let mut st = KernelState::new(1, &mut small);
        assert!(matches!(
            execute_kernel(spec, &mut st, &flag, 1, Some(1), &NoHost),
            Err(ExecError::ScratchTooSmall { .. })
        ));
        let mut buf = scratch_for(spec);
        let mut st = KernelState::new(1, &mut buf);
        assert_eq!(
            execute_kernel(spec, &mut st, &flag, 0, Some(1), &NoHost),
            Err(ExecError::ZeroPollInterval)
        );
        let absent = lookup("decimal64").unwrap();
        let mut st = KernelState::new(1, &mut buf);
        assert_eq!(
            execute_kernel(absent, &mut st, &flag, 1, Some(1), &NoHost),
            Err(ExecError::NotPorted)
        );
    }

    #[test]
    fn fault_surfaces_as_kernel_panic() {
        fn broken(_: &mut Ctx<'_>) -> Result<(), Fault> {
            Err(Fault("broken on purpose"))
        }
        fn ok_verify() -> crate::VerifyReport {
            crate::VerifyReport::exact(0, 0)
        }
        let spec = KernelSpec::ported("broken", "nothing", 0, 1, broken, ok_verify);
        let mut buf = scratch_for(&spec);
        let mut st = KernelState::new(1, &mut buf);
        let flag = AtomicU32::new(0);
        assert_eq!(
            execute_kernel(&spec, &mut st, &flag, 1, None, &NoHost),
            Err(ExecError::KernelPanic(Fault("broken on purpose")))
        );
        assert_eq!(st.bogo_count, 0);
    }
}
