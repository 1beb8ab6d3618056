// SPDX-License-Identifier: Apache-2.0

//! Campaign orchestration: workers, the timekeeper and signal handling.
//!
//! Each worker owns a [`DomainSession`] and its scratch buffer. The
//! orchestrating thread doubles as timekeeper and is the only writer of the
//! [`StopFlag`]; a signal only raises an interrupt request that the
//! timekeeper turns into a stop, so the two paths never race on the flag.

use std::fmt;
use std::io;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use duostress_kernels::{lookup, KernelState, DEFAULT_SEED};

use crate::artifact::KernelArtifact;
use crate::boundary::{Domain, DomainSession, StopFlag, StopReader};
use crate::error::{Error, Result};

/// How a campaign ends. Holding one value makes "both set" unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLimit {
    Duration(Duration),
    /// Bogo-ops per worker.
    Budget(u64),
}

impl RunLimit {
    pub fn duration_secs(&self) -> Option<f64> {
        match self {
            RunLimit::Duration(d) => Some(d.as_secs_f64()),
            RunLimit::Budget(_) => None,
        }
    }

    pub fn budget(&self) -> Option<u64> {
        match self {
            RunLimit::Duration(_) => None,
            RunLimit::Budget(b) => Some(*b),
        }
    }
}

pub const DEFAULT_DURATION: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel_id: String,
    pub domain: Domain,
    pub workers: usize,
    pub limit: RunLimit,
    pub load_percent: u8,
    pub seed: u64,
    pub pin: bool,
    pub transition_delay_ns: u64,
    /// Overrides the kernel's registered poll interval.
    pub poll_interval: Option<u64>,
}

impl RunConfig {
    pub fn new(kernel_id: impl Into<String>, domain: Domain) -> Self {
        RunConfig {
            kernel_id: kernel_id.into(),
            domain,
            workers: logical_cores(),
            limit: RunLimit::Duration(DEFAULT_DURATION),
            load_percent: 100,
            seed: DEFAULT_SEED,
            pin: true,
            transition_delay_ns: 0,
            poll_interval: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec = lookup(&self.kernel_id)
            .ok_or_else(|| Error::UnknownKernel(self.kernel_id.clone()))?;
        if !spec.is_ported() {
            return Err(Error::NotPorted(self.kernel_id.clone()));
        }
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        if !(1..=100).contains(&self.load_percent) {
            return Err(Error::Config(format!(
                "load must be 1-100 percent, got {}",
                self.load_percent
            )));
        }
        if self.domain == Domain::Isolated && self.load_percent != 100 {
            return Err(Error::Config(format!(
                "isolated runs are locked to 100% load (got {}%): duty cycling needs \
                 precise timing, which is not available inside the isolated domain",
                self.load_percent
            )));
        }
        match self.limit {
            RunLimit::Duration(d) if d.is_zero() => {
                return Err(Error::Config("duration must be positive".into()))
            }
            RunLimit::Budget(0) => return Err(Error::Config("bogo budget must be positive".into())),
            _ => {}
        }
        if self.poll_interval == Some(0) {
            return Err(Error::Config("poll interval must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_poll(&self) -> u64 {
        self.poll_interval
            .unwrap_or_else(|| lookup(&self.kernel_id).map_or(1, |s| s.poll_interval))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCause {
    Timeout,
    Signal,
    Budget,
}

impl fmt::Display for StopCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopCause::Timeout => "TIMEOUT",
            StopCause::Signal => "SIGNAL",
            StopCause::Budget => "BUDGET",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub worker_index: usize,
    /// Logical core the worker was pinned to, if pinning succeeded.
    pub core: Option<usize>,
    pub kernel_id: String,
    pub domain: Domain,
    pub limit: RunLimit,
    pub bogo_ops: u64,
    pub wall_seconds: f64,
    pub transitions: u64,
    pub verified: bool,
    pub stop_cause: StopCause,
    pub content_hash: String,
}

impl RunRecord {
    pub fn bogo_per_s(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.bogo_ops as f64 / self.wall_seconds
        } else {
            0.0
        }
    }
}

/// Interrupt requests from the outside world.
#[derive(Debug, Clone, Default)]
pub struct Interrupt {
    flag: Arc<AtomicBool>,
}

impl Interrupt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Route SIGINT and SIGTERM here. The first one requests a graceful
    /// stop; a second one while the first is pending exits the process
    /// with status 130 immediately.
    pub fn install_signal_handlers() -> io::Result<Self> {
        let me = Self::new();
        for sig in [signal_hook::consts::SIGINT, signal_hook::consts::SIGTERM] {
            signal_hook::flag::register_conditional_shutdown(
                sig,
                crate::error::exit::INTERRUPTED,
                Arc::clone(&me.flag),
            )?;
            signal_hook::flag::register(sig, Arc::clone(&me.flag))?;
        }
        Ok(me)
    }

    pub fn trigger(&self) {
        self.flag.store(true, Ordering::SeqCst);
    }

    pub fn is_triggered(&self) -> bool {
        self.flag.load(Ordering::SeqCst)
    }
}

pub fn logical_cores() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// Logical cores this process may run on.
pub fn allowed_cores() -> Vec<usize> {
    // SAFETY: cpu_set_t is plain data; sched_getaffinity fills it.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        if libc::sched_getaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &mut set) == 0 {
            let cores: Vec<usize> = (0..libc::CPU_SETSIZE as usize)
                .filter(|&c| libc::CPU_ISSET(c, &set))
                .collect();
            if !cores.is_empty() {
                return cores;
            }
        }
    }
    (0..logical_cores()).collect()
}

fn pin_current_thread(core: usize) -> bool {
    // SAFETY: as above; pid 0 is the calling thread.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(core, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

struct WorkerOutput {
    bogo_ops: u64,
    wall: Duration,
    transitions: u64,
    verified: bool,
    core: Option<usize>,
}

const DUTY_WINDOW: Duration = Duration::from_millis(100);
const DUTY_SLEEP_SLICE: Duration = Duration::from_millis(5);
const TICK: Duration = Duration::from_millis(2);

fn duty_cycle(
    session: &mut DomainSession,
    kernel_id: &str,
    state: &mut KernelState<'_>,
    stop: &StopReader,
    poll: u64,
    load: u8,
    budget: Option<u64>,
) -> Result<u64> {
    let busy = DUTY_WINDOW * load as u32 / 100;
    let limit = budget.unwrap_or(u64::MAX);
    let mut total = 0;
    while !stop.is_stopped() && total < limit {
        let window = Instant::now();
        while window.elapsed() < busy && !stop.is_stopped() && total < limit {
            let chunk = poll.min(limit - total);
            total += session.enter(kernel_id, state, poll, Some(chunk))?.bogo_ops;
        }
        if total >= limit {
            break;
        }
        while let Some(left) = DUTY_WINDOW.checked_sub(window.elapsed()) {
            if stop.is_stopped() || left.is_zero() {
                break;
            }
            thread::sleep(left.min(DUTY_SLEEP_SLICE));
        }
    }
    Ok(total)
}

fn worker(
    index: usize,
    config: &RunConfig,
    artifact: Arc<KernelArtifact>,
    stop: StopReader,
    barrier: &Barrier,
    core: Option<usize>,
) -> Result<WorkerOutput> {
    let spec = lookup(&config.kernel_id).expect("validated kernel");
    let pinned = core.filter(|&c| pin_current_thread(c));
    let mut session = DomainSession::new(config.domain, artifact, stop.clone())
        .with_transition_delay(config.transition_delay_ns);
    let mut scratch = vec![0u64; spec.scratch_len()];
    let seed = config.seed.wrapping_add(index as u64);
    let mut state = KernelState::new(seed, &mut scratch);
    let poll = config.effective_poll();

    let t0 = Instant::now();
    barrier.wait();
    let run = if config.load_percent < 100 && config.domain == Domain::Host {
        duty_cycle(
            &mut session,
            &config.kernel_id,
            &mut state,
            &stop,
            poll,
            config.load_percent,
            config.limit.budget(),
        )
    } else {
        session
            .enter(&config.kernel_id, &mut state, poll, config.limit.budget())
            .map(|f| f.bogo_ops)
    };
    let wall = t0.elapsed();
    let bogo_ops = run?;
    let transitions = session.transition_count();
    let verified = session.verify(&config.kernel_id).map(|r| r.passed()).unwrap_or(false);
    Ok(WorkerOutput {
        bogo_ops,
        wall,
        transitions,
        verified,
        core: pinned,
    })
}

/// Run one campaign and return its records in worker order.
pub fn run_campaign(
    config: &RunConfig,
    artifact: &Arc<KernelArtifact>,
    interrupt: &Interrupt,
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let stop = StopFlag::new();
    let barrier = Barrier::new(config.workers + 1);
    let finished = AtomicUsize::new(0);
    let cores = allowed_cores();

    let (outputs, cause) = thread::scope(|scope| {
        let handles: Vec<_> = (0..config.workers)
            .map(|i| {
                let reader = stop.reader();
                let artifact = Arc::clone(artifact);
                let barrier = &barrier;
                let finished = &finished;
                let core = config.pin.then(|| cores[i % cores.len()]);
                thread::Builder::new()
                    .name(format!("worker-{i}"))
                    .spawn_scoped(scope, move || {
                        let out = worker(i, config, artifact, reader, barrier, core);
                        finished.fetch_add(1, Ordering::Release);
                        out
                    })
                    .expect("spawn worker")
            })
            .collect();

        barrier.wait();
        let cause = timekeeper(config, &stop, &finished, interrupt);
        let outputs: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect();
        (outputs, cause)
    });

    let hash = artifact.content_hash().to_string();
    outputs
        .into_iter()
        .enumerate()
        .map(|(i, out)| {
            let out = out?;
            Ok(RunRecord {
                worker_index: i,
                core: out.core,
                kernel_id: config.kernel_id.clone(),
                domain: config.domain,
                limit: config.limit,
                bogo_ops: out.bogo_ops,
                wall_seconds: out.wall.as_secs_f64(),
                transitions: out.transitions,
                verified: out.verified,
                stop_cause: cause,
                content_hash: hash.clone(),
            })
        })
        .collect()
}

/// Sole writer of the stop flag. Starts its clock after every worker is
/// ready, so no worker's wall time can undercut the requested duration.
fn timekeeper(
    config: &RunConfig,
    stop: &StopFlag,
    finished: &AtomicUsize,
    interrupt: &Interrupt,
) -> StopCause {
    let start = Instant::now();
    let deadline = config.limit_deadline(start);
    loop {
        if interrupt.is_triggered() {
            stop.stop();
            return StopCause::Signal;
        }
        if finished.load(Ordering::Acquire) == config.workers {
            // Workers only return on their own when the budget is spent or
            // on error; either way nothing is left to stop.
            stop.stop();
            return match config.limit {
                RunLimit::Budget(_) => StopCause::Budget,
                RunLimit::Duration(_) => StopCause::Timeout,
            };
        }
        let now = Instant::now();
        if let Some(deadline) = deadline {
            if now >= deadline {
                stop.stop();
                return StopCause::Timeout;
            }
            thread::sleep((deadline - now).min(TICK));
        } else {
            thread::sleep(TICK);
        }
    }
}

impl RunConfig {
    fn limit_deadline(&self, start: Instant) -> Option<Instant> {
        match self.limit {
            RunLimit::Duration(d) => Some(start + d),
            RunLimit::Budget(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub worker_index: usize,
    pub transitions: u64,
    pub wall_seconds: f64,
}

/// Each worker performs exactly `n` transition pairs through the `ocall`
/// kernel in the isolated domain.
pub fn transition_benchmark(
    n: u64,
    workers: usize,
    artifact: &Arc<KernelArtifact>,
    pin: bool,
    transition_delay_ns: u64,
    interrupt: &Interrupt,
) -> Result<Vec<TransitionRecord>> {
    if n == 0 {
        return Err(Error::Config("transition count must be at least 1".into()));
    }
    let config = RunConfig {
        workers,
        limit: RunLimit::Budget(n),
        pin,
        transition_delay_ns,
        ..RunConfig::new("ocall", Domain::Isolated)
    };
    run_campaign(&config, artifact, interrupt)?
        .into_iter()
        .map(|r| {
            // The enclosing stress entry is one pair; the rest are ocalls.
            let made = r.transitions - 1;
            if made != r.bogo_ops {
                return Err(Error::ShapeMismatch(format!(
                    "worker {} counted {} transitions for {} ocalls",
                    r.worker_index, made, r.bogo_ops
                )));
            }
            Ok(TransitionRecord {
                worker_index: r.worker_index,
                transitions: made,
                wall_seconds: r.wall_seconds,
            })
        })
        .collect()
}
