// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Flags follow stress-ng: `--cpu N` runs N host workers, `--sgx-cpu N`
//! runs N isolated workers, `N = 0` means every logical core. The
//! `--bogo-budget`, `--transition-delay-ns`, `--no-pin` and `--artifact`
//! flags are extensions.

use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use duostress_kernels::{catalog, lookup};

use crate::artifact::{self, KernelArtifact};
use crate::boundary::{Domain, DomainSession, StopFlag};
use crate::error::{exit, Error, Result};
use crate::metrics::{
    aggregate, compare, emit, fixed6, ComparisonReport, Environment, Format, Mode, Report,
    StressReport, TransitionReport, TransitionRow,
};
use crate::runner::{
    allowed_cores, run_campaign, transition_benchmark, Interrupt, RunConfig, RunLimit, RunRecord,
    DEFAULT_DURATION,
};

#[derive(Debug, Parser)]
#[command(name = "duostress", version, about = "Run the same CPU stress kernels in a host and an isolated domain")]
pub struct Cli {
    /// Kernel artifact to load instead of the one built with this binary.
    #[arg(long, global = true, value_name = "PATH")]
    pub artifact: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a stress campaign in one domain.
    Stress(RunArgs),
    /// Run the same campaign in both domains and report the throughput ratio.
    Compare(RunArgs),
    /// Time enclave-style transition pairs on one core, then on all cores.
    Transitions(TransitionArgs),
    /// Run every kernel's self-check in both domains.
    Verify(VerifyArgs),
    /// List the kernel catalog.
    List,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Host workers (0 = all logical cores).
    #[arg(long, value_name = "N", conflicts_with = "sgx_cpu")]
    pub cpu: Option<usize>,

    /// Isolated workers (0 = all logical cores).
    #[arg(long = "sgx-cpu", value_name = "N")]
    pub sgx_cpu: Option<usize>,

    /// Kernel to run, or `all`.
    #[arg(long = "cpu-method", value_name = "M", conflicts_with = "sgx_cpu_method")]
    pub cpu_method: Option<String>,

    /// Kernel to run in the isolated domain, or `all`.
    #[arg(long = "sgx-cpu-method", value_name = "M")]
    pub sgx_cpu_method: Option<String>,

    /// Run time per kernel: seconds, or a number with an s, m or h suffix.
    #[arg(long, value_name = "T", value_parser = parse_timeout, conflicts_with = "bogo_budget")]
    pub timeout: Option<Duration>,

    /// Stop each worker after exactly B bogo-ops.
    #[arg(long = "bogo-budget", value_name = "B", value_parser = clap::value_parser!(u64).range(1..))]
    pub bogo_budget: Option<u64>,

    /// Percentage of each core to load (host only).
    #[arg(long, value_name = "P", value_parser = clap::value_parser!(u8).range(1..=100))]
    pub load: Option<u8>,

    /// PRNG seed; decimal or 0x-prefixed hex.
    #[arg(long, value_name = "S", value_parser = parse_seed)]
    pub seed: Option<u64>,

    /// Print `kernel bogo_ops wall_s bogo_per_s` per worker.
    #[arg(long = "metrics-brief")]
    pub metrics_brief: bool,

    /// Write the report to PATH.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_name = "F", default_value = "csv", value_parser = parse_format)]
    pub format: Format,

    /// Busy-wait added to every boundary crossing.
    #[arg(long = "transition-delay-ns", value_name = "D", default_value_t = 0)]
    pub transition_delay_ns: u64,

    /// Do not pin workers to cores.
    #[arg(long = "no-pin")]
    pub no_pin: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TransitionArgs {
    /// Transition pairs per worker.
    #[arg(long, value_name = "N", default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,

    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_name = "F", default_value = "csv", value_parser = parse_format)]
    pub format: Format,

    #[arg(long = "transition-delay-ns", value_name = "D", default_value_t = 0)]
    pub transition_delay_ns: u64,

    #[arg(long = "no-pin")]
    pub no_pin: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Kernels to check (default: every ported kernel).
    #[arg(long = "method", value_name = "M")]
    pub methods: Vec<String>,
}

pub fn parse_timeout(s: &str) -> std::result::Result<Duration, String> {
    let s = s.trim();
    let (num, scale) = match s.char_indices().last() {
        Some((i, 's')) => (&s[..i], 1.0),
        Some((i, 'm')) => (&s[..i], 60.0),
        Some((i, 'h')) => (&s[..i], 3600.0),
        _ => (s, 1.0),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| format!("`{s}` is not a duration (examples: 10, 30s, 2m, 1h)"))?;
    let secs = v * scale;
    if !(secs.is_finite() && secs > 0.0) {
        return Err(format!("timeout must be positive, got `{s}`"));
    }
    Duration::try_from_secs_f64(secs).map_err(|e| e.to_string())
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("bad seed `{s}`: {e}"))
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse()
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn resolve_workers(n: usize) -> usize {
    if n == 0 {
        allowed_cores().len()
    } else {
        n
    }
}

fn select_kernels(method: Option<&str>) -> Result<Vec<&'static str>> {
    match method.unwrap_or("all") {
        "all" => Ok(catalog()
            .iter()
            .filter(|s| s.is_ported())
            .map(|s| s.id)
            .collect()),
        id => {
            let spec = lookup(id).ok_or_else(|| usage(format!("unknown method `{id}`")))?;
            if !spec.is_ported() {
                return Err(Error::NotPorted(id.into()));
            }
            Ok(vec![spec.id])
        }
    }
}

/// A campaign template plus the kernels to run it over.
#[derive(Debug, Clone)]
pub struct Plan {
    pub template: RunConfig,
    pub kernels: Vec<&'static str>,
}

impl RunArgs {
    /// Map flags onto a campaign plan. `both_domains` is set for
    /// `compare`, which runs every config in each domain.
    pub fn plan(&self, both_domains: bool) -> Result<Plan> {
        let (domain, workers) = match (self.cpu, self.sgx_cpu) {
            (_, Some(n)) => (Domain::Isolated, n),
            (Some(n), None) => (Domain::Host, n),
            (None, None) => (Domain::Host, 0),
        };
        let load = self.load.unwrap_or(100);
        if load != 100 && (domain == Domain::Isolated || both_domains) {
            return Err(usage(format!(
                "--load {load} cannot be used with {}: the isolated domain is locked to 100% \
                 load, since duty cycling needs precise timing that is not available inside it",
                if both_domains { "compare" } else { "--sgx-cpu" }
            )));
        }
        let method = self.sgx_cpu_method.as_deref().or(self.cpu_method.as_deref());
        let kernels = select_kernels(method)?;
        let limit = match (self.timeout, self.bogo_budget) {
            (Some(_), Some(_)) => {
                return Err(usage("--timeout and --bogo-budget are mutually exclusive"))
            }
            (_, Some(b)) => RunLimit::Budget(b),
            (Some(t), None) => RunLimit::Duration(t),
            (None, None) => RunLimit::Duration(DEFAULT_DURATION),
        };
        let mut template = RunConfig::new(kernels[0], domain);
        template.workers = resolve_workers(workers);
        template.limit = limit;
        template.load_percent = load;
        if let Some(seed) = self.seed {
            template.seed = seed;
        }
        template.pin = !self.no_pin;
        template.transition_delay_ns = self.transition_delay_ns;
        template.validate()?;
        Ok(Plan { template, kernels })
    }
}

fn load(cli_path: &Option<PathBuf>) -> Result<Arc<KernelArtifact>> {
    match cli_path {
        Some(p) => artifact::load_artifact(p),
        None => artifact::load_default(),
    }
}

fn brief(out: &mut dyn Write, records: &[RunRecord]) -> io::Result<()> {
    for r in records {
        writeln!(
            out,
            "{} {} {} {}",
            r.kernel_id,
            r.bogo_ops,
            fixed6(r.wall_seconds),
            fixed6(r.bogo_per_s())
        )?;
    }
    Ok(())
}

fn summary(out: &mut dyn Write, records: &[RunRecord]) -> Result<()> {
    let agg = aggregate(records)?;
    writeln!(
        out,
        "{} {}: {} worker(s), {} bogo-ops, {} bogo-ops/s, stop {}, transitions {}, verified {}",
        agg.domain,
        agg.kernel_id,
        agg.workers,
        agg.total_bogo_ops,
        fixed6(agg.bogo_per_s_sum),
        records[0].stop_cause,
        records.iter().map(|r| r.transitions).sum::<u64>(),
        if records.iter().all(|r| r.verified) { "yes" } else { "NO" },
    )?;
    Ok(())
}

fn stress(cli: &Cli, args: &RunArgs, out: &mut dyn Write, interrupt: &Interrupt) -> Result<i32> {
    let plan = args.plan(false)?;
    let artifact = load(&cli.artifact)?;
    let mut all = Vec::new();
    for id in &plan.kernels {
        let config = RunConfig {
            kernel_id: id.to_string(),
            ..plan.template.clone()
        };
        let records = run_campaign(&config, &artifact, interrupt)?;
        if args.metrics_brief {
            brief(out, &records)?;
        } else {
            summary(out, &records)?;
        }
        all.extend(records);
        if interrupt.is_triggered() {
            break;
        }
    }
    if let Some(path) = &args.out {
        let report = StressReport::new(&all, Environment::capture(artifact.content_hash()));
        emit(&report, args.format, path)?;
    }
    let failed = all.iter().filter(|r| !r.verified).count();
    if failed > 0 {
        return Err(Error::VerificationFailed(failed));
    }
    Ok(exit::OK)
}

fn compare_cmd(cli: &Cli, args: &RunArgs, out: &mut dyn Write, interrupt: &Interrupt) -> Result<i32> {
    let plan = args.plan(true)?;
    let artifact = load(&cli.artifact)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for id in &plan.kernels {
        let mut per_domain = Vec::with_capacity(2);
        for domain in [Domain::Host, Domain::Isolated] {
            let config = RunConfig {
                kernel_id: id.to_string(),
                domain,
                ..plan.template.clone()
            };
            let records = run_campaign(&config, &artifact, interrupt)?;
            failed += records.iter().filter(|r| !r.verified).count();
            if args.metrics_brief {
                brief(out, &records)?;
            }
            per_domain.push(aggregate(&records)?);
            if interrupt.is_triggered() {
                break;
            }
        }
        if per_domain.len() == 2 {
            rows.push(compare(&per_domain[0], &per_domain[1])?);
        }
        if interrupt.is_triggered() {
            break;
        }
    }
    let report = ComparisonReport::new(rows, Environment::capture(artifact.content_hash()))?;
    match &args.out {
        Some(path) => {
            emit(&report, args.format, path)?;
            if !args.metrics_brief {
                for r in &report.rows {
                    writeln!(out, "{} ratio {}{}", r.kernel_id, fixed6(r.ratio),
                        if r.anomalous { " (anomalous)" } else { "" })?;
                }
            }
        }
        None => out.write_all(report.render(args.format)?.as_bytes())?,
    }
    if failed > 0 {
        return Err(Error::VerificationFailed(failed));
    }
    Ok(exit::OK)
}

fn transitions(cli: &Cli, args: &TransitionArgs, out: &mut dyn Write, interrupt: &Interrupt) -> Result<i32> {
    let artifact = load(&cli.artifact)?;
    let all_cores = allowed_cores().len();
    let mut rows = Vec::new();
    for (mode, workers) in [(Mode::SingleCore, 1), (Mode::AllCores, all_cores)] {
        let recs = transition_benchmark(
            args.count,
            workers,
            &artifact,
            !args.no_pin,
            args.transition_delay_ns,
            interrupt,
        )?;
        let row = TransitionRow::from_records(mode, &recs)?;
        if args.out.is_some() {
            writeln!(
                out,
                "{}: {} worker(s), {} transitions each, {} s",
                row.mode,
                row.workers,
                row.transitions,
                fixed6(row.wall_seconds)
            )?;
        }
        rows.push(row);
        if interrupt.is_triggered() {
            break;
        }
    }
    let report = TransitionReport::new(rows, Environment::capture(artifact.content_hash()));
    match &args.out {
        Some(path) => emit(&report, args.format, path)?,
        None => out.write_all(report.render(args.format)?.as_bytes())?,
    }
    Ok(exit::OK)
}

fn verify(cli: &Cli, args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let artifact = load(&cli.artifact)?;
    let ids: Vec<&'static str> = if args.methods.is_empty() {
        select_kernels(None)?
    } else {
        let mut ids = Vec::new();
        for m in &args.methods {
            ids.extend(select_kernels(Some(m))?);
        }
        ids
    };
    let stop = StopFlag::new();
    let mut host = DomainSession::new(Domain::Host, Arc::clone(&artifact), stop.reader());
    let mut isolated = DomainSession::new(Domain::Isolated, Arc::clone(&artifact), stop.reader());
    let mut failed = 0;
    for id in ids {
        let h = host.verify(id).map(|r| r.passed()).unwrap_or(false);
        let i = isolated.verify(id).map(|r| r.passed()).unwrap_or(false);
        let word = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(out, "{id:<12} host {} isolated {}", word(h), word(i))?;
        failed += usize::from(!(h && i));
    }
    if failed > 0 {
        return Err(Error::VerificationFailed(failed));
    }
    Ok(exit::OK)
}

fn list(out: &mut dyn Write) -> Result<i32> {
    for spec in catalog() {
        if spec.is_ported() {
            writeln!(out, "{}", spec.id)?;
        } else {
            writeln!(out, "{} (not ported)", spec.id)?;
        }
    }
    Ok(exit::OK)
}

/// Execute a parsed invocation, writing human output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write, interrupt: &Interrupt) -> Result<i32> {
    match &cli.command {
        Command::Stress(a) => stress(cli, a, out, interrupt),
        Command::Compare(a) => compare_cmd(cli, a, out, interrupt),
        Command::Transitions(a) => transitions(cli, a, out, interrupt),
        Command::Verify(a) => verify(cli, a, out),
        Command::List => list(out),
    }
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    let interrupt = match &cli.command {
        Command::Stress(_) | Command::Compare(_) | Command::Transitions(_) => {
            match Interrupt::install_signal_handlers() {
                Ok(i) => i,
                Err(e) => {
                    eprintln!("duostress: cannot install signal handlers: {e}");
                    return exit::FAILURE;
                }
            }
        }
        _ => Interrupt::new(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(&cli, &mut out, &interrupt) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            match &e {
                Error::Config(_) | Error::UnknownKernel(_) | Error::NotPorted(_) => {
                    eprintln!("duostress: usage error: {e}")
                }
                _ => eprintln!("duostress: {e}"),
            }
            e.exit_code()
        }
    };
    let _ = out.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("duostress").chain(args.iter().copied()))
    }

    fn plan(args: &[&str]) -> Result<Plan> {
        match parse(args).expect("parses").command {
            Command::Stress(a) => a.plan(false),
            Command::Compare(a) => a.plan(true),
            _ => unreachable!(),
        }
    }

    #[test]
    fn timeout_suffixes() {
        assert_eq!(parse_timeout("60").unwrap(), Duration::from_secs(60));
        assert_eq!(parse_timeout("45s").unwrap(), Duration::from_secs(45));
        assert_eq!(parse_timeout("2m").unwrap(), Duration::from_secs(120));
        assert_eq!(parse_timeout("1h").unwrap(), Duration::from_secs(3600));
        assert_eq!(parse_timeout("0.5").unwrap(), Duration::from_millis(500));
        for bad in ["", "0", "-1", "5x", "s", "inf"] {
            assert!(parse_timeout(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sgx_flags_select_isolated() {
        let p = plan(&["stress", "--sgx-cpu", "4", "--sgx-cpu-method", "ackermann", "--timeout", "60"])
            .unwrap();
        assert_eq!(p.template.domain, Domain::Isolated);
        assert_eq!(p.template.workers, 4);
        assert_eq!(p.kernels, vec!["ackermann"]);
        assert_eq!(p.template.limit, RunLimit::Duration(Duration::from_secs(60)));
    }

    #[test]
    fn load_limitation() {
        let e = plan(&["stress", "--sgx-cpu", "1", "--load", "50"]).unwrap_err();
        assert!(matches!(&e, Error::Config(m) if m.contains("100%")), "{e}");
        assert_eq!(e.exit_code(), exit::CONFIG);
        let p = plan(&["stress", "--cpu", "1", "--load", "50"]).unwrap();
        assert_eq!(p.template.load_percent, 50);
        assert!(plan(&["stress", "--sgx-cpu", "1", "--load", "100"]).is_ok());
    }

    #[test]
    fn usage_errors() {
        assert!(parse(&["stress", "--timeout", "5", "--bogo-budget", "10"]).is_err());
        assert!(parse(&["stress", "--cpu", "1", "--sgx-cpu", "1"]).is_err());
        assert!(parse(&["stress", "--bogus"]).is_err());
        assert!(parse(&["stress", "--load", "0"]).is_err());
        assert!(parse(&["stress", "--load", "101"]).is_err());
        assert!(parse(&["stress", "--format", "xml"]).is_err());
        assert!(matches!(
            plan(&["stress", "--cpu-method", "nosuch"]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            plan(&["stress", "--cpu-method", "decimal64"]),
            Err(Error::NotPorted(_))
        ));
    }

    #[test]
    fn defaults() {
        let p = plan(&["stress", "--cpu", "1"]).unwrap();
        assert_eq!(p.template.limit, RunLimit::Duration(Duration::from_secs(10)));
        assert_eq!(p.kernels.len(), catalog().iter().filter(|s| s.is_ported()).count());
        assert!(p.template.pin);
        let p = plan(&["compare", "--cpu-method", "gcd", "--timeout", "5"]).unwrap();
        assert_eq!(p.kernels, vec!["gcd"]);
        assert!(p.template.workers >= 1);
        let p = plan(&["stress", "--cpu", "1", "--seed", "0x10", "--bogo-budget", "7"]).unwrap();
        assert_eq!(p.template.seed, 16);
        assert_eq!(p.template.limit, RunLimit::Budget(7));
    }
}
