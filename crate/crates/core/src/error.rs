// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const VERIFY: i32 = 3;
    pub const INTERRUPTED: i32 = 130;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot load kernel artifact {}: {reason}", path.display())]
    ArtifactUnloadable { path: PathBuf, reason: String },

    #[error("kernel artifact has no entry point for `{0}`")]
    SymbolMissing(String),

    #[error("kernel `{kernel}` requested the {service} service inside the isolated domain")]
    DomainViolation {
        kernel: String,
        service: &'static str,
    },

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("kernel `{0}` is not ported")]
    NotPorted(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("kernel `{kernel}` failed its consistency check: {message}")]
    KernelPanic { kernel: String, message: String },

    #[error("kernel `{0}` rejected its environment")]
    BadEnvironment(String),

    #[error("artifact hash differs between domains: host {host}, isolated {isolated}")]
    HashMismatch { host: String, isolated: String },

    #[error("no records to aggregate")]
    EmptyInput,

    #[error("records mix kernels or domains")]
    MixedRuns,

    #[error("runs are not comparable: {0}")]
    ShapeMismatch(String),

    #[error("{0} kernel(s) failed verification")]
    VerificationFailed(usize),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("report serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownKernel(_) | Error::NotPorted(_) => exit::CONFIG,
            Error::VerificationFailed(_) => exit::VERIFY,
            _ => exit::FAILURE,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Serialize(format!("{other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Serialize(e.to_string())
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
