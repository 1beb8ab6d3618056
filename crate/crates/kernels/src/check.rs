// SPDX-License-Identifier: Apache-2.0

/// How `observed` and `expected` in a [`VerifyReport`] are encoded.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Unsigned = 0,
    F64 = 1,
    F32 = 2,
}

impl ValueKind {
    pub fn from_raw(raw: u32) -> Option<Self> {
        match raw {
            0 => Some(ValueKind::Unsigned),
            1 => Some(ValueKind::F64),
            2 => Some(ValueKind::F32),
            _ => None,
        }
    }
}

/// Outcome of a kernel self-check. Plain data so it can cross the artifact
/// boundary unchanged.
///
/// When several checks are chained with [`VerifyReport::and`], the report
/// carries the first failing check, or the last one if all passed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub passed: u32,
    pub kind: u32,
    /// Index of the check within the chain, starting at 0.
    pub check: u32,
    pub observed: u64,
    pub expected: u64,
}

impl Default for VerifyReport {
    fn default() -> Self {
        VerifyReport {
            passed: 0,
            kind: ValueKind::Unsigned as u32,
            check: 0,
            observed: 0,
            expected: 0,
        }
    }
}

impl VerifyReport {
    pub const fn exact(observed: u64, expected: u64) -> Self {
        VerifyReport {
            passed: (observed == expected) as u32,
            kind: ValueKind::Unsigned as u32,
            check: 0,
            observed,
            expected,
        }
    }

    /// Relative tolerance, falling back to absolute when `expected` is 0.
    pub fn close_f64(observed: f64, expected: f64, rel_tol: f64) -> Self {
        let scale = if expected == 0.0 { 1.0 } else { libm::fabs(expected) };
        let ok = libm::fabs(observed - expected) <= rel_tol * scale;
        VerifyReport {
            passed: ok as u32,
            kind: ValueKind::F64 as u32,
            check: 0,
            observed: observed.to_bits(),
            expected: expected.to_bits(),
        }
    }

    pub fn close_f32(observed: f32, expected: f32, rel_tol: f32) -> Self {
        let scale = if expected == 0.0 { 1.0 } else { libm::fabsf(expected) };
        let ok = libm::fabsf(observed - expected) <= rel_tol * scale;
        VerifyReport {
            passed: ok as u32,
            kind: ValueKind::F32 as u32,
            check: 0,
            observed: observed.to_bits() as u64,
            expected: expected.to_bits() as u64,
        }
    }

    pub fn passed(&self) -> bool {
        self.passed != 0
    }

    /// Chain another check; the first failure wins.
    pub fn and(self, next: VerifyReport) -> VerifyReport {
        if !self.passed() {
            return self;
        }
        VerifyReport {
            check: self.check + 1,
            ..next
        }
    }
}

/// Relative tolerance for double-precision oracles.
pub const F64_TOL: f64 = 1e-9;
/// Relative tolerance for single-precision oracles.
pub const F32_TOL: f32 = 1e-5;
