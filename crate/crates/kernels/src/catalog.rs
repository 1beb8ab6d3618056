// SPDX-License-Identifier: Apache-2.0

use crate::check::VerifyReport;
use crate::driver::{Ctx, Fault, SCRATCH_HEADER_WORDS};
use crate::stressors::{float, gate, hash, integer, transform};

/// One bogo-op.
pub type StepFn = fn(&mut Ctx<'_>) -> Result<(), Fault>;
/// Deterministic fixed-input self-check.
pub type VerifyFn = fn() -> VerifyReport;

#[derive(Clone, Copy)]
pub enum Port {
    Ported { step: StepFn, verify: VerifyFn },
    /// Registered so the catalog stays honest about what could not be
    /// carried into the isolated domain.
    NotPorted,
}

#[derive(Clone, Copy)]
pub struct KernelSpec {
    pub id: &'static str,
    pub bogo_unit: &'static str,
    /// Kernel-private words, excluding the driver header.
    pub work_words: usize,
    pub poll_interval: u64,
    pub port: Port,
}

impl core::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("id", &self.id)
            .field("bogo_unit", &self.bogo_unit)
            .field("work_words", &self.work_words)
            .field("poll_interval", &self.poll_interval)
            .field("ported", &self.is_ported())
            .finish()
    }
}

impl KernelSpec {
    pub const fn ported(
        id: &'static str,
        bogo_unit: &'static str,
        work_words: usize,
        poll_interval: u64,
        step: StepFn,
        verify: VerifyFn,
    ) -> Self {
        KernelSpec {
            id,
            bogo_unit,
            work_words,
            poll_interval,
            port: Port::Ported { step, verify },
        }
    }

    pub const fn not_ported(id: &'static str) -> Self {
        KernelSpec {
            id,
            bogo_unit: "not ported",
            work_words: 0,
            poll_interval: 1,
            port: Port::NotPorted,
        }
    }

    pub const fn is_ported(&self) -> bool {
        matches!(self.port, Port::Ported { .. })
    }

    /// Total scratch words the host must allocate before entry.
    pub const fn scratch_len(&self) -> usize {
        SCRATCH_HEADER_WORDS + self.work_words
    }

    /// Run the self-check. `None` for kernels that are not ported.
    pub fn verify(&self) -> Option<VerifyReport> {
        match self.port {
            Port::Ported { verify, .. } => Some(verify()),
            Port::NotPorted => None,
        }
    }

    pub fn step(&self) -> Option<StepFn> {
        match self.port {
            Port::Ported { step, .. } => Some(step),
            Port::NotPorted => None,
        }
    }
}

use KernelSpec as K;

// Sorted by id; `lookup` relies on it.
static CATALOG: [KernelSpec; 57] = [
    K::ported("ackermann", "one evaluation of A(3, 7)", 1, 1, integer::ackermann, integer::verify_ackermann),
    K::ported("bitops", "bit reverse, popcount, parity and round-up on one random word", 1, 1024, integer::bitops, integer::verify_bitops),
    K::ported("callfunc", "one 8-deep chain of non-inlined six-argument calls", 1, 1024, gate::callfunc, gate::verify_callfunc),
    K::not_ported("complex"),
    K::ported("correlate", "cross-correlation of 256 samples against a 32-tap window at every lag", transform::CORRELATE_WORDS, 16, transform::correlate, transform::verify_correlate),
    K::ported("crc16", "CRC-16/CCITT over 1024 random bytes", hash::BUF_WORDS, 64, hash::crc16, hash::verify_crc16),
    K::not_ported("decimal128"),
    K::not_ported("decimal32"),
    K::not_ported("decimal64"),
    K::ported("djb2a", "djb2a hash of one random string of up to 128 bytes", hash::BUF_WORDS, 1024, hash::djb2a, hash::verify_djb2a),
    K::ported("double", "256-term double-precision telescoping sum checked against its closed form", 1, 256, float::double, float::verify_double),
    K::ported("euler", "e by a 20-term factorial series and by (1 + 1/n)^n", 1, 1024, float::euler, float::verify_euler),
    K::ported("explog", "exp(ln(x)) round trip on 64 random values", 1, 256, float::explog, float::verify_explog),
    K::ported("factorial", "n! and ln(n!) against lgamma for n = 1..=20", 1, 256, float::factorial, float::verify_factorial),
    K::ported("fft", "forward and inverse 4096-point complex FFT", transform::FFT_WORDS, 1, transform::fft, transform::verify_fft),
    K::ported("fibonacci", "Fibonacci sequence up to the largest term that fits in 64 bits", 1, 1024, integer::fibonacci, integer::verify_fibonacci),
    K::ported("float", "64-term single-precision telescoping sum checked against its closed form", 1, 256, float::float, float::verify_float),
    K::ported("fnv1a", "32-bit FNV-1a hash of one random string of up to 128 bytes", hash::BUF_WORDS, 1024, hash::fnv1a, hash::verify_fnv1a),
    K::ported("gamma", "Euler-Mascheroni constant from a corrected harmonic sum of 1000 terms", 1, 64, float::gamma, float::verify_gamma),
    K::ported("gcd", "Euclid and Stein gcd of 16 random pairs, cross-checked", 1, 1024, integer::gcd, integer::verify_gcd),
    K::ported("gray", "Gray encode and decode of 1024 consecutive integers", 1, 256, integer::gray, integer::verify_gray),
    K::ported("hamming", "Hamming(8,4) encode, single-bit corrupt and correct of 256 nybbles", 1, 256, integer::hamming, integer::verify_hamming),
    K::ported("hanoi", "recursive solution of a 16-disc Towers of Hanoi", 1, 4, integer::hanoi, integer::verify_hanoi),
    K::ported("hyperbolic", "sinh, cosh and tanh identities on 64 random values", 1, 256, float::hyperbolic, float::verify_hyperbolic),
    K::ported("idct", "8x8 inverse DCT of a random block, checked by forward DCT", transform::IDCT_WORDS, 16, transform::idct, transform::verify_idct),
    K::not_ported("int128"),
    K::not_ported("int128double"),
    K::not_ported("int128float"),
    K::not_ported("int128longdouble"),
    K::ported("int16", "1000 rounds of mixed 16-bit integer arithmetic", 1, 256, integer::int16, integer::verify_int16),
    K::ported("int32", "1000 rounds of mixed 32-bit integer arithmetic", 1, 256, integer::int32, integer::verify_int32),
    K::ported("int64", "1000 rounds of mixed 64-bit integer arithmetic", 1, 256, integer::int64, integer::verify_int64),
    K::ported("int8", "1000 rounds of mixed 8-bit integer arithmetic", 1, 256, integer::int8, integer::verify_int8),
    K::ported("jenkin", "Jenkins one-at-a-time hash of one random string of up to 128 bytes", hash::BUF_WORDS, 1024, hash::jenkin, hash::verify_jenkin),
    K::ported("ln2", "ln 2 by the series sum 1/(k 2^k) and the alternating harmonic series", 1, 256, float::ln2, float::verify_ln2),
    K::ported("loop", "256 iterations of an empty loop", 1, 1024, gate::empty_loop, gate::verify_loop),
    K::ported("matrixprod", "one 32x32 double-precision matrix product", transform::MATRIX_WORDS, 32, transform::matrixprod, transform::verify_matrixprod),
    K::ported("nsqrt", "Newton-Raphson square root of 64 random values", 1, 256, float::nsqrt, float::verify_nsqrt),
    K::ported("ocall", "one enter-and-exit transition pair with no work inside", 1, 1024, gate::ocall, gate::verify_ocall),
    K::ported("omega", "omega constant by fixed-point iteration of w = exp(-w)", 1, 256, float::omega, float::verify_omega),
    K::ported("parity", "parity of 1024 random words by three methods, cross-checked", 1, 256, integer::parity, integer::verify_parity),
    K::ported("phi", "golden ratio by a 64-step continued fraction", 1, 1024, float::phi, float::verify_phi),
    K::ported("pi", "pi by Machin's arctangent formula", 1, 1024, float::pi, float::verify_pi),
    K::ported("pjw", "PJW hash of one random string of up to 128 bytes", hash::BUF_WORDS, 1024, hash::pjw, hash::verify_pjw),
    K::ported("prime", "trial-division primality test of 64 consecutive odd numbers", 1, 8, integer::prime, integer::verify_prime),
    K::ported("psi", "reciprocal Fibonacci constant from 80 terms", 1, 1024, float::psi, float::verify_psi),
    K::ported("queens", "N-queens solution counts for N = 1..=11", 1, 1, integer::queens, integer::verify_queens),
    K::ported("rand", "1024 draws from the xorshift64 generator", 1, 256, integer::rand, integer::verify_rand),
    K::not_ported("rand48"),
    K::ported("rgb", "RGB to YCbCr and back for 256 random pixels", 1, 256, transform::rgb, transform::verify_rgb),
    K::ported("sdbm", "sdbm hash of one random string of up to 128 bytes", hash::BUF_WORDS, 1024, hash::sdbm, hash::verify_sdbm),
    K::ported("sieve", "sieve of Eratosthenes up to 10000", integer::SIEVE_WORDS, 32, integer::sieve, integer::verify_sieve),
    K::ported("sqrt", "square root of 64 random values, squared back", 1, 256, float::sqrt_kernel, float::verify_sqrt),
    K::not_ported("stats"),
    K::ported("trig", "sin, cos and tan identities on 64 random angles", 1, 256, float::trig, float::verify_trig),
    K::ported("union", "pack and unpack of 64 random values through a bitfield word", 1, 1024, gate::union, gate::verify_union),
    K::ported("zeta", "Riemann zeta at s = 2..=10 by Euler-Maclaurin summation", 1, 256, float::zeta, float::verify_zeta),
];

/// The full catalog, sorted by id.
pub fn catalog() -> &'static [KernelSpec] {
    &CATALOG
}

pub fn lookup(id: &str) -> Option<&'static KernelSpec> {
    CATALOG
        .binary_search_by(|k| k.id.cmp(id))
        .ok()
        .map(|i| &CATALOG[i])
}
