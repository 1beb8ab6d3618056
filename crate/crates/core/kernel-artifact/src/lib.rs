// SPDX-License-Identifier: Apache-2.0

//! Loadable kernel artifact.
//!
//! Built `no_std` with `panic = "abort"` so the shared object imports
//! nothing beyond `memcpy`/`memset`; the loader audits that.

#![no_std]
#![allow(non_upper_case_globals)]

use duostress_kernels::abi::{run_entry, KernelEnv, ABI_VERSION};

#[no_mangle]
pub static kernel_abi_version: u32 = ABI_VERSION;

macro_rules! entries {
    ($($sym:ident => $id:literal,)*) => {
        $(
            #[no_mangle]
            pub unsafe extern "C" fn $sym(env: *mut KernelEnv) -> u64 {
                run_entry(env, $id)
            }
        )*
    };
}

entries! {
    kernel_ackermann => "ackermann",
    kernel_bitops => "bitops",
    kernel_callfunc => "callfunc",
    kernel_correlate => "correlate",
    kernel_crc16 => "crc16",
    kernel_djb2a => "djb2a",
    kernel_double => "double",
    kernel_euler => "euler",
    kernel_explog => "explog",
    kernel_factorial => "factorial",
    kernel_fft => "fft",
    kernel_fibonacci => "fibonacci",
    kernel_float => "float",
    kernel_fnv1a => "fnv1a",
    kernel_gamma => "gamma",
    kernel_gcd => "gcd",
    kernel_gray => "gray",
    kernel_hamming => "hamming",
    kernel_hanoi => "hanoi",
    kernel_hyperbolic => "hyperbolic",
    kernel_idct => "idct",
    kernel_int16 => "int16",
    kernel_int32 => "int32",
    kernel_int64 => "int64",
    kernel_int8 => "int8",
    kernel_jenkin => "jenkin",
    kernel_ln2 => "ln2",
    kernel_loop => "loop",
    kernel_matrixprod => "matrixprod",
    kernel_nsqrt => "nsqrt",
    kernel_ocall => "ocall",
    kernel_omega => "omega",
    kernel_parity => "parity",
    kernel_phi => "phi",
    kernel_pi => "pi",
    kernel_pjw => "pjw",
    kernel_prime => "prime",
    kernel_psi => "psi",
    kernel_queens => "queens",
    kernel_rand => "rand",
    kernel_rgb => "rgb",
    kernel_sdbm => "sdbm",
    kernel_sieve => "sieve",
    kernel_sqrt => "sqrt",
    kernel_trig => "trig",
    kernel_union => "union",
    kernel_zeta => "zeta",
}

#[panic_handler]
fn panic(_: &core::panic::PanicInfo<'_>) -> ! {
    #[cfg(target_arch = "x86_64")]
    unsafe {
        core::arch::asm!("ud2", options(noreturn));
    }
    #[cfg(not(target_arch = "x86_64"))]
    loop {}
}

// Referenced by libcore even under `panic = "abort"`; never called.
#[no_mangle]
pub extern "C" fn rust_eh_personality() {}
