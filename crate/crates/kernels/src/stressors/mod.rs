// SPDX-License-Identifier: Apache-2.0

//! Kernel step and self-check functions, grouped by the kind of CPU work
//! they generate.

pub mod float;
pub mod gate;
pub mod hash;
pub mod integer;
pub mod transform;

/// Reinterpret scratch words as doubles. Same size and alignment; every
/// bit pattern is a valid `f64`.
#[inline]
pub(crate) fn as_f64(words: &mut [u64]) -> &mut [f64] {
    // SAFETY: u64 and f64 share size and alignment and have no invalid values.
    unsafe { core::slice::from_raw_parts_mut(words.as_mut_ptr().cast::<f64>(), words.len()) }
}

#[inline]
pub(crate) fn as_bytes(words: &mut [u64]) -> &mut [u8] {
    // SAFETY: u8 has alignment 1 and no invalid values.
    unsafe { core::slice::from_raw_parts_mut(words.as_mut_ptr().cast::<u8>(), words.len() * 8) }
}

/// Fold a value into the kernel's first work word so results stay live.
#[inline]
pub(crate) fn sink(work: &mut [u64], v: u64) {
    work[0] = work[0].rotate_left(5) ^ v;
}
