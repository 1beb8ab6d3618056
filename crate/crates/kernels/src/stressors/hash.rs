// SPDX-License-Identifier: Apache-2.0

//! Checksum and string-hash kernels.

use super::{as_bytes, sink};
use crate::check::VerifyReport;
use crate::driver::{Ctx, Fault};

/// 1024-byte message buffer plus one accumulator word.
pub const BUF_WORDS: usize = 1 + 128;

const CHECK: &[u8] = b"123456789";

const fn crc16_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = (i as u16) << 8;
        let mut k = 0;
        while k < 8 {
            c = if c & 0x8000 != 0 { (c << 1) ^ 0x1021 } else { c << 1 };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

static CRC16_TABLE: [u16; 256] = crc16_table();

/// CRC-16/CCITT: polynomial 0x1021, initial value 0xFFFF, no reflection,
/// no final xor.
pub fn crc16_ccitt(data: &[u8]) -> u16 {
    data.iter().fold(0xffff, |crc, &b| {
        (crc << 8) ^ CRC16_TABLE[((crc >> 8) as u8 ^ b) as usize]
    })
}

pub fn djb2a_hash(data: &[u8]) -> u32 {
    data.iter()
        .fold(5381u32, |h, &c| h.wrapping_mul(33) ^ c as u32)
}

pub fn fnv1a_hash(data: &[u8]) -> u32 {
    data.iter().fold(0x811c_9dc5u32, |h, &c| {
        (h ^ c as u32).wrapping_mul(0x0100_0193)
    })
}

/// Jenkins one-at-a-time.
pub fn jenkin_hash(data: &[u8]) -> u32 {
    let mut h = 0u32;
    for &c in data {
        h = h.wrapping_add(c as u32);
        h = h.wrapping_add(h << 10);
        h ^= h >> 6;
    }
    h = h.wrapping_add(h << 3);
    h ^= h >> 11;
    h.wrapping_add(h << 15)
}

pub fn pjw_hash(data: &[u8]) -> u32 {
    let mut h = 0u32;
    for &c in data {
        h = (h << 4).wrapping_add(c as u32);
        let g = h & 0xf000_0000;
        if g != 0 {
            h ^= g >> 24;
            h &= !g;
        }
    }
    h
}

pub fn sdbm_hash(data: &[u8]) -> u32 {
    data.iter().fold(0u32, |h, &c| {
        (c as u32)
            .wrapping_add(h << 6)
            .wrapping_add(h << 16)
            .wrapping_sub(h)
    })
}

pub fn crc16(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (acc, buf) = ctx.work.split_first_mut().expect("crc16 scratch");
    let bytes = as_bytes(buf);
    ctx.rng.fill_bytes(bytes);
    let crc = crc16_ccitt(bytes);
    *acc = acc.rotate_left(16) ^ crc as u64;
    Ok(())
}

pub fn verify_crc16() -> VerifyReport {
    VerifyReport::exact(crc16_ccitt(CHECK) as u64, 0x29b1)
        .and(VerifyReport::exact(crc16_ccitt(b"") as u64, 0xffff))
}

/// Hash a fresh random printable string of 1..=128 bytes.
fn string_hash(ctx: &mut Ctx<'_>, hash: fn(&[u8]) -> u32) -> Result<(), Fault> {
    let len = 1 + (ctx.rng.next_u32() % 128) as usize;
    let (acc, buf) = ctx.work.split_first_mut().expect("hash scratch");
    let bytes = &mut as_bytes(buf)[..len];
    ctx.rng.fill_bytes(bytes);
    for b in bytes.iter_mut() {
        *b = b' ' + (*b % 95);
    }
    let h = hash(bytes);
    sink(core::slice::from_mut(acc), h as u64);
    Ok(())
}

pub fn djb2a(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    string_hash(ctx, djb2a_hash)
}

pub fn fnv1a(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    string_hash(ctx, fnv1a_hash)
}

pub fn jenkin(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    string_hash(ctx, jenkin_hash)
}

pub fn pjw(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    string_hash(ctx, pjw_hash)
}

pub fn sdbm(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    string_hash(ctx, sdbm_hash)
}

pub fn verify_djb2a() -> VerifyReport {
    VerifyReport::exact(djb2a_hash(CHECK) as u64, 0x3bab_ea14)
}

pub fn verify_fnv1a() -> VerifyReport {
    VerifyReport::exact(fnv1a_hash(b"") as u64, 0x811c_9dc5)
        .and(VerifyReport::exact(fnv1a_hash(b"a") as u64, 0xe40c_292c))
        .and(VerifyReport::exact(fnv1a_hash(b"foobar") as u64, 0xbf9c_f968))
}

pub fn verify_jenkin() -> VerifyReport {
    VerifyReport::exact(jenkin_hash(b"a") as u64, 0xca2e_9442).and(VerifyReport::exact(
        jenkin_hash(b"The quick brown fox jumps over the lazy dog") as u64,
        0x519e_91f5,
    ))
}

pub fn verify_pjw() -> VerifyReport {
    VerifyReport::exact(pjw_hash(CHECK) as u64, 0x0678_aee9)
}

pub fn verify_sdbm() -> VerifyReport {
    VerifyReport::exact(sdbm_hash(CHECK) as u64, 0x68a0_7035)
}
