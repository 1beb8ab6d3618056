// SPDX-License-Identifier: Apache-2.0

//! Control-flow kernels: calls, empty loops, bitfield unions and the
//! boundary round trip used to measure transition cost.

use core::cell::Cell;
use core::hint::black_box;

use super::sink;
use crate::check::VerifyReport;
use crate::driver::{Ctx, Fault, HostCalls};
use crate::rng::Rng;

macro_rules! call_chain {
    ($name:ident => $next:ident) => {
        #[inline(never)]
        fn $name(a: u64, b: u64, c: u64, d: u64, e: u64, f: u64) -> u64 {
            black_box($next(b, c, d, e, f, a)).wrapping_add(1)
        }
    };
}

#[inline(never)]
fn call_leaf(a: u64, b: u64, c: u64, d: u64, e: u64, f: u64) -> u64 {
    black_box(a.wrapping_add(b).wrapping_add(c).wrapping_add(d).wrapping_add(e).wrapping_add(f))
}

call_chain!(call7 => call_leaf);
call_chain!(call6 => call7);
call_chain!(call5 => call6);
call_chain!(call4 => call5);
call_chain!(call3 => call4);
call_chain!(call2 => call3);
call_chain!(call1 => call2);
call_chain!(call0 => call1);

/// Sum of the arguments plus the chain depth (8).
pub fn call_chain(args: [u64; 6]) -> u64 {
    let [a, b, c, d, e, f] = args;
    call0(a, b, c, d, e, f)
}

pub fn callfunc(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let x = ctx.rng.next_u64() >> 4;
    let args = [x, x >> 1, x >> 2, x >> 3, x >> 4, x >> 5];
    let expected = args.iter().sum::<u64>() + 8;
    let got = call_chain(args);
    if got != expected {
        return Err(Fault("callfunc: call chain lost an argument"));
    }
    sink(ctx.work, got);
    Ok(())
}

pub fn verify_callfunc() -> VerifyReport {
    VerifyReport::exact(call_chain([1, 2, 3, 4, 5, 6]), 29)
}

/// Count loop iterations without letting the optimiser fold the loop.
pub fn spin(n: u64) -> u64 {
    let mut i = 0u64;
    while i < n {
        i = black_box(i) + 1;
    }
    i
}

pub fn empty_loop(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let n = spin(black_box(256));
    ctx.work[0] = ctx.work[0].wrapping_add(n);
    Ok(())
}

pub fn verify_loop() -> VerifyReport {
    VerifyReport::exact(spin(1000), 1000)
}

pub fn ocall(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    ctx.ocall();
    ctx.work[0] = ctx.work[0].wrapping_add(1);
    Ok(())
}

struct CountingHost(Cell<u64>);

impl HostCalls for CountingHost {
    fn ocall(&self) {
        self.0.set(self.0.get() + 1);
    }
}

/// Three steps against a counting host must request exactly three round
/// trips; the self-check never crosses the real boundary.
pub fn verify_ocall() -> VerifyReport {
    let host = CountingHost(Cell::new(0));
    let mut work = [0u64; 1];
    let mut rng = Rng::new(1);
    let mut ctx = Ctx::new(&mut work, &mut rng, &host);
    for _ in 0..3 {
        let _ = ocall(&mut ctx);
    }
    VerifyReport::exact(host.0.get(), 3).and(VerifyReport::exact(work[0], 3))
}

/// Bitfield layout: a in bits 0..4, b in 4..16, c in 16..32, d in 32..64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fields {
    pub a: u8,
    pub b: u16,
    pub c: u16,
    pub d: u32,
}

pub fn pack(f: Fields) -> u64 {
    (f.a as u64 & 0xf) | (f.b as u64 & 0xfff) << 4 | (f.c as u64) << 16 | (f.d as u64) << 32
}

pub fn unpack(w: u64) -> Fields {
    Fields {
        a: (w & 0xf) as u8,
        b: ((w >> 4) & 0xfff) as u16,
        c: (w >> 16) as u16,
        d: (w >> 32) as u32,
    }
}

pub fn union(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u64;
    for _ in 0..64 {
        let r = ctx.rng.next_u64();
        let f = Fields {
            a: (r & 0xf) as u8,
            b: ((r >> 8) & 0xfff) as u16,
            c: (r >> 24) as u16,
            d: (r >> 32) as u32,
        };
        let w = pack(f);
        if unpack(w) != f {
            return Err(Fault("union: bitfield round trip lost bits"));
        }
        acc ^= w;
    }
    sink(ctx.work, acc);
    Ok(())
}

pub fn verify_union() -> VerifyReport {
    let f = Fields {
        a: 0xa,
        b: 0xbcd,
        c: 0x1234,
        d: 0xdead_beef,
    };
    VerifyReport::exact(pack(f), 0xdead_beef_1234_bcda)
        .and(VerifyReport::exact((unpack(pack(f)) == f) as u64, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verifiers_pass() {
        for v in [verify_callfunc, verify_loop, verify_ocall, verify_union] {
            let r = v();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn ocall_requests_one_round_trip_per_op() {
        let host = CountingHost(Cell::new(0));
        let mut work = [0u64; 1];
        let mut rng = Rng::new(1);
        let mut ctx = Ctx::new(&mut work, &mut rng, &host);
        for _ in 0..1000 {
            ocall(&mut ctx).unwrap();
        }
        assert_eq!(host.0.get(), 1000);
    }
}
