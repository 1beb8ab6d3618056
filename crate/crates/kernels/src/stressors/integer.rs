// SPDX-License-Identifier: Apache-2.0

//! Integer and combinatorial kernels.

use core::hint::black_box;

use super::sink;
use crate::check::VerifyReport;
use crate::driver::{Ctx, Fault};
use crate::rng::Rng;

pub fn ackermann_fn(m: u32, n: u32) -> u32 {
    if m == 0 {
        n + 1
    } else if n == 0 {
        ackermann_fn(m - 1, 1)
    } else {
        ackermann_fn(m - 1, ackermann_fn(m, n - 1))
    }
}

pub fn ackermann(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let a = ackermann_fn(black_box(3), black_box(7));
    if a != 1021 {
        return Err(Fault("ackermann: A(3, 7) != 1021"));
    }
    sink(ctx.work, a as u64);
    Ok(())
}

pub fn verify_ackermann() -> VerifyReport {
    VerifyReport::exact(ackermann_fn(3, 3) as u64, 61)
}

// Bit twiddling by hand; the point is the shift-and-mask work, not the
// single-instruction intrinsics.

pub fn reverse_bits(mut x: u64) -> u64 {
    x = ((x >> 1) & 0x5555_5555_5555_5555) | ((x & 0x5555_5555_5555_5555) << 1);
    x = ((x >> 2) & 0x3333_3333_3333_3333) | ((x & 0x3333_3333_3333_3333) << 2);
    x = ((x >> 4) & 0x0f0f_0f0f_0f0f_0f0f) | ((x & 0x0f0f_0f0f_0f0f_0f0f) << 4);
    x = ((x >> 8) & 0x00ff_00ff_00ff_00ff) | ((x & 0x00ff_00ff_00ff_00ff) << 8);
    x = ((x >> 16) & 0x0000_ffff_0000_ffff) | ((x & 0x0000_ffff_0000_ffff) << 16);
    x.rotate_left(32)
}

pub fn popcount(mut x: u64) -> u32 {
    x -= (x >> 1) & 0x5555_5555_5555_5555;
    x = (x & 0x3333_3333_3333_3333) + ((x >> 2) & 0x3333_3333_3333_3333);
    x = (x + (x >> 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    (x.wrapping_mul(0x0101_0101_0101_0101) >> 56) as u32
}

/// Parity by xor folding.
pub fn parity_fold(mut x: u64) -> u32 {
    x ^= x >> 32;
    x ^= x >> 16;
    x ^= x >> 8;
    x ^= x >> 4;
    x ^= x >> 2;
    x ^= x >> 1;
    (x & 1) as u32
}

/// Parity through a 4-bit lookup word.
pub fn parity_nibble(mut x: u64) -> u32 {
    x ^= x >> 32;
    x ^= x >> 16;
    x ^= x >> 8;
    x ^= x >> 4;
    (0x6996u32 >> (x & 0xf)) & 1
}

/// Smallest power of two >= x, for x in 1..=2^31.
pub fn round_up_pow2(x: u32) -> u32 {
    let mut v = x.wrapping_sub(1);
    v |= v >> 1;
    v |= v >> 2;
    v |= v >> 4;
    v |= v >> 8;
    v |= v >> 16;
    v.wrapping_add(1)
}

pub fn bitops(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let x = ctx.rng.next_u64();
    let r = reverse_bits(x);
    let p = popcount(x);
    if p + popcount(!x) != 64 {
        return Err(Fault("bitops: popcount(x) + popcount(!x) != 64"));
    }
    if reverse_bits(r) != x {
        return Err(Fault("bitops: reverse is not an involution"));
    }
    let up = round_up_pow2((x as u32 >> 1) | 1);
    sink(ctx.work, r ^ ((p as u64) << 1) ^ parity_fold(x) as u64 ^ up as u64);
    Ok(())
}

pub fn verify_bitops() -> VerifyReport {
    let w = 0x0123_4567_89ab_cdef;
    VerifyReport::exact(reverse_bits(w), 0xf7b3_d591_e6a2_c480)
        .and(VerifyReport::exact(popcount(w) as u64, 32))
        .and(VerifyReport::exact(parity_fold(w) as u64, 0))
        .and(VerifyReport::exact(round_up_pow2(1000) as u64, 1024))
        .and(VerifyReport::exact(round_up_pow2(1024) as u64, 1024))
}

pub fn fibonacci(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (mut a, mut b) = (black_box(0u64), black_box(1u64));
    let mut n = 1u32;
    while let Some(c) = a.checked_add(b) {
        a = b;
        b = c;
        n += 1;
    }
    // F(93) is the largest term below 2^64.
    if n != 93 {
        return Err(Fault("fibonacci: wrong overflow index"));
    }
    sink(ctx.work, b);
    Ok(())
}

pub fn fib_nth(n: u32) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..n {
        let c = a.wrapping_add(b);
        a = b;
        b = c;
    }
    a
}

pub fn verify_fibonacci() -> VerifyReport {
    VerifyReport::exact(fib_nth(30), 832_040)
}

pub fn gcd_euclid(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_stein(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

pub fn gcd(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u64;
    for _ in 0..16 {
        // Shared factor so results are not almost always 1.
        let k = (ctx.rng.next_u32() & 0xffff) as u64 + 1;
        let a = (ctx.rng.next_u32() as u64) * k;
        let b = (ctx.rng.next_u32() as u64) * k;
        let g = gcd_euclid(a, b);
        if g != gcd_stein(a, b) {
            return Err(Fault("gcd: Euclid and Stein disagree"));
        }
        acc = acc.wrapping_add(g);
    }
    sink(ctx.work, acc);
    Ok(())
}

pub fn verify_gcd() -> VerifyReport {
    VerifyReport::exact(gcd_euclid(48, 18), 6)
        .and(VerifyReport::exact(gcd_stein(48, 18), 6))
        .and(VerifyReport::exact(gcd_euclid(17, 5), 1))
        .and(VerifyReport::exact(gcd_stein(0, 7), 7))
}

pub fn gray_encode(x: u32) -> u32 {
    x ^ (x >> 1)
}

pub fn gray_decode(mut g: u32) -> u32 {
    g ^= g >> 16;
    g ^= g >> 8;
    g ^= g >> 4;
    g ^= g >> 2;
    g ^= g >> 1;
    g
}

pub fn gray(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let base = ctx.rng.next_u32() & 0x7fff_ffff;
    let mut acc = 0u32;
    for i in base..base + 1024 {
        let g = gray_encode(i);
        if gray_decode(g) != i {
            return Err(Fault("gray: decode(encode(x)) != x"));
        }
        acc ^= g;
    }
    sink(ctx.work, acc as u64);
    Ok(())
}

pub fn verify_gray() -> VerifyReport {
    VerifyReport::exact(gray_encode(5) as u64, 7)
        .and(VerifyReport::exact(gray_encode(255) as u64, 128))
        .and(VerifyReport::exact(gray_decode(7) as u64, 5))
        .and(VerifyReport::exact(gray_decode(0x8000_0000) as u64, 0xffff_ffff))
}

/// Hamming(8,4) SECDED: bits 0..6 are p1 p2 d1 p3 d2 d3 d4, bit 7 is the
/// overall parity.
pub fn hamming_encode(nybble: u8) -> u8 {
    let d = |i: u8| (nybble >> i) & 1;
    let (d1, d2, d3, d4) = (d(3), d(2), d(1), d(0));
    let p1 = d1 ^ d2 ^ d4;
    let p2 = d1 ^ d3 ^ d4;
    let p3 = d2 ^ d3 ^ d4;
    let code = p1 | p2 << 1 | d1 << 2 | p3 << 3 | d2 << 4 | d3 << 5 | d4 << 6;
    code | ((code.count_ones() as u8 & 1) << 7)
}

/// Returns the corrected nybble, or `None` on a detected double error.
pub fn hamming_decode(code: u8) -> Option<u8> {
    let b = |i: u8| (code >> i) & 1;
    let s1 = b(0) ^ b(2) ^ b(4) ^ b(6);
    let s2 = b(1) ^ b(2) ^ b(5) ^ b(6);
    let s3 = b(3) ^ b(4) ^ b(5) ^ b(6);
    let syndrome = s1 | s2 << 1 | s3 << 2;
    let overall = code.count_ones() & 1;
    let fixed = match (syndrome, overall) {
        (0, _) => code,
        (s, 1) => code ^ (1 << (s - 1)),
        _ => return None,
    };
    let f = |i: u8| (fixed >> i) & 1;
    Some(f(2) << 3 | f(4) << 2 | f(5) << 1 | f(6))
}

pub fn hamming(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u64;
    let mut bits = ctx.rng.next_u64();
    for i in 0..256u32 {
        if i % 16 == 0 {
            bits = ctx.rng.next_u64();
        }
        let nybble = (bits & 0xf) as u8;
        let flip = ((bits >> 4) & 7) as u8;
        bits = bits.rotate_right(7);
        let code = hamming_encode(nybble);
        if hamming_decode(code ^ (1 << flip)) != Some(nybble) {
            return Err(Fault("hamming: single-bit error not corrected"));
        }
        acc = acc.rotate_left(3) ^ code as u64;
    }
    sink(ctx.work, acc);
    Ok(())
}

pub fn verify_hamming() -> VerifyReport {
    let mut corrected = 0u64;
    for d in 0..16u8 {
        let code = hamming_encode(d);
        for k in 0..8 {
            corrected += (hamming_decode(code ^ (1 << k)) == Some(d)) as u64;
        }
    }
    VerifyReport::exact(hamming_encode(0b1011) as u64 & 0x7f, 0b110_0110)
        .and(VerifyReport::exact(corrected, 128))
        .and(VerifyReport::exact(hamming_decode(hamming_encode(9) ^ 0b11).is_none() as u64, 1))
}

fn hanoi_moves(n: u32, from: u8, to: u8, via: u8, pegs: &mut [u32; 3]) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut moves = hanoi_moves(n - 1, from, via, to, pegs);
    pegs[from as usize] -= 1;
    pegs[to as usize] += 1;
    moves += 1;
    moves + hanoi_moves(n - 1, via, to, from, pegs)
}

pub fn hanoi_solve(discs: u32) -> (u64, [u32; 3]) {
    let mut pegs = [discs, 0, 0];
    let moves = hanoi_moves(discs, 0, 2, 1, &mut pegs);
    (moves, pegs)
}

pub fn hanoi(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (moves, pegs) = hanoi_solve(black_box(16));
    if moves != 65_535 || pegs != [0, 0, 16] {
        return Err(Fault("hanoi: wrong move count or final position"));
    }
    sink(ctx.work, moves);
    Ok(())
}

pub fn verify_hanoi() -> VerifyReport {
    VerifyReport::exact(hanoi_solve(10).0, 1023)
}

macro_rules! int_kernel {
    ($step:ident, $verify:ident, $t:ty, $sum_squares:expr) => {
        pub fn $step(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
            let mut a = ctx.rng.next_u64() as $t;
            let mut b = (ctx.rng.next_u64() as $t) | 1;
            let mut squares: $t = 0;
            for i in 1..=1000u32 {
                let i = i as $t;
                squares = squares.wrapping_add(i.wrapping_mul(i));
                a = a.wrapping_add(b);
                b ^= a;
                a >>= 1;
                b = b.wrapping_shl(2) | 1;
                a = a.wrapping_mul(b).wrapping_sub(i);
                let (q, r) = (a / b, a % b);
                if q.wrapping_mul(b).wrapping_add(r) != a {
                    return Err(Fault(concat!(stringify!($step), ": division identity broken")));
                }
                b = b.wrapping_add(q) | 1;
            }
            if squares != sum_of_squares::<$t>(1000) {
                return Err(Fault(concat!(stringify!($step), ": sum of squares wrong")));
            }
            sink(ctx.work, a as u64 ^ (b as u64) << 8);
            Ok(())
        }

        pub fn $verify() -> VerifyReport {
            let mut squares: $t = 0;
            for i in 1..=1000u32 {
                let i = i as $t;
                squares = squares.wrapping_add(i.wrapping_mul(i));
            }
            VerifyReport::exact(squares as u64, $sum_squares)
        }
    };
}

trait Wrapping: Copy {
    fn from_u64(v: u64) -> Self;
}

macro_rules! wrapping {
    ($($t:ty),*) => { $(impl Wrapping for $t { fn from_u64(v: u64) -> Self { v as $t } })* };
}
wrapping!(u8, u16, u32, u64);

/// n(n+1)(2n+1)/6 truncated to the width of `T`.
fn sum_of_squares<T: Wrapping>(n: u64) -> T {
    T::from_u64(n * (n + 1) * (2 * n + 1) / 6)
}

// 333_833_500 truncated to each width.
int_kernel!(int8, verify_int8, u8, 333_833_500 & 0xff);
int_kernel!(int16, verify_int16, u16, 333_833_500 & 0xffff);
int_kernel!(int32, verify_int32, u32, 333_833_500);
int_kernel!(int64, verify_int64, u64, 333_833_500);

pub fn parity(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u32;
    for _ in 0..1024 {
        let x = ctx.rng.next_u64();
        let p = parity_fold(x);
        if p != parity_nibble(x) || p != popcount(x) & 1 {
            return Err(Fault("parity: methods disagree"));
        }
        acc += p;
    }
    sink(ctx.work, acc as u64);
    Ok(())
}

pub fn verify_parity() -> VerifyReport {
    VerifyReport::exact(parity_fold(0) as u64, 0)
        .and(VerifyReport::exact(parity_fold(1) as u64, 1))
        .and(VerifyReport::exact(parity_nibble(0xff) as u64, 0))
        .and(VerifyReport::exact(parity_nibble(0x7) as u64, 1))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub fn prime(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let start = (ctx.rng.next_u32() as u64) | 1;
    let mut count = 0u64;
    for k in 0..64 {
        count += is_prime(start + 2 * k) as u64;
    }
    sink(ctx.work, count);
    Ok(())
}

pub fn verify_prime() -> VerifyReport {
    let below_1000 = (0..1000).filter(|&n| is_prime(n)).count() as u64;
    VerifyReport::exact(below_1000, 168).and(VerifyReport::exact(is_prime(7919) as u64, 1))
}

/// Known N-queens solution counts for N = 1..=11.
const QUEENS: [u64; 11] = [1, 0, 0, 2, 10, 4, 40, 92, 352, 724, 2680];

fn queens_place(all: u32, cols: u32, left: u32, right: u32) -> u64 {
    if cols == all {
        return 1;
    }
    let mut free = all & !(cols | left | right);
    let mut total = 0;
    while free != 0 {
        let bit = free & free.wrapping_neg();
        free ^= bit;
        total += queens_place(all, cols | bit, ((left | bit) << 1) & all, (right | bit) >> 1);
    }
    total
}

pub fn queens_count(n: u32) -> u64 {
    queens_place((1u32 << n) - 1, 0, 0, 0)
}

pub fn queens(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut total = 0;
    for (i, &expected) in QUEENS.iter().enumerate() {
        let got = queens_count(black_box(i as u32 + 1));
        if got != expected {
            return Err(Fault("queens: wrong solution count"));
        }
        total += got;
    }
    sink(ctx.work, total);
    Ok(())
}

pub fn verify_queens() -> VerifyReport {
    VerifyReport::exact(queens_count(8), 92)
}

pub fn rand(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u64;
    for _ in 0..1024 {
        acc = acc.wrapping_add(ctx.rng.next_u64());
    }
    sink(ctx.work, acc);
    Ok(())
}

pub fn verify_rand() -> VerifyReport {
    let mut r = Rng::new(1);
    VerifyReport::exact(r.next_u64(), 0x4082_2041)
        .and(VerifyReport::exact(r.next_u64(), 0x1000_4106_0c01_1441))
        .and(VerifyReport::exact(r.next_u64(), 0x9b1e_842f_6e86_2629))
}

pub const SIEVE_LIMIT: usize = 10_000;
pub const SIEVE_WORDS: usize = SIEVE_LIMIT / 64 + 2;

/// Count primes below `limit` using `bits` as the composite bitmap.
pub fn sieve_count(limit: usize, bits: &mut [u64]) -> u64 {
    let words = limit.div_ceil(64);
    bits[..words].fill(0);
    let mut count = 0;
    for n in 2..limit {
        if bits[n / 64] & (1 << (n % 64)) != 0 {
            continue;
        }
        count += 1;
        let mut m = n * n;
        while m < limit {
            bits[m / 64] |= 1 << (m % 64);
            m += n;
        }
    }
    count
}

pub fn sieve(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (acc, bits) = ctx.work.split_first_mut().expect("sieve scratch");
    let count = sieve_count(black_box(SIEVE_LIMIT), bits);
    if count != 1229 {
        return Err(Fault("sieve: pi(10000) != 1229"));
    }
    *acc = acc.wrapping_add(count);
    Ok(())
}

pub fn verify_sieve() -> VerifyReport {
    let mut bits = [0u64; 2];
    VerifyReport::exact(sieve_count(100, &mut bits), 25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ackermann_oracle(m: u64, n: u64) -> u64 {
        match (m, n) {
            (0, n) => n + 1,
            (m, 0) => ackermann_oracle(m - 1, 1),
            (m, n) => ackermann_oracle(m - 1, ackermann_oracle(m, n - 1)),
        }
    }

    #[test]
    fn ackermann_matches_oracle() {
        assert_eq!(ackermann_oracle(3, 3), 61);
        assert_eq!(ackermann_oracle(3, 7), 1021);
        for m in 0..=3 {
            for n in 0..=4 {
                assert_eq!(ackermann_fn(m, n) as u64, ackermann_oracle(m as u64, n as u64));
            }
        }
    }

    /// Exhaustive permutation search: place one queen per row and check
    /// every pair for a shared diagonal.
    fn queens_oracle(n: usize) -> u64 {
        fn go(row: usize, n: usize, cols: &mut std::vec::Vec<usize>) -> u64 {
            if row == n {
                return 1;
            }
            let mut total = 0;
            for c in 0..n {
                let ok = cols.iter().enumerate().all(|(r, &pc)| {
                    pc != c && (row - r) != pc.abs_diff(c)
                });
                if ok {
                    cols.push(c);
                    total += go(row + 1, n, cols);
                    cols.pop();
                }
            }
            total
        }
        go(0, n, &mut std::vec::Vec::new())
    }

    #[test]
    fn queens_matches_oracle() {
        assert_eq!(queens_oracle(8), 92);
        for n in 1..=9 {
            assert_eq!(queens_count(n as u32), queens_oracle(n), "n={n}");
        }
    }

    fn trial_division_count(limit: u64) -> u64 {
        (2..limit)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .count() as u64
    }

    #[test]
    fn sieve_matches_trial_division() {
        assert_eq!(trial_division_count(100), 25);
        assert_eq!(trial_division_count(10_000), 1229);
        let mut bits = [0u64; SIEVE_WORDS];
        for limit in [2usize, 3, 10, 64, 65, 100, 1000, 10_000] {
            assert_eq!(sieve_count(limit, &mut bits), trial_division_count(limit as u64));
        }
    }

    #[test]
    fn fibonacci_by_addition() {
        let mut seq = std::vec![0u64, 1];
        while seq.len() <= 30 {
            let n = seq.len();
            seq.push(seq[n - 1] + seq[n - 2]);
        }
        assert_eq!(seq[30], 832_040);
        assert_eq!(fib_nth(30), seq[30]);
        assert_eq!(fib_nth(93).checked_add(fib_nth(92)), None);
    }

    #[test]
    fn xorshift_reference_sequence() {
        let mut x: u64 = 1;
        let mut out = std::vec::Vec::new();
        for _ in 0..3 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            out.push(x);
        }
        assert_eq!(out, [0x4082_2041, 0x1000_4106_0c01_1441, 0x9b1e_842f_6e86_2629]);
    }

    #[test]
    fn hamming_codeword_layout() {
        // d1..d4 = 1,0,1,1 -> p1 = 0, p2 = 1, p3 = 0.
        let bits = [0, 1, 1, 0, 0, 1, 1];
        let expect: u8 = bits.iter().enumerate().map(|(i, b)| b << i).sum();
        assert_eq!(expect, 0b110_0110);
        for d in 0..16u8 {
            assert_eq!(hamming_decode(hamming_encode(d)), Some(d));
            assert_eq!(hamming_encode(d).count_ones() % 2, 0);
        }
    }

    #[test]
    fn sum_of_squares_closed_form() {
        let direct: u64 = (1..=1000u64).map(|i| i * i).sum();
        assert_eq!(direct, 333_833_500);
        assert_eq!(verify_int8().expected, direct & 0xff);
    }

    #[test]
    fn all_verifiers_pass() {
        for v in [
            verify_ackermann, verify_bitops, verify_fibonacci, verify_gcd, verify_gray,
            verify_hamming, verify_hanoi, verify_int8, verify_int16, verify_int32, verify_int64,
            verify_parity, verify_prime, verify_queens, verify_rand, verify_sieve,
        ] {
            let r = v();
            assert!(r.passed(), "{r:?}");
        }
    }

    proptest! {
        #[test]
        fn bit_helpers_match_intrinsics(x in any::<u64>()) {
            prop_assert_eq!(reverse_bits(x), x.reverse_bits());
            prop_assert_eq!(popcount(x), x.count_ones());
            prop_assert_eq!(parity_fold(x), x.count_ones() & 1);
            prop_assert_eq!(parity_nibble(x), x.count_ones() & 1);
        }

        #[test]
        fn round_up_matches_std(x in 1u32..=(1 << 31)) {
            prop_assert_eq!(round_up_pow2(x), x.next_power_of_two());
        }

        #[test]
        fn gcd_variants_agree(a in any::<u64>(), b in any::<u64>()) {
            let g = gcd_euclid(a, b);
            prop_assert_eq!(g, gcd_stein(a, b));
            if g != 0 {
                prop_assert_eq!(a % g, 0);
                prop_assert_eq!(b % g, 0);
            }
        }

        #[test]
        fn gray_round_trip(x in any::<u32>()) {
            prop_assert_eq!(gray_decode(gray_encode(x)), x);
            // Neighbours differ in exactly one bit, including across the wrap.
            prop_assert_eq!((gray_encode(x) ^ gray_encode(x.wrapping_add(1))).count_ones(), 1);
        }
    }
}
