// SPDX-License-Identifier: Apache-2.0

//! Floating-point kernels. Each step recomputes a quantity with a known
//! closed form or identity and faults if the two drift apart.

use core::f64::consts::{E, LN_2, PI, SQRT_2};
use core::hint::black_box;

use libm::{atan, cos, cosh, exp, fabs, lgamma, log, pow, sin, sinh, sqrt, tan, tanh};

use super::sink;
use crate::check::{VerifyReport, F32_TOL, F64_TOL};
use crate::driver::{Ctx, Fault};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const OMEGA: f64 = 0.567_143_290_409_783_8;
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
pub const RECIPROCAL_FIBONACCI: f64 = 3.359_885_666_243_177_6;

#[inline]
fn rel_err(a: f64, b: f64) -> f64 {
    fabs(a - b) / fabs(b).max(f64::MIN_POSITIVE)
}

/// Sum of 1/((x+r)(x+r+1)) for x = 1..=n; telescopes to 1/(1+r) - 1/(n+1+r).
pub fn telescoping_f64(n: u32, r: f64) -> f64 {
    let mut sum = 0.0;
    for x in 1..=n {
        let t = x as f64 + r;
        sum += 1.0 / (t * (t + 1.0));
    }
    sum
}

pub fn telescoping_f32(n: u32, r: f32) -> f32 {
    let mut sum = 0.0f32;
    for x in 1..=n {
        let t = x as f32 + r;
        sum += 1.0 / (t * (t + 1.0));
    }
    sum
}

pub fn double(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let r = ctx.rng.next_f64();
    let sum = telescoping_f64(256, r);
    let closed = 1.0 / (1.0 + r) - 1.0 / (257.0 + r);
    if rel_err(sum, closed) > 1e-12 {
        return Err(Fault("double: telescoping sum drifted"));
    }
    sink(ctx.work, sum.to_bits());
    Ok(())
}

pub fn verify_double() -> VerifyReport {
    VerifyReport::close_f64(telescoping_f64(1000, 0.0), 1000.0 / 1001.0, F64_TOL)
}

pub fn float(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let r = ctx.rng.next_f64() as f32;
    let sum = telescoping_f32(64, r);
    let closed = 1.0 / (1.0 + r) - 1.0 / (65.0 + r);
    if libm::fabsf(sum - closed) > 1e-4 * closed {
        return Err(Fault("float: telescoping sum drifted"));
    }
    sink(ctx.work, sum.to_bits() as u64);
    Ok(())
}

pub fn verify_float() -> VerifyReport {
    VerifyReport::close_f32(telescoping_f32(100, 0.0), 100.0 / 101.0, F32_TOL)
}

/// Sum of 1/k! for k = 0..terms.
pub fn e_series(terms: u32) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..terms {
        term /= k as f64;
        sum += term;
    }
    sum
}

pub fn euler(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let series = e_series(black_box(21));
    let n = (1u64 << 20) as f64 * (1.0 + ctx.rng.next_f64());
    let limit = pow(1.0 + 1.0 / n, n);
    // (1 + 1/n)^n = e (1 - 1/(2n) + O(1/n^2)).
    if fabs(limit - series) > E / n {
        return Err(Fault("euler: limit and series disagree"));
    }
    sink(ctx.work, series.to_bits() ^ limit.to_bits());
    Ok(())
}

pub fn verify_euler() -> VerifyReport {
    VerifyReport::close_f64(e_series(21), E, F64_TOL)
}

pub fn explog(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for _ in 0..64 {
        let x = ctx.rng.range_f64(0.5, 100.0);
        let y = exp(log(x));
        if rel_err(y, x) > 1e-12 {
            return Err(Fault("explog: exp(ln(x)) != x"));
        }
        acc += y;
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_explog() -> VerifyReport {
    VerifyReport::close_f64(exp(log(10.0)), 10.0, F64_TOL)
        .and(VerifyReport::close_f64(log(E), 1.0, F64_TOL))
        .and(VerifyReport::close_f64(exp(1.0), E, F64_TOL))
}

pub fn factorial(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut fact = 1u64;
    let mut ln_fact = 0.0;
    for n in 1..=black_box(20u64) {
        fact *= n;
        ln_fact += log(n as f64);
        let lg = lgamma(n as f64 + 1.0);
        if fabs(ln_fact - lg) > 1e-9 * ln_fact.max(1.0) {
            return Err(Fault("factorial: ln(n!) disagrees with lgamma"));
        }
    }
    sink(ctx.work, fact ^ ln_fact.to_bits());
    Ok(())
}

pub fn verify_factorial() -> VerifyReport {
    let fact: u64 = (1..=20).product();
    VerifyReport::exact(fact, 2_432_902_008_176_640_000)
        .and(VerifyReport::close_f64(lgamma(21.0), 42.335_616_460_753_485, F64_TOL))
}

/// Harmonic sum minus ln n with the Euler-Maclaurin correction through n^-4.
pub fn euler_gamma(n: u32) -> f64 {
    let mut h = 0.0;
    for k in (1..=n).rev() {
        h += 1.0 / k as f64;
    }
    let n = n as f64;
    let n2 = n * n;
    h - log(n) - 1.0 / (2.0 * n) + 1.0 / (12.0 * n2) - 1.0 / (120.0 * n2 * n2)
}

pub fn gamma(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let n = 1000 + ctx.rng.next_u32() % 64;
    let g = euler_gamma(n);
    if rel_err(g, EULER_GAMMA) > 1e-10 {
        return Err(Fault("gamma: Euler-Mascheroni estimate drifted"));
    }
    sink(ctx.work, g.to_bits());
    Ok(())
}

pub fn verify_gamma() -> VerifyReport {
    VerifyReport::close_f64(euler_gamma(1000), EULER_GAMMA, F64_TOL)
}

pub fn hyperbolic(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for _ in 0..64 {
        let x = ctx.rng.range_f64(-3.0, 3.0);
        let (s, c, t) = (sinh(x), cosh(x), tanh(x));
        if fabs(c * c - s * s - 1.0) > 1e-10 * c * c || fabs(t - s / c) > 1e-12 {
            return Err(Fault("hyperbolic: identity broken"));
        }
        acc += s + c + t;
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_hyperbolic() -> VerifyReport {
    VerifyReport::close_f64(sinh(1.0), 1.175_201_193_643_801_4, F64_TOL)
        .and(VerifyReport::close_f64(cosh(1.0), 1.543_080_634_815_243_7, F64_TOL))
        .and(VerifyReport::close_f64(tanh(0.5), 0.462_117_157_260_009_74, F64_TOL))
        .and(VerifyReport::close_f64(cosh(0.0), 1.0, F64_TOL))
}

/// Sum of 1/(k 2^k) for k = 1..=terms.
pub fn ln2_series(terms: u32) -> f64 {
    let mut sum = 0.0;
    let mut pow2 = 1.0;
    for k in 1..=terms {
        pow2 *= 0.5;
        sum += pow2 / k as f64;
    }
    sum
}

pub fn ln2(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let fast = ln2_series(black_box(60));
    let mut slow = 0.0;
    let mut sign = 1.0;
    for k in 1..=black_box(1000u32) {
        slow += sign / k as f64;
        sign = -sign;
    }
    // The alternating series is within 1/(n+1) of its limit.
    if fabs(fast - slow) > 1.0 / 1000.0 {
        return Err(Fault("ln2: series disagree"));
    }
    sink(ctx.work, fast.to_bits() ^ slow.to_bits());
    Ok(())
}

pub fn verify_ln2() -> VerifyReport {
    VerifyReport::close_f64(ln2_series(60), LN_2, F64_TOL)
}

pub fn newton_sqrt(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let mut x = if v > 1.0 { v } else { 1.0 };
    for _ in 0..128 {
        let next = 0.5 * (x + v / x);
        if next >= x {
            break;
        }
        x = next;
    }
    x
}

pub fn nsqrt(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for _ in 0..64 {
        let v = ctx.rng.range_f64(1.0, 1e6);
        let r = newton_sqrt(v);
        if rel_err(r * r, v) > 1e-12 {
            return Err(Fault("nsqrt: r * r != v"));
        }
        acc += r;
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_nsqrt() -> VerifyReport {
    VerifyReport::close_f64(newton_sqrt(2.0), SQRT_2, F64_TOL)
        .and(VerifyReport::close_f64(newton_sqrt(16384.0), 128.0, F64_TOL))
        .and(VerifyReport::close_f64(newton_sqrt(0.25), 0.5, F64_TOL))
}

pub fn omega_iterate(mut w: f64, steps: u32) -> f64 {
    for _ in 0..steps {
        w = exp(-w);
    }
    w
}

pub fn omega(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let w = omega_iterate(ctx.rng.next_f64(), 80);
    if fabs(w * exp(w) - 1.0) > 1e-12 {
        return Err(Fault("omega: w e^w != 1"));
    }
    sink(ctx.work, w.to_bits());
    Ok(())
}

pub fn verify_omega() -> VerifyReport {
    VerifyReport::close_f64(omega_iterate(0.0, 80), OMEGA, F64_TOL)
}

pub fn golden_ratio(mut x: f64, steps: u32) -> f64 {
    for _ in 0..steps {
        x = 1.0 + 1.0 / x;
    }
    x
}

pub fn phi(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let x = golden_ratio(1.0 + ctx.rng.next_f64(), 64);
    if fabs(x * x - x - 1.0) > 1e-12 {
        return Err(Fault("phi: x^2 != x + 1"));
    }
    sink(ctx.work, x.to_bits());
    Ok(())
}

pub fn verify_phi() -> VerifyReport {
    VerifyReport::close_f64(golden_ratio(1.0, 64), GOLDEN_RATIO, F64_TOL)
        .and(VerifyReport::close_f64(golden_ratio(1.0, 64), (1.0 + sqrt(5.0)) / 2.0, F64_TOL))
}

/// arctan(1/q) by its Taylor series.
fn atan_inv(q: f64, terms: u32) -> f64 {
    let q2 = q * q;
    let mut power = 1.0 / q;
    let mut sum = 0.0;
    for k in 0..terms {
        let term = power / (2 * k + 1) as f64;
        sum += if k % 2 == 0 { term } else { -term };
        power /= q2;
    }
    sum
}

pub fn machin_pi() -> f64 {
    16.0 * atan_inv(black_box(5.0), 24) - 4.0 * atan_inv(black_box(239.0), 8)
}

pub fn pi(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let p = machin_pi();
    if fabs(p - 4.0 * atan(1.0)) > 1e-14 {
        return Err(Fault("pi: Machin and atan disagree"));
    }
    sink(ctx.work, p.to_bits());
    Ok(())
}

pub fn verify_pi() -> VerifyReport {
    VerifyReport::close_f64(machin_pi(), PI, F64_TOL)
}

pub fn reciprocal_fibonacci(terms: u32) -> f64 {
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut sum = 0.0;
    for _ in 0..terms {
        sum += 1.0 / a;
        let c = a + b;
        a = b;
        b = c;
    }
    sum
}

pub fn psi(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let s = reciprocal_fibonacci(black_box(80));
    sink(ctx.work, s.to_bits());
    Ok(())
}

pub fn verify_psi() -> VerifyReport {
    VerifyReport::close_f64(reciprocal_fibonacci(80), RECIPROCAL_FIBONACCI, F64_TOL)
}

pub fn sqrt_kernel(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for _ in 0..64 {
        let v = ctx.rng.range_f64(0.0, 1e6);
        let s = sqrt(v);
        if fabs(s * s - v) > 1e-12 * v + 1e-300 {
            return Err(Fault("sqrt: s * s != v"));
        }
        acc += s;
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_sqrt() -> VerifyReport {
    let r = sqrt(2.0);
    VerifyReport::close_f64(r * r, 2.0, F64_TOL)
        .and(VerifyReport::close_f64(sqrt(1e6), 1000.0, F64_TOL))
}

pub fn trig(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for _ in 0..64 {
        let x = ctx.rng.range_f64(-PI, PI);
        let (s, c) = (sin(x), cos(x));
        if fabs(s * s + c * c - 1.0) > 1e-12 {
            return Err(Fault("trig: sin^2 + cos^2 != 1"));
        }
        let t = tan(x);
        if fabs(c) > 1e-3 && rel_err(t, s / c) > 1e-10 {
            return Err(Fault("trig: tan != sin / cos"));
        }
        acc += s + c + t;
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_trig() -> VerifyReport {
    VerifyReport::close_f64(sin(PI / 6.0), 0.5, F64_TOL)
        .and(VerifyReport::close_f64(cos(PI / 3.0), 0.5, F64_TOL))
        .and(VerifyReport::close_f64(tan(PI / 4.0), 1.0, F64_TOL))
}

/// zeta(s) for s > 1: N - 1 direct terms plus the Euler-Maclaurin tail
/// through the third Bernoulli correction.
pub fn zeta_em(s: f64, n: u32) -> f64 {
    let mut sum = 0.0;
    for k in (1..n).rev() {
        sum += pow(k as f64, -s);
    }
    let nf = n as f64;
    let ns = pow(nf, -s);
    sum + nf * ns / (s - 1.0) + ns / 2.0 + s * ns / (12.0 * nf)
        - s * (s + 1.0) * (s + 2.0) * ns / (720.0 * nf * nf * nf)
}

pub fn zeta(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0.0;
    for s in 2..=10 {
        acc += zeta_em(black_box(s as f64), 64);
    }
    let z2 = zeta_em(2.0, 64);
    if rel_err(z2, PI * PI / 6.0) > 1e-12 {
        return Err(Fault("zeta: zeta(2) != pi^2 / 6"));
    }
    sink(ctx.work, acc.to_bits());
    Ok(())
}

pub fn verify_zeta() -> VerifyReport {
    VerifyReport::close_f64(zeta_em(2.0, 64), PI * PI / 6.0, F64_TOL)
        .and(VerifyReport::close_f64(zeta_em(4.0, 64), PI * PI * PI * PI / 90.0, F64_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_closed_forms() {
        assert!((telescoping_f64(1000, 0.0) - 1000.0 / 1001.0).abs() < 1e-12);
        assert!((telescoping_f32(100, 0.0) - 100.0 / 101.0).abs() < 1e-5);
    }

    /// Brute-force direct summation with a crude integral tail.
    fn zeta_direct(s: f64) -> f64 {
        let n = 200_000u32;
        let direct: f64 = (1..=n).rev().map(|k| (k as f64).powf(-s)).sum();
        direct + (n as f64).powf(1.0 - s) / (s - 1.0) - 0.5 * (n as f64).powf(-s)
    }

    #[test]
    fn zeta_matches_direct_sum() {
        for s in 2..=10 {
            let s = s as f64;
            let a = zeta_em(s, 64);
            let b = zeta_direct(s);
            assert!((a - b).abs() / b < 1e-9, "s={s}: {a} vs {b}");
        }
    }

    fn taylor(x: f64, odd: bool) -> f64 {
        let mut term = if odd { x } else { 1.0 };
        let mut sum = term;
        let mut k = if odd { 1.0 } else { 0.0 };
        for _ in 0..30 {
            term *= x * x / ((k + 1.0) * (k + 2.0));
            k += 2.0;
            sum += term;
        }
        sum
    }

    #[test]
    fn hyperbolic_constants_from_series() {
        let s1 = taylor(1.0, true);
        let c1 = taylor(1.0, false);
        assert!((s1 - 1.175_201_193_643_801_4).abs() < 1e-15);
        assert!((c1 - 1.543_080_634_815_243_7).abs() < 1e-15);
        let t = taylor(0.5, true) / taylor(0.5, false);
        assert!((t - 0.462_117_157_260_009_74).abs() < 1e-15);
    }

    #[test]
    fn constants_from_independent_routes() {
        // lgamma(21) = ln(20!).
        assert!(((2_432_902_008_176_640_000u64 as f64).ln() - 42.335_616_460_753_485).abs() < 1e-12);
        // Omega solves w e^w = 1.
        assert!((OMEGA * OMEGA.exp() - 1.0).abs() < 1e-15);
        // Golden ratio closed form.
        assert!((GOLDEN_RATIO - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        // Slowly converging harmonic difference approaches gamma from above.
        let n = 1_000_000u32;
        let h: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
        let crude = h - (n as f64).ln();
        assert!(crude > EULER_GAMMA && crude - EULER_GAMMA < 1e-6);
        // The reciprocal Fibonacci series with many more terms.
        let mut fib = [1.0f64, 1.0];
        let mut s = 0.0;
        for _ in 0..1400 {
            s += 1.0 / fib[0];
            fib = [fib[1], fib[0] + fib[1]];
            if !fib[0].is_finite() {
                break;
            }
        }
        assert!((s - RECIPROCAL_FIBONACCI).abs() < 1e-14);
    }

    #[test]
    fn all_verifiers_pass() {
        for v in [
            verify_double, verify_float, verify_euler, verify_explog, verify_factorial,
            verify_gamma, verify_hyperbolic, verify_ln2, verify_nsqrt, verify_omega, verify_phi,
            verify_pi, verify_psi, verify_sqrt, verify_trig, verify_zeta,
        ] {
            let r = v();
            assert!(r.passed(), "{r:?}");
        }
    }
}
