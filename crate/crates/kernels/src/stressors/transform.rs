// SPDX-License-Identifier: Apache-2.0

//! Signal and linear-algebra kernels working on scratch-resident buffers.

use core::f64::consts::PI;

use libm::{cos, fabs, sin, sqrt};

use super::{as_f64, sink};
use crate::check::{VerifyReport, F64_TOL};
use crate::driver::{Ctx, Fault};

pub const FFT_N: usize = 4096;
/// Marker word, real and imaginary parts, then the twiddle table
/// (cos and sin of the first half turn).
pub const FFT_WORDS: usize = 1 + 2 * FFT_N + FFT_N;
const TWIDDLES_READY: u64 = 0x7477_6964_646c_6573;

/// In-place iterative radix-2 FFT. `twiddle` holds `n/2` cosines followed
/// by `n/2` sines of `2 pi k / n`. The inverse is unscaled.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64], twiddle: &[f64], inverse: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n && twiddle.len() >= n);
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let half = n / 2;
    let (cos_t, sin_t) = twiddle[..n].split_at(half);
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let wr = cos_t[k * stride];
                let wi = sign * sin_t[k * stride];
                let (a, b) = (start + k, start + k + len / 2);
                let tr = re[b] * wr - im[b] * wi;
                let ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
        len <<= 1;
    }
}

pub fn fill_twiddles(twiddle: &mut [f64], n: usize) {
    let half = n / 2;
    for k in 0..half {
        let angle = 2.0 * PI * k as f64 / n as f64;
        twiddle[k] = cos(angle);
        twiddle[half + k] = sin(angle);
    }
}

pub fn fft(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (marker, rest) = ctx.work.split_first_mut().expect("fft scratch");
    let buf = as_f64(rest);
    let (re, rest) = buf.split_at_mut(FFT_N);
    let (im, twiddle) = rest.split_at_mut(FFT_N);
    if *marker != TWIDDLES_READY {
        fill_twiddles(twiddle, FFT_N);
        *marker = TWIDDLES_READY;
    }
    for i in 0..FFT_N {
        re[i] = ctx.rng.range_f64(-1.0, 1.0);
        im[i] = 0.0;
    }
    let probe = (ctx.rng.next_u32() as usize) % FFT_N;
    let original = re[probe];
    fft_in_place(re, im, twiddle, false);
    fft_in_place(re, im, twiddle, true);
    let scale = 1.0 / FFT_N as f64;
    let back = re[probe] * scale;
    if fabs(back - original) > 1e-9 || fabs(im[probe] * scale) > 1e-9 {
        return Err(Fault("fft: inverse did not restore input"));
    }
    Ok(())
}

pub fn verify_fft() -> VerifyReport {
    const N: usize = 64;
    let mut re = [0.0f64; N];
    let mut im = [0.0f64; N];
    let mut tw = [0.0f64; N];
    fill_twiddles(&mut tw, N);
    for (n, x) in re.iter_mut().enumerate() {
        *x = cos(2.0 * PI * 3.0 * n as f64 / N as f64) + 0.5;
    }
    fft_in_place(&mut re, &mut im, &tw, false);
    // Expected spectrum: 32 at bins 0, 3 and 61, zero elsewhere.
    let mut leak = 0.0f64;
    for k in 0..N {
        if k != 0 && k != 3 && k != N - 3 {
            leak = leak.max(fabs(re[k])).max(fabs(im[k]));
        }
    }
    VerifyReport::close_f64(re[0], 32.0, F64_TOL)
        .and(VerifyReport::close_f64(re[3], 32.0, F64_TOL))
        .and(VerifyReport::close_f64(re[N - 3], 32.0, F64_TOL))
        .and(VerifyReport::close_f64(leak, 0.0, F64_TOL))
}

const BLOCK: usize = 8;
/// Coefficient block, spatial block, round-trip block.
pub const IDCT_WORDS: usize = 1 + 3 * BLOCK * BLOCK;

fn dct_basis(k: usize, x: usize) -> f64 {
    let c = if k == 0 { sqrt(0.5) } else { 1.0 };
    c * cos((2 * x + 1) as f64 * k as f64 * PI / 16.0)
}

/// Orthonormal separable 8x8 inverse DCT.
pub fn idct_8x8(coef: &[f64], out: &mut [f64]) {
    let mut tmp = [0.0f64; BLOCK * BLOCK];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            let mut s = 0.0;
            for v in 0..BLOCK {
                s += dct_basis(v, y) * coef[v * BLOCK + u];
            }
            tmp[y * BLOCK + u] = s * 0.5;
        }
    }
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            let mut s = 0.0;
            for u in 0..BLOCK {
                s += dct_basis(u, x) * tmp[y * BLOCK + u];
            }
            out[y * BLOCK + x] = s * 0.5;
        }
    }
}

/// Orthonormal separable 8x8 forward DCT.
pub fn dct_8x8(pixels: &[f64], out: &mut [f64]) {
    let mut tmp = [0.0f64; BLOCK * BLOCK];
    for y in 0..BLOCK {
        for u in 0..BLOCK {
            let mut s = 0.0;
            for x in 0..BLOCK {
                s += dct_basis(u, x) * pixels[y * BLOCK + x];
            }
            tmp[y * BLOCK + u] = s * 0.5;
        }
    }
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            let mut s = 0.0;
            for y in 0..BLOCK {
                s += dct_basis(v, y) * tmp[y * BLOCK + u];
            }
            out[v * BLOCK + u] = s * 0.5;
        }
    }
}

pub fn idct(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (acc, rest) = ctx.work.split_first_mut().expect("idct scratch");
    let buf = as_f64(rest);
    let (coef, rest) = buf.split_at_mut(BLOCK * BLOCK);
    let (pixels, back) = rest.split_at_mut(BLOCK * BLOCK);
    for c in coef.iter_mut() {
        *c = ctx.rng.range_f64(-256.0, 256.0);
    }
    idct_8x8(coef, pixels);
    dct_8x8(pixels, back);
    for (a, b) in coef.iter().zip(back.iter()) {
        if fabs(a - b) > 1e-9 {
            return Err(Fault("idct: forward transform did not restore coefficients"));
        }
    }
    *acc ^= pixels[0].to_bits();
    Ok(())
}

pub fn verify_idct() -> VerifyReport {
    let mut coef = [0.0f64; BLOCK * BLOCK];
    coef[0] = 1024.0;
    let mut out = [0.0f64; BLOCK * BLOCK];
    idct_8x8(&coef, &mut out);
    let (lo, hi) = out
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    // DC-only input gives a flat block of DC / 8.
    VerifyReport::close_f64(lo, 128.0, F64_TOL).and(VerifyReport::close_f64(hi, 128.0, F64_TOL))
}

const MAT: usize = 32;
/// Marker word, then A, B and C.
pub const MATRIX_WORDS: usize = 1 + 3 * MAT * MAT;
const MATRIX_READY: u64 = 0x6d61_7472_6978_2121;

/// `c = a * b` for row-major `n x n` matrices.
pub fn matmul(a: &[f64], b: &[f64], c: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            c[i * n + j] = s;
        }
    }
}

pub fn matrixprod(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (marker, rest) = ctx.work.split_first_mut().expect("matrixprod scratch");
    let buf = as_f64(rest);
    let (a, rest) = buf.split_at_mut(MAT * MAT);
    let (b, c) = rest.split_at_mut(MAT * MAT);
    if *marker != MATRIX_READY {
        for x in a.iter_mut().chain(b.iter_mut()) {
            *x = ctx.rng.range_f64(-1.0, 1.0);
        }
        *marker = MATRIX_READY;
    }
    matmul(a, b, c, MAT);
    // Feed the product back so successive ops do not repeat work; rescale
    // to keep entries bounded.
    let mut norm = 0.0f64;
    for x in c.iter() {
        norm = norm.max(fabs(*x));
    }
    if !norm.is_finite() || norm == 0.0 {
        return Err(Fault("matrixprod: product degenerated"));
    }
    for (dst, src) in a.iter_mut().zip(c.iter()) {
        *dst = src / norm;
    }
    Ok(())
}

pub fn verify_matrixprod() -> VerifyReport {
    const N: usize = 8;
    let mut ident = [0.0f64; N * N];
    let mut a = [0.0f64; N * N];
    for i in 0..N {
        ident[i * N + i] = 1.0;
        for j in 0..N {
            a[i * N + j] = (i * N + j + 1) as f64;
        }
    }
    let mut c = [0.0f64; N * N];
    matmul(&ident, &a, &mut c, N);
    let mismatches = a.iter().zip(c.iter()).filter(|(x, y)| x != y).count();
    VerifyReport::exact(mismatches as u64, 0)
}

const SIGNAL: usize = 256;
const WINDOW: usize = 32;
/// Accumulator, signal, window.
pub const CORRELATE_WORDS: usize = 1 + SIGNAL + WINDOW;

/// `out[lag] = sum_i x[i + lag] * w[i]` for every lag where the window fits.
pub fn correlate_valid(x: &[f64], w: &[f64], out: &mut [f64]) {
    for (lag, o) in out.iter_mut().enumerate().take(x.len() + 1 - w.len()) {
        let mut s = 0.0;
        for (i, wi) in w.iter().enumerate() {
            s += x[i + lag] * wi;
        }
        *o = s;
    }
}

pub fn correlate(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let (acc, rest) = ctx.work.split_first_mut().expect("correlate scratch");
    let buf = as_f64(rest);
    let (x, w) = buf.split_at_mut(SIGNAL);
    for v in x.iter_mut().chain(w.iter_mut()) {
        *v = ctx.rng.range_f64(-1.0, 1.0);
    }
    let mut out = [0.0f64; SIGNAL - WINDOW + 1];
    correlate_valid(x, w, &mut out);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(fabs(*v)));
    *acc ^= peak.to_bits();
    Ok(())
}

pub fn verify_correlate() -> VerifyReport {
    let x = [1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0];
    let w = [1.0, 2.0, 3.0, 4.0];
    let mut out = [0.0f64; 4];
    correlate_valid(&x, &w, &mut out);
    VerifyReport::exact(out[0] as u64, 30)
        .and(VerifyReport::exact(out[1] as u64, 20))
        .and(VerifyReport::exact(out[2] as u64, 11))
        .and(VerifyReport::exact(out[3] as u64, 4))
}

/// Full-range BT.601 (JPEG) conversion in 16.16 fixed point.
pub fn rgb_to_ycbcr(r: u8, g: u8, b: u8) -> (u8, u8, u8) {
    let (r, g, b) = (r as i32, g as i32, b as i32);
    let y = (19595 * r + 38470 * g + 7471 * b + 32768) >> 16;
    let cb = ((-11059 * r - 21709 * g + 32768 * b + 32768) >> 16) + 128;
    let cr = ((32768 * r - 27439 * g - 5329 * b + 32768) >> 16) + 128;
    (clamp_u8(y), clamp_u8(cb), clamp_u8(cr))
}

pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> (u8, u8, u8) {
    let (y, cb, cr) = (y as i32, cb as i32 - 128, cr as i32 - 128);
    let r = y + ((91881 * cr + 32768) >> 16);
    let g = y - ((22554 * cb + 46802 * cr + 32768) >> 16);
    let b = y + ((116130 * cb + 32768) >> 16);
    (clamp_u8(r), clamp_u8(g), clamp_u8(b))
}

fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

pub fn rgb(ctx: &mut Ctx<'_>) -> Result<(), Fault> {
    let mut acc = 0u64;
    for _ in 0..256 {
        let p = ctx.rng.next_u32();
        let (r, g, b) = (p as u8, (p >> 8) as u8, (p >> 16) as u8);
        let (y, cb, cr) = rgb_to_ycbcr(r, g, b);
        let (r2, g2, b2) = ycbcr_to_rgb(y, cb, cr);
        // Quantisation plus chroma clamping bounds the round-trip error.
        if r.abs_diff(r2) > 3 || g.abs_diff(g2) > 3 || b.abs_diff(b2) > 3 {
            return Err(Fault("rgb: colour round trip drifted"));
        }
        acc = acc.rotate_left(7) ^ (y as u64 | (cb as u64) << 8 | (cr as u64) << 16);
    }
    sink(ctx.work, acc);
    Ok(())
}

fn pack_rgb(p: (u8, u8, u8)) -> u64 {
    (p.0 as u64) << 16 | (p.1 as u64) << 8 | p.2 as u64
}

pub fn verify_rgb() -> VerifyReport {
    VerifyReport::exact(pack_rgb(rgb_to_ycbcr(255, 255, 255)), 0xff_80_80)
        .and(VerifyReport::exact(pack_rgb(rgb_to_ycbcr(0, 0, 0)), 0x00_80_80))
        .and(VerifyReport::exact(pack_rgb(rgb_to_ycbcr(255, 0, 0)), 0x4c_55_ff))
        .and(VerifyReport::exact(pack_rgb(ycbcr_to_rgb(128, 128, 128)), 0x80_80_80))
}
