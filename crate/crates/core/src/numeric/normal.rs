//! Standard normal density, distribution function and quantile.
//!
//! `cdf` and `sf` go through `libm::erfc`, which keeps full relative
//! precision in both tails. The quantile is Wichura's AS 241 (PPND16)
//! rational approximation, accurate to about 1e-16 relative over (0, 1).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), without cancellation for large x.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Φ(hi) − Φ(lo) for lo ≤ hi, evaluated on whichever tail keeps precision.
pub fn interval_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        sf(lo) - sf(hi)
    } else if hi <= 0.0 {
        cdf(hi) - cdf(lo)
    } else {
        1.0 - cdf(lo) - sf(hi)
    }
}

// below this the ratio sf/pdf is computed directly; both factors stay
// normal doubles up to x ≈ 37
const MILLS_CF_FROM: f64 = 30.0;

/// Mills ratio (1 − Φ(x))/φ(x). Continued fraction in the far upper tail.
pub fn mills(x: f64) -> f64 {
    if x < MILLS_CF_FROM {
        return sf(x) / pdf(x);
    }
    let mut t = x;
    for k in (1..=40).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

/// ln(1 − Φ(x)), finite far beyond the underflow point of `sf`.
pub fn ln_sf(x: f64) -> f64 {
    if x < MILLS_CF_FROM {
        sf(x).ln()
    } else {
        ln_pdf(x) + mills(x).ln()
    }
}

/// ln(Φ(hi) − Φ(lo)) for lo ≤ hi.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds give an empty interval
pub fn ln_interval_mass(lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        let (la, lb) = (ln_sf(lo), ln_sf(hi));
        la + (-(lb - la).exp_m1()).ln()
    } else if hi <= 0.0 {
        ln_interval_mass(-hi, -lo)
    } else {
        interval_mass(lo, hi).ln()
    }
}

/// (E[Z], E[Z²] − 1) of a standard normal Z truncated to [lo, hi], i.e.
/// r = (φ(lo) − φ(hi))/M and s = (lo·φ(lo) − hi·φ(hi))/M. The mean is r
/// and the variance is 1 + s − r².
pub fn truncated_ratios(lo: f64, hi: f64) -> (f64, f64) {
    if lo >= 0.0 {
        // everything relative to the tail mass beyond lo
        let d = ln_sf(hi) - ln_sf(lo);
        let q = d.exp();
        let keep = -d.exp_m1();
        let ha = 1.0 / mills(lo);
        let hb = if q == 0.0 { 0.0 } else { q / mills(hi) };
        let xb = if q == 0.0 { 0.0 } else { hi * hb };
        ((ha - hb) / keep, (lo * ha - xb) / keep)
    } else if hi <= 0.0 {
        let (r, s) = truncated_ratios(-hi, -lo);
        (-r, s)
    } else {
        let m = interval_mass(lo, hi);
        let (pa, pb) = (pdf(lo), pdf(hi));
        let xa = if pa == 0.0 { 0.0 } else { lo * pa };
        let xb = if pb == 0.0 { 0.0 } else { hi * pb };
        ((pa - pb) / m, (xa - xb) / m)
    }
}

/// Φ⁻¹(p) for p in [0, 1]; returns ±∞ at the endpoints and NaN outside.
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
pub fn quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_13) * r + 67265.770_927_008_7) * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_3)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((r * 5226.495_278_852_546 + 28729.085_735_721_943) * r + 39307.895_800_092_71) * r
            + 21213.794_301_586_597)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_87)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den =
            ((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r + 1.846_318_317_510_054_8e-5) * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_887_9)
                * r
                + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}
