//! Modified Bessel function of the second kind, `K_ν(x)`, for real ν ≥ 0.
//!
//! The order is split as ν = μ + N with |μ| ≤ 1/2. `K_μ` and `K_{μ+1}` come
//! from Temme's series for x ≤ 2 and from Steed's continued fraction
//! otherwise; upward recurrence (stable for K) then reaches ν.

use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const MAX_TERMS: usize = 100_000;

/// Taylor coefficients of `1/Γ(z) = Σ cₖ zᵏ`, k = 1..26.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// `1/Γ(1 + x)` for |x| ≤ 1/2.
fn recip_gamma_1p(x: f64) -> f64 {
    RECIP_GAMMA[1..]
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * x + c)
        * x
        + RECIP_GAMMA[0]
}

/// Temme's γ₁(μ) = (1/Γ(1−μ) − 1/Γ(1+μ)) / 2μ and γ₂(μ) = (1/Γ(1−μ) +
/// 1/Γ(1+μ)) / 2, free of cancellation at small μ.
fn temme_gammas(mu: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    // odd part of 1/Γ(1+x) divided by x, and even part
    let mut odd = 0.0;
    let mut even = 0.0;
    for (j, &c) in RECIP_GAMMA.iter().enumerate().skip(1).rev() {
        // RECIP_GAMMA[j] multiplies x^j in 1/Γ(1+x)
        if j % 2 == 1 {
            odd = odd * mu2 + c;
        } else {
            even = even * mu2 + c;
        }
    }
    even = even * mu2 + RECIP_GAMMA[0];
    (-odd, even)
}

/// `(K_μ(x), K_{μ+1}(x))` scaled by `eˣ`, for |μ| ≤ 1/2 and x ≤ 2.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -half.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (g1, g2) = temme_gammas(mu);
    let mut f = fact * (g1 * e.cosh() + g2 * fact2 * d);
    let mut sum = f;
    let ee = e.exp();
    let mut p = 0.5 * ee * (1.0 / recip_gamma_1p(mu));
    let mut q = 0.5 / ee * (1.0 / recip_gamma_1p(-mu));
    let mut c = 1.0;
    let dd = half * half;
    let mut sum1 = p;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        f = (fi * f + p + q) / (fi * fi - mu * mu);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * f;
        sum += del;
        sum1 += c * (p - fi * f);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    let scale = x.exp();
    (sum * scale, sum1 * (2.0 / x) * scale)
}

/// `(K_μ(x), K_{μ+1}(x))` scaled by `eˣ`, for |μ| ≤ 1/2 and x > 2.
fn steed_cf2(mu: f64, x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let k = (PI / (2.0 * x)).sqrt() / s;
    (k, k * (mu + x + 0.5 - a1 * h) / x)
}

/// `eˣ K_ν(x)`. Requires ν ≥ 0 and x > 0.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x > 0.0, "bessel_k needs nu >= 0 and x > 0");
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut k0, mut k1) = if x <= 2.0 {
        temme_series(mu, x)
    } else {
        steed_cf2(mu, x)
    };
    for i in 1..=(n as usize) {
        let next = 2.0 * (mu + i as f64) / x * k1 + k0;
        k0 = k1;
        k1 = next;
    }
    k0
}

/// `K_ν(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}
