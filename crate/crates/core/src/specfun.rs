//! Gamma/Beta/Pochhammer, the Gauss hypergeometric function `F(a,b;c;x)`
//! on `|x| <= 1`, the closed form for the zonal singular integral over the
//! sphere, and the Heinz constant.
//!
//! The hypergeometric series is summed directly for `|x| < 1/2` and for
//! `x in (0,1)`; for `x in (-1, -1/2]` the alternating tail is accelerated
//! with an Euler/van Wijngaarden transform (the Heinz constant needs
//! `x = -1`). At `x = 1` the Gauss closed form
//! `Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b))` is used.

use crate::error::{Error, Result};

/// Series tolerance (relative) for hypergeometric evaluation.
const SERIES_TOL: f64 = 1e-12;
/// Hard cap on summed terms before reporting divergence.
const MAX_TERMS: usize = 100_000;

// Lanczos coefficients (Pugh 2004, as used by statrs); ~16 digits on the
// range we need, [0.5, 30].
const GAMMA_R: f64 = 10.900511;
const GAMMA_DK: &[f64] = &[
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_7;

/// Gamma function; errors on non-positive integer arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, (i, d)| s + d / (i as f64 - x));
        std::f64::consts::PI
            / ((std::f64::consts::PI * x).sin()
                * s
                * TWO_SQRT_E_OVER_PI
                * ((0.5 - x + GAMMA_R) / std::f64::consts::E).powf(0.5 - x))
    } else {
        let s = GAMMA_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(GAMMA_DK[0], |s, (i, d)| s + d / (x + i as f64 - 1.0));
        s * TWO_SQRT_E_OVER_PI * ((x - 0.5 + GAMMA_R) / std::f64::consts::E).powf(x - 0.5)
    }
}

/// Beta function `B(p,q) = Gamma(p)Gamma(q)/Gamma(p+q)` for `p, q > 0`.
pub fn beta_fn(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("beta requires p,q > 0, got ({p}, {q})")));
    }
    Ok(gamma_unchecked(p) * gamma_unchecked(q) / gamma_unchecked(p + q))
}

/// Pochhammer symbol `(a)_k = a (a+1) ... (a+k-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    let mut p = 1.0;
    for i in 0..k {
        p *= a + i as f64;
    }
    p
}

/// Parameter set for `F(a,b;c;x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64, x: f64) -> Self {
        Self { a, b, c, x }
    }

    fn validate(&self) -> Result<()> {
        for v in [self.a, self.b, self.c, self.x] {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if self.c <= 0.0 && self.c == self.c.floor() {
            return Err(Error::Domain(format!(
                "hypergeometric c = {} is a non-positive integer",
                self.c
            )));
        }
        if self.x.abs() > 1.0 {
            return Err(Error::Domain(format!(
                "hypergeometric argument |x| = {} > 1",
                self.x.abs()
            )));
        }
        Ok(())
    }

    /// True when the series terminates because `a` or `b` is a
    /// non-positive integer.
    fn terminating(&self) -> bool {
        (self.a <= 0.0 && self.a == self.a.floor()) || (self.b <= 0.0 && self.b == self.b.floor())
    }
}

/// Gauss hypergeometric function on `|x| <= 1`.
pub fn hyp2f1(p: &HypParams) -> Result<f64> {
    p.validate()?;
    let &HypParams { a, b, c, x } = p;

    if x == 0.0 {
        return Ok(1.0);
    }
    if p.terminating() {
        return sum_series(a, b, c, x);
    }
    if x == 1.0 {
        let cab = c - a - b;
        if cab <= 0.0 {
            return Err(Error::Domain(format!(
                "F(a,b;c;1) requires c - a - b > 0, got {cab}"
            )));
        }
        return Ok(gauss_value_at_one(a, b, c));
    }
    if x <= -0.5 {
        euler_accelerated_series(a, b, c, x)
    } else {
        sum_series(a, b, c, x)
    }
}

/// Convenience wrapper taking plain parameters.
pub fn hyp2f1_vals(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    hyp2f1(&HypParams::new(a, b, c, x))
}

/// Closed form `F(a,b;c;1) = Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b))`.
fn gauss_value_at_one(a: f64, b: f64, c: f64) -> f64 {
    gamma_unchecked(c) * gamma_unchecked(c - a - b)
        / (gamma_unchecked(c - a) * gamma_unchecked(c - b))
}

fn sum_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut small_streak = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        if term == 0.0 {
            return Ok(sum); // terminating series
        }
        sum += term;
        if term.abs() <= SERIES_TOL * sum.abs().max(1e-300) {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::SeriesDivergence {
        tol: SERIES_TOL,
        max_terms: MAX_TERMS,
    })
}

/// Euler/van Wijngaarden summation of the (eventually) alternating series
/// at `x in (-1, -1/2]`.
///
/// A short head of the series is summed directly until the sign pattern of
/// the terms has settled into strict alternation; the transform is then
/// applied to the tail.
fn euler_accelerated_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    // index from which all Pochhammer factors are positive
    let settle = [a, b, c]
        .iter()
        .map(|&v| if v < 0.0 { (-v).ceil() as usize + 1 } else { 0 })
        .max()
        .unwrap()
        .max(2);

    let mut term = 1.0_f64;
    let mut head = 1.0_f64;
    for k in 0..settle {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        if term == 0.0 {
            return Ok(head);
        }
        head += term;
    }

    // Euler transform of the tail sum_{j>=1} t_{settle+j}
    let mut wksp: Vec<f64> = Vec::with_capacity(64);
    let mut nterm = 0usize;
    let mut tail = 0.0_f64;
    let mut small_streak = 0;
    for k in settle..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        let increment;
        if nterm == 0 {
            wksp.push(term);
            nterm = 1;
            increment = 0.5 * term;
        } else {
            let mut tmp = wksp[0];
            wksp[0] = term;
            for j in 0..nterm - 1 {
                let dum = wksp[j + 1];
                wksp[j + 1] = 0.5 * (wksp[j] + tmp);
                tmp = dum;
            }
            let next = 0.5 * (wksp[nterm - 1] + tmp);
            if nterm < wksp.len() {
                wksp[nterm] = next;
            } else {
                wksp.push(next);
            }
            if next.abs() <= wksp[nterm - 1].abs() {
                increment = 0.5 * next;
                nterm += 1;
            } else {
                increment = next;
            }
        }
        tail += increment;
        let total = head + tail;
        if increment.abs() <= 0.1 * SERIES_TOL * total.abs().max(1e-300) {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(total);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::SeriesDivergence {
        tol: SERIES_TOL,
        max_terms: MAX_TERMS,
    })
}

/// Closed form of the zonal singular integral
///
/// ```text
/// int_0^pi sin^{l1-1} t (1 + r^2 - 2 r cos t)^{-l2} dt
///     = B(l1/2, 1/2) F(l2, l2 + (1-l1)/2; (1+l1)/2; r^2)
/// ```
///
/// for `l1 > 1`, `l2 > 0`, `r in [0,1)`; `r = 1` is allowed when the Gauss
/// condition `l1 - 2 l2 > 0` holds.
pub fn sphere_singular_integral(lambda1: f64, lambda2: f64, r: f64) -> Result<f64> {
    if !(lambda1 > 1.0) {
        return Err(Error::Domain(format!("lambda1 must be > 1, got {lambda1}")));
    }
    if !(lambda2 > 0.0) {
        return Err(Error::Domain(format!("lambda2 must be > 0, got {lambda2}")));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("r must lie in [0,1], got {r}")));
    }
    if r == 1.0 && lambda1 - 2.0 * lambda2 <= 0.0 {
        return Err(Error::Domain(format!(
            "r = 1 requires lambda1 - 2 lambda2 > 0, got {}",
            lambda1 - 2.0 * lambda2
        )));
    }
    let b = beta_fn(lambda1 / 2.0, 0.5)?;
    let f = hyp2f1_vals(
        lambda2,
        lambda2 + (1.0 - lambda1) / 2.0,
        (1.0 + lambda1) / 2.0,
        r * r,
    )?;
    Ok(b * f)
}

/// The Heinz constant
///
/// ```text
/// L(n) = n! [1 + n - (n-2) F(1/2, 1; (n+3)/2; -1)]
///        / (2^{3n/2} Gamma((n+1)/2) Gamma((n+3)/2))
/// ```
///
/// strictly positive for every `n >= 3` we use.
pub fn heinz_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { got: n, min: 3 });
    }
    let nf = n as f64;
    let f = hyp2f1_vals(0.5, 1.0, (nf + 3.0) / 2.0, -1.0)?;
    let mut fact = 1.0;
    for i in 2..=n {
        fact *= i as f64;
    }
    let numerator = fact * (1.0 + nf - (nf - 2.0) * f);
    let denominator = 2.0_f64.powf(1.5 * nf)
        * gamma_unchecked((nf + 1.0) / 2.0)
        * gamma_unchecked((nf + 3.0) / 2.0);
    Ok(numerator / denominator)
}
