//! Green function and Poisson kernel of the unit ball, their gradients,
//! closed-form integral identities, and the hemispherical harmonic-measure
//! function `U` with its radial derivative `Phi`.
//!
//! Sign convention: with `G` as implemented here, `w(x) = int G(x,y) u(y) dV`
//! solves `Delta w = -u` with zero boundary values. The radial oracle pins
//! this convention; see `radial::green_apply`.

use crate::error::{Error, Result};
use crate::geometry::{bracket_slice, dist_slice, norm_sq_slice, Point};
use crate::quadrature::tanh_sinh;
use crate::specfun::{beta_fn, gamma_fn, heinz_constant, hyp2f1_vals};
use std::f64::consts::PI;

/// Tolerance for "on the unit sphere" checks.
const SPHERE_TOL: f64 = 1e-12;

/// Dimension-dependent kernel constants: `omega_{n-1} = 2 pi^{n/2} / Gamma(n/2)`
/// and `c_n = 1 / ((n-2) omega_{n-1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelContext {
    n: usize,
    omega: f64,
    c_n: f64,
    /// `int_0^pi sin^{n-2} t dt`, the polar normalizer of zonal means.
    sin_norm: f64,
}

impl KernelContext {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall { got: n, min: 3 });
        }
        let nf = n as f64;
        let omega = 2.0 * PI.powf(nf / 2.0) / gamma_fn(nf / 2.0)?;
        let c_n = 1.0 / ((nf - 2.0) * omega);
        let sin_norm = beta_fn((nf - 1.0) / 2.0, 0.5)?;
        Ok(Self {
            n,
            omega,
            c_n,
            sin_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Hausdorff measure of `S^{n-1}`.
    pub fn surface_area(&self) -> f64 {
        self.omega
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn ball_volume(&self) -> f64 {
        self.omega / self.n as f64
    }

    fn check_interior(&self, p: &Point) -> Result<()> {
        if p.dim() != self.n {
            return Err(Error::DimensionMismatch(p.dim(), self.n));
        }
        let r = p.norm();
        if r >= 1.0 {
            return Err(Error::OutsideBall(r));
        }
        Ok(())
    }
}

/// Green function `G(x,y) = c_n (|x-y|^{2-n} - [x,y]^{2-n})`; symmetric and
/// strictly positive for distinct interior points.
pub fn green(ctx: &KernelContext, x: &Point, y: &Point) -> Result<f64> {
    ctx.check_interior(x)?;
    ctx.check_interior(y)?;
    let d = x.dist(y);
    if d == 0.0 {
        return Err(Error::KernelPole);
    }
    let br = bracket_slice(x.coords(), y.coords());
    let e = 2 - ctx.n as i32;
    Ok(ctx.c_n * (d.powi(e) - br.powi(e)))
}

/// Poisson kernel `P(x, zeta) = (1 - |x|^2) / |x - zeta|^n` for `|x| < 1`,
/// `|zeta| = 1`.
pub fn poisson(ctx: &KernelContext, x: &Point, zeta: &Point) -> Result<f64> {
    ctx.check_interior(x)?;
    if zeta.dim() != ctx.n {
        return Err(Error::DimensionMismatch(zeta.dim(), ctx.n));
    }
    let zn = zeta.norm();
    if (zn - 1.0).abs() > SPHERE_TOL {
        return Err(Error::NotOnSphere(zn));
    }
    Ok(poisson_raw(ctx.n, x.coords(), zeta.coords()))
}

/// Raw Poisson kernel on coordinate slices (no validation).
pub fn poisson_raw(n: usize, x: &[f64], zeta: &[f64]) -> f64 {
    (1.0 - norm_sq_slice(x)) / dist_slice(x, zeta).powi(n as i32)
}

/// `grad_x G(x,y) = -(1/omega) [ (x-y)/|x-y|^n - (|y|^2 x - y)/[x,y]^n ]`.
pub fn grad_green(ctx: &KernelContext, x: &Point, y: &Point) -> Result<Point> {
    ctx.check_interior(x)?;
    ctx.check_interior(y)?;
    let d = x.dist(y);
    if d == 0.0 {
        return Err(Error::KernelPole);
    }
    let br = bracket_slice(x.coords(), y.coords());
    let dn = d.powi(ctx.n as i32);
    let brn = br.powi(ctx.n as i32);
    let y_sq = y.norm_sq();
    let coords = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(&xi, &yi)| -((xi - yi) / dn - (y_sq * xi - yi) / brn) / ctx.omega)
        .collect();
    Point::new(coords)
}

/// Closed-form Green mass `int_B |G(x,y)| dV(y) = (1 - |x|^2) / (2n)`.
pub fn green_mass(ctx: &KernelContext, x: &Point) -> Result<f64> {
    ctx.check_interior(x)?;
    Ok((1.0 - x.norm_sq()) / (2.0 * ctx.n as f64))
}

/// Closed form of the weighted mass
/// `I_1(x) = int_B (1-|y|^2) |G(x,y)| dV(y)
///         = (n + 4 - n|x|^2)(1 - |x|^2) / (4n(n+2))`.
pub fn weighted_green_mass_i1(ctx: &KernelContext, x: &Point) -> Result<f64> {
    ctx.check_interior(x)?;
    let nf = ctx.n as f64;
    let t = x.norm_sq();
    Ok((nf + 4.0 - nf * t) * (1.0 - t) / (4.0 * nf * (nf + 2.0)))
}

/// Normalized sphere moment `int_S |r x - zeta|^{-(n+4)} dsigma(zeta)`
/// (`order4 = true`), or exponent `n+3` (`order4 = false`), via the
/// hypergeometric closed form. Requires `r |x| < 1`.
pub fn sphere_moment(ctx: &KernelContext, x: &Point, r: f64, order4: bool) -> Result<f64> {
    if x.dim() != ctx.n {
        return Err(Error::DimensionMismatch(x.dim(), ctx.n));
    }
    let rho = r * x.norm();
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("sphere moment needs r|x| < 1, got {rho}")));
    }
    let nf = ctx.n as f64;
    if order4 {
        hyp2f1_vals((nf + 4.0) / 2.0, 3.0, nf / 2.0, rho * rho)
    } else {
        hyp2f1_vals((nf + 3.0) / 2.0, 2.5, nf / 2.0, rho * rho)
    }
}

/// Series form of the `n+4` sphere moment:
/// `sum_k (k+1)(k+2)(n+2k)(n+2k+2) / (2n(n+2)) s^{2k}` with `s = r|x|`.
pub fn sphere_moment_series(n: usize, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s.abs()) {
        return Err(Error::Domain(format!("series needs |s| < 1, got {s}")));
    }
    let nf = n as f64;
    let s2 = s * s;
    let mut sum = 0.0;
    let mut pow = 1.0;
    for k in 0..100_000 {
        let kf = k as f64;
        let coeff =
            (kf + 1.0) * (kf + 2.0) * (nf + 2.0 * kf) * (nf + 2.0 * kf + 2.0) / (2.0 * nf * (nf + 2.0));
        let term = coeff * pow;
        sum += term;
        if term.abs() <= 1e-14 * sum.abs() {
            return Ok(sum);
        }
        pow *= s2;
    }
    Err(Error::SeriesDivergence {
        tol: 1e-14,
        max_terms: 100_000,
    })
}

/// Integrand of the 1-D polar reduction of `U(rN)`:
/// `(1-r^2) (1 + r^2 - 2 r cos t)^{-n/2}` against `sin^{n-2} t` with the
/// hemisphere sign.
fn u_polar_half(ctx: &KernelContext, r: f64, lo: f64, hi: f64) -> Result<f64> {
    let nf = ctx.n as f64;
    let est = tanh_sinh(
        |t| {
            let w = 1.0 + r * r - 2.0 * r * t.cos();
            t.sin().powf(nf - 2.0) * (1.0 - r * r) / w.powf(nf / 2.0)
        },
        lo,
        hi,
        1e-12,
    )?;
    Ok(est.value)
}

/// Harmonic measure difference `U(rN)`: the Poisson extension of `+1` on the
/// upper and `-1` on the lower closed hemisphere, evaluated along the polar
/// axis. `r in [0, 1)`.
pub fn harmonic_measure_u(ctx: &KernelContext, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("U(rN) needs r in [0,1), got {r}")));
    }
    // polar angle measured from N; the equator has measure zero
    let upper = u_polar_half(ctx, r, 0.0, 0.5 * PI)?;
    let lower = u_polar_half(ctx, r, 0.5 * PI, PI)?;
    Ok((upper - lower) / ctx.sin_norm)
}

/// Radial derivative `Phi(r) = d U(rN) / dr`, by differentiating under the
/// 1-D integral for `r < 1`; at `r = 1` the integrand is singular and the
/// closed-form limit (the Heinz constant) is returned instead.
pub fn phi_derivative(ctx: &KernelContext, r: f64) -> Result<f64> {
    if r == 1.0 {
        return heinz_constant(ctx.n);
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("Phi(r) needs r in [0,1], got {r}")));
    }
    let nf = ctx.n as f64;
    let integrand = |t: f64| {
        let cos_t = t.cos();
        let w = 1.0 + r * r - 2.0 * r * cos_t;
        let d = (-2.0 * r * w - nf * (1.0 - r * r) * (r - cos_t)) / w.powf((nf + 2.0) / 2.0);
        t.sin().powf(nf - 2.0) * d
    };
    let upper = tanh_sinh(integrand, 0.0, 0.5 * PI, 1e-12)?.value;
    let lower = tanh_sinh(integrand, 0.5 * PI, PI, 1e-12)?.value;
    Ok((upper - lower) / ctx.sin_norm)
}

/// Poisson extension of zonal boundary data `phi(zeta) = g(<zeta, N>)` at an
/// arbitrary interior point, reduced to a 2-D (polar x azimuthal) integral.
/// Normalized so that constants are reproduced exactly.
pub fn poisson_zonal(
    ctx: &KernelContext,
    g: &dyn Fn(f64) -> f64,
    x: &Point,
) -> Result<f64> {
    ctx.check_interior(x)?;
    let rho = x.norm();
    let n = ctx.n;
    let nf = n as f64;
    // all polar integrals are split at the equator, where zonal data
    // (hemisphere signs) may jump
    if rho < 1e-14 {
        // mean of the data over the sphere
        let mut mean = 0.0;
        for (lo, hi) in [(0.0, 0.5 * PI), (0.5 * PI, PI)] {
            mean += tanh_sinh(|t| t.sin().powf(nf - 2.0) * g(t.cos()), lo, hi, 1e-11)?.value;
        }
        return Ok(mean / ctx.sin_norm);
    }
    let cos_g = x.coords()[n - 1] / rho;
    if cos_g.abs() > 1.0 - 1e-13 {
        // on the polar axis the 1-D reduction applies; split at the equator
        // since the data may jump there
        let sign = cos_g.signum();
        let poisson_polar = |t: f64| {
            let w = 1.0 + rho * rho - 2.0 * rho * t.cos();
            t.sin().powf(nf - 2.0) * (1.0 - rho * rho) / w.powf(nf / 2.0)
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for (lo, hi) in [(0.0, 0.5 * PI), (0.5 * PI, PI)] {
            num += tanh_sinh(|t| poisson_polar(t) * g(sign * t.cos()), lo, hi, 1e-12)?.value;
            den += tanh_sinh(poisson_polar, lo, hi, 1e-12)?.value;
        }
        return Ok(num / den);
    }
    let sin_g = (1.0 - cos_g * cos_g).max(0.0).sqrt();

    let eval = |outer: usize, inner: usize| -> f64 {
        let (tn, tw) = crate::quadrature::gauss_legendre(outer);
        let (pn, pw) = crate::quadrature::gauss_legendre(inner);
        let mut num = 0.0;
        let mut den = 0.0;
        for (lo, hi) in [(0.0, 0.5 * PI), (0.5 * PI, PI)] {
            let half = 0.5 * (hi - lo);
            for (ti, wi) in tn.iter().zip(&tw) {
                let t = lo + half * (ti + 1.0);
                let wt = half * wi * t.sin().powf(nf - 2.0);
                let gv = g(t.cos());
                for (pj, wj) in pn.iter().zip(&pw) {
                    let psi = 0.5 * PI * (pj + 1.0);
                    let wp = 0.5 * PI * wj * psi.sin().powf(nf - 3.0);
                    let cos_angle = cos_g * t.cos() + sin_g * t.sin() * psi.cos();
                    let w = 1.0 + rho * rho - 2.0 * rho * cos_angle;
                    let p = (1.0 - rho * rho) / w.powf(nf / 2.0);
                    num += wt * wp * p * gv;
                    den += wt * wp * p;
                }
            }
        }
        num / den
    };
    Ok(eval(64, 48))
}
