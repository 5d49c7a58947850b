//! Exact symbolic calculus on radial polynomials in `t = |x|^2`.
//!
//! This is the independent ground truth for the solver and the closed-form
//! identities: coefficients are arbitrary-precision rationals, so Laplacians,
//! Green applications and the polyharmonic boundary chain are computed
//! without any floating-point quadrature.
//!
//! The Green action on monomials is
//!
//! ```text
//! G[t^k] = (1 - t^{k+1}) / ((2k+2)(2k+n))
//! ```
//!
//! the unique radial solution of `Delta w = -t^k` bounded at the origin with
//! `w(1) = 0`; it reproduces both the Green-mass closed form (`k = 0`) and
//! the weighted-mass identity (`G[1-t]`), which is what certifies it.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Polynomial `sum_k a_k t^k`, `t = |x|^2`, over exact rationals, attached
/// to an ambient dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialPoly {
    n: usize,
    coeffs: Vec<BigRational>,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl RadialPoly {
    /// Build from f64 coefficients (every finite f64 is an exact rational).
    pub fn new(n: usize, coeffs: &[f64]) -> Self {
        let coeffs = coeffs
            .iter()
            .map(|&c| BigRational::from_float(c).expect("finite coefficient"))
            .collect();
        Self::from_rationals(n, coeffs)
    }

    pub fn from_rationals(n: usize, coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { n, coeffs };
        p.trim();
        p
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(n: usize, value: BigRational) -> Self {
        Self::from_rationals(n, vec![value])
    }

    /// `t^k`.
    pub fn monomial(n: usize, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = int(1);
        Self { n, coeffs }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::from_rationals(self.n, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Self::from_rationals(self.n, coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::from_rationals(self.n, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        self.scale(&BigRational::from_float(s).expect("finite scale"))
    }

    /// Exact Laplacian: `Delta |x|^{2k} = 2k (2k + n - 2) |x|^{2k-2}` per
    /// monomial.
    pub fn laplacian(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(self.n);
        }
        let n = self.n as i64;
        let coeffs = (1..self.coeffs.len())
            .map(|k| {
                let kk = k as i64;
                self.coeff(k) * int(2 * kk) * int(2 * kk + n - 2)
            })
            .collect();
        Self::from_rationals(self.n, coeffs)
    }

    /// Exact Green application: `Delta (green_apply p) = -p` and
    /// `green_apply(p)(1) = 0`.
    pub fn green_apply(&self) -> Self {
        let n = self.n as i64;
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + 1];
        for (k, a) in self.coeffs.iter().enumerate() {
            let kk = k as i64;
            let c = a / int((2 * kk + 2) * (2 * kk + n));
            coeffs[0] += &c;
            coeffs[k + 1] -= &c;
        }
        Self::from_rationals(self.n, coeffs)
    }

    /// k-fold Green application.
    pub fn green_apply_iter(&self, k: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.green_apply();
        }
        p
    }

    /// Value at `t = 1` (exact): the boundary value on the unit sphere.
    pub fn boundary_value(&self) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |s, c| s + c)
    }

    /// d/dt, exact.
    pub fn derivative_t(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(self.n);
        }
        let coeffs = (1..self.coeffs.len())
            .map(|k| self.coeff(k) * int(k as i64))
            .collect();
        Self::from_rationals(self.n, coeffs)
    }

    /// Horner evaluation at `t` in f64.
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for c in self.coeffs.iter().rev() {
            v = v * t + c.to_f64().unwrap_or(f64::NAN);
        }
        v
    }

    /// Coefficients as f64 (lossy for very large rationals).
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn eval_rational(&self, t: &BigRational) -> BigRational {
        let mut v = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            v = v * t + c;
        }
        v
    }

    /// `|grad p(|x|^2)|` at radius `r`: `|p'(t)| 2r` with `t = r^2`.
    pub fn gradient_magnitude(&self, r: f64) -> f64 {
        self.derivative_t().eval(r * r).abs() * 2.0 * r
    }
}

/// The radial solution family and its Dirichlet chain:
/// `f = M (1 - t^{m-1})`, `phi_k = Delta^k f` at `t = 1` for `k < m`
/// (constants), `phi_m = Delta^m f = 0`.
#[derive(Debug, Clone)]
pub struct PolyharmonicOracle {
    pub f: RadialPoly,
    /// `phis[k]` is the boundary datum for `Delta^k f` (`k < m`) and the
    /// interior source for `k = m`; all as radial polynomials.
    pub phis: Vec<RadialPoly>,
}

/// Construct the sharpness family for `n >= 3`, `m >= 2`.
pub fn polyharmonic_oracle(n: usize, m: usize, m_scale: f64) -> Result<PolyharmonicOracle> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { got: n, min: 3 });
    }
    if m < 2 {
        return Err(Error::Domain(format!("order m must be >= 2, got {m}")));
    }
    let scale = BigRational::from_float(m_scale).ok_or(Error::NonFinite)?;
    let f = RadialPoly::constant(n, scale.clone())
        .sub(&RadialPoly::monomial(n, m - 1).scale(&scale));
    let mut phis = Vec::with_capacity(m + 1);
    let mut power = f.clone();
    for _ in 0..m {
        phis.push(RadialPoly::constant(n, power.boundary_value()));
        power = power.laplacian();
    }
    phis.push(power); // Delta^m f, identically zero for this family
    Ok(PolyharmonicOracle { f, phis })
}
