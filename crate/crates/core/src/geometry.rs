//! Points in `R^n`, the bracket `[x,y]`, Mobius automorphisms of the unit
//! ball, matrix norms and the quasiconformal dilatation.
//!
//! The bracket is computed from the smooth closed form
//! `[x,y] = sqrt(|x|^2 |y|^2 - 2<x,y> + 1)`, which extends continuously to
//! `x = 0` or `y = 0` where the textbook expression `|y|x| - x/|x||` is
//! undefined.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Minimum ambient dimension; the Green kernel needs `n - 2 > 0`.
pub const MIN_DIM: usize = 3;

/// Degeneracy cutoff for the bracket in Mobius denominators.
const BRACKET_EPS: f64 = 1e-12;

/// A point of `R^n`, `n >= 3`, with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < MIN_DIM {
            return Err(Error::DimensionTooSmall {
                got: coords.len(),
                min: MIN_DIM,
            });
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { coords })
    }

    /// Origin of `R^n`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// North pole `N = (0, ..., 0, 1)`.
    pub fn north_pole(n: usize) -> Result<Self> {
        let mut c = vec![0.0; n];
        c[n - 1] = 1.0;
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|a| a * s).collect(),
        }
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

/// Raw slice distance, used in kernel hot loops.
pub(crate) fn dist_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq_slice(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `[x,y] = sqrt(|x|^2 |y|^2 - 2<x,y> + 1)`, symmetric and nonnegative.
///
/// On the sphere `|y| = 1` it coincides with `|x - y|`; at `x = 0` or
/// `y = 0` it equals 1.
pub fn bracket(x: &Point, y: &Point) -> Result<f64> {
    x.check_same_dim(y)?;
    Ok(bracket_slice(x.coords(), y.coords()))
}

pub(crate) fn bracket_slice(x: &[f64], y: &[f64]) -> f64 {
    let v = norm_sq_slice(x) * norm_sq_slice(y) - 2.0 * dot_slice(x, y) + 1.0;
    // roundoff can push v slightly negative when x ~ y on the sphere
    v.max(0.0).sqrt()
}

/// Mobius automorphism of the ball swapping `0` and `x`:
///
/// `phi_x(y) = (|x-y|^2 x - (1-|x|^2)(y-x)) / [x,y]^2`.
pub fn mobius(x: &Point, y: &Point) -> Result<Point> {
    x.check_same_dim(y)?;
    let xn = x.norm();
    if xn >= 1.0 {
        return Err(Error::OutsideBall(xn));
    }
    let br = bracket_slice(x.coords(), y.coords());
    if br < BRACKET_EPS {
        return Err(Error::Degenerate(format!(
            "bracket [x,y] = {br:e} below tolerance in mobius"
        )));
    }
    let br2 = br * br;
    let dxy2 = x.sub(y).norm_sq();
    let one_minus_x2 = 1.0 - x.norm_sq();
    let coords = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(&xi, &yi)| (dxy2 * xi - one_minus_x2 * (yi - xi)) / br2)
        .collect();
    Point::new(coords)
}

/// `|J_{phi_x}(y)| = (1-|x|^2)^n / [x,y]^{2n}`.
pub fn mobius_jacobian_abs(x: &Point, y: &Point) -> Result<f64> {
    x.check_same_dim(y)?;
    let xn = x.norm();
    if xn >= 1.0 {
        return Err(Error::OutsideBall(xn));
    }
    let br = bracket_slice(x.coords(), y.coords());
    if br < BRACKET_EPS {
        return Err(Error::Degenerate(format!(
            "bracket [x,y] = {br:e} below tolerance in mobius_jacobian_abs"
        )));
    }
    let n = x.dim() as i32;
    Ok((1.0 - x.norm_sq()).powi(n) / br.powi(2 * n))
}

/// Dense square matrix with finite entries; houses `D_f`, `J_f`, `|A|`
/// and `l(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    inner: DMatrix<f64>,
}

impl SquareMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Schema("matrix is not square".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let inner = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self {
            inner: &self.inner * &other.inner,
        }
    }

    /// Largest singular value (spectral norm).
    pub fn operator_norm(&self) -> f64 {
        singular_values(&self.inner)
            .into_iter()
            .fold(0.0_f64, f64::max)
    }

    /// Smallest singular value `l(A) = inf{|A z| : |z| = 1}`.
    pub fn min_stretch(&self) -> f64 {
        singular_values(&self.inner)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed determinant.
    pub fn det(&self) -> f64 {
        self.inner.determinant()
    }

    /// Smallest `K >= 1` with `|A|^n / K <= det A <= K l(A)^n`, i.e.
    /// `K = max(|A|^n / det A, det A / l(A)^n)`.
    ///
    /// Fails when `det A <= 0` (orientation-reversing or degenerate).
    pub fn qc_dilatation(&self) -> Result<f64> {
        let det = self.det();
        if det <= 0.0 {
            return Err(Error::OrientationFailure(det));
        }
        let n = self.dim() as i32;
        let big = self.operator_norm().powi(n) / det;
        let small = det / self.min_stretch().powi(n);
        Ok(big.max(small))
    }
}

/// Operator norm of a rectangular matrix given as rows (used for derivative
/// matrices of maps into `R^{n1}` with `n1 != n`).
pub fn rectangular_operator_norm(rows: &[Vec<f64>]) -> f64 {
    if rows.is_empty() || rows[0].is_empty() {
        return 0.0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    singular_values(&m).into_iter().fold(0.0_f64, f64::max)
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_interior(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Point {
        // direction from gaussians via Box-Muller, radius uniform^(1/n)
        let mut g = Vec::with_capacity(n + 1);
        while g.len() <= n {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            let m = (-2.0 * u1.ln()).sqrt();
            g.push(m * (2.0 * std::f64::consts::PI * u2).cos());
            g.push(m * (2.0 * std::f64::consts::PI * u2).sin());
        }
        g.truncate(n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let r = rmax * rng.random::<f64>().powf(1.0 / n as f64);
        Point::new(g.iter().map(|v| v / norm * r).collect()).unwrap()
    }

    fn random_boundary(rng: &mut ChaCha8Rng, n: usize) -> Point {
        let p = random_interior(rng, n, 0.9);
        p.scale(1.0 / p.norm())
    }

    #[test]
    fn bracket_at_origin_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let y = random_interior(&mut rng, 3, 0.999);
            let z = Point::zero(3).unwrap();
            assert_abs_diff_eq!(bracket(&z, &y).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn bracket_equals_distance_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [3usize, 4, 5] {
            for _ in 0..30 {
                let x = random_interior(&mut rng, n, 0.99);
                let zeta = random_boundary(&mut rng, n);
                assert_abs_diff_eq!(
                    bracket(&x, &zeta).unwrap(),
                    x.dist(&zeta),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn bracket_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_interior(&mut rng, 4, 0.999);
            let y = random_interior(&mut rng, 4, 0.999);
            assert_eq!(bracket(&x, &y).unwrap(), bracket(&y, &x).unwrap());
        }
    }

    #[test]
    fn bracket_dimension_mismatch() {
        let x = Point::zero(3).unwrap();
        let y = Point::zero(4).unwrap();
        assert!(matches!(
            bracket(&x, &y),
            Err(Error::DimensionMismatch(3, 4))
        ));
    }

    #[test]
    fn mobius_swaps_origin_and_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_interior(&mut rng, 3, 0.95);
            let zero = Point::zero(3).unwrap();
            let at_zero = mobius(&x, &zero).unwrap();
            assert!(at_zero.dist(&x) < 1e-14);
            let at_x = mobius(&x, &x).unwrap();
            assert!(at_x.norm() < 1e-13);
        }
    }

    #[test]
    fn mobius_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 5] {
            for _ in 0..30 {
                let x = random_interior(&mut rng, n, 0.9);
                let y = random_interior(&mut rng, n, 0.95);
                let back = mobius(&x, &mobius(&x, &y).unwrap()).unwrap();
                assert!(back.dist(&y) < 1e-10, "involution error {}", back.dist(&y));
            }
        }
    }

    #[test]
    fn mobius_modulus_identity() {
        // |phi_x(y)| = |x-y| / [x,y]
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let x = random_interior(&mut rng, 4, 0.9);
            let y = random_interior(&mut rng, 4, 0.95);
            let lhs = mobius(&x, &y).unwrap().norm();
            let rhs = x.dist(&y) / bracket(&x, &y).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn mobius_norm_transfer_identity() {
        // 1 - |phi_x(z)|^2 = (1-|x|^2)(1-|z|^2) / [x,z]^2
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let x = random_interior(&mut rng, 3, 0.9);
            let z = random_interior(&mut rng, 3, 0.95);
            let lhs = 1.0 - mobius(&x, &z).unwrap().norm_sq();
            let br = bracket(&x, &z).unwrap();
            let rhs = (1.0 - x.norm_sq()) * (1.0 - z.norm_sq()) / (br * br);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn mobius_rejects_center_outside_ball() {
        let x = Point::new(vec![1.2, 0.0, 0.0]).unwrap();
        let y = Point::zero(3).unwrap();
        assert!(matches!(mobius(&x, &y), Err(Error::OutsideBall(_))));
    }

    /// Central-difference Jacobian determinant oracle.
    fn fd_jacobian_det(x: &Point, y: &Point, h: f64) -> f64 {
        let n = x.dim();
        let mut rows = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut yp = y.coords().to_vec();
            let mut ym = y.coords().to_vec();
            yp[j] += h;
            ym[j] -= h;
            let fp = mobius(x, &Point::new(yp).unwrap()).unwrap();
            let fm = mobius(x, &Point::new(ym).unwrap()).unwrap();
            for i in 0..n {
                rows[i][j] = (fp.coords()[i] - fm.coords()[i]) / (2.0 * h);
            }
        }
        SquareMatrix::from_rows(&rows).unwrap().det()
    }

    #[test]
    fn mobius_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..15 {
            let x = random_interior(&mut rng, 3, 0.7);
            let y = random_interior(&mut rng, 3, 0.7);
            let closed = mobius_jacobian_abs(&x, &y).unwrap();
            let fd = fd_jacobian_det(&x, &y, 1e-5).abs();
            assert!(
                (closed - fd).abs() <= 1e-5 * closed.max(1.0),
                "closed {closed} vs fd {fd}"
            );
        }
    }

    #[test]
    fn mobius_jacobian_at_origin_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let zero = Point::zero(3).unwrap();
        for _ in 0..10 {
            let y = random_interior(&mut rng, 3, 0.95);
            assert_abs_diff_eq!(mobius_jacobian_abs(&zero, &y).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn matrix_norms_on_simple_cases() {
        let id = SquareMatrix::identity(3);
        assert_abs_diff_eq!(id.operator_norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.min_stretch(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.det(), 1.0, epsilon = 1e-12);

        let d = SquareMatrix::from_diagonal(&[2.0, 1.0, 1.0]);
        assert_abs_diff_eq!(d.operator_norm(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.min_stretch(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.det(), 2.0, epsilon = 1e-12);
    }

    /// Independent singular-value oracle: cyclic Jacobi eigenvalue iteration
    /// on A^T A.
    fn jacobi_singular_values(a: &SquareMatrix) -> Vec<f64> {
        let n = a.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a.entry(k, i) * a.entry(k, j);
                }
                m[i][j] = s;
            }
        }
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[p][q] * m[p][q];
                    if m[p][q].abs() < 1e-15 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * m[p][q]).atan2(m[q][q] - m[p][p]);
                    let (s, c) = theta.sin_cos();
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                }
            }
            if off < 1e-28 {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n).map(|i| m[i][i].max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    #[test]
    fn singular_values_match_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let n = 3 + (rng.random::<u32>() % 3) as usize;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let a = SquareMatrix::from_rows(&rows).unwrap();
            let sv = jacobi_singular_values(&a);
            assert_abs_diff_eq!(a.operator_norm(), sv[0], epsilon = 1e-9);
            assert_abs_diff_eq!(a.min_stretch(), sv[n - 1], epsilon = 1e-9);
            // |det| equals the product of singular values
            let prod: f64 = sv.iter().product();
            assert_abs_diff_eq!(a.det().abs(), prod, epsilon = 1e-9);
        }
    }

    #[test]
    fn qc_dilatation_cases() {
        let d = SquareMatrix::from_diagonal(&[2.0, 1.0, 1.0]);
        assert_abs_diff_eq!(d.qc_dilatation().unwrap(), 4.0, epsilon = 1e-10);

        let c = SquareMatrix::from_diagonal(&[0.7, 0.7, 0.7]);
        assert_abs_diff_eq!(c.qc_dilatation().unwrap(), 1.0, epsilon = 1e-10);

        let refl = SquareMatrix::from_diagonal(&[-1.0, 1.0, 1.0]);
        assert!(matches!(
            refl.qc_dilatation(),
            Err(Error::OrientationFailure(_))
        ));
    }

    fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
        // QR of a random matrix, sign-fixed to det +1
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let qr = raw.qr();
        let mut q = qr.q();
        if q.determinant() < 0.0 {
            for i in 0..n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        SquareMatrix {
            inner: q,
        }
    }

    #[test]
    fn qc_dilatation_orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let q1 = random_rotation(&mut rng, 3);
            let q2 = random_rotation(&mut rng, 3);
            assert_abs_diff_eq!(q1.qc_dilatation().unwrap(), 1.0, epsilon = 1e-9);
            let a = SquareMatrix::from_diagonal(&[1.7, 0.9, 1.1]);
            let k0 = a.qc_dilatation().unwrap();
            let k1 = q1.matmul(&a).matmul(&q2).qc_dilatation().unwrap();
            assert_abs_diff_eq!(k0, k1, epsilon = 1e-8);
        }
    }
}
