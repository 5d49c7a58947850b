//! Python bindings: the geometry primitives, special functions, kernel
//! evaluations, the Dirichlet-chain solver and the constants table, exposed
//! as a `polypotential_py` extension module.

use polypotential::error::Error;
use polypotential::geometry::{self, Point, SquareMatrix};
use polypotential::inequality;
use polypotential::kernels::{self, KernelContext};
use polypotential::quadrature::{self, Budget};
use polypotential::radial::RadialPoly;
use polypotential::solver::ProblemSpec;
use polypotential::specfun;
use polypotential::PreparedSolver;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(coords: Vec<f64>) -> PyResult<Point> {
    Point::new(coords).map_err(err)
}

#[pyfunction]
fn bracket(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    geometry::bracket(&point(x)?, &point(y)?).map_err(err)
}

#[pyfunction]
fn mobius(x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(geometry::mobius(&point(x)?, &point(y)?)
        .map_err(err)?
        .into_coords())
}

#[pyfunction]
fn mobius_jacobian_abs(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    geometry::mobius_jacobian_abs(&point(x)?, &point(y)?).map_err(err)
}

#[pyfunction]
fn matrix_norms(rows: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let m = SquareMatrix::from_rows(&rows).map_err(err)?;
    Ok((m.operator_norm(), m.min_stretch(), m.det()))
}

#[pyfunction]
fn qc_dilatation(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    SquareMatrix::from_rows(&rows)
        .map_err(err)?
        .qc_dilatation()
        .map_err(err)
}

#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    specfun::gamma_fn(x).map_err(err)
}

#[pyfunction]
fn beta(p: f64, q: f64) -> PyResult<f64> {
    specfun::beta_fn(p, q).map_err(err)
}

#[pyfunction]
fn pochhammer(a: f64, k: usize) -> f64 {
    specfun::pochhammer(a, k)
}

#[pyfunction]
fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> PyResult<f64> {
    specfun::hyp2f1_vals(a, b, c, x).map_err(err)
}

#[pyfunction]
fn sphere_singular_integral(lambda1: f64, lambda2: f64, r: f64) -> PyResult<f64> {
    specfun::sphere_singular_integral(lambda1, lambda2, r).map_err(err)
}

#[pyfunction]
fn heinz_constant(n: usize) -> PyResult<f64> {
    specfun::heinz_constant(n).map_err(err)
}

#[pyfunction]
fn c0() -> f64 {
    inequality::c0()
}

#[pyfunction]
fn delta_n(n: usize) -> PyResult<f64> {
    inequality::delta_n(n).map_err(err)
}

/// `green_apply` iterated on a radial polynomial (coefficients of powers of
/// `t = |x|^2`); returns the resulting coefficients.
#[pyfunction]
#[pyo3(signature = (n, coeffs, times=1))]
fn green_apply_poly(n: usize, coeffs: Vec<f64>, times: usize) -> PyResult<Vec<f64>> {
    if n < 3 {
        return Err(PyValueError::new_err("dimension must be >= 3"));
    }
    let p = RadialPoly::new(n, &coeffs).green_apply_iter(times);
    Ok(p.coeffs_f64())
}

/// Kernel evaluations bound to a fixed dimension.
#[pyclass]
struct Kernel {
    ctx: KernelContext,
}

#[pymethods]
impl Kernel {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            ctx: KernelContext::new(n).map_err(err)?,
        })
    }

    fn surface_area(&self) -> f64 {
        self.ctx.surface_area()
    }

    fn green(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        kernels::green(&self.ctx, &point(x)?, &point(y)?).map_err(err)
    }

    fn poisson(&self, x: Vec<f64>, zeta: Vec<f64>) -> PyResult<f64> {
        kernels::poisson(&self.ctx, &point(x)?, &point(zeta)?).map_err(err)
    }

    fn grad_green(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(kernels::grad_green(&self.ctx, &point(x)?, &point(y)?)
            .map_err(err)?
            .into_coords())
    }

    fn green_mass(&self, x: Vec<f64>) -> PyResult<f64> {
        kernels::green_mass(&self.ctx, &point(x)?).map_err(err)
    }

    fn weighted_green_mass_i1(&self, x: Vec<f64>) -> PyResult<f64> {
        kernels::weighted_green_mass_i1(&self.ctx, &point(x)?).map_err(err)
    }

    #[pyo3(signature = (x, r, order4=true))]
    fn sphere_moment(&self, x: Vec<f64>, r: f64, order4: bool) -> PyResult<f64> {
        kernels::sphere_moment(&self.ctx, &point(x)?, r, order4).map_err(err)
    }

    fn harmonic_measure_u(&self, r: f64) -> PyResult<f64> {
        kernels::harmonic_measure_u(&self.ctx, r).map_err(err)
    }

    fn phi_derivative(&self, r: f64) -> PyResult<f64> {
        kernels::phi_derivative(&self.ctx, r).map_err(err)
    }

    /// `int_B G(x,y) f(y) dV(y)` for a Python callable `f`.
    #[pyo3(signature = (x, f, sphere_level=16, radial=24))]
    fn green_integrate(
        &self,
        py: Python<'_>,
        x: Vec<f64>,
        f: PyObject,
        sphere_level: usize,
        radial: usize,
    ) -> PyResult<(f64, f64)> {
        let budget = Budget::new(sphere_level, radial);
        let xp = point(x)?;
        let est = quadrature::green_integrate(
            &self.ctx,
            &xp,
            |y| {
                let arg: Vec<f64> = y.to_vec();
                f.call1(py, (arg,))
                    .and_then(|v| v.extract::<f64>(py))
                    .unwrap_or(f64::NAN)
            },
            &budget,
        )
        .map_err(err)?;
        Ok((est.value, est.error))
    }
}

/// Prepared polyharmonic Dirichlet solver built from a problem-spec JSON
/// document.
#[pyclass]
struct Solver {
    inner: PreparedSolver,
}

#[pymethods]
impl Solver {
    #[new]
    fn new(spec_json: &str) -> PyResult<Self> {
        let spec = ProblemSpec::from_json(spec_json).map_err(err)?;
        Ok(Self {
            inner: PreparedSolver::new(spec).map_err(err)?,
        })
    }

    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }

    /// Returns `(values, error_bar)` at the point.
    fn solve(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let est = self.inner.solve(&point(x)?).map_err(err)?;
        Ok((est.values, est.error))
    }

    /// `G_k[phi_k](x)` as `(values, error_bar)`.
    fn green_chain(&self, k: usize, x: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let est = self.inner.green_chain(k, &point(x)?).map_err(err)?;
        Ok((est.values, est.error))
    }
}

#[pyfunction]
#[pyo3(signature = (n, k, phi_norms, q=None))]
fn lipschitz_constants<'py>(
    py: Python<'py>,
    n: usize,
    k: f64,
    phi_norms: Vec<f64>,
    q: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let report = inequality::lipschitz_constants(&inequality::LipschitzInputs {
        n,
        k,
        q,
        phi_norms,
    })
    .map_err(err)?;
    let dict = PyDict::new(py);
    for v in &report.values {
        dict.set_item(&v.name, v.value)?;
    }
    dict.set_item("branch", report.branch.clone().unwrap_or_default())?;
    Ok(dict)
}

#[pymodule]
fn polypotential_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(mobius, m)?)?;
    m.add_function(wrap_pyfunction!(mobius_jacobian_abs, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_norms, m)?)?;
    m.add_function(wrap_pyfunction!(qc_dilatation, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(pochhammer, m)?)?;
    m.add_function(wrap_pyfunction!(hyp2f1, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_singular_integral, m)?)?;
    m.add_function(wrap_pyfunction!(heinz_constant, m)?)?;
    m.add_function(wrap_pyfunction!(c0, m)?)?;
    m.add_function(wrap_pyfunction!(delta_n, m)?)?;
    m.add_function(wrap_pyfunction!(green_apply_poly, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_constants, m)?)?;
    m.add_class::<Kernel>()?;
    m.add_class::<Solver>()?;
    Ok(())
}
