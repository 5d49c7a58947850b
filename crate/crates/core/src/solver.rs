//! Numerical realization of the representation formula
//!
//! ```text
//! f(x) = P[phi_0](x) + sum_{k=1}^{m} (-1)^k G_k[phi_k](x)
//! ```
//!
//! for the polyharmonic Dirichlet chain. `G_k` applies the Green operator
//! `k` times to the Poisson extension of the boundary datum `phi_k`
//! (`k <= m-1`), and `m` times to the interior source `phi_m`.
//!
//! Iterated integrals are evaluated as repeated applications of a discrete
//! Green operator on a fixed ball grid (one matrix-free application per
//! layer) rather than nested quadrature; the final layer is always a fresh
//! Mobius-substituted quadrature centered at the evaluation point, with the
//! grid function interpolated piecewise-linearly in the radius and
//! nearest-node in angle.

use crate::error::{Error, Result};
use crate::geometry::{norm_sq_slice, Point};
use crate::kernels::{poisson_zonal, KernelContext};
use crate::quadrature::{green_integrate_multi, BallRule, Budget, VecEstimate};
use crate::report::{BoundEntry, BoundsReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Named boundary/source data presets, evaluatable at arbitrary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// Identically zero.
    Zero,
    /// Constant vector value.
    Const { value: Vec<f64> },
    /// Scalar polynomial in `t = |x|^2`, placed in component 0. On the
    /// boundary this restricts to the constant `p(1)`.
    RadialPoly { coeffs: Vec<f64> },
    /// The identity map of the sphere (`index: None`), or the single
    /// coordinate `zeta_i` as a scalar in component 0.
    Coordinate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    /// `+1` on the upper closed hemisphere, `-1` on the lower (scalar).
    HemisphereSign,
}

impl Preset {
    pub fn is_zero(&self) -> bool {
        match self {
            Preset::Zero => true,
            Preset::Const { value } => value.iter().all(|v| *v == 0.0),
            Preset::RadialPoly { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            _ => false,
        }
    }

    /// Output dimension the preset insists on, if any.
    fn fixed_dim(&self, n: usize) -> Option<usize> {
        match self {
            Preset::Const { value } => Some(value.len()),
            Preset::Coordinate { index: None } => Some(n),
            _ => None,
        }
    }

    fn validate(&self, n: usize, n1: usize) -> Result<()> {
        match self {
            Preset::Const { value } => {
                if value.len() != n1 {
                    return Err(Error::Schema(format!(
                        "const preset has {} components, problem target dimension is {n1}",
                        value.len()
                    )));
                }
                if !value.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            Preset::Coordinate { index: None } => {
                if n1 != n {
                    return Err(Error::Schema(format!(
                        "identity boundary map needs target dimension {n}, got {n1}"
                    )));
                }
            }
            Preset::Coordinate { index: Some(i) } => {
                if *i >= n {
                    return Err(Error::Schema(format!(
                        "coordinate index {i} out of range for dimension {n}"
                    )));
                }
            }
            Preset::RadialPoly { coeffs } => {
                if !coeffs.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Point evaluation (boundary data on the sphere, source data in the
    /// ball — the formulas coincide).
    pub fn eval(&self, point: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        match self {
            Preset::Zero => {}
            Preset::Const { value } => out.copy_from_slice(value),
            Preset::RadialPoly { coeffs } => {
                let t = norm_sq_slice(point);
                let mut v = 0.0;
                for c in coeffs.iter().rev() {
                    v = v * t + c;
                }
                out[0] = v;
            }
            Preset::Coordinate { index: None } => out.copy_from_slice(point),
            Preset::Coordinate { index: Some(i) } => out[0] = point[*i],
            Preset::HemisphereSign => {
                out[0] = if point[point.len() - 1] >= 0.0 { 1.0 } else { -1.0 }
            }
        }
    }

    /// Exact sup norm over the data domain (Euclidean norm of the value).
    pub fn sup_norm(&self, boundary: bool) -> f64 {
        match self {
            Preset::Zero => 0.0,
            Preset::Const { value } => norm_sq_slice(value).sqrt(),
            Preset::RadialPoly { coeffs } => {
                if boundary {
                    coeffs.iter().sum::<f64>().abs()
                } else {
                    // sup over t in [0,1] by a fine scan
                    (0..=1000)
                        .map(|i| {
                            let t = i as f64 / 1000.0;
                            let mut v = 0.0;
                            for c in coeffs.iter().rev() {
                                v = v * t + c;
                            }
                            v.abs()
                        })
                        .fold(0.0, f64::max)
                }
            }
            Preset::Coordinate { .. } => 1.0,
            Preset::HemisphereSign => 1.0,
        }
    }
}

/// A polyharmonic Dirichlet problem: dimension, order, and the data chain
/// `phi_0..phi_m` (`phi_k` prescribes `Delta^k f` on the boundary for
/// `k < m`; `phi_m` is the interior source).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    /// Target dimension `n1`; inferred from the data when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    pub phi: Vec<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::DimensionTooSmall { got: self.n, min: 3 });
        }
        if self.m < 2 {
            return Err(Error::Schema(format!("order m must be >= 2, got {}", self.m)));
        }
        if self.phi.len() != self.m + 1 {
            return Err(Error::Schema(format!(
                "need {} data entries (phi_0..phi_m), got {}",
                self.m + 1,
                self.phi.len()
            )));
        }
        let n1 = self.target_dim();
        for p in &self.phi {
            p.validate(self.n, n1)?;
        }
        Ok(())
    }

    /// Output dimension: explicit `n1`, else the largest dimension any
    /// preset insists on, else 1.
    pub fn target_dim(&self) -> usize {
        self.n1.unwrap_or_else(|| {
            self.phi
                .iter()
                .filter_map(|p| p.fixed_dim(self.n))
                .max()
                .unwrap_or(1)
        })
    }

    pub fn budget(&self) -> Budget {
        self.budget.unwrap_or_else(|| Budget::default_for(self.n))
    }

    /// Sup norms of `phi_1..phi_m` (exact, per preset).
    pub fn data_norms(&self) -> Vec<f64> {
        (1..=self.m)
            .map(|k| self.phi[k].sup_norm(k < self.m))
            .collect()
    }
}

/// Poisson extension of a boundary preset, exact where harmonicity gives a
/// closed form (constants, coordinates, radial boundary restrictions) and
/// by zonal quadrature for the hemisphere-sign data.
pub fn poisson_extend(
    ctx: &KernelContext,
    preset: &Preset,
    n1: usize,
    x: &Point,
) -> Result<VecEstimate> {
    let mut values = vec![0.0; n1];
    match preset {
        Preset::Zero => Ok(VecEstimate { values, error: 0.0 }),
        Preset::Const { value } => {
            values.copy_from_slice(value);
            Ok(VecEstimate { values, error: 0.0 })
        }
        Preset::RadialPoly { coeffs } => {
            values[0] = coeffs.iter().sum();
            Ok(VecEstimate { values, error: 0.0 })
        }
        Preset::Coordinate { index: None } => {
            values.copy_from_slice(x.coords());
            Ok(VecEstimate { values, error: 0.0 })
        }
        Preset::Coordinate { index: Some(i) } => {
            values[0] = x.coords()[*i];
            Ok(VecEstimate { values, error: 0.0 })
        }
        Preset::HemisphereSign => {
            let sign = |c: f64| if c >= 0.0 { 1.0 } else { -1.0 };
            values[0] = poisson_zonal(ctx, &sign, x)?;
            Ok(VecEstimate {
                values,
                error: 1e-8,
            })
        }
    }
}

/// Poisson extension by normalized sphere quadrature (any preset); the
/// generic route the exact shortcuts are cross-checked against. Accuracy
/// collapses near the boundary, hence the hard cutoff.
pub fn poisson_extend_quadrature(
    ctx: &KernelContext,
    preset: &Preset,
    n1: usize,
    x: &Point,
    level: usize,
) -> Result<VecEstimate> {
    if x.norm() >= 1.0 - 1e-6 {
        return Err(Error::Degenerate(
            "Poisson quadrature too close to the boundary; use boundary values".into(),
        ));
    }
    let rule = crate::quadrature::SphereRule::new(ctx.dim(), level)?;
    let mut num = vec![0.0; n1];
    let mut den = 0.0;
    let mut data = vec![0.0; n1];
    for (node, w) in rule.nodes().iter().zip(rule.weights()) {
        let p = crate::kernels::poisson_raw(ctx.dim(), x.coords(), node) * w;
        preset.eval(node, &mut data);
        for i in 0..n1 {
            num[i] += p * data[i];
        }
        den += p;
    }
    let values: Vec<f64> = num.iter().map(|v| v / den).collect();
    Ok(VecEstimate {
        values,
        error: 1e-12,
    })
}

type InnerFn = Box<dyn Fn(&[f64], &mut [f64]) + Sync + Send>;

/// One prepared chain `G_k[phi_k]`.
struct Chain {
    state: ChainState,
    /// Sup-norm error carried by the grid values (quadrature + propagated).
    layer_err: f64,
    /// Radial interpolation error estimate for the stored grid function.
    interp_err: f64,
}

enum ChainState {
    Zero,
    /// Innermost layer evaluatable directly; one final integration left.
    Direct(InnerFn),
    /// Grid values after `len - 1` Green applications; one final
    /// integration left.
    Grid(Vec<Vec<f64>>),
}

/// Solver with all iterated-potential layers precomputed on the operator
/// grid; evaluation at distinct points is independent and immutable.
pub struct PreparedSolver {
    spec: ProblemSpec,
    ctx: KernelContext,
    n1: usize,
    budget: Budget,
    op_budget: Budget,
    grid: BallRule,
    chains: Vec<Chain>,
}

impl PreparedSolver {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let ctx = KernelContext::new(spec.n)?;
        let n1 = spec.target_dim();
        let budget = spec.budget();
        let op_budget = Budget {
            sphere_level: budget.op_sphere(spec.n),
            radial: budget.op_radial_nodes(spec.n),
            op_sphere_level: None,
            op_radial: None,
            rel_tol: None,
        };
        let grid = BallRule::for_budget(spec.n, &op_budget)?;
        let mut chains = Vec::with_capacity(spec.m);
        for k in 1..=spec.m {
            chains.push(Self::build_chain(
                &ctx,
                &grid,
                n1,
                &spec,
                k,
                &op_budget,
            )?);
        }
        Ok(Self {
            spec,
            ctx,
            n1,
            budget,
            op_budget,
            grid,
            chains,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn context(&self) -> &KernelContext {
        &self.ctx
    }

    pub fn target_dim(&self) -> usize {
        self.n1
    }

    /// Innermost evaluatable layer for chain `k`: `P[phi_k]` for boundary
    /// data, the source itself for `k = m`.
    fn inner_fn(ctx: &KernelContext, spec: &ProblemSpec, k: usize) -> InnerFn {
        let preset = spec.phi[k].clone();
        if k == spec.m {
            Box::new(move |y, out| preset.eval(y, out))
        } else {
            match preset {
                Preset::HemisphereSign => {
                    let ctx = *ctx;
                    Box::new(move |y, out| {
                        out.fill(0.0);
                        let sign = |c: f64| if c >= 0.0 { 1.0 } else { -1.0 };
                        let p = Point::new(y.to_vec()).expect("interior node");
                        out[0] = poisson_zonal(&ctx, &sign, &p).unwrap_or(f64::NAN);
                    })
                }
                Preset::RadialPoly { coeffs } => {
                    let c: f64 = coeffs.iter().sum();
                    Box::new(move |_, out| {
                        out.fill(0.0);
                        out[0] = c;
                    })
                }
                // constants and coordinates are their own harmonic
                // extensions
                other => Box::new(move |y, out| other.eval(y, out)),
            }
        }
    }

    fn build_chain(
        ctx: &KernelContext,
        grid: &BallRule,
        n1: usize,
        spec: &ProblemSpec,
        k: usize,
        op_budget: &Budget,
    ) -> Result<Chain> {
        let len = if k == spec.m { spec.m } else { k };
        if spec.phi[k].is_zero() {
            return Ok(Chain {
                state: ChainState::Zero,
                layer_err: 0.0,
                interp_err: 0.0,
            });
        }
        let inner = Self::inner_fn(ctx, spec, k);
        let inner_err = if matches!(spec.phi[k], Preset::HemisphereSign) && k < spec.m {
            1e-8
        } else {
            0.0
        };
        if len == 1 {
            return Ok(Chain {
                state: ChainState::Direct(inner),
                layer_err: inner_err,
                interp_err: 0.0,
            });
        }

        let damping = 1.0 / (2.0 * spec.n as f64);
        let mut layer_err = inner_err;
        let mut values = Self::apply_green_to_fn(ctx, grid, n1, &inner, op_budget)?;
        layer_err = layer_err * damping + values.1;
        let mut grid_values = values.0;
        for _ in 2..len {
            let interp = Self::interp_fn(grid, &grid_values);
            values = Self::apply_green_to_fn(ctx, grid, n1, &interp, op_budget)?;
            layer_err =
                (layer_err + Self::radial_interp_error(grid, &grid_values)) * damping + values.1;
            grid_values = values.0;
        }
        let interp_err = Self::radial_interp_error(grid, &grid_values);
        Ok(Chain {
            state: ChainState::Grid(grid_values),
            layer_err,
            interp_err,
        })
    }

    fn interp_fn(grid: &BallRule, values: &[Vec<f64>]) -> InnerFn {
        let grid = grid.clone();
        let values = values.to_vec();
        Box::new(move |y, out| grid.interpolate_vanishing(&values, y, out))
    }

    /// One Green application of a pointwise-evaluatable layer, producing
    /// grid values; rows are independent and parallelized, the result is
    /// ordered by node index (deterministic).
    fn apply_green_to_fn(
        ctx: &KernelContext,
        grid: &BallRule,
        n1: usize,
        f: &InnerFn,
        op_budget: &Budget,
    ) -> Result<(Vec<Vec<f64>>, f64)> {
        let indices: Vec<(usize, usize)> = (0..grid.shells())
            .flat_map(|q| (0..grid.sphere().len()).map(move |s| (q, s)))
            .collect();
        let rows: Result<Vec<VecEstimate>> = indices
            .par_iter()
            .map(|&(q, s)| {
                let node = Point::new(grid.node(q, s)).expect("grid node");
                green_integrate_multi(ctx, &node, n1, |y, out| f(y, out), op_budget)
            })
            .collect();
        let rows = rows?;
        let err = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        Ok((rows.into_iter().map(|r| r.values).collect(), err))
    }

    /// Piecewise-linear radial interpolation error estimate from second
    /// differences of the grid values across shells.
    fn radial_interp_error(grid: &BallRule, values: &[Vec<f64>]) -> f64 {
        let shells = grid.shells();
        if shells < 3 {
            return 0.0;
        }
        let s_count = grid.sphere().len();
        let mut worst = 0.0_f64;
        for s in (0..s_count).step_by((s_count / 16).max(1)) {
            for q in 1..shells - 1 {
                let r0 = grid.radius(q - 1);
                let r1 = grid.radius(q);
                let r2 = grid.radius(q + 1);
                let h = (r2 - r0) / 2.0;
                for c in 0..values[0].len() {
                    let v0 = values[grid.flat_index(q - 1, s)][c];
                    let v1 = values[grid.flat_index(q, s)][c];
                    let v2 = values[grid.flat_index(q + 1, s)][c];
                    // |f''| h^2 / 8 with f'' from the centered second
                    // difference
                    let second = (v2 - 2.0 * v1 + v0).abs() / (h * h);
                    worst = worst.max(second * (r2 - r1).max(r1 - r0).powi(2) / 8.0);
                }
            }
        }
        worst
    }

    /// `G_k[phi_k](x)` with error bar. `1 <= k <= m`.
    pub fn green_chain(&self, k: usize, x: &Point) -> Result<VecEstimate> {
        self.green_chain_budgeted(k, x, &self.budget)
    }

    /// [`Self::green_chain`] with an explicit budget for the final
    /// integration layer (used by derivative checks that need a second
    /// resolution level).
    pub fn green_chain_budgeted(
        &self,
        k: usize,
        x: &Point,
        budget: &Budget,
    ) -> Result<VecEstimate> {
        if k == 0 || k > self.spec.m {
            return Err(Error::Domain(format!(
                "chain index k = {k} out of range 1..={}",
                self.spec.m
            )));
        }
        let chain = &self.chains[k - 1];
        let damping = (1.0 - x.norm_sq()).max(0.0) / (2.0 * self.spec.n as f64);
        match &chain.state {
            ChainState::Zero => Ok(VecEstimate {
                values: vec![0.0; self.n1],
                error: 0.0,
            }),
            ChainState::Direct(inner) => {
                let mut est =
                    green_integrate_multi(&self.ctx, x, self.n1, |y, out| inner(y, out), budget)?;
                est.error += chain.layer_err * damping;
                Ok(est)
            }
            ChainState::Grid(values) => {
                let mut est = green_integrate_multi(
                    &self.ctx,
                    x,
                    self.n1,
                    |y, out| self.grid.interpolate_vanishing(values, y, out),
                    budget,
                )?;
                est.error += (chain.layer_err + chain.interp_err) * damping;
                Ok(est)
            }
        }
    }

    /// Poisson part `P[phi_0](x)`.
    pub fn poisson_part(&self, x: &Point) -> Result<VecEstimate> {
        poisson_extend(&self.ctx, &self.spec.phi[0], self.n1, x)
    }

    /// Full solution `f(x) = P[phi_0](x) + sum (-1)^k G_k[phi_k](x)`.
    pub fn solve(&self, x: &Point) -> Result<VecEstimate> {
        let mut acc = self.poisson_part(x)?;
        for k in 1..=self.spec.m {
            let chain = self.green_chain(k, x)?;
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            for i in 0..self.n1 {
                acc.values[i] += sign * chain.values[i];
            }
            acc.error += chain.error;
        }
        Ok(acc)
    }

    /// The Laplacian of the solution via the shifted representation
    /// `Delta f = P[phi_1] + sum_{k=1}^{m-1} (-1)^k G_k[phi_{k+1}]`,
    /// evaluated with the same machinery.
    pub fn expected_laplacian(&self, x: &Point) -> Result<VecEstimate> {
        let mut acc = poisson_extend(&self.ctx, &self.spec.phi[1], self.n1, x)?;
        for k in 1..=self.spec.m - 1 {
            // chain of length k applied to phi_{k+1} (boundary for
            // k+1 <= m-1, source for k+1 = m)
            let est = self.shifted_chain(k, x)?;
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            for i in 0..self.n1 {
                acc.values[i] += sign * est.values[i];
            }
            acc.error += est.error;
        }
        Ok(acc)
    }

    fn shifted_chain(&self, k: usize, x: &Point) -> Result<VecEstimate> {
        let datum = k + 1;
        if self.spec.phi[datum].is_zero() {
            return Ok(VecEstimate {
                values: vec![0.0; self.n1],
                error: 0.0,
            });
        }
        let inner = Self::inner_fn(&self.ctx, &self.spec, datum);
        if k == 1 {
            return green_integrate_multi(&self.ctx, x, self.n1, |y, out| inner(y, out), &self.budget);
        }
        let mut grid_values =
            Self::apply_green_to_fn(&self.ctx, &self.grid, self.n1, &inner, &self.op_budget)?.0;
        for _ in 2..k {
            let interp = Self::interp_fn(&self.grid, &grid_values);
            grid_values =
                Self::apply_green_to_fn(&self.ctx, &self.grid, self.n1, &interp, &self.op_budget)?.0;
        }
        green_integrate_multi(
            &self.ctx,
            x,
            self.n1,
            |y, out| self.grid.interpolate_vanishing(&grid_values, y, out),
            &self.budget,
        )
    }

    /// Finite-difference check that `Delta(solve)` matches the shifted
    /// chain at interior samples (`|x| <= 0.8`); also verifies the a-priori
    /// sup bound on `|Delta f|`.
    pub fn residual_check(&self, samples: &[Point], h: f64) -> Result<BoundsReport> {
        let mut report = BoundsReport::new("laplacian_residual");
        if h <= 0.0 || h < 1e-8 {
            return Err(Error::Degenerate(format!("step size {h} unusable")));
        }
        let nf = self.spec.n as f64;
        let norms = self.spec.data_norms();
        let ratio = (nf + 4.0) / (4.0 * nf * (nf + 2.0));
        // || Delta f || <= ||phi_1|| + sum_{k=1}^{m-1} ||phi_{k+1}||/(2n) ratio^{k-1}
        let apriori = norms[0]
            + (1..self.spec.m)
                .map(|k| norms[k] / (2.0 * nf) * ratio.powi(k as i32 - 1))
                .sum::<f64>();
        for (i, x) in samples.iter().enumerate() {
            if x.norm() > 0.8 {
                return Err(Error::Domain(
                    "residual samples must satisfy |x| <= 0.8".into(),
                ));
            }
            let center = self.solve(x)?;
            let mut lap = vec![0.0; self.n1];
            let mut fd_err = 0.0;
            for j in 0..self.spec.n {
                let mut xp = x.coords().to_vec();
                let mut xm = x.coords().to_vec();
                xp[j] += h;
                xm[j] -= h;
                let fp = self.solve(&Point::new(xp)?)?;
                let fm = self.solve(&Point::new(xm)?)?;
                for c in 0..self.n1 {
                    lap[c] += (fp.values[c] - 2.0 * center.values[c] + fm.values[c]) / (h * h);
                }
                fd_err += (fp.error + 2.0 * center.error + fm.error) / (h * h);
            }
            let expected = self.expected_laplacian(x)?;
            let resid = lap
                .iter()
                .zip(&expected.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            report.push(BoundEntry::check(
                format!("sample_{i}_residual"),
                resid,
                0.0,
                fd_err + expected.error,
                1e-2,
            ));
            let lap_norm = norm_sq_slice(&lap).sqrt();
            report.push(BoundEntry::check(
                format!("sample_{i}_apriori"),
                lap_norm,
                apriori,
                fd_err,
                1e-9,
            ));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::harmonic_measure_u;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn oracle_spec_m2(budget: Option<Budget>) -> ProblemSpec {
        // f = 1 - |x|^2 in n = 3: phi_1 = -2n = -6
        ProblemSpec {
            n: 3,
            m: 2,
            n1: None,
            phi: vec![
                Preset::Zero,
                Preset::Const { value: vec![-6.0] },
                Preset::Zero,
            ],
            budget,
        }
    }

    fn oracle_spec_m3(budget: Option<Budget>) -> ProblemSpec {
        // f = 1 - |x|^4 in n = 3: phi_1 = -4(n+2) = -20, phi_2 = -8n(n+2) = -120
        ProblemSpec {
            n: 3,
            m: 3,
            n1: None,
            phi: vec![
                Preset::Zero,
                Preset::Const { value: vec![-20.0] },
                Preset::Const { value: vec![-120.0] },
                Preset::Zero,
            ],
            budget,
        }
    }

    fn light_budget() -> Budget {
        let mut b = Budget::new(12, 20);
        b.op_sphere_level = Some(8);
        b.op_radial = Some(16);
        b
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"n":3,"m":2,"phi":[{"preset":"zero"},
            {"preset":"const","value":[-6.0,0,0]},{"preset":"zero"}],
            "budget":{"sphere_level":24,"radial":48}}"#;
        let spec = ProblemSpec::from_json(text).unwrap();
        assert_eq!(spec.n, 3);
        assert_eq!(spec.target_dim(), 3);
        let again = ProblemSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn spec_rejects_unknown_keys_and_bad_shapes() {
        assert!(ProblemSpec::from_json(r#"{"n":3,"m":2,"phi":[],"extra":1}"#).is_err());
        assert!(ProblemSpec::from_json(
            r#"{"n":3,"m":2,"phi":[{"preset":"zero"},{"preset":"zero"}]}"#
        )
        .is_err()); // phi too short
        assert!(ProblemSpec::from_json(
            r#"{"n":3,"m":1,"phi":[{"preset":"zero"},{"preset":"zero"}]}"#
        )
        .is_err()); // m < 2
        assert!(ProblemSpec::from_json(
            r#"{"n":2,"m":2,"phi":[{"preset":"zero"},{"preset":"zero"},{"preset":"zero"}]}"#
        )
        .is_err()); // n < 3
        assert!(ProblemSpec::from_json(
            r#"{"n":3,"m":2,"phi":[{"preset":"mystery"},{"preset":"zero"},{"preset":"zero"}]}"#
        )
        .is_err()); // unknown preset
    }

    #[test]
    fn poisson_extend_constants_exact() {
        let ctx = KernelContext::new(3).unwrap();
        let preset = Preset::Const {
            value: vec![2.5, -1.0, 0.25],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..5 {
            let x = Point::new(vec![
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ])
            .unwrap();
            let exact = poisson_extend(&ctx, &preset, 3, &x).unwrap();
            assert_eq!(exact.values, vec![2.5, -1.0, 0.25]);
            // quadrature route agrees to normalization accuracy
            let quad = poisson_extend_quadrature(&ctx, &preset, 3, &x, 16).unwrap();
            for (a, b) in exact.values.iter().zip(&quad.values) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn poisson_extend_identity_map_is_identity() {
        let ctx = KernelContext::new(3).unwrap();
        let preset = Preset::Coordinate { index: None };
        let x = Point::new(vec![0.4, -0.3, 0.2]).unwrap();
        let exact = poisson_extend(&ctx, &preset, 3, &x).unwrap();
        assert_eq!(exact.values, x.coords().to_vec());
        let quad = poisson_extend_quadrature(&ctx, &preset, 3, &x, 24).unwrap();
        for (a, b) in exact.values.iter().zip(&quad.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn poisson_extend_hemisphere_matches_harmonic_measure() {
        let ctx = KernelContext::new(3).unwrap();
        let preset = Preset::HemisphereSign;
        for r in [0.3, 0.7] {
            let x = Point::new(vec![0.0, 0.0, r]).unwrap();
            let got = poisson_extend(&ctx, &preset, 1, &x).unwrap().values[0];
            let expect = harmonic_measure_u(&ctx, r).unwrap();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn green_chain_constant_data_matches_radial_oracle() {
        let solver = PreparedSolver::new(oracle_spec_m2(Some(light_budget()))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..5 {
            let x = Point::new(vec![
                0.8 * (rng.random::<f64>() - 0.5),
                0.8 * (rng.random::<f64>() - 0.5),
                0.8 * (rng.random::<f64>() - 0.5),
            ])
            .unwrap();
            let t = x.norm_sq();
            // G_1[-6] = -6 (1-t)/(2n) = -(1-t)
            let chain = solver.green_chain(1, &x).unwrap();
            let exact = -(1.0 - t);
            assert!(
                (chain.values[0] - exact).abs() <= 1e-3 * exact.abs().max(0.1),
                "{} vs {exact}",
                chain.values[0]
            );
        }
    }

    #[test]
    fn green_chain_bounds_and_range_errors() {
        let solver = PreparedSolver::new(oracle_spec_m3(Some(light_budget()))).unwrap();
        let nf = 3.0_f64;
        let ratio = (nf + 4.0) / (4.0 * nf * (nf + 2.0));
        let norms = solver.spec().data_norms();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..5 {
            let x = Point::new(vec![
                0.9 * (rng.random::<f64>() - 0.5),
                0.9 * (rng.random::<f64>() - 0.5),
                0.9 * (rng.random::<f64>() - 0.5),
            ])
            .unwrap();
            let t = x.norm_sq();
            for k in 1..=2usize {
                let chain = solver.green_chain(k, &x).unwrap();
                let bound =
                    norms[k - 1] / (2.0 * nf) * ratio.powi(k as i32 - 1) * (1.0 - t);
                let val = norm_sq_slice(&chain.values).sqrt();
                assert!(
                    val <= bound + chain.error + 1e-9,
                    "k={k}: |G_k| = {val} > bound {bound}"
                );
            }
            // zero data chain is exactly zero
            let z = solver.green_chain(3, &x).unwrap();
            assert_eq!(z.values, vec![0.0]);
        }
        assert!(solver.green_chain(0, &Point::zero(3).unwrap()).is_err());
        assert!(solver.green_chain(4, &Point::zero(3).unwrap()).is_err());
    }

    #[test]
    fn solve_reproduces_m2_oracle_with_positive_sign() {
        let solver = PreparedSolver::new(oracle_spec_m2(Some(light_budget()))).unwrap();
        let zero = Point::zero(3).unwrap();
        let f0 = solver.solve(&zero).unwrap();
        // sign convention: +1, not -1
        assert!(
            (f0.values[0] - 1.0).abs() <= 1e-2,
            "f(0) = {} should be +1",
            f0.values[0]
        );
        let x = Point::new(vec![0.5, 0.0, 0.3]).unwrap();
        let fx = solver.solve(&x).unwrap();
        assert!((fx.values[0] - (1.0 - x.norm_sq())).abs() <= 1e-2);
    }

    #[test]
    fn solve_reproduces_m3_oracle() {
        let solver = PreparedSolver::new(oracle_spec_m3(Some(light_budget()))).unwrap();
        let mut worst = 0.0_f64;
        for r in [0.0, 0.3, 0.6, 0.75] {
            let x = Point::new(vec![r / 3.0_f64.sqrt(); 3]).unwrap();
            let t = x.norm_sq();
            let fx = solver.solve(&x).unwrap();
            worst = worst.max((fx.values[0] - (1.0 - t * t)).abs());
        }
        assert!(worst <= 1e-2, "sup error {worst}");
    }

    #[test]
    fn solve_zero_data_is_exactly_zero() {
        let spec = ProblemSpec {
            n: 3,
            m: 2,
            n1: Some(2),
            phi: vec![Preset::Zero, Preset::Zero, Preset::Zero],
            budget: Some(light_budget()),
        };
        let solver = PreparedSolver::new(spec).unwrap();
        let x = Point::new(vec![0.3, 0.1, -0.2]).unwrap();
        let fx = solver.solve(&x).unwrap();
        assert_eq!(fx.values, vec![0.0, 0.0]);
        assert_eq!(fx.error, 0.0);
    }

    #[test]
    fn solve_is_additive_in_the_data() {
        let mk = |c1: f64, c2: f64| {
            let spec = ProblemSpec {
                n: 3,
                m: 2,
                n1: None,
                phi: vec![
                    Preset::Zero,
                    Preset::Const { value: vec![c1] },
                    Preset::RadialPoly { coeffs: vec![c2] },
                ],
                budget: Some(light_budget()),
            };
            PreparedSolver::new(spec).unwrap()
        };
        let x = Point::new(vec![0.2, -0.4, 0.1]).unwrap();
        let a = mk(-6.0, 0.0).solve(&x).unwrap().values[0];
        let b = mk(0.0, 12.0).solve(&x).unwrap().values[0];
        let ab = mk(-6.0, 12.0).solve(&x).unwrap().values[0];
        assert_abs_diff_eq!(ab, a + b, epsilon = 1e-10);
    }

    #[test]
    fn residual_check_on_m2_oracle() {
        let solver = PreparedSolver::new(oracle_spec_m2(Some(light_budget()))).unwrap();
        let samples = vec![
            Point::zero(3).unwrap(),
            Point::new(vec![0.4, 0.0, 0.0]).unwrap(),
            Point::new(vec![0.2, 0.3, -0.5]).unwrap(),
        ];
        let report = solver.residual_check(&samples, 0.05).unwrap();
        assert!(report.all_pass(), "{:?}", report.entries);
    }

    #[test]
    fn residual_check_zero_data() {
        let spec = ProblemSpec {
            n: 3,
            m: 2,
            n1: None,
            phi: vec![Preset::Zero, Preset::Zero, Preset::Zero],
            budget: Some(light_budget()),
        };
        let solver = PreparedSolver::new(spec).unwrap();
        let report = solver
            .residual_check(&[Point::zero(3).unwrap()], 0.05)
            .unwrap();
        assert!(report.all_pass());
        assert_eq!(report.entries[0].lhs, 0.0);
    }

    #[test]
    fn data_norms_are_exact() {
        let spec = oracle_spec_m3(None);
        assert_eq!(spec.data_norms(), vec![20.0, 120.0, 0.0]);
    }
}
