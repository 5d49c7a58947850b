//! Command implementations behind the `polypotential` binary, exposed as a
//! library so the commands can be exercised directly in tests.
//!
//! Outputs are deterministic: a fixed `RunConfig` (command, seed, budget and
//! tolerance overrides) produces byte-identical documents.

use polypotential::error::{Error, Result};
use polypotential::geometry::Point;
use polypotential::inequality::{lipschitz_constants, LipschitzInputs};
use polypotential::kernels::{
    green_mass, sphere_moment, sphere_moment_series, weighted_green_mass_i1, KernelContext,
};
use polypotential::quadrature::{green_integrate, tanh_sinh, Budget, SphereRule};
use polypotential::report::{fmt_f64, rows_to_csv, SCHEMA_VERSION};
use polypotential::solver::ProblemSpec;
use polypotential::specfun::{beta_fn, sphere_singular_integral};
use polypotential::PreparedSolver;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Run configuration shared by all commands; everything that affects the
/// output is recorded in the output itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub format: OutputFormat,
    /// Override of the per-n quadrature-identity tolerance.
    pub tol: Option<f64>,
    pub sphere_level: Option<usize>,
    pub radial: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 12345,
            format: OutputFormat::Json,
            tol: None,
            sphere_level: None,
            radial: None,
        }
    }
}

impl RunConfig {
    fn budget_for(&self, n: usize) -> Budget {
        let mut b = Budget::default_for(n);
        if let Some(l) = self.sphere_level {
            b.sphere_level = l;
        }
        if let Some(r) = self.radial {
            b.radial = r;
        }
        b
    }

    fn mass_tol(&self, n: usize) -> f64 {
        self.tol.unwrap_or(if n <= 4 { 1e-3 } else { 5e-3 })
    }
}

/// `"3"`, `"3,4"` or `"3..5"` (inclusive).
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let lo: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad range start {a:?}")))?;
        let hi: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad range end {b:?}")))?;
        if hi < lo {
            return Err(Error::Schema(format!("empty range {text:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad integer {p:?}")))
        })
        .collect()
}

/// `"1.5"`, `"1.0,1.5"` or `"1.0..2.0:0.1"` (inclusive, fixed step).
pub fn parse_f64_range(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if let Some((range, step)) = text.split_once(':') {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| Error::Schema(format!("range {text:?} needs lo..hi:step")))?;
        let lo: f64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad number {a:?}")))?;
        let hi: f64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad number {b:?}")))?;
        let st: f64 = step
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad step {step:?}")))?;
        if !(st > 0.0) || hi < lo {
            return Err(Error::Schema(format!("bad range {text:?}")));
        }
        let count = ((hi - lo) / st + 1.5).floor() as usize;
        return Ok((0..count).map(|i| lo + st * i as f64).collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        let lo: f64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad number {a:?}")))?;
        let hi: f64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("bad number {b:?}")))?;
        return Ok(vec![lo, hi]);
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Schema(format!("bad number {p:?}")))
        })
        .collect()
}

/// Contents of `norms.json` for the constants command.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NormsFile {
    #[serde(default)]
    pub phi_norms: Vec<f64>,
    #[serde(default)]
    pub q: Option<f64>,
}

impl NormsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
struct IdentityRow {
    n: usize,
    identity: String,
    parameter: String,
    closed_form: f64,
    numeric: f64,
    rel_err: f64,
    tol: f64,
    pass: bool,
}

impl IdentityRow {
    fn new(
        n: usize,
        identity: &str,
        parameter: String,
        closed_form: f64,
        numeric: f64,
        tol: f64,
    ) -> Self {
        let scale = closed_form.abs().max(1e-12);
        let rel_err = (closed_form - numeric).abs() / scale;
        Self {
            n,
            identity: identity.to_string(),
            parameter,
            closed_form,
            numeric,
            rel_err,
            tol,
            pass: rel_err <= tol,
        }
    }
}

#[derive(Debug, Serialize)]
struct IdentitiesDoc {
    schema_version: u32,
    command: String,
    seed: u64,
    rows: Vec<IdentityRow>,
    all_pass: bool,
}

fn random_interior(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Point {
    let coords: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let p = Point::new(coords).expect("dimension");
    let norm = p.norm().max(1e-9);
    p.scale(rmax * rng.random::<f64>().max(0.05) / norm)
}

/// Normalized zonal quadrature of the `n+4` sphere moment (independent of
/// the hypergeometric route).
fn moment_quadrature(n: usize, rho: f64) -> Result<f64> {
    let nf = n as f64;
    let sin_norm = beta_fn((nf - 1.0) / 2.0, 0.5)?;
    let est = tanh_sinh(
        |t| t.sin().powf(nf - 2.0) / (1.0 + rho * rho - 2.0 * rho * t.cos()).powf((nf + 4.0) / 2.0),
        0.0,
        PI,
        1e-11,
    )?;
    Ok(est.value / sin_norm)
}

/// Identity suite: Green mass, weighted mass, sphere moments (three
/// routes), the zonal singular-integral closed form and the Poisson
/// normalization, per requested dimension.
pub fn run_identities(ns: &[usize], cfg: &RunConfig) -> Result<(String, bool)> {
    let mut rows: Vec<IdentityRow> = Vec::new();
    for &n in ns {
        if !(3..=5).contains(&n) {
            return Err(Error::Schema(format!(
                "identities support n in 3..=5, got {n}"
            )));
        }
        let ctx = KernelContext::new(n)?;
        let budget = cfg.budget_for(n);
        let tol = cfg.mass_tol(n);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64));

        let samples: Vec<Point> = (0..20).map(|_| random_interior(&mut rng, n, 0.8)).collect();
        let mass_rows: Result<Vec<(IdentityRow, IdentityRow)>> = samples
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mass = green_integrate(&ctx, x, |_| 1.0, &budget)?;
                let closed = green_mass(&ctx, x)?;
                let row_a = IdentityRow::new(
                    n,
                    "green_mass",
                    format!("sample={i}"),
                    closed,
                    mass.value,
                    tol,
                );
                let weighted = green_integrate(
                    &ctx,
                    x,
                    |y| 1.0 - y.iter().map(|v| v * v).sum::<f64>(),
                    &budget,
                )?;
                let closed_i1 = weighted_green_mass_i1(&ctx, x)?;
                let row_b = IdentityRow::new(
                    n,
                    "weighted_mass_i1",
                    format!("sample={i}"),
                    closed_i1,
                    weighted.value,
                    tol,
                );
                Ok((row_a, row_b))
            })
            .collect();
        for (a, b) in mass_rows? {
            rows.push(a);
            rows.push(b);
        }

        for rho in [0.0_f64, 0.3, 0.7, 0.9] {
            let axis = Point::north_pole(n)?.scale(rho.max(1e-15));
            let hyp = sphere_moment(&ctx, &axis, 1.0, true)?;
            let series = sphere_moment_series(n, rho)?;
            let quad = moment_quadrature(n, rho)?;
            rows.push(IdentityRow::new(
                n,
                "sphere_moment_hyp_vs_series",
                format!("rho={}", fmt_f64(rho)),
                hyp,
                series,
                1e-6,
            ));
            rows.push(IdentityRow::new(
                n,
                "sphere_moment_hyp_vs_quadrature",
                format!("rho={}", fmt_f64(rho)),
                hyp,
                quad,
                1e-6,
            ));
        }

        for i in 0..20 {
            let l1 = 1.2 + rng.random::<f64>() * 3.8;
            let l2 = 0.3 + rng.random::<f64>() * 2.5;
            let r = rng.random::<f64>() * 0.9;
            let closed = sphere_singular_integral(l1, l2, r)?;
            let quad = tanh_sinh(
                |t| t.sin().powf(l1 - 1.0) / (1.0 + r * r - 2.0 * r * t.cos()).powf(l2),
                0.0,
                PI,
                1e-11,
            )?
            .value;
            rows.push(IdentityRow::new(
                n,
                "zonal_singular_integral",
                format!("i={i},l1={},l2={},r={}", fmt_f64(l1), fmt_f64(l2), fmt_f64(r)),
                closed,
                quad,
                1e-8,
            ));
        }

        let rule = SphereRule::new(n, budget.sphere_level.max(24))?;
        for i in 0..3 {
            let x = random_interior(&mut rng, n, 0.6);
            let massp = rule.integrate(|zeta| {
                polypotential::kernels::poisson_raw(n, x.coords(), zeta)
            });
            rows.push(IdentityRow::new(
                n,
                "poisson_normalization",
                format!("sample={i}"),
                1.0,
                massp,
                1e-6,
            ));
        }
    }

    let all_pass = rows.iter().all(|r| r.pass);
    let doc = IdentitiesDoc {
        schema_version: SCHEMA_VERSION,
        command: "identities".into(),
        seed: cfg.seed,
        rows,
        all_pass,
    };
    let text = match cfg.format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut out = vec![vec![
                "schema_version".to_string(),
                "seed".to_string(),
                "n".to_string(),
                "identity".to_string(),
                "parameter".to_string(),
                "closed_form".to_string(),
                "numeric".to_string(),
                "rel_err".to_string(),
                "tol".to_string(),
                "pass".to_string(),
            ]];
            for r in &doc.rows {
                out.push(vec![
                    doc.schema_version.to_string(),
                    doc.seed.to_string(),
                    r.n.to_string(),
                    r.identity.clone(),
                    r.parameter.clone(),
                    fmt_f64(r.closed_form),
                    fmt_f64(r.numeric),
                    fmt_f64(r.rel_err),
                    fmt_f64(r.tol),
                    r.pass.to_string(),
                ]);
            }
            rows_to_csv(&out)
        }
    };
    Ok((text, all_pass))
}

/// Parse a points CSV: one point per line, `n` comma-separated floats.
pub fn parse_points(text: &str, n: usize) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n {
            return Err(Error::Schema(format!(
                "line {}: expected {n} coordinates, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let coords: Result<Vec<f64>> = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("line {}: bad float {f:?}", lineno + 1)))
            })
            .collect();
        points.push(Point::new(coords?)?);
    }
    Ok(points)
}

/// Solve a problem-spec JSON at the given points; the output lists the
/// point, the solution components and the error bar, in input order.
pub fn run_solve(spec_text: &str, points_text: &str, cfg: &RunConfig) -> Result<String> {
    let mut spec = ProblemSpec::from_json(spec_text)?;
    if let Some(l) = cfg.sphere_level {
        let mut b = spec.budget();
        b.sphere_level = l;
        spec.budget = Some(b);
    }
    if let Some(r) = cfg.radial {
        let mut b = spec.budget();
        b.radial = r;
        spec.budget = Some(b);
    }
    let points = parse_points(points_text, spec.n)?;
    let solver = PreparedSolver::new(spec.clone())?;
    let results: Result<Vec<_>> = points.par_iter().map(|x| solver.solve(x)).collect();
    let results = results?;

    match cfg.format {
        OutputFormat::Csv => {
            let n1 = solver.target_dim();
            let mut header = vec!["schema_version".to_string(), "seed".to_string()];
            header.extend((1..=spec.n).map(|i| format!("x{i}")));
            header.extend((1..=n1).map(|i| format!("f{i}")));
            header.push("error_bar".to_string());
            let mut out = vec![header];
            for (p, r) in points.iter().zip(&results) {
                let mut row = vec![SCHEMA_VERSION.to_string(), cfg.seed.to_string()];
                row.extend(p.coords().iter().map(|c| fmt_f64(*c)));
                row.extend(r.values.iter().map(|v| fmt_f64(*v)));
                row.push(fmt_f64(r.error));
                out.push(row);
            }
            Ok(rows_to_csv(&out))
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct SolveRow {
                point: Vec<f64>,
                values: Vec<f64>,
                error_bar: f64,
            }
            #[derive(Serialize)]
            struct SolveDoc {
                schema_version: u32,
                command: String,
                seed: u64,
                rows: Vec<SolveRow>,
            }
            let doc = SolveDoc {
                schema_version: SCHEMA_VERSION,
                command: "solve".into(),
                seed: cfg.seed,
                rows: points
                    .iter()
                    .zip(&results)
                    .map(|(p, r)| SolveRow {
                        point: p.coords().to_vec(),
                        values: r.values.clone(),
                        error_bar: r.error,
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            Ok(s)
        }
    }
}

/// Constant tables over an (n, K) grid: Heinz constant, `c_0`, `delta(n)`,
/// `mu_1..mu_5`, `C_3` with its branch, `M_1` and `N_1`.
pub fn run_constants(
    ns: &[usize],
    ks: &[f64],
    norms: &NormsFile,
    cfg: &RunConfig,
) -> Result<String> {
    let mut reports = Vec::new();
    for &n in ns {
        for &k in ks {
            let rep = lipschitz_constants(&LipschitzInputs {
                n,
                k,
                q: norms.q,
                phi_norms: norms.phi_norms.clone(),
            })?;
            reports.push(rep);
        }
    }

    match cfg.format {
        OutputFormat::Csv => {
            let mut header = vec!["schema_version".to_string(), "seed".to_string()];
            header.extend(reports[0].header());
            header.push("branch".to_string());
            let mut out = vec![header];
            for rep in &reports {
                let mut row = vec![SCHEMA_VERSION.to_string(), cfg.seed.to_string()];
                row.extend(rep.row());
                row.push(rep.branch.clone().unwrap_or_default());
                out.push(row);
            }
            Ok(rows_to_csv(&out))
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct ConstantsDoc<'a> {
                schema_version: u32,
                command: String,
                seed: u64,
                cells: &'a [polypotential::report::ConstantsReport],
            }
            let doc = ConstantsDoc {
                schema_version: SCHEMA_VERSION,
                command: "constants".into(),
                seed: cfg.seed,
                cells: &reports,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_and_range_parsing() {
        assert_eq!(parse_usize_list("3,4").unwrap(), vec![3, 4]);
        assert_eq!(parse_usize_list("3..5").unwrap(), vec![3, 4, 5]);
        assert!(parse_usize_list("x").is_err());
        assert_eq!(parse_f64_range("2.0").unwrap(), vec![2.0]);
        assert_eq!(
            parse_f64_range("1.0..2.0:0.5").unwrap(),
            vec![1.0, 1.5, 2.0]
        );
        assert!(parse_f64_range("2..1:0.5").is_err());
    }

    #[test]
    fn norms_file_rejects_unknown_keys() {
        assert!(NormsFile::from_json(r#"{"phi_norms":[1.0],"q":null}"#).is_ok());
        assert!(NormsFile::from_json(r#"{"phi_norms":[1.0],"mystery":2}"#).is_err());
    }

    #[test]
    fn points_parsing() {
        let pts = parse_points("0,0,0\n0.1, 0.2, 0.3\n", 3).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(parse_points("0,0\n", 3).is_err());
        assert!(parse_points("a,b,c\n", 3).is_err());
    }
}
