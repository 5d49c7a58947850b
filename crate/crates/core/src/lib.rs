//! Potential theory on the unit ball `B^n` (`n >= 3`): Green and Poisson
//! kernels, Gauss hypergeometric special functions, singularity-aware
//! quadrature, an exact radial-polynomial oracle, a solver for the
//! polyharmonic Dirichlet chain, and a lab that numerically verifies the
//! Schwarz/Heinz-type inequalities, gradient bounds and Lipschitz-constant
//! formulas attached to that problem.
//!
//! The central object is the representation
//!
//! ```text
//! f(x) = P[phi_0](x) + sum_{k=1}^{m} (-1)^k G_k[phi_k](x)
//! ```
//!
//! where `P` is the Poisson integral, `G_k` is a k-fold iterated Green
//! potential, and the data `phi_0..phi_m` prescribe `Delta^k f` on the
//! boundary (with `phi_m` the interior source). Everything downstream of
//! the kernels (solver, inequality checks, CLI tables) is built so that a
//! closed form and an independent numerical route exist for each quantity.

pub mod error;
pub mod geometry;
pub mod inequality;
pub mod kernels;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::{bracket, mobius, mobius_jacobian_abs, Point, SquareMatrix};
pub use kernels::KernelContext;
pub use quadrature::{BallRule, Budget, Estimate, SphereRule};
pub use radial::RadialPoly;
pub use solver::{PreparedSolver, ProblemSpec};

