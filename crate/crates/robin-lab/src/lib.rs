//! robin-lab: a numerical laboratory for the Robin eigenvalue problem
//!
//!   -Δu = λu in Ω,   ∂_ν u + βu = 0 on ∂Ω,
//!
//! on bounded convex domains of the plane, for any real boundary parameter β.
//!
//! The crate computes eigenpairs of the weak form
//! ∫_Ω ∇u·∇φ + β ∫_∂Ω uφ = λ ∫_Ω uφ with P1/P2 finite elements and then
//! verifies, at the discrete level, the quantitative machinery attached to
//! the problem: the ε-trace inequality and its sharp discrete constant, the
//! coercivity shift that makes the form positive definite for β < 0, the
//! Rellich–Pohozaev identity, Reilly's formula on smooth convex bodies,
//! explicit bounds on the boundary tangential gradient and on the Hessian
//! seminorm of eigenfunctions, and the spectral stability of the problem
//! under outer smooth convex approximation of the domain.
//!
//! Module map:
//! - [`geometry`]: convex polygons and support-function bodies; diameter,
//!   inradius/incenter (Chebyshev center), Hausdorff distance, outer
//!   parallel bodies, curvature.
//! - [`mesh`]: deterministic conforming triangulations with oriented
//!   boundary data, uniform (red) refinement, quality reports.
//! - [`fem`]: P1/P2 spaces and exact assembly of stiffness K, mass M and
//!   boundary mass B.
//! - [`eigensolve`]: shifted positive definite factorizations and blocked
//!   inverse iteration for the lowest eigenpairs of (K + βB, M); extreme
//!   generalized eigenvalues of auxiliary pencils.
//! - [`analysis`]: identity and bound verification, producing
//!   [`analysis::IdentityReport`]s.
//! - [`oracles`]: semi-analytic reference spectra for intervals, rectangles
//!   and disks (transcendental root finding, in-crate Bessel functions).
//! - [`experiments`]: stability sweeps along outer parallel bodies, the
//!   H² limit pipeline on polygons, mesh convergence studies.
//! - [`cli`]: the `robin-lab` command-line front end.

pub mod analysis;
pub mod cli;
pub mod dense;
pub mod eigensolve;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod oracles;
pub mod sparse;
pub mod util;

/// Crate-wide error type.
#[derive(Debug, Clone)]
pub enum Error {
    /// A domain failed a validity invariant (degenerate, non-convex, ...).
    InvalidDomain(String),
    /// Requested mesh size is too coarse for the domain.
    TooCoarse { h: f64, rho: f64 },
    /// The generated mesh violated a quality or topology invariant.
    MeshInvariant(String),
    /// An operation received arguments outside its precondition.
    InvalidArgument(String),
    /// An iterative solver did not reach its residual contract.
    NonConvergence { what: String, best_residual: f64 },
    /// A factorization failed (matrix not positive definite).
    Factorization { pivot_index: usize, suggestion: String },
    /// Operation not supported for this domain or space.
    Unsupported(String),
    /// Text-format parse error.
    Parse(String),
    /// I/O error, stringified.
    Io(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::InvalidDomain(s) => write!(f, "invalid domain: {s}"),
            Error::TooCoarse { h, rho } => {
                write!(f, "mesh size h = {h} too coarse for inradius rho = {rho}")
            }
            Error::MeshInvariant(s) => write!(f, "mesh invariant violated: {s}"),
            Error::InvalidArgument(s) => write!(f, "invalid argument: {s}"),
            Error::NonConvergence { what, best_residual } => {
                write!(f, "{what} did not converge (best residual {best_residual:.3e})")
            }
            Error::Factorization { pivot_index, suggestion } => {
                write!(f, "factorization failed at pivot {pivot_index}; {suggestion}")
            }
            Error::Unsupported(s) => write!(f, "unsupported: {s}"),
            Error::Parse(s) => write!(f, "parse error: {s}"),
            Error::Io(s) => write!(f, "io error: {s}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
