//! Direct parametrisation of invariant manifolds for quadratic
//! differential-algebraic systems, with estimates of how far the resulting
//! expansions can be trusted.
//!
//! - [`model`]: systems `B y' = A y + Q(y, y)` with optional harmonic forcing.
//! - [`spectral`]: master-mode selection and eigenvector scaling.
//! - [`parametrisation`]: order-by-order coefficients of `W` and `f`.
//! - [`validity`]: invariance, singularity and series criteria.
//! - [`romdyn`]: backbones, forced responses and forcing limits.
//! - [`oracle`]: full-order integration and shooting references.
//!
//! ```
//! use dpim::model::duffing;
//! use dpim::parametrisation::{Parametrisation, Settings, Style};
//! use dpim::validity::simplified_limit;
//!
//! let par = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &Settings::new(Style::Cnf, 7, 1.5)).unwrap();
//! let est = simplified_limit(&par, 0.01);
//! assert!(est.rho_star.unwrap() > 0.5);
//! ```

pub mod error;
pub mod linalg;
pub mod model;
pub mod multiindex;
pub mod oracle;
pub mod parametrisation;
pub mod report;
pub mod romdyn;
pub mod spectral;
pub mod validity;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/parametrisation.md")]
    mod parametrisation {}
    #[doc = include_str!("../../../book/src/validity.md")]
    mod validity {}
    #[doc = include_str!("../../../book/src/reduced-dynamics.md")]
    mod reduced_dynamics {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
