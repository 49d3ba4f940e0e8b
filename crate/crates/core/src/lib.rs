//! Simulation and analytics for the limiting likelihood-ratio processes of
//! change-point models.
//!
//! The crate is organized around the two-sided Poisson-type limit process
//! and its two boundary regimes:
//!
//! * [`poisson_llr`]: event generation and exact closed-form functionals
//!   (mean-location and argmax) of the two-sided process indexed by the
//!   jump size `rho`.
//! * [`limit_processes`]: the small-`rho` Brownian limit on a grid and the
//!   large-`rho` degenerate limit.
//! * [`analytic`]: closed forms, series, and constants used as exact
//!   cross-checks for everything the samplers produce.
//! * [`rng_streams`]: deterministic splittable random streams so every
//!   estimate is reproducible bit for bit.
//! * [`montecarlo`]: the replication engine turning samplers into moment
//!   estimates with standard errors, plus distribution-test utilities.
//! * [`validation`]: the end-to-end checks comparing simulated moments
//!   against the closed forms at fixed tolerances.

pub mod analytic;
pub mod limit_processes;
pub mod montecarlo;
pub mod poisson_llr;
pub mod rng_streams;
pub mod validation;

pub use montecarlo::EstimateRow;
pub use poisson_llr::RhoParam;
pub use rng_streams::{SeedSpec, Stream};
