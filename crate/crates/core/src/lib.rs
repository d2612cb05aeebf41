//! Robust strong H-infinity norm of linear time-delay systems with
//! structured real uncertainty.
//!
//! A system `E x' = A(t) x + B(t) w`, `z = C(t) x + D(t) w` carries point
//! delays in every coefficient family and real uncertainty blocks entering
//! through `G delta H` terms. The norm is obtained as the reciprocal of the
//! smallest complex feedback `Delta` that destroys strong stability, split
//! into loss of well-posedness, a root-chain crossing and a finite-root
//! crossing.
//!
//! ```no_run
//! use shinf::{robust_strong_hinf_norm, SolverConfig, UncertainDelaySystem};
//! # fn system() -> UncertainDelaySystem { unimplemented!() }
//! let report = robust_strong_hinf_norm(&system(), &SolverConfig::default())?;
//! println!("{}", report.summary());
//! # Ok::<(), shinf::Error>(())
//! ```

pub mod ascent;
pub mod chain;
pub mod config;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub(crate) mod projection;
pub mod rootfind;
pub mod sdep;
pub mod spectrum;
pub mod transfer;

pub use error::{Error, Result};
pub use config::SolverConfig;
pub use model::{Family, Occurrence, SystemData, Target, UncertainDelaySystem, UncertaintyBlock, UncertaintyPoint};
pub use pipeline::{nominal_strong_hinf_norm, robust_strong_hinf_norm, NormReport, Regime};
