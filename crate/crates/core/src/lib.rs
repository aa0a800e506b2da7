//! First hitting times of Bessel processes: exact laws, samplers, a survival
//! PDE oracle and the machinery to check tail asymptotics numerically.
//!
//! Conventions: `nu > 0` is the magnitude of the index. Index `+nu` is the
//! transient process (dimension `2(nu + 1)`), index `-nu` hits zero. Tails are
//! survival probabilities `P_a(tau_b > t)` of the first hitting time of level
//! `b` started from `a > b`.

pub mod analysis;
pub mod closed_form;
pub mod error;
pub mod numerics;
pub mod pde_oracle;
pub mod report;
pub mod simulate;

pub use closed_form::{ExpansionPrediction, LawQuery, Regime, Sign, SignedIndex};
pub use error::{Error, Result};
pub use numerics::QuadResult;
pub use pde_oracle::{Spacing, SurvivalGrid, SurvivalSolution};
pub use report::{Check, Report};
pub use simulate::{EulerConfig, McEstimate, RngStream, Sample};
pub use analysis::{RateFit, TailCurve};
