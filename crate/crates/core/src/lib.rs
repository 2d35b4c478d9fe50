//! Exact distribution of a tagged particle in the asymmetric simple
//! exclusion process on `Z`, from Bethe-ansatz contour integrals, together
//! with the independent oracles used to check them.
//!
//! ```
//! use asep_core::{plan_contours, prob_alternating, DistributionQuery, ModelParams};
//!
//! let params = ModelParams::new(0.3).unwrap();
//! let plan = plan_contours(&params, 1.3).unwrap();
//! let query = DistributionQuery::new(1, 1, 0.0).with_tol(1e-10);
//! let report = prob_alternating(&query, &plan).unwrap();
//! assert!((report.value - 1.0).abs() < 1e-8);
//! ```

pub mod dist;
pub mod error;
pub mod identities;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod quad;
pub mod taucomb;

pub use dist::{
    prob_alternating, prob_alternating_unsym, prob_finite, prob_onesided, prob_step, probability, SeriesReport,
    TermIndex,
};
pub use error::{AsepError, Result};
pub use model::{epsilon, f_factor, i_weight, Complex, DistributionQuery, FiniteSet, InitialCondition, ModelParams};
pub use quad::{plan_contours, ContourPlan, QuadratureResult, DEFAULT_SAFETY};
