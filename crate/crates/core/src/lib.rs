//! MAXVAR and CVaR risk measures on finite scenario laws, with dual
//! envelopes, axiom verification and a scenario-file front end.

pub mod axioms;
pub mod dist;
pub mod envelope;
pub mod error;
pub mod generate;
pub mod measures;
pub mod numeric;
pub mod quadrature;
pub mod report;
pub mod sampler;
pub mod table;

pub use dist::{CdfValue, EmpiricalDistribution};
pub use error::{Result, RiskError};
pub use measures::{CopyCount, CvarResult, McEstimate, QuadratureRule, RiskLevel};
pub use sampler::SeededSampler;
pub use table::{IoError, PortfolioSpec, ScenarioTable};
