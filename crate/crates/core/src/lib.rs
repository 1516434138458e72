//! Best-arm identification when every reward may be contaminated.
//!
//! Arms are distributions whose samples are replaced, with probability
//! `eps`, by values chosen by an adversary. Means are then unidentifiable, so
//! arms are compared through their medians, and spread is measured by the
//! median absolute deviation.
//!
//! * [`distributions`]: reward laws, quantiles, robust moments, family checks.
//! * [`contamination`]: oblivious, prescient and malicious adversaries.
//! * [`estimators`]: empirical median and MAD with contamination-aware intervals.
//! * [`bandit`]: uniform exploration and successive elimination.
//! * [`quality`]: lower-tail guarantees for the selected arm.
//! * [`lower_bounds`]: smoothed Bernoulli hard instances and their liftings.
//! * [`replication`]: seeded parallel Monte Carlo.

pub mod bandit;
pub mod contamination;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod lower_bounds;
pub mod quality;
pub mod replication;

pub use bandit::{AlgoConfig, AlphaConstant, BanditInstance, BanditRunResult, EffectiveGapReport, Termination};
pub use contamination::{AdversaryModel, Batch, ContaminatedArm, ContaminationStrategy};
pub use distributions::{Distribution, FamilyParams, RobustMoments};
pub use error::{Error, Result};
pub use estimators::{EstimationParams, RobustEstimateReport, Statistic};
pub use lower_bounds::{HardnessReport, LiftedInstance};
pub use quality::{GuaranteeInputs, QualityGuarantee};
