//! Persistence probabilities `P[min_D f >= level]` by naive and
//! importance-sampled Monte Carlo, capacity brackets, asymptotic predictors,
//! and the entropic-repulsion statistic on rejection-sampled conditioned fields.

mod bracket;
mod estimate;
mod predict;
mod trend;

pub use bracket::{bracket_persistence, gaussian_tail, PersistenceBracket};
pub use estimate::{persist_importance, persist_naive, Method, PersistenceEstimate};
pub use predict::{predict_theta, AsymptoticPrediction, LaplacianConstants, PredictionRow, PredictorInputs};
pub use trend::{
    conditioned_average, repulsion_experiment, theta_trend, ConditionedStat, Estimator, RepulsionConfig, RepulsionRow,
    SingularityHypothesis, TestMeasure, TrendConfig, TrendRow,
};
