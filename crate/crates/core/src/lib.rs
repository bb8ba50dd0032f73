//! Multi-sense word embeddings learned with a reinforcement-learned sense
//! selector and a skip-gram sense representation.

pub mod config;
pub mod corpus;
mod error;
pub mod evaluation;
pub mod math;
pub mod params;
pub mod representation;
pub mod selection;
pub mod trainer;

pub use config::{BatchReduction, Learner, RewardDirection, TrainingConfig};
pub use error::{Error, Result};
pub use params::{ModelParams, SenseRef, Tensor};
pub use representation::RewardKind;
pub use selection::{Strategy, StrategyKind};
pub use trainer::{TrainStats, Trainer};
