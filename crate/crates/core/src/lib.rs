//! Sparse discovery of hyperelastic strain energy functions for compressible
//! foams from uniaxial tension, compression and simple shear data.
//!
//! The pipeline runs from raw recordings ([`dataproc`]) through a 14-term
//! energy library ([`energy`], [`stress`]) to L0.5-regularised fitting
//! ([`training`]) and model selection ([`discovery`]).

pub mod dataproc;
pub mod discovery;
pub mod energy;
pub mod error;
pub mod kinematics;
pub mod stress;
pub mod training;

pub use dataproc::{builtin_dataset, Curve, FoamDataset};
pub use energy::{ModelSpec, TermId, TermWeights, TERM_COUNT};
pub use error::{Error, Result};
pub use kinematics::{DeformationState, LoadingMode};
pub use stress::StressResult;
pub use training::{Architecture, TrainConfig};
