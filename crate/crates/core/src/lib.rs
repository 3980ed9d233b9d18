//! Certified lower/upper bounds on linear scores of an L2-regularized
//! linear classifier after a batch add/remove modification of its
//! training set — without retraining.
//!
//! Given the original optimum `w0` and the modified instances alone, the
//! library constructs a sphere and a segment region guaranteed (sphere,
//! exact half-space) or empirically observed (closed-form half-space) to
//! contain the updated optimum `w1`, then extremizes any linear
//! functional over the region. On top sit two applications: bounding
//! per-coefficient drift and certifying test-instance labels. A
//! retraining oracle and an experiment harness validate and benchmark
//! the bounds.

pub mod data_io;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod regions;
pub mod synth;
pub mod tasks;
pub mod trainer;
pub mod vecops;

pub use data_io::{Dataset, Instance, Modification, ModificationPlan};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentRecord, Method, RunOutput, TaskKind};
pub use losses::LossKind;
pub use regions::{BoundInterval, HalfSpace, HalfSpaceMode, SegmentRegion, SphereRegion};
pub use tasks::{CoefficientBounds, LabelSensitivityReport, LabelTag, Region};
pub use trainer::{TrainConfig, TrainedModel};
