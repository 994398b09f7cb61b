//! Toy-scale experiments: synthetic molecules, training, the representation
//! study and the data-efficiency sweep.

pub mod checks;
pub mod config;
pub mod data;
pub mod study;
pub mod train;

pub use checks::{frame_equivariance, model_equivariance, FrameCheck};
pub use config::ExperimentConfig;
pub use data::{generate_dataset, make_batch, DatasetConfig, Molecule, Split, Targets, ToyDataset};
pub use train::{learning_rate, train, MetricRow, MetricsReport, METRICS_HEADER};
pub use study::{
    data_efficiency_sweep, log_log_slope, median, representation_study, StudyReport, StudyRow, SweepReport, SweepRow,
    Variant, STUDY_HEADER, SWEEP_HEADER,
};
