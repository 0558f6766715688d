use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unusable input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Inconsistent or unsupported configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An objective reported a negative merge delta, breaking the
    /// opposite-monotonicity contract the merger engine relies on.
    #[error("objective contract violation: {0}")]
    Contract(String),

    /// Step index outside the recorded history.
    #[error("step {step} out of range 0..={max}")]
    StepOutOfRange { step: usize, max: usize },

    /// Exhaustive partition enumeration refused above the instance-size guard.
    #[error("partition enumeration limited to n <= {max}, got n = {n}")]
    EnumerationBound { n: usize, max: usize },

    /// Two partitions cannot be ordered by the switch-point preconditions.
    #[error("incomparable partitions: {0}")]
    IncomparablePartitions(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
