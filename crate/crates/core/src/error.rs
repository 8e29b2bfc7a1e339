use std::fmt;

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Config,
    Profile,
    Simulate,
    Forward,
    Evolve,
    Kernel,
    Marchenko,
    Measure,
    Reconstruct,
    Compare,
    Output,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Profile => "profile",
            Stage::Simulate => "simulate",
            Stage::Forward => "forward",
            Stage::Evolve => "evolve",
            Stage::Kernel => "kernel",
            Stage::Marchenko => "marchenko",
            Stage::Measure => "measure",
            Stage::Reconstruct => "reconstruct",
            Stage::Compare => "compare",
            Stage::Output => "output",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TodaError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("band edge: lambda = {0} has no unambiguous branch")]
    BandEdge(f64),

    #[error("degenerate coefficient a_{index} = {value:e}")]
    DegenerateCoefficient { index: i64, value: f64 },

    #[error("lambda = {lambda} lies within {distance:e} of an L0 eigenvalue; adjust the grid")]
    PoleProximity { lambda: f64, distance: f64 },

    #[error("degenerate spectral point at lambda = {lambda}: {reason}")]
    DegeneratePoint { lambda: f64, reason: String },

    #[error("asymptotics mismatch for bound state mu = {mu}: residual {residual:e}")]
    AsymptoticsMismatch { mu: f64, residual: f64 },

    #[error("kernel index {index} is not resolved by a grid of {grid_size} nodes")]
    Resolution { index: i64, grid_size: usize },

    #[error("kernel quality: {0}")]
    KernelQuality(String),

    #[error("reconstruction failure at n = {index}: {reason}")]
    Reconstruction { index: i64, reason: String },

    #[error("measure quality: {0}")]
    MeasureQuality(String),

    #[error("step size too large: a_{index} became non-positive at t = {t}; retry with smaller dt")]
    StepSize { index: i64, t: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Picard iteration does not contract (distances {distances:?}); use a smaller T")]
    ContractionFailure { distances: Vec<f64> },

    #[error("{what} {index}: {source}")]
    Indexed {
        what: &'static str,
        index: usize,
        #[source]
        source: Box<TodaError>,
    },

    #[error("{stage} stage failed: {source}")]
    Staged {
        stage: Stage,
        #[source]
        source: Box<TodaError>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl TodaError {
    pub fn at(self, stage: Stage) -> TodaError {
        match self {
            TodaError::Staged { .. } => self,
            other => TodaError::Staged {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            TodaError::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Process exit code: 2 for configuration, 3 for numerical, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            TodaError::Staged { source, .. } | TodaError::Indexed { source, .. } => {
                source.exit_code()
            }
            TodaError::Config(_) | TodaError::Usage(_) => 2,
            TodaError::Io { .. } => 4,
            _ => 3,
        }
    }

    pub(crate) fn indexed(self, what: &'static str, index: usize) -> TodaError {
        TodaError::Indexed {
            what,
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        TodaError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = TodaError> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_root_cause() {
        assert_eq!(TodaError::Config("x".into()).exit_code(), 2);
        assert_eq!(TodaError::Numerical("x".into()).exit_code(), 3);
        let io = TodaError::io("out", std::io::Error::other("denied"));
        assert_eq!(io.at(Stage::Output).exit_code(), 4);
        let nested = TodaError::BandEdge(2.0).indexed("node", 3).at(Stage::Forward);
        assert_eq!(nested.exit_code(), 3);
        assert_eq!(nested.stage(), Some(Stage::Forward));
    }

    #[test]
    fn stage_tag_is_applied_once() {
        let e = TodaError::Usage("x".into()).at(Stage::Kernel).at(Stage::Output);
        assert_eq!(e.stage(), Some(Stage::Kernel));
        assert!(e.to_string().starts_with("kernel stage failed"));
    }
}
