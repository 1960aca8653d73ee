use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{name}: {0}", name = .0.name())]
    Core(#[from] yoccoz::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png encoding: {0}")]
    Image(#[from] image::ImageError),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for rejected input or failed preconditions, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use yoccoz::{Angle, Error};

    #[test]
    fn exit_codes() {
        let numerical = [
            Error::SolverDiverged { residual: 1.0, iterations: 10 },
            Error::RayTraceDiverged { angle: Angle::new(1, 7).unwrap(), potential: 0.5 },
        ];
        for e in numerical {
            assert_eq!(CliError::from(e).exit_code(), 3);
        }
        let precondition = [
            Error::AlphaNotRepelling { multiplier_abs: 0.0 },
            Error::NoReturns { level: 2 },
            Error::InsufficientDepth { depth: 10, width: 2 },
        ];
        for e in precondition {
            let e = CliError::from(e);
            assert_eq!(e.exit_code(), 2);
        }
        let e = CliError::from(Error::NoReturns { level: 2 });
        assert!(e.to_string().starts_with("NoReturns: "));
    }
}
