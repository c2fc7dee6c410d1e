use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure taxonomy for the laboratory.
///
/// The split matters to callers: [`Error::is_validation`] distinguishes
/// contract violations (bad parameters, unsupported combinations) from
/// failures that arise while honest inputs are being processed (singular
/// Hessians, non-finite evaluations, I/O). The CLI maps the former to exit
/// code 2 and the latter to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on user-supplied parameters was violated.
    #[error("invalid argument: {0}")]
    Validation(String),

    /// The requested (model, algorithm) pair is not implemented.
    #[error("unsupported combination: {model} with {algorithm}; supported: {supported}")]
    Unsupported {
        model: String,
        algorithm: String,
        supported: &'static str,
    },

    /// An operator or objective produced NaN/Inf.
    #[error("non-finite evaluation{}: {context}", fmt_iter(.iteration))]
    NonFinite {
        context: String,
        /// Iteration index when the failure happened inside an iteration driver.
        iteration: Option<usize>,
    },

    /// Newton solve hit a (numerically) singular Hessian.
    #[error("singular Hessian at theta = {at:?}")]
    SingularHessian { at: Vec<f64> },

    /// A root-finding bracket could not be established.
    #[error("root finding failed: {0}")]
    Bracket(String),

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed CSV or config content.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn fmt_iter(it: &Option<usize>) -> String {
    match it {
        Some(t) => format!(" at iteration {t}"),
        None => String::new(),
    }
}

impl Error {
    /// Convenience constructor for [`Error::Validation`].
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Convenience constructor for [`Error::NonFinite`] outside iteration loops.
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
            iteration: None,
        }
    }

    /// True for contract violations (CLI exit 2), false for runtime
    /// failures (CLI exit 3).
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Unsupported { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_split() {
        assert!(Error::validation("x").is_validation());
        assert!(Error::Unsupported {
            model: "m".into(),
            algorithm: "a".into(),
            supported: "",
        }
        .is_validation());
        assert!(!Error::non_finite("x").is_validation());
        assert!(!Error::SingularHessian { at: vec![0.0] }.is_validation());
    }

    #[test]
    fn non_finite_message_names_iteration() {
        let e = Error::NonFinite {
            context: "grad".into(),
            iteration: Some(7),
        };
        assert!(e.to_string().contains("iteration 7"));
    }
}
