use usd_embed_core::Error as CoreError;

/// Failures that stop a command before a report exists.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input. Exit 1.
    #[error("{0}")]
    Validation(String),
    /// Well-formed input that admits no embedding or design. Exit 2.
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }

    /// Classifies a core error, prefixing `context`.
    pub fn from_core(context: &str, e: CoreError) -> Self {
        let msg = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        match e {
            CoreError::InfeasibleProbabilities { .. }
            | CoreError::PassivityViolation { .. }
            | CoreError::DegenerateDesign { .. } => CliError::Infeasible(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core("", e)
    }
}
