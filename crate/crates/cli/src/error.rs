//! Error classes and process exit codes.

use treemath_model::ModelError;

/// Bad arguments, missing files or an invalid config.
pub const EXIT_USER: i32 = 2;
/// Input data that does not parse or does not fit the model.
pub const EXIT_DATA: i32 = 3;
/// Anything else.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Data(String),
}

fn model_code(e: &ModelError) -> i32 {
    match e {
        ModelError::Config(_) | ModelError::LengthExceeded { .. } => EXIT_USER,
        ModelError::Io(io) => io_code(io),
        ModelError::Core(_)
        | ModelError::Checkpoint(_)
        | ModelError::MaskedTarget { .. }
        | ModelError::SequenceTooLong { .. }
        | ModelError::ShapeMismatch(_) => EXIT_DATA,
        ModelError::NonFiniteLoss { .. } => EXIT_INTERNAL,
    }
}

fn io_code(e: &std::io::Error) -> i32 {
    use std::io::ErrorKind::*;
    match e.kind() {
        NotFound | PermissionDenied | AlreadyExists | IsADirectory | NotADirectory => EXIT_USER,
        InvalidData | UnexpectedEof => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

/// Exit code for an error, judged by the first classified cause.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::User(_) => EXIT_USER,
                CliError::Data(_) => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return model_code(e);
        }
        if cause.downcast_ref::<treemath_core::Error>().is_some() {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return io_code(e);
        }
    }
    EXIT_INTERNAL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_through_context() {
        let e = anyhow::Error::new(CliError::Data("bad".into())).context("while reading");
        assert_eq!(exit_code(&e), EXIT_DATA);
        let e = anyhow::Error::new(std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(exit_code(&e), EXIT_USER);
        let e = anyhow::Error::new(ModelError::NonFiniteLoss { step: 1 });
        assert_eq!(exit_code(&e), EXIT_INTERNAL);
        assert_eq!(exit_code(&anyhow::anyhow!("?")), EXIT_INTERNAL);
    }
}
