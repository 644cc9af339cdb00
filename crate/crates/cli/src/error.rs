use ngramvec::evaluation::EvalError;
use ngramvec::model_store::ModelStoreError;
use ngramvec::trainer::{ConfigError, TrainError};
use thiserror::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Invalid flag values or combinations.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<ConfigError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<TrainError>() {
            match e {
                TrainError::Config(_) | TrainError::NoWorkers => return EXIT_USAGE,
                TrainError::NonFinite => return EXIT_NUMERIC,
                _ => {}
            }
        }
        if let Some(EvalError::ConstantInput | EvalError::DegenerateVector) = cause.downcast_ref::<EvalError>() {
            return EXIT_NUMERIC;
        }
        if let Some(ModelStoreError::NonFinite { .. }) = cause.downcast_ref::<ModelStoreError>() {
            return EXIT_NUMERIC;
        }
    }
    EXIT_DATA
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(exit_code(&UsageError("x".into()).into()), EXIT_USAGE);
        assert_eq!(exit_code(&TrainError::NonFinite.into()), EXIT_NUMERIC);
        assert_eq!(
            exit_code(&anyhow::Error::from(EvalError::ConstantInput).context("eval")),
            EXIT_NUMERIC
        );
        assert_eq!(exit_code(&EvalError::EmptyDataset.into()), EXIT_DATA);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), EXIT_DATA);
    }
}
