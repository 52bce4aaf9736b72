use quadseg::stratify::StratifyError;
use quadseg::threshopt::ThresholdError;
use quadseg::{GdaError, ImageError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Stratify(#[from] StratifyError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Gda(#[from] GdaError),
    #[error("{0}")]
    InvalidSpec(String),
    #[error("{0}")]
    InvalidModel(String),
    #[error("{0}")]
    CsvParse(String),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    NonBinaryInput(String),
    #[error("{0}")]
    Serialize(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Machine-parsable category printed before the message.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Image(e) => match e {
                ImageError::MalformedHeader(_) => "MalformedHeader",
                ImageError::TruncatedData { .. } => "TruncatedData",
                ImageError::UnsupportedMaxval(_) => "UnsupportedMaxval",
                ImageError::MalformedData(_) => "MalformedData",
                ImageError::RectOutOfBounds(..) => "RectOutOfBounds",
                ImageError::InvalidDimensions { .. } => "InvalidDimensions",
            },
            CliError::Stratify(StratifyError::InvalidPolicy(_)) => "InvalidPolicy",
            CliError::Threshold(e) => match e {
                ThresholdError::EmptyHistogram => "EmptyHistogram",
                ThresholdError::InvalidWeights(_) => "InvalidWeights",
                ThresholdError::InvalidParams(_) => "InvalidParams",
                ThresholdError::ReportTreeMismatch(_) => "ReportTreeMismatch",
                ThresholdError::Image(_) => "ImageError",
            },
            CliError::Gda(e) => match e {
                GdaError::DimensionMismatch { .. } => "DimensionMismatch",
                GdaError::EmptyClass(_) => "EmptyClass",
                GdaError::InvalidDataset(_) => "InvalidDataset",
                GdaError::InvalidKernel(_) => "InvalidKernel",
                GdaError::DegenerateKernel => "DegenerateKernel",
                GdaError::InsufficientRank => "InsufficientRank",
                GdaError::ZeroVector => "ZeroVector",
                GdaError::InvalidCount(_) => "InvalidCount",
                GdaError::Numerical(_) => "Numerical",
            },
            CliError::InvalidSpec(_) => "InvalidSpec",
            CliError::InvalidModel(_) => "InvalidModel",
            CliError::CsvParse(_) => "CsvParse",
            CliError::DimensionMismatch(_) => "DimensionMismatch",
            CliError::NonBinaryInput(_) => "NonBinaryInput",
            CliError::Serialize(_) => "SerializeError",
        }
    }

    /// `error: <Category>: <message>` on a single line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.category(), msg)
    }
}
