//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

/// A single schema invariant violation, reported with enough context to fix it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaViolation {
    /// Schema has no levels at all.
    NoLevels,
    /// A level exists but contains no labels.
    EmptyLevel { level: usize },
    /// The same name appears twice within one level.
    DuplicateLabel { level: usize, name: String },
    /// A label names a parent that does not exist at the previous level.
    DanglingParent {
        level: usize,
        name: String,
        parent: String,
    },
    /// A label's stored level disagrees with its position in the schema.
    WrongLevel {
        level: usize,
        name: String,
        stored: usize,
    },
    /// A label has an empty name.
    EmptyName { level: usize },
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaViolation::NoLevels => write!(f, "schema has no levels"),
            SchemaViolation::EmptyLevel { level } => write!(f, "level {level} is empty"),
            SchemaViolation::DuplicateLabel { level, name } => {
                write!(f, "duplicate label \"{name}\" at level {level}")
            }
            SchemaViolation::DanglingParent {
                level,
                name,
                parent,
            } => write!(
                f,
                "label \"{name}\" at level {level} has dangling parent \"{parent}\""
            ),
            SchemaViolation::WrongLevel {
                level,
                name,
                stored,
            } => write!(
                f,
                "label \"{name}\" is placed at level {level} but declares level {stored}"
            ),
            SchemaViolation::EmptyName { level } => {
                write!(f, "empty label name at level {level}")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {}", format_violations(.0))]
    SchemaInvalid(Vec<SchemaViolation>),

    #[error("duplicate sample_id \"{sample_id}\"")]
    DuplicateSample { sample_id: String },

    #[error("label set mismatch for sample \"{sample_id}\"")]
    LabelSetMismatch { sample_id: String },

    #[error("label matrix is empty")]
    EmptyMatrix,

    #[error("matrices target different schema levels ({predictions} vs {references})")]
    LevelMismatch {
        predictions: usize,
        references: usize,
    },

    #[error(
        "sample ids do not align: missing in predictions: [{}]; missing in references: [{}]",
        .missing_in_predictions.join(", "),
        .missing_in_references.join(", ")
    )]
    MisalignedSamples {
        missing_in_predictions: Vec<String>,
        missing_in_references: Vec<String>,
    },

    #[error("degenerate: no positive labels in reference set")]
    DegenerateNoPositives,

    #[error("degenerate: no negative labels in reference set")]
    DegenerateNoNegatives,

    #[error("invalid label distribution: {0}")]
    InvalidDistribution(String),

    #[error(
        "counts are inconsistent with weights: counts have T={counts_t}, A={counts_a}; weights were derived for T={weights_t}, A={weights_a}"
    )]
    CountWeightMismatch {
        counts_t: u64,
        counts_a: u64,
        weights_t: u64,
        weights_a: u64,
    },

    #[error("scoring failed at schema level {level}")]
    LevelFailed {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no counts to aggregate")]
    EmptyInput,

    #[error("empty report corpus")]
    EmptyCorpus,

    #[error(
        "multi-reference scoring is not supported (sample \"{sample_id}\" has {count} references)"
    )]
    MultiReference { sample_id: String, count: usize },

    #[error("rule references unknown label \"{label}\"")]
    UnknownRuleLabel { label: String },

    #[error("invalid rule for label \"{label}\": {reason}")]
    InvalidRule { label: String, reason: String },

    #[error("invalid extractor config: {0}")]
    InvalidExtractorConfig(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("no structured object found in response")]
    NoStructuredObject,

    #[error("non-binary value for label \"{label}\": {value}")]
    NonBinaryValue { label: String, value: String },

    #[error(
        "response violates schema: missing labels [{}], unknown labels [{}]",
        .missing.join(", "),
        .unknown.join(", ")
    )]
    ResponseSchemaViolation {
        missing: Vec<String>,
        unknown: Vec<String>,
    },

    #[error("extraction failed after {attempts} attempts: {last_error}")]
    ExtractionFailed {
        attempts: u32,
        last_error: String,
        /// Raw body of the last response, when one was received.
        last_response: Option<String>,
    },

    #[error("lambda must be in [0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("assignment label set does not match the reward schema")]
    RewardSchemaMismatch,

    #[error("invalid simulation spec: {0}")]
    InvalidSimulationSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {cause}")]
    Io {
        path: PathBuf,
        /// Not a chained `source`: the message embeds it, so printers
        /// that walk the cause chain would repeat it.
        cause: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

fn format_violations(violations: &[SchemaViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
