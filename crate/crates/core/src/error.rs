use thiserror::Error;

/// Errors raised by the reduction, analysis and control pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mass matrix E11 is singular")]
    SingularMass,

    #[error("constraint block A21 is rank deficient (rank {rank} < {rows})")]
    RankDeficientConstraint { rank: usize, rows: usize },

    #[error("Schur complement A21 E11^-1 A21^T is singular")]
    SingularSchurComplement,

    #[error("transfer function has a polynomial part of degree >= 1 (C2 S^-1 B2 != 0)")]
    PolynomialDegree,

    #[error("shifted saddle matrix is singular at s = {re} + {im}i")]
    SingularShift { re: f64, im: f64 },

    #[error("reduced pencil is singular at interpolation point {re} + {im}i")]
    ReducedPencilSingular { re: f64, im: f64 },

    #[error("interpolation data invalid: {0}")]
    InvalidInterpolationData(String),

    #[error("basis is empty after rank compression")]
    EmptyBasis,

    #[error("pencil is not regular")]
    SingularPencil,

    #[error("eigenvalue computation failed: {0}")]
    Eigensolver(String),

    #[error("SVD failed to converge")]
    Svd,

    #[error("weight matrix R is not symmetric positive definite")]
    IndefiniteWeight,

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("initial state violates the constraint (relative residual {0:e})")]
    InconsistentInitialState(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("empty output patch {0}")]
    EmptyPatch(usize),

    #[error("malformed matrix header: {0}")]
    MalformedHeader(String),

    #[error("malformed matrix entry on line {line}: {msg}")]
    MalformedEntry { line: usize, msg: String },

    #[error("matrix entry ({row}, {col}) out of range on line {line}")]
    IndexOutOfRange { line: usize, row: usize, col: usize },

    #[error("duplicate matrix entry ({row}, {col}) on line {line}")]
    DuplicateEntry { line: usize, row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::SingularMass => "singular-mass",
            Error::RankDeficientConstraint { .. } => "rank-deficient-constraint",
            Error::SingularSchurComplement => "singular-schur-complement",
            Error::PolynomialDegree => "polynomial-part-degree",
            Error::SingularShift { .. } => "singular-shift",
            Error::ReducedPencilSingular { .. } => "reduced-pencil-singular",
            Error::InvalidInterpolationData(_) => "invalid-interpolation-data",
            Error::EmptyBasis => "empty-basis",
            Error::SingularPencil => "singular-pencil",
            Error::Eigensolver(_) => "eigensolver-failure",
            Error::Svd => "svd-failure",
            Error::IndefiniteWeight => "indefinite-weight",
            Error::NoStabilizingSolution(_) => "no-stabilizing-solution",
            Error::InconsistentInitialState(_) => "inconsistent-initial-state",
            Error::Unsupported(_) => "unsupported",
            Error::DegenerateOperator(_) => "degenerate-operator",
            Error::Geometry(_) => "invalid-geometry",
            Error::EmptyPatch(_) => "empty-patch",
            Error::MalformedHeader(_) => "malformed-header",
            Error::MalformedEntry { .. } => "malformed-entry",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::DuplicateEntry { .. } => "duplicate-entry",
            Error::Config(_) => "invalid-config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit status for the CLI: 2 input/validation, 3 solver, 4 I/O.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Json(_) => 4,
            Error::SingularShift { .. }
            | Error::ReducedPencilSingular { .. }
            | Error::EmptyBasis
            | Error::SingularPencil
            | Error::Eigensolver(_)
            | Error::Svd
            | Error::NoStabilizingSolution(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
