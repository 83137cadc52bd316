use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input array must contain at least one element")]
    EmptyInput,

    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },

    #[error("integer {value} outside the transform domain [0, 2^31)")]
    TransformDomain { value: i64 },

    #[error("query ({l},{r}) invalid for array of length {n}")]
    InvalidQuery { l: u32, r: u32, n: usize },

    #[error("single layout supports at most 2^24 elements, got {n}")]
    SingleLayoutLimit { n: usize },

    #[error(
        "block configuration rejected for n={n}, block_size={block_size}: \
         need 2^floor(log2(2*ceil(sqrt(n/bs))))*2^-23 <= 1/bs and bs <= 2^18, \
         ceil(n/bs) <= 2^24; got lhs={lhs:.3e}, rhs={rhs:.3e}"
    )]
    PrecisionGate {
        n: usize,
        block_size: usize,
        lhs: f64,
        rhs: f64,
    },

    #[error("no valid block configuration exists for n={n}")]
    NoValidBlockConfig { n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("ray for query ({l},{r}) missed the scene; geometry is inconsistent")]
    NoHit { l: u32, r: u32 },

    #[error(
        "theta+t reconstruction for query ({l},{r}) differs from the stored \
         value by {ulps} ulp (> 1)"
    )]
    Reconstruction { l: u32, r: u32, ulps: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/configuration problems,
    /// 1 for internal or verification failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::EmptyInput
            | Error::NonFiniteValue { .. }
            | Error::TransformDomain { .. }
            | Error::InvalidQuery { .. }
            | Error::SingleLayoutLimit { .. }
            | Error::PrecisionGate { .. }
            | Error::NoValidBlockConfig { .. }
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::NoHit { .. } | Error::Reconstruction { .. } | Error::Internal(_) => 1,
        }
    }
}
