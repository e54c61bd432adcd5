use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("t-covering number is undefined for the empty family")]
    EmptyFamily,

    #[error("search space too large: C({n},{k}) = {vertices} exceeds the vertex cap {cap}")]
    VertexCap {
        n: u32,
        k: u32,
        vertices: u64,
        cap: u64,
    },

    #[error("family support has {support} elements; canonicalization is limited to {limit}")]
    SupportTooLarge { support: u32, limit: u32 },

    #[error("malformed family file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
