use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("material: {0}")]
    Material(String),
    #[error("time grid: {0}")]
    TimeGrid(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("position {x} outside domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("field length {got} does not match expected {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("effective scattering ratio undefined for sigma_t = 0")]
    ZeroTotalCrossSection,
    #[error("corrupted history {history}: {reason}")]
    CorruptedHistory { history: u64, reason: String },
    #[error("empty population: census bank died out")]
    EmptyPopulation,
    #[error("tridiagonal system singular at row {row} (pivot {pivot})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("degenerate window: auxiliary flux has no positive entry")]
    DegenerateWindow,
    #[error("statistics need at least 2 batches, got {0}")]
    TooFewBatches(usize),
    #[error("reference: {0}")]
    Reference(String),
    #[error("mode `{0}` requires a reference table")]
    MissingReference(&'static str),
}
