use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("gap list is empty")]
    EmptyGapList,
    #[error("gaps {0} and {1} overlap or touch")]
    Overlap(usize, usize),
    #[error("entropy tail bound {bound} exceeds threshold {threshold}")]
    EntropyDivergence { bound: f64, threshold: f64 },
    #[error("arc {0} has normalized length >= 1")]
    DegenerateArc(usize),
    #[error("band {band} is not below Nyquist for grid size {size}")]
    BandTooLarge { band: usize, size: usize },
    #[error("point {0} lies outside the admissible disk")]
    OutsideDomain(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("weight is not log-integrable: {0}")]
    WeightNotLogIntegrable(String),
    #[error("ingredients do not match the family: {0}")]
    IngredientMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("tail index K({0}) exhausts the available coefficients")]
    RangeExhausted(u32),
    #[error("length mismatch: {0} coefficients against {1} weights")]
    LengthMismatch(usize, usize),
    #[error("b_n does not divide b: sampled |b/b_n| reaches {0}")]
    NotADivisor(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
