use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("bernoulli number requested for odd index {0}")]
    OddBernoulli(u32),
    #[error("zeta_even needs d >= 1, got {0}")]
    ZetaIndex(u32),
    #[error("no value assigned to generator {0}")]
    MissingGenerator(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("leading coefficient {0} is not an invertible constant")]
    NonUnitLeading(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("(g, n) = ({g}, {n}) is unstable")]
    Unstable { g: u32, n: usize },
    #[error("index {index} exceeds the truncation bound {bound} of {what}")]
    Truncation { what: &'static str, index: u32, bound: u32 },
    #[error("missing entry for g={g}, a={a:?}")]
    MissingEntry { g: u32, a: Vec<u32> },
    #[error("Virasoro index {0} is out of range for this operator family")]
    VirasoroIndex(i32),
    #[error("parity leak: nonzero coefficient at w^{0}")]
    ParityLeak(i32),
    #[error("generating function is in {found} mode, expected {expected}")]
    WrongMode { expected: &'static str, found: &'static str },
    #[error("routes disagree: {0}")]
    RouteMismatch(String),
    #[error("kernel evaluated on its delta support at x={x}, y={y}")]
    DeltaSupport { x: f64, y: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
