use thiserror::Error;

/// Errors surfaced by the laboratory. Each variant corresponds to a named
/// failure of one operation; none of them is retried internally.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid ball: {0}")]
    InvalidBall(String),

    #[error("invalid threshold t = {0}; must be positive")]
    InvalidThreshold(f64),

    #[error("gap ({lo}, {hi}) leaves [0, 1]")]
    InvalidGap { lo: f64, hi: f64 },

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("moment prefix is infeasible (residual {residual:e})")]
    InfeasiblePrefix { residual: f64 },

    #[error("evidence {evidence:e} is below the underflow guard")]
    ZeroEvidence { evidence: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid prior class: {0}")]
    InvalidClass(String),

    #[error("no bound available for {class} with quantity {quantity}")]
    UnsupportedCombination { class: String, quantity: String },

    #[error("every candidate prior gives the data zero probability")]
    EmptyClassGivenData,

    #[error("worst-prior construction failed: {0}")]
    ConstructionFailed(String),

    #[error("oracle budget {0} is below the minimum of 1000")]
    InvalidBudget(usize),

    #[error("oracle found no candidate satisfying the class constraints")]
    NoFeasibleCandidate,

    #[error("oracle candidates all assign zero probability to the data")]
    AllCandidatesZeroEvidence,

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid override '{key}': {reason}")]
    InvalidOverride { key: String, reason: String },

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
