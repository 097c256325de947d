use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid value at flat index {0} is unknown")]
    UnknownValue(usize),

    #[error("stencil of half-width {k} at position {position} does not fit in {len} samples")]
    StencilSupport { k: usize, position: usize, len: usize },

    #[error("hole is empty")]
    EmptyHole,

    #[error("hole is too close to the grid boundary along axis {axis}: need {needed} clear layers, have {available}")]
    MarginViolation { axis: usize, needed: usize, available: usize },

    #[error("frequency {0:?} has a zero component; the decay bound is undefined there")]
    UndefinedFrequency(Vec<usize>),

    #[error("nothing to impute: every grid value is known")]
    NothingToImpute,

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("minimizer is not unique: null space of dimension {nullity}")]
    NonUniqueMinimizer { nullity: usize },

    #[error("coefficient hypothesis violated at frequency {frequency:?}: |c| = {magnitude:e} exceeds {bound:e}")]
    HypothesisViolation { frequency: Vec<usize>, magnitude: f64, bound: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("singular matrix")]
    Singular,

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("insufficient sampling: {0}")]
    SamplingDeficiency(String),

    #[error("polynomial fit is degenerate: {monomials} monomials, {neighbors} weighted neighbors")]
    VandermondeDegenerate { monomials: usize, neighbors: usize },

    #[error("tangent estimates are inconsistent near the hole (mean projector eigen-gap {gap:.3})")]
    UnstablePlane { gap: f64 },

    #[error("component {component}: {source}")]
    Component {
        component: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input problems (malformed files, bad configuration) as opposed to method failures.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Component { source, .. } => source.is_input_error(),
            _ => matches!(
                self,
                Error::Parse { .. }
                    | Error::Config(_)
                    | Error::Io(_)
                    | Error::Csv(_)
                    | Error::Json(_)
                    | Error::InvalidGrid(_)
                    | Error::OutOfRange(_)
            ),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::UnknownValue(_) => "unknown_value",
            Error::StencilSupport { .. } => "stencil_support",
            Error::EmptyHole => "empty_hole",
            Error::MarginViolation { .. } => "margin_violation",
            Error::UndefinedFrequency(_) => "undefined_frequency",
            Error::NothingToImpute => "nothing_to_impute",
            Error::DegenerateSystem(_) => "degenerate_system",
            Error::NonUniqueMinimizer { .. } => "non_unique_minimizer",
            Error::HypothesisViolation { .. } => "hypothesis_violation",
            Error::OutOfRange(_) => "out_of_range",
            Error::Singular => "singular",
            Error::Numerical(_) => "numerical",
            Error::SamplingDeficiency(_) => "sampling_deficiency",
            Error::VandermondeDegenerate { .. } => "vandermonde_degenerate",
            Error::UnstablePlane { .. } => "unstable_plane",
            Error::Component { .. } => "component",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
