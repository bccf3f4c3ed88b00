use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("temperature theta must be positive, got {0}")]
    NonPositiveTheta(f64),
    #[error("low temperature: theta = {theta} must exceed 8r = {bound}")]
    LowTemperature { theta: f64, bound: f64 },
    #[error("spatial variance coefficient a must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("breeding coefficient {name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("parameter {name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },

    #[error("lambda = {lambda} outside (lambda_min, 0] = ({lambda_min}, 0]")]
    LambdaOutOfRange { lambda: f64, lambda_min: f64 },
    #[error("domain error: {0}")]
    DomainError(&'static str),
    #[error("boundary case: growth rate is zero within tolerance at gamma = {gamma}, kappa = {kappa}")]
    BoundaryCase { gamma: f64, kappa: f64 },

    #[error("ascent duration must be positive, got {0}")]
    DegenerateTau(f64),
    #[error("no sign change of the optimality condition on ({lo}, {hi})")]
    NoBracket { lo: f64, hi: f64 },
    #[error("path type vanishes at s = {0} while the spatial path moves")]
    SingularPath(f64),

    #[error("step h = {h} violates the step contract (h_max = {h_max}, rate budget {budget})")]
    StepTooLarge { h: f64, h_max: f64, budget: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("count_region: kappa and type-window modes are mutually exclusive")]
    ModeConflict,
    #[error("population cap exceeded in {0} replica(s)")]
    CapExceeded(usize),
    #[error("empty population")]
    EmptyPopulation,
    #[error("empty snapshot")]
    EmptySnapshot,
    #[error("function value {0} outside [0, 1]")]
    RangeViolation(f64),

    #[error("insufficient data: need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("alpha = {0} must be below 1/4")]
    AlphaOutOfRange(f64),
    #[error("tube grid too coarse: spacing {spacing} exceeds {max}")]
    GridTooCoarse { spacing: f64, max: f64 },

    #[error("thinning majorant violated at s = {s}: rate {rate} > bound {bound}")]
    MajorantViolation { s: f64, rate: f64, bound: f64 },
    #[error("invalid rate schedule: {0}")]
    InvalidSchedule(&'static str),
}
