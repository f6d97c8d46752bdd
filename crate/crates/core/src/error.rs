use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("particle number must be positive")]
    NoParticles,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("amplitude vector has zero norm")]
    ZeroNorm,

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("closed-form readout requires J = N/2 even, got N = {0}")]
    OddSpinLength(usize),

    #[error("input amplitudes are not mirror symmetric (max |a_m - a_-m| = {0:e})")]
    Asymmetric(f64),

    #[error("cat threshold requires N >= 4, got N = {0}")]
    ThresholdUndefined(usize),

    #[error("theta = {theta} exceeds the cat threshold {threshold} for N = {n}")]
    NotACat { theta: f64, threshold: f64, n: usize },

    #[error("analytic cat bound requires N >= {min}, got N = {n}")]
    TooFewParticles { n: usize, min: usize },

    #[error("Fisher information must be positive, got {0}")]
    NonPositiveFisher(f64),

    #[error("probability vanishes at m = {m} while dP/dphi = {derivative:e}")]
    DivergentInformation { m: f64, derivative: f64 },

    #[error("signal slope vanishes (|d<Jz>/dphi| = {0:e})")]
    DivergentSlope(f64),

    #[error("every coarse grid point has a vanishing slope")]
    AllDivergent,

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    range: &'static str,
    ok: bool,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
