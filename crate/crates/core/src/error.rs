//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed its admissibility bound at construction.
    #[error("invalid parameter {name} = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// |rho| fell below the configured tolerance; the SMAC form divides by rho.
    #[error("substitution parameter rho = {rho} is inside the Cobb-Douglas singular limit")]
    CobbDouglasLimit { rho: f64 },

    /// A log-space power would overflow the double-precision exp range.
    #[error("exponent overflow in term {term}: |{value}| exceeds the exp bound")]
    ExponentOverflow { term: String, value: f64 },

    /// 1 - b - c vanished; the integration constant alpha is undefined.
    #[error("singular denominator: 1 - b - c = {value}")]
    SingularDenominator { value: f64 },

    /// The coefficients map outside the region where the SMAC parameters
    /// (A > 0, 0 < delta < 1) exist.
    #[error("coefficients outside the economic region: {detail}")]
    NonEconomicRegion { detail: String },

    /// (1 - b - c)/(1 - b) <= 0: no real scale coefficient `a` exists.
    #[error("non-invertible scale: (1 - b - c)/(1 - b) = {ratio} is not positive")]
    NonInvertibleScale { ratio: f64 },

    /// A logarithm was requested of a non-positive quantity.
    #[error("log domain error: {quantity} = {value} is not positive")]
    LogDomain { quantity: &'static str, value: f64 },

    /// The second derivative vanished; the elasticity formula divides by it.
    #[error("degenerate curvature at X = {at}: f'' is zero")]
    DegenerateCurvature { at: f64 },

    /// The design matrix lost full column rank.
    #[error("rank-deficient design: column {column} is linearly dependent")]
    RankDeficient { column: String },

    /// Too few observations for the requested coefficient count.
    #[error("insufficient data: need more than {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    /// Residual sum of squares is zero; information criteria are unbounded.
    #[error("perfect fit: residual sum of squares is zero")]
    PerfectFit,

    /// The response has zero variance; SRMSE is undefined.
    #[error("undefined SRMSE: response has zero variance")]
    UndefinedSrmse,

    /// Fits over different observation sets cannot be compared by AIC.
    #[error("incomparable fits: {detail}")]
    IncomparableFits { detail: String },

    /// No admissible root was found by the multi-start search.
    #[error("non-invertible coefficients: best residual {best_residual}")]
    NonInvertible { best_residual: f64 },

    /// Several admissible roots survive; the caller must choose.
    #[error("ambiguous inversion: {} admissible roots", roots.len())]
    AmbiguousRoots { roots: Vec<crate::production::VesParams> },

    /// Input file does not carry the mandatory columns.
    #[error("schema error: {detail}")]
    Schema { detail: String },

    /// Input file is empty.
    #[error("empty input: no header row found")]
    EmptyInput,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
