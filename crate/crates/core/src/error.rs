use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A required model constant was not supplied.
    MissingKey(&'static str),
    /// `c`, `lambda`, `alpha` or `delta` is not strictly positive.
    NonPositiveRate { name: &'static str, value: f64 },
    NegativeBeta(f64),
    PhiBelowOne(f64),
    /// A value that must be finite was NaN or infinite.
    NotFinite(&'static str),
    /// Closed-form classical quantities need `(delta + lambda)^2 < c alpha lambda`.
    DegenerateRegime,
    RegimeMismatch { expected: &'static str },
    NegativeX(f64),
    NegativeGap { a: f64, b: f64 },
    InvalidOrder(u8),
    SingularSystem { condition: f64 },
    BracketFailure(&'static str),
    NoSignChange(&'static str),
    /// Smooth-fit postcondition missed after the free-boundary search.
    SmoothFit { what: &'static str, error: f64 },
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    NonConcave { x: f64, second_derivative: f64 },
    InvalidStrategy { a: f64, b: f64 },
    NonPositiveHorizon(f64),
    NoPaths,
    NonPositiveStep(f64),
    UnstableIntegration { x: f64 },
    EmptyRange,
    /// Claim distribution fails `F(0) = 0` or does not integrate to one.
    InvalidDistribution(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MissingKey(k) => write!(f, "missing parameter `{k}`"),
            Error::NonPositiveRate { name, value } => {
                write!(f, "`{name}` must be strictly positive, got {value}")
            }
            Error::NegativeBeta(v) => write!(f, "`beta` must be non-negative, got {v}"),
            Error::PhiBelowOne(v) => write!(f, "`phi` must be at least 1, got {v}"),
            Error::NotFinite(k) => write!(f, "`{k}` is not a finite number"),
            Error::DegenerateRegime => {
                write!(f, "(delta+lambda)^2 >= c*alpha*lambda: paying out everything is optimal")
            }
            Error::RegimeMismatch { expected } => write!(f, "operation requires the {expected} regime"),
            Error::NegativeX(x) => write!(f, "surplus level must be non-negative, got {x}"),
            Error::NegativeGap { a, b } => write!(f, "funding level {a} exceeds barrier {b}"),
            Error::InvalidOrder(o) => write!(f, "derivative order {o} not supported (0, 1 or 2)"),
            Error::SingularSystem { condition } => {
                write!(f, "coefficient system is singular (condition number {condition:e})")
            }
            Error::BracketFailure(what) => write!(f, "root of {what} is not bracketed"),
            Error::NoSignChange(what) => write!(f, "no sign change found for {what}"),
            Error::SmoothFit { what, error } => write!(f, "smooth fit violated: {what} off by {error:e}"),
            Error::OutOfDomain { x, lo, hi } => write!(f, "x = {x} outside [{lo}, {hi}]"),
            Error::NonConcave { x, second_derivative } => {
                write!(f, "value function not concave: V''({x}) = {second_derivative:e}")
            }
            Error::InvalidStrategy { a, b } => write!(f, "invalid band strategy: a = {a} > b = {b} or negative"),
            Error::NonPositiveHorizon(t) => write!(f, "horizon must be positive, got {t}"),
            Error::NoPaths => write!(f, "at least one path is required"),
            Error::NonPositiveStep(d) => write!(f, "grid step must be positive, got {d}"),
            Error::UnstableIntegration { x } => write!(f, "forward integration overflowed at x = {x}"),
            Error::EmptyRange => write!(f, "barrier range is empty"),
            Error::InvalidDistribution(why) => write!(f, "invalid claim distribution: {why}"),
        }
    }
}

impl core::error::Error for Error {}
