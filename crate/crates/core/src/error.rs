use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("affine shift is not a quarter period for some frequency")]
    InexactShift,
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("form is not closed (residual has {0} terms)")]
    NotClosed(usize),
    #[error("form does not vanish on L (pullback has {0} terms)")]
    NotRelative(usize),
    #[error("not a cone cocycle: {0}")]
    NotCocycle(String),
    #[error("frequency budget {budget} too small: input needs {needed}")]
    Budget { budget: i64, needed: i64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("Id + π♯β♭ is singular near {point:?} (|det| = {det:e})")]
    Singular { point: Vec<f64>, det: f64 },
    #[error("form degenerates near {point:?} (|det| = {det:e})")]
    Degenerate { point: Vec<f64>, det: f64 },
    #[error("section leaves the chart: sup bound {bound} ≥ 1/4{}", time.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    ChartExit { bound: f64, time: Option<f64> },
    #[error("outside 𝒲: w_norm = {0}")]
    NotInW(f64),
    #[error("integration failed at {point:?}: {reason}")]
    Integration { point: Vec<f64>, reason: String },
    #[error("frequency cap exceeded: coefficient {coeff:e} at |k| = {freq}")]
    FrequencyCap { coeff: f64, freq: i64 },
    #[error("MC residual {0:e} above tolerance")]
    McResidual(f64),
    #[error("arity {got} above cap {cap}")]
    ArityCap { got: usize, cap: usize },
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
