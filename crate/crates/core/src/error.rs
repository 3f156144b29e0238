use thiserror::Error;

/// Errors raised by field evaluation, integration and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point (r={r}, z={z}, t={t}) lies outside the field domain")]
    OutOfDomain { r: f64, z: f64, t: f64 },
    #[error("negative radius r={0}")]
    NegativeRadius(f64),
    #[error("third-order derivatives are not available for gridded fields")]
    ThirdOrderUnavailable,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("trajectory left the field domain at t={t}")]
    LeftDomain { t: f64 },
    #[error("step size underflow at x={x}")]
    StiffnessFailure { x: f64 },
    #[error("flow is not unilateral: v_z={v_z} <= 0 at (r={r}, z={z}, t={t})")]
    NotUnilateral { r: f64, z: f64, t: f64, v_z: f64 },
    #[error("degenerate speed |d_z Phi| = 0 at z={0}")]
    DegenerateSpeed(f64),
    #[error("degenerate Frenet frame (curvature {kappa} below floor {floor})")]
    Degenerate { kappa: f64, floor: f64 },
    #[error("stencil does not fit inside the curve span at s={0}")]
    InsufficientSpan(f64),
    #[error("tube condition violated: 1 - kappa*r_bar = {0} <= 0")]
    TubeViolation(f64),
    #[error("degenerate stream tube: d(R^2)/d r0 = {0} <= 0")]
    DegenerateTube(f64),
    #[error("radius r={r} outside stream-tube range [0, {r_max}] at z={z}")]
    OutsideTubeRange { r: f64, z: f64, r_max: f64 },
    #[error("stream-tube map is not monotone in r0 near r={0}")]
    NonMonotone(f64),
    #[error("seed spacing too coarse: d R/d r0 = {value} at r0={r0}, z={z}")]
    SeedSpacingTooCoarse { r0: f64, z: f64, value: f64 },
    #[error("stream-tube map needs at least {needed} time nodes, has {have}")]
    InsufficientTimeNodes { needed: usize, have: usize },
    #[error("stagnant point: |u| = {0} below speed floor")]
    StagnantPoint(f64),
    #[error("stagnant axis: v_z(0, z, t) = {0} below speed floor")]
    StagnantAxis(f64),
    #[error("finite-difference step too large for the tube: 1 - kappa*h = {0}")]
    StepTooLarge(f64),
    #[error("zero volume flux through the cross-section ({0})")]
    ZeroFlux(f64),
}

impl Error {
    /// Short machine-readable tag used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::NegativeRadius(_) => "NegativeRadius",
            Error::ThirdOrderUnavailable => "ThirdOrderUnavailable",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::LeftDomain { .. } => "LeftDomain",
            Error::StiffnessFailure { .. } => "StiffnessFailure",
            Error::NotUnilateral { .. } => "NotUnilateral",
            Error::DegenerateSpeed(_) => "DegenerateSpeed",
            Error::Degenerate { .. } => "Degenerate",
            Error::InsufficientSpan(_) => "InsufficientSpan",
            Error::TubeViolation(_) => "TubeViolation",
            Error::DegenerateTube(_) => "DegenerateTube",
            Error::OutsideTubeRange { .. } => "OutsideTubeRange",
            Error::NonMonotone(_) => "NonMonotone",
            Error::SeedSpacingTooCoarse { .. } => "SeedSpacingTooCoarse",
            Error::InsufficientTimeNodes { .. } => "InsufficientTimeNodes",
            Error::StagnantPoint(_) => "StagnantPoint",
            Error::StagnantAxis(_) => "StagnantAxis",
            Error::StepTooLarge(_) => "StepTooLarge",
            Error::ZeroFlux(_) => "ZeroFlux",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
