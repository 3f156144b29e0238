//! Lagrangian and Frenet-Serret diagnostics for axisymmetric incompressible flows.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod frenet;
pub mod lagrange;
pub mod numerics;
pub mod ode;
pub mod reconstruct;
pub mod series;

pub use error::{Error, Result};
pub use field::{
    acceleration, divergence, pressure_compatibility, CylVec, FieldJet, Fixture, FlowField, GridData, GridField,
    PressureCompatibility, Waveform, Womersley,
};
pub use lagrange::{
    arc_length_reparam, axis_length_reparam, integrate_streamline, integrate_trajectory, unilateral_check, ArcCurve,
    AxisCurve, AxisLengthCurve, CurveDerivs, CurveKind, PathPoint, Region, Seed, Trajectory,
};
pub use frenet::{
    ds_kappa_asymptotic, frame_explicit, frame_numeric, moving_frame_matrices, AsymptoticRegime, FrameMatrices,
    FrenetData,
};
pub use reconstruct::{
    build_streamtube_map, clustered_nodes, deformation_2d, inflow_propagation, invert_streamtube, reconstruct_velocity,
    vtheta_gronwall, Deformation2D, PolyTubeMap, ReconstructedVelocity, Scales, StreamTubeMap, TubeMap,
};
pub use diagnostics::{
    blowup_indicator, disturbance_rates, frame_residuals, material_speed_derivative, momentum_flux_ratio,
    near_axis_breakdown_indicator, pulsatile_monitor, BlowupIndicator, BreakdownIndicator, DisturbanceRates,
    IndicatorStatus, InflowFamily, MonitorConfig, MonitorSample, ResidualRecord, ThresholdConfig,
};
