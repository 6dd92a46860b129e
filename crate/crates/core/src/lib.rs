//! Inverse kinematics for a three-chamber fiber-reinforced soft actuator.
//!
//! The crate is organised along the inverse-kinematics chain:
//!
//! * [`kinematics`]: constant-curvature maps between tip position, arc
//!   parameters and chamber lengths.
//! * [`actuation`]: the hyperelastic pressure/length law, its inverse,
//!   material calibration, and the composed analytical IK / forward model.
//! * [`bpnet`]: a 3–m–3 back-propagation network learning tip → pressures.
//! * [`datagen`]: a simulated sampling platform producing training data.
//! * [`trajectory`]: figure-8 tracking experiments and error reports.
//! * [`config`]: the JSON run configuration shared by the CLI.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod bpnet;
pub mod config;
pub mod datagen;
pub mod error;
pub mod kinematics;
pub mod trajectory;

pub use actuation::{
    analytical_ik, calibrate, forward_model, length_to_pressure, pressure_to_length, CalibrationFit,
    ChamberPressures,
};
pub use error::{Error, Result};
pub use kinematics::{
    arc_to_chamber_lengths, arc_to_tip, bending_radius, chamber_lengths_to_arc, tip_to_arc,
    ActuatorGeometry, ArcParameters, ChamberLengths, TipPosition,
};

/// SplitMix64 finaliser over two words; derives independent stream seeds
/// such as `(run seed, record index)` or `(sweep seed, hidden size)`.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(b)
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
