//! Hyperelastic pressure/elongation map of a single chamber and the
//! end-to-end analytical model built on top of the kinematics.
//!
//! A chamber of rest length `l0` held at gauge pressure `P` settles at the
//! length `l` solving `P = (l/l0 − (l0/l)³) / k`, with `P` in MPa and `k`
//! in MPa⁻¹. Public functions take and return kPa.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    arc_to_chamber_lengths, arc_to_tip, chamber_lengths_to_arc, tip_to_arc, ActuatorGeometry,
    ChamberLengths, TipPosition,
};

/// Pressure slack accepted at the `[0, p_max]` bounds before a target is
/// declared unreachable; absorbs round-off in the analytical chain.
pub const BOUND_SLACK_KPA: f64 = 1e-9;

const BRACKET_LO: f64 = 0.5;
const BRACKET_HI: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberPressures {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ChamberPressures {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Self {
        Self { p1, p2, p3 }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }

    /// Clamps every component into `[0, p_max]`; reports whether anything moved.
    pub fn clamped(&self, p_max: f64) -> (Self, bool) {
        let c = self.as_array().map(|p| p.clamp(0.0, p_max));
        (c.into(), c != self.as_array())
    }
}

impl From<[f64; 3]> for ChamberPressures {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Result of fitting the compliance `k` to equal-pressurization data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    /// MPa⁻¹
    pub k_hat: f64,
    /// MPa
    pub mu0_hat: f64,
    /// RMS of predicted minus measured pressure, MPa.
    pub residual: f64,
}

impl CalibrationFit {
    /// The input geometry with `k` and `mu0` replaced by the fitted values.
    pub fn apply(&self, geo: &ActuatorGeometry) -> ActuatorGeometry {
        ActuatorGeometry {
            k: self.k_hat,
            mu0: self.mu0_hat,
            ..*geo
        }
    }
}

/// `l/l0 − (l0/l)³`, the stretch measure that is linear in pressure.
fn stretch_measure(li: f64, l0: f64) -> f64 {
    let r = l0 / li;
    li / l0 - r * r * r
}

/// Chamber pressure (kPa) needed to hold length `li` (mm).
pub fn length_to_pressure(li: f64, geo: &ActuatorGeometry) -> f64 {
    stretch_measure(li, geo.l0) / geo.k * 1000.0
}

/// Chamber length (mm) reached at pressure `p` (kPa).
///
/// Bisection on `[0.5·l0, 3·l0]`, run until the bracket collapses to
/// adjacent floats.
pub fn pressure_to_length(p: f64, geo: &ActuatorGeometry) -> Result<f64> {
    let (lo, hi) = (BRACKET_LO * geo.l0, BRACKET_HI * geo.l0);
    let target = geo.k * p / 1000.0;
    if !target.is_finite() {
        return Err(Error::BracketFailure { pressure_kpa: p, lo, hi });
    }
    let g = |l: f64| stretch_measure(l, geo.l0) - target;
    bisect(g, lo, hi, 1e-12).ok_or(Error::BracketFailure { pressure_kpa: p, lo, hi })
}

/// Root of a monotone increasing `f` in `[lo, hi]`, or `None` when the
/// bracket does not contain a sign change. Stops when the bracket is
/// narrower than `rel_tol·|mid|` *and* no further float halving is
/// possible, so the returned root is as tight as `f64` allows.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> Option<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(hi - lo <= rel_tol * hi.abs());
    let (f_lo, f_hi) = (f(lo), f(hi));
    Some(if -f_lo <= f_hi { lo } else { hi })
}

/// Fits `k` by least squares through the origin on `k·P = l/l0 − (l0/l)³`.
///
/// Samples are `(pressure kPa, length mm)` pairs recorded with all three
/// chambers at the same pressure.
pub fn calibrate(samples: &[(f64, f64)], geo: &ActuatorGeometry) -> Result<CalibrationFit> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData {
            got: samples.len(),
            need: 3,
        });
    }
    for (i, &(p, l)) in samples.iter().enumerate() {
        if !p.is_finite() || !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid(
                format!("samples[{i}]"),
                format!("pressure {p} kPa / length {l} mm is not a valid measurement"),
            ));
        }
    }
    let first = samples[0].0;
    if samples.iter().all(|&(p, _)| p == first) {
        return Err(Error::DegenerateFit("all samples share one pressure".into()));
    }
    let (mut spy, mut spp) = (0.0, 0.0);
    for &(p, l) in samples {
        let p_mpa = p / 1000.0;
        spy += p_mpa * stretch_measure(l, geo.l0);
        spp += p_mpa * p_mpa;
    }
    let k_hat = spy / spp;
    if !(k_hat.is_finite() && k_hat > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "fitted compliance {k_hat} is not positive"
        )));
    }
    let sq: f64 = samples
        .iter()
        .map(|&(p, l)| (stretch_measure(l, geo.l0) / k_hat - p / 1000.0).powi(2))
        .sum();
    Ok(CalibrationFit {
        k_hat,
        mu0_hat: geo.area_ratio / k_hat,
        residual: (sq / samples.len() as f64).sqrt(),
    })
}

/// Noiseless equal-pressurization samples at the given pressures.
pub fn equal_pressurization_samples(levels: &[f64], geo: &ActuatorGeometry) -> Result<Vec<(f64, f64)>> {
    levels
        .iter()
        .map(|&p| Ok((p, pressure_to_length(p, geo)?)))
        .collect()
}

/// Chamber pressures (kPa) that place the tip at `tip`.
///
/// Fails with [`Error::Unreachable`] when a chamber would need a pressure
/// outside `[0, p_max]`.
pub fn analytical_ik(tip: TipPosition, geo: &ActuatorGeometry) -> Result<ChamberPressures> {
    let arc = tip_to_arc(tip)?;
    let lengths = arc_to_chamber_lengths(arc, geo)?;
    let mut out = [0.0; 3];
    for (i, li) in lengths.as_array().into_iter().enumerate() {
        let p = length_to_pressure(li, geo);
        if !(p >= -BOUND_SLACK_KPA && p <= geo.p_max + BOUND_SLACK_KPA) {
            return Err(Error::Unreachable {
                chamber: i + 1,
                pressure_kpa: p,
                p_max: geo.p_max,
            });
        }
        out[i] = p.clamp(0.0, geo.p_max);
    }
    Ok(out.into())
}

/// Tip position produced by the given chamber pressures.
pub fn forward_model(p: ChamberPressures, geo: &ActuatorGeometry) -> Result<TipPosition> {
    let mut lengths = [0.0; 3];
    for (slot, pi) in lengths.iter_mut().zip(p.as_array()) {
        *slot = pressure_to_length(pi, geo)?;
    }
    let arc = chamber_lengths_to_arc(ChamberLengths::from(lengths), geo)?;
    Ok(arc_to_tip(arc))
}
