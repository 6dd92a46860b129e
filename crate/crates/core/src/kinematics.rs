//! Constant-curvature geometry of a three-chamber actuator.
//!
//! Three coordinate frames are linked here: the tip position in Cartesian
//! space, the arc parameters `(l, θ, φ)` of the circular backbone, and the
//! axial lengths of the three chambers. The actuator base sits at the
//! origin and the unbent axis points along `+z`. Chamber `i` sits at
//! azimuth `α_i` with `α = (π/2, 7π/6, 11π/6)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bending angles below this are treated as the straight configuration.
pub const THETA_EPS: f64 = 1e-9;

/// Azimuths of the three chambers around the actuator axis.
pub const CHAMBER_AZIMUTHS: [f64; 3] = [FRAC_PI_2, 7.0 * PI / 6.0, 11.0 * PI / 6.0];

/// Physical constants shared by every kinematic map.
///
/// Lengths are in mm, pressures in kPa, `k` in MPa⁻¹ and `mu0` in MPa.
/// `k · mu0 = area_ratio` must hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorGeometry {
    pub d: f64,
    pub l0: f64,
    pub k: f64,
    pub mu0: f64,
    pub area_ratio: f64,
    pub p_max: f64,
}

impl ActuatorGeometry {
    /// Builds a geometry, deriving `mu0 = area_ratio / k`.
    pub fn new(d: f64, l0: f64, k: f64, area_ratio: f64, p_max: f64) -> Result<Self> {
        let geo = Self {
            d,
            l0,
            k,
            mu0: area_ratio / k,
            area_ratio,
            p_max,
        };
        geo.validate()?;
        Ok(geo)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("l0", self.l0),
            ("k", self.k),
            ("mu0", self.mu0),
            ("area_ratio", self.area_ratio),
            ("p_max", self.p_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("geometry.{name}"),
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        let product = self.k * self.mu0;
        if (product - self.area_ratio).abs() > 1e-9 * self.area_ratio {
            return Err(Error::invalid(
                "geometry.mu0",
                format!(
                    "k * mu0 = {product} does not match area_ratio = {}",
                    self.area_ratio
                ),
            ));
        }
        Ok(())
    }
}

impl Default for ActuatorGeometry {
    fn default() -> Self {
        Self::new(12.5, 120.0, 2.128, 2.547, 200.0).expect("default geometry is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TipPosition {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance(&self, other: &TipPosition) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl From<[f64; 3]> for TipPosition {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Constant-curvature state: arc length `l` (mm), bending angle `theta`
/// and bending-plane azimuth `phi` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcParameters {
    pub l: f64,
    pub theta: f64,
    pub phi: f64,
}

impl ArcParameters {
    pub fn new(l: f64, theta: f64, phi: f64) -> Self {
        Self { l, theta, phi }
    }

    pub fn straight(l: f64) -> Self {
        Self::new(l, 0.0, 0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.l > 0.0 && (0.0..PI).contains(&self.theta) && self.phi > -PI && self.phi <= PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberLengths {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl ChamberLengths {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self { l1, l2, l3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn sum(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }
}

impl From<[f64; 3]> for ChamberLengths {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Tip position of the arc end.
///
/// `1 − cos θ` is evaluated as `2 sin²(θ/2)` so small bends keep full
/// relative precision.
pub fn arc_to_tip(arc: ArcParameters) -> TipPosition {
    if arc.theta < THETA_EPS {
        return TipPosition::new(0.0, 0.0, arc.l);
    }
    let radius = arc.l / arc.theta;
    let half = 0.5 * arc.theta;
    let planar = radius * 2.0 * half.sin() * half.sin();
    TipPosition::new(
        planar * arc.phi.cos(),
        planar * arc.phi.sin(),
        radius * arc.theta.sin(),
    )
}

/// Arc parameters reaching a tip position.
///
/// `φ` comes from the two-argument arctangent. `θ` uses the x-projection
/// relation when `|x| ≥ |y|` and the y-projection relation otherwise; both
/// are evaluated through the half-angle identity
/// `cos θ = (a² − u²)/(a² + u²)  ⇔  tan(θ/2) = u/a`, which is exact
/// algebraically and stays accurate near θ = 0.
pub fn tip_to_arc(tip: TipPosition) -> Result<ArcParameters> {
    if !(tip.z > 0.0) {
        return Err(Error::NonPositiveZ { z: tip.z });
    }
    if tip.x == 0.0 && tip.y == 0.0 {
        return Ok(ArcParameters::straight(tip.z));
    }
    let phi = tip.y.atan2(tip.x);
    let (u, a) = if tip.x.abs() >= tip.y.abs() {
        (tip.x.abs(), tip.z * phi.cos().abs())
    } else {
        (tip.y.abs(), tip.z * phi.sin().abs())
    };
    let theta = 2.0 * u.atan2(a);
    if theta < THETA_EPS {
        return Ok(ArcParameters::straight(tip.z));
    }
    let l = tip.z * theta / theta.sin();
    Ok(ArcParameters::new(l, theta, phi))
}

/// Chamber lengths `l_i = l − θ d cos(α_i − φ)`.
pub fn arc_to_chamber_lengths(arc: ArcParameters, geo: &ActuatorGeometry) -> Result<ChamberLengths> {
    let bend = arc.theta * geo.d;
    let mut lengths = [0.0; 3];
    for (i, alpha) in CHAMBER_AZIMUTHS.iter().enumerate() {
        let li = arc.l - bend * (alpha - arc.phi).cos();
        if !(li > 0.0) {
            return Err(Error::NonPositiveLength {
                chamber: i + 1,
                length: li,
            });
        }
        lengths[i] = li;
    }
    Ok(lengths.into())
}

/// Bending radius `R = d(l1+l2+l3) / (2√(l1²+l2²+l3²−l1l2−l1l3−l2l3))`.
///
/// The radicand is computed as `½Σ(l_i − l_j)²`, the same quantity without
/// the cancellation of the expanded form.
pub fn bending_radius(lengths: ChamberLengths, geo: &ActuatorGeometry) -> Result<f64> {
    if !(geo.d > 0.0) {
        return Err(Error::DegenerateGeometry { d: geo.d });
    }
    let ChamberLengths { l1, l2, l3 } = lengths;
    let radicand = 0.5 * ((l1 - l2).powi(2) + (l1 - l3).powi(2) + (l2 - l3).powi(2));
    if radicand == 0.0 {
        return Err(Error::InfiniteRadius);
    }
    Ok(geo.d * lengths.sum() / (2.0 * radicand.sqrt()))
}

/// Inverse of [`arc_to_chamber_lengths`].
///
/// With `δ_i = l_i − l`, the offsets satisfy `θd sin φ = −δ1` and
/// `θd cos φ = (δ2 − δ3)/√3`, which fixes `φ`; `θ = l/R`.
pub fn chamber_lengths_to_arc(lengths: ChamberLengths, geo: &ActuatorGeometry) -> Result<ArcParameters> {
    if !(geo.d > 0.0) {
        return Err(Error::DegenerateGeometry { d: geo.d });
    }
    let l = lengths.sum() / 3.0;
    let radius = match bending_radius(lengths, geo) {
        Ok(r) => r,
        Err(Error::InfiniteRadius) => return Ok(ArcParameters::straight(l)),
        Err(e) => return Err(e),
    };
    let theta = l / radius;
    if theta < THETA_EPS {
        return Ok(ArcParameters::straight(l));
    }
    let sin_part = -(lengths.l1 - l);
    let cos_part = (lengths.l2 - lengths.l3) / 3f64.sqrt();
    let phi = sin_part.atan2(cos_part);
    // atan2 returns [-π, π]; the arc convention is (-π, π].
    let phi = if phi == -PI { PI } else { phi };
    Ok(ArcParameters::new(l, theta, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geo() -> ActuatorGeometry {
        ActuatorGeometry::default()
    }

    #[test]
    fn default_geometry_is_consistent() {
        let g = geo();
        assert_relative_eq!(g.k * g.mu0, g.area_ratio, max_relative = 1e-12);
        assert_relative_eq!(g.mu0, 1.197, epsilon = 5e-4);
    }

    #[test]
    fn geometry_rejects_bad_values() {
        assert!(ActuatorGeometry::new(0.0, 120.0, 2.128, 2.547, 200.0).is_err());
        assert!(ActuatorGeometry::new(12.5, -1.0, 2.128, 2.547, 200.0).is_err());
        let mut g = geo();
        g.mu0 = 1.197;
        assert!(matches!(g.validate(), Err(Error::Invalid { ref path, .. }) if path == "geometry.mu0"));
    }

    #[test]
    fn arc_to_tip_examples() {
        let t = arc_to_tip(ArcParameters::new(150.0, 0.0, 0.0));
        assert_eq!(t, TipPosition::new(0.0, 0.0, 150.0));

        let t = arc_to_tip(ArcParameters::new(150.0, FRAC_PI_2, 0.0));
        assert_relative_eq!(t.x, 95.4930, epsilon = 1e-4);
        assert_relative_eq!(t.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t.z, 95.4930, epsilon = 1e-4);

        let t = arc_to_tip(ArcParameters::new(127.2, 0.4, 0.0));
        assert_relative_eq!(t.x, 25.1026, epsilon = 1e-4);
        assert_relative_eq!(t.z, 123.835, epsilon = 1e-3);
    }

    #[test]
    fn tip_to_arc_examples() {
        let a = tip_to_arc(TipPosition::new(0.0, 0.0, 150.0)).unwrap();
        assert_eq!(a, ArcParameters::new(150.0, 0.0, 0.0));

        let r = 150.0 / FRAC_PI_2;
        let a = tip_to_arc(TipPosition::new(r, 0.0, r)).unwrap();
        assert_relative_eq!(a.l, 150.0, max_relative = 1e-12);
        assert_relative_eq!(a.theta, FRAC_PI_2, max_relative = 1e-12);
        assert_eq!(a.phi, 0.0);

        // |y| > |x| selects the y-projection branch
        let a = tip_to_arc(TipPosition::new(0.0, r, r)).unwrap();
        assert_relative_eq!(a.l, 150.0, max_relative = 1e-12);
        assert_relative_eq!(a.theta, FRAC_PI_2, max_relative = 1e-12);
        assert_relative_eq!(a.phi, FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn tip_to_arc_rejects_non_positive_z() {
        assert!(matches!(
            tip_to_arc(TipPosition::new(1.0, 0.0, 0.0)),
            Err(Error::NonPositiveZ { .. })
        ));
        assert!(tip_to_arc(TipPosition::new(1.0, 0.0, -3.0)).is_err());
    }

    #[test]
    fn chamber_length_examples() {
        let g = geo();
        let c = arc_to_chamber_lengths(ArcParameters::new(150.0, 0.0, 1.3), &g).unwrap();
        assert_eq!(c, ChamberLengths::new(150.0, 150.0, 150.0));

        let c = arc_to_chamber_lengths(ArcParameters::new(127.2, 0.4, 0.0), &g).unwrap();
        assert_relative_eq!(c.l1, 127.2, epsilon = 1e-12);
        assert_relative_eq!(c.l2, 131.530, epsilon = 1e-3);
        assert_relative_eq!(c.l3, 122.870, epsilon = 1e-3);

        let c = arc_to_chamber_lengths(ArcParameters::new(150.0, FRAC_PI_2, FRAC_PI_2), &g).unwrap();
        assert_relative_eq!(c.l1, 130.365, epsilon = 1e-3);
        assert_relative_eq!(c.l2, 159.818, epsilon = 1e-3);
        assert_relative_eq!(c.l3, 159.818, epsilon = 1e-3);
        assert_relative_eq!(c.sum(), 450.0, max_relative = 1e-12);
    }

    #[test]
    fn extreme_bend_gives_non_positive_length() {
        let g = ActuatorGeometry::new(40.0, 120.0, 2.128, 2.547, 200.0).unwrap();
        let err = arc_to_chamber_lengths(ArcParameters::new(10.0, 3.0, FRAC_PI_2), &g).unwrap_err();
        assert!(matches!(err, Error::NonPositiveLength { chamber: 1, .. }));
    }

    #[test]
    fn chamber_lengths_to_arc_examples() {
        let g = geo();
        let a = chamber_lengths_to_arc(ChamberLengths::new(150.0, 150.0, 150.0), &g).unwrap();
        assert_eq!(a, ArcParameters::new(150.0, 0.0, 0.0));

        let c = arc_to_chamber_lengths(ArcParameters::new(127.2, 0.4, 0.0), &g).unwrap();
        let a = chamber_lengths_to_arc(c, &g).unwrap();
        assert_relative_eq!(a.l, 127.2, max_relative = 1e-12);
        assert_relative_eq!(a.theta, 0.4, max_relative = 1e-12);
        assert!(a.phi.abs() < 1e-12);

        let c = arc_to_chamber_lengths(ArcParameters::new(150.0, FRAC_PI_2, FRAC_PI_2), &g).unwrap();
        let a = chamber_lengths_to_arc(c, &g).unwrap();
        assert_relative_eq!(a.l, 150.0, max_relative = 1e-12);
        assert_relative_eq!(a.theta, FRAC_PI_2, max_relative = 1e-12);
        assert_relative_eq!(a.phi, FRAC_PI_2, max_relative = 1e-12);

        // rounded values from a table still land close
        let a = chamber_lengths_to_arc(ChamberLengths::new(127.2, 131.530, 122.870), &g).unwrap();
        assert_relative_eq!(a.theta, 0.4, epsilon = 1e-4);
    }

    #[test]
    fn chamber_lengths_to_arc_needs_positive_offset() {
        let mut g = geo();
        g.d = 0.0;
        assert!(matches!(
            chamber_lengths_to_arc(ChamberLengths::new(1.0, 2.0, 3.0), &g),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn bending_radius_examples() {
        let g = geo();
        let c = arc_to_chamber_lengths(ArcParameters::new(150.0, FRAC_PI_2, FRAC_PI_2), &g).unwrap();
        assert_relative_eq!(bending_radius(c, &g).unwrap(), 95.4930, epsilon = 1e-4);
        let c = arc_to_chamber_lengths(ArcParameters::new(127.2, 0.4, 0.0), &g).unwrap();
        assert_relative_eq!(bending_radius(c, &g).unwrap(), 318.0, max_relative = 1e-12);
        assert!(matches!(
            bending_radius(ChamberLengths::new(150.0, 150.0, 150.0), &g),
            Err(Error::InfiniteRadius)
        ));
    }

    #[test]
    fn phi_at_pi_stays_in_half_open_range() {
        let g = geo();
        let arc = ArcParameters::new(130.0, 0.3, PI);
        let back = chamber_lengths_to_arc(arc_to_chamber_lengths(arc, &g).unwrap(), &g).unwrap();
        assert!(back.is_valid());
        assert_relative_eq!(back.phi, PI, max_relative = 1e-12);
    }
}
