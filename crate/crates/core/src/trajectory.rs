//! Open-loop path following: a figure-8 waypoint set is turned into a
//! pressure schedule by one of the inverse models, the schedule is played
//! through the forward model, and the tracking error is summarised.

use std::f64::consts::TAU;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::actuation::{analytical_ik, forward_model, ChamberPressures};
use crate::bpnet::{predict_pressures, TrainedModel};
use crate::datagen::NoiseModel;
use crate::error::{Error, Result};
use crate::kinematics::{ActuatorGeometry, TipPosition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub index: usize,
    pub target: TipPosition,
}

/// `count` points of the Gerono lemniscate `x = a sin t`, `y = b sin t cos t`
/// at height `z_c`, with `t` uniform on `[0, 2π]` (both ends included).
pub fn lemniscate_waypoints(a: f64, b: f64, z_c: f64, count: usize) -> Result<Vec<Waypoint>> {
    if count < 2 {
        return Err(Error::invalid("trajectory.count", format!("must be >= 2, got {count}")));
    }
    Ok((0..count)
        .map(|i| {
            let t = TAU * i as f64 / (count - 1) as f64;
            let (s, c) = t.sin_cos();
            Waypoint {
                index: i,
                target: TipPosition::new(a * s, b * s * c, z_c),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Analytical,
    Bpnet,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Analytical => "analytical",
            SolverKind::Bpnet => "bpnet",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytical" => Ok(SolverKind::Analytical),
            "bpnet" => Ok(SolverKind::Bpnet),
            other => Err(Error::invalid("solver", format!("expected analytical|bpnet, got {other:?}"))),
        }
    }
}

/// Inverse model used to plan a schedule.
#[derive(Debug, Clone, Copy)]
pub enum Solver<'a> {
    Analytical,
    Network(&'a TrainedModel),
}

impl Solver<'_> {
    pub fn kind(&self) -> SolverKind {
        match self {
            Solver::Analytical => SolverKind::Analytical,
            Solver::Network(_) => SolverKind::Bpnet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub index: usize,
    pub pressures: ChamberPressures,
    /// The raw prediction left `[0, p_max]` and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSchedule {
    pub solver: SolverKind,
    pub entries: Vec<ScheduleEntry>,
}

/// Pressures for every waypoint.
///
/// The analytical solver fails on the first unreachable waypoint. Network
/// predictions are clamped into `[0, p_max]` and flagged instead.
pub fn plan(waypoints: &[Waypoint], solver: Solver<'_>, geo: &ActuatorGeometry) -> Result<PressureSchedule> {
    let entries = waypoints
        .iter()
        .map(|wp| match solver {
            Solver::Analytical => analytical_ik(wp.target, geo)
                .map(|pressures| ScheduleEntry {
                    index: wp.index,
                    pressures,
                    clamped: false,
                })
                .map_err(|e| Error::UnreachableWaypoint {
                    index: wp.index,
                    source: Box::new(e),
                }),
            Solver::Network(model) => {
                let (pressures, clamped) = predict_pressures(model, wp.target).clamped(geo.p_max);
                Ok(ScheduleEntry {
                    index: wp.index,
                    pressures,
                    clamped,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PressureSchedule {
        solver: solver.kind(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalSettings {
    /// Measurement noise on the achieved tip, keyed by `(seed, index)`.
    pub noise: Option<NoiseModel>,
    pub seed: u64,
    /// Length the mean error is expressed against; `l0` when unset.
    pub reference_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub index: usize,
    pub target: TipPosition,
    pub achieved: TipPosition,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    pub solver: SolverKind,
    pub waypoints: usize,
    pub clamped: usize,
    pub mean_error_mm: f64,
    pub max_error_mm: f64,
    /// Population standard deviation of the per-waypoint errors, mm.
    pub std_error_mm: f64,
    pub reference_length_mm: f64,
    pub relative_mean_error_pct: f64,
}

impl ReportSummary {
    /// Summary statistics of a set of per-waypoint errors.
    pub fn from_errors(
        solver: SolverKind,
        errors: &[f64],
        clamped: usize,
        reference_length: f64,
    ) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InsufficientData { got: 0, need: 1 });
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let std = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            solver,
            waypoints: errors.len(),
            clamped,
            mean_error_mm: mean,
            max_error_mm: max,
            std_error_mm: std,
            reference_length_mm: reference_length,
            relative_mean_error_pct: mean / reference_length * 100.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub rows: Vec<ReportRow>,
    pub summary: ReportSummary,
}

/// Plays a schedule through the forward model and measures the distance
/// from each achieved tip to its waypoint.
pub fn evaluate(
    schedule: &PressureSchedule,
    waypoints: &[Waypoint],
    geo: &ActuatorGeometry,
    settings: &EvalSettings,
) -> Result<TrajectoryReport> {
    if schedule.entries.len() != waypoints.len() {
        return Err(Error::DimensionMismatch {
            expected: waypoints.len(),
            got: schedule.entries.len(),
        });
    }
    let reference = settings.reference_length.unwrap_or(geo.l0);
    if !(reference.is_finite() && reference > 0.0) {
        return Err(Error::invalid("trajectory.reference_length", "must be > 0"));
    }
    if let Some(noise) = &settings.noise {
        noise.validate()?;
    }
    let mut rows = Vec::with_capacity(waypoints.len());
    for (entry, wp) in schedule.entries.iter().zip(waypoints) {
        if entry.index != wp.index {
            return Err(Error::invalid(
                "schedule",
                format!("entry index {} does not match waypoint {}", entry.index, wp.index),
            ));
        }
        let mut achieved = forward_model(entry.pressures, geo)?;
        if let Some(noise) = &settings.noise {
            let off = noise.averaged_offset(settings.seed, wp.index as u64);
            achieved = TipPosition::new(achieved.x + off[0], achieved.y + off[1], achieved.z + off[2]);
        }
        rows.push(ReportRow {
            index: wp.index,
            target: wp.target,
            achieved,
            error: achieved.distance(&wp.target),
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let clamped = schedule.entries.iter().filter(|e| e.clamped).count();
    let summary = ReportSummary::from_errors(schedule.solver, &errors, clamped, reference)?;
    Ok(TrajectoryReport { rows, summary })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleRow {
    index: usize,
    #[serde(rename = "p1_kPa")]
    p1_kpa: f64,
    #[serde(rename = "p2_kPa")]
    p2_kpa: f64,
    #[serde(rename = "p3_kPa")]
    p3_kpa: f64,
    clamped: bool,
    solver: SolverKind,
}

impl PressureSchedule {
    /// CSV `index,p1_kPa,p2_kPa,p3_kPa,clamped,solver`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(ScheduleRow {
                index: e.index,
                p1_kpa: e.pressures.p1,
                p2_kpa: e.pressures.p2,
                p3_kpa: e.pressures.p3,
                clamped: e.clamped,
                solver: self.solver,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut entries = Vec::new();
        let mut solver = None;
        for row in rdr.deserialize() {
            let row: ScheduleRow = row?;
            match solver {
                None => solver = Some(row.solver),
                Some(s) if s != row.solver => {
                    return Err(Error::invalid("schedule.solver", "mixed solvers in one schedule"))
                }
                _ => {}
            }
            entries.push(ScheduleEntry {
                index: row.index,
                pressures: ChamberPressures::new(row.p1_kpa, row.p2_kpa, row.p3_kpa),
                clamped: row.clamped,
            });
        }
        let solver = solver.ok_or_else(|| Error::invalid("schedule", "empty schedule"))?;
        Ok(Self { solver, entries })
    }
}

#[derive(Debug, Serialize)]
struct ReportCsvRow {
    index: usize,
    tx: f64,
    ty: f64,
    tz: f64,
    ax: f64,
    ay: f64,
    az: f64,
    err_mm: f64,
}

impl TrajectoryReport {
    /// CSV `index,tx,ty,tz,ax,ay,az,err_mm`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(ReportCsvRow {
                index: r.index,
                tx: r.target.x,
                ty: r.target.y,
                tz: r.target.z,
                ax: r.achieved.x,
                ay: r.achieved.y,
                az: r.achieved.z,
                err_mm: r.error,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut json = serde_json::to_string_pretty(&self.summary)?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    /// Top view (XOY) and side view (XOZ) of target vs achieved paths.
    pub fn to_svg(&self) -> String {
        const PANEL: f64 = 320.0;
        const PAD: f64 = 30.0;
        let targets: Vec<TipPosition> = self.rows.iter().map(|r| r.target).collect();
        let achieved: Vec<TipPosition> = self.rows.iter().map(|r| r.achieved).collect();
        let all = || targets.iter().chain(&achieved);

        let mut svg = String::new();
        let width = 2.0 * PANEL + 3.0 * PAD;
        let height = PANEL + 2.0 * PAD + 20.0;
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        type Projection = fn(&TipPosition) -> (f64, f64);
        let views: [(&str, Projection); 2] =
            [("top view (x, y)", |p| (p.x, p.y)), ("side view (x, z)", |p| (p.x, p.z))];
        for (panel, (title, project)) in views.iter().enumerate() {
            let x0 = PAD + panel as f64 * (PANEL + PAD);
            let y0 = PAD + 20.0;
            let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in all() {
                let (u, v) = project(p);
                lo_u = lo_u.min(u);
                hi_u = hi_u.max(u);
                lo_v = lo_v.min(v);
                hi_v = hi_v.max(v);
            }
            let span = (hi_u - lo_u).max(hi_v - lo_v).max(1e-6) * 1.1;
            let (cu, cv) = (0.5 * (lo_u + hi_u), 0.5 * (lo_v + hi_v));
            let map = |p: &TipPosition| {
                let (u, v) = project(p);
                (
                    x0 + PANEL * (0.5 + (u - cu) / span),
                    y0 + PANEL * (0.5 - (v - cv) / span),
                )
            };
            let _ = writeln!(
                svg,
                r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">{title}</text>"#,
                x0,
                y0 - 6.0
            );
            for (points, style) in [
                (&targets, r##"stroke="#1f77b4" stroke-dasharray="4 3""##),
                (&achieved, r##"stroke="#d62728""##),
            ] {
                let coords: Vec<String> = points
                    .iter()
                    .map(|p| {
                        let (x, y) = map(p);
                        format!("{x:.3},{y:.3}")
                    })
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" {style} stroke-width="1.5"/>"#,
                    coords.join(" ")
                );
            }
        }
        let _ = writeln!(
            svg,
            r##"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="12"><tspan fill="#1f77b4">target</tspan> / <tspan fill="#d62728">achieved</tspan> ({}, mean error {:.3} mm)</text>"##,
            height - 6.0,
            self.summary.solver,
            self.summary.mean_error_mm
        );
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn default_path() -> Vec<Waypoint> {
        lemniscate_waypoints(15.0, 15.0, 124.0, 41).unwrap()
    }

    #[test]
    fn lemniscate_examples() {
        let wps = default_path();
        assert_eq!(wps.len(), 41);
        assert!(wps.iter().enumerate().all(|(i, w)| w.index == i));
        let (first, last) = (wps[0].target, wps[40].target);
        assert!((first.x - last.x).abs() < 1e-9 && (first.y - last.y).abs() < 1e-9);

        let flat = lemniscate_waypoints(0.0, 0.0, 110.0, 9).unwrap();
        assert!(flat.iter().all(|w| w.target == TipPosition::new(0.0, 0.0, 110.0)));

        // t = π/2 sits at index 10 of 41
        let quarter = wps[10].target;
        assert_relative_eq!(quarter.x, 15.0, max_relative = 1e-14);
        assert!(quarter.y.abs() < 1e-12);
        assert_eq!(quarter.z, 124.0);
        let t = FRAC_PI_2;
        assert_relative_eq!(quarter.x, 15.0 * t.sin(), max_relative = 1e-14);

        assert!(lemniscate_waypoints(1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn analytical_plan_rest_waypoint() {
        let geo = ActuatorGeometry::default();
        let wps = [Waypoint {
            index: 0,
            target: TipPosition::new(0.0, 0.0, geo.l0),
        }];
        let s = plan(&wps, Solver::Analytical, &geo).unwrap();
        assert_eq!(s.entries[0].pressures, ChamberPressures::zero());
    }

    #[test]
    fn analytical_default_path_is_admissible() {
        let geo = ActuatorGeometry::default();
        let s = plan(&default_path(), Solver::Analytical, &geo).unwrap();
        assert_eq!(s.entries.len(), 41);
        for e in &s.entries {
            assert!(!e.clamped);
            assert!(e.pressures.as_array().iter().all(|&p| (0.0..=geo.p_max).contains(&p)));
        }
        let report = evaluate(&s, &default_path(), &geo, &EvalSettings::default()).unwrap();
        assert!(report.summary.mean_error_mm <= 1e-6);
    }

    #[test]
    fn unreachable_waypoint_is_named() {
        let geo = ActuatorGeometry::default();
        let mut wps = default_path();
        wps[7].target = TipPosition::new(80.0, 0.0, 60.0);
        match plan(&wps, Solver::Analytical, &geo) {
            Err(Error::UnreachableWaypoint { index, .. }) => assert_eq!(index, 7),
            other => panic!("expected unreachable waypoint, got {other:?}"),
        }
    }

    #[test]
    fn zero_schedule_errors_are_distances_from_rest() {
        let geo = ActuatorGeometry::default();
        let wps = default_path();
        let schedule = PressureSchedule {
            solver: SolverKind::Analytical,
            entries: wps
                .iter()
                .map(|w| ScheduleEntry {
                    index: w.index,
                    pressures: ChamberPressures::zero(),
                    clamped: false,
                })
                .collect(),
        };
        let report = evaluate(&schedule, &wps, &geo, &EvalSettings::default()).unwrap();
        let rest = TipPosition::new(0.0, 0.0, geo.l0);
        for (row, w) in report.rows.iter().zip(&wps) {
            assert_relative_eq!(row.error, w.target.distance(&rest), max_relative = 1e-14);
        }
    }

    #[test]
    fn summary_recomputes_from_rows() {
        let errors = [1.0, 2.0, 4.0, 5.0];
        let s = ReportSummary::from_errors(SolverKind::Bpnet, &errors, 0, 120.0).unwrap();
        assert_eq!(s.mean_error_mm, 3.0);
        assert_eq!(s.max_error_mm, 5.0);
        assert_relative_eq!(s.std_error_mm, 2.5f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.relative_mean_error_pct, 2.5, max_relative = 1e-15);
        assert!(s.mean_error_mm <= s.max_error_mm);
    }

    #[test]
    fn rotation_about_z_preserves_errors() {
        // Rotating the path by 2π/3 and shifting every schedule entry one
        // chamber along is the same experiment seen from a rotated frame.
        let geo = ActuatorGeometry::default();
        let wps = default_path();
        let schedule = PressureSchedule {
            solver: SolverKind::Bpnet,
            entries: wps
                .iter()
                .map(|w| ScheduleEntry {
                    index: w.index,
                    pressures: ChamberPressures::new(30.0 + w.index as f64, 60.0, 10.0 + 2.0 * w.index as f64),
                    clamped: false,
                })
                .collect(),
        };
        let base = evaluate(&schedule, &wps, &geo, &EvalSettings::default()).unwrap();
        let (s, c) = (TAU / 3.0).sin_cos();
        let rotated_wps: Vec<Waypoint> = wps
            .iter()
            .map(|w| Waypoint {
                index: w.index,
                target: TipPosition::new(c * w.target.x - s * w.target.y, s * w.target.x + c * w.target.y, w.target.z),
            })
            .collect();
        let rotated_schedule = PressureSchedule {
            solver: SolverKind::Bpnet,
            entries: schedule
                .entries
                .iter()
                .map(|e| ScheduleEntry {
                    pressures: ChamberPressures::new(e.pressures.p3, e.pressures.p1, e.pressures.p2),
                    ..*e
                })
                .collect(),
        };
        let rotated = evaluate(&rotated_schedule, &rotated_wps, &geo, &EvalSettings::default()).unwrap();
        for (a, b) in base.rows.iter().zip(&rotated.rows) {
            assert_relative_eq!(a.error, b.error, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn misaligned_schedule_is_rejected() {
        let geo = ActuatorGeometry::default();
        let wps = default_path();
        let s = plan(&wps, Solver::Analytical, &geo).unwrap();
        assert!(evaluate(&s, &wps[..40], &geo, &EvalSettings::default()).is_err());
    }

    #[test]
    fn files_round_trip_and_svg() {
        let dir = tempfile::tempdir().unwrap();
        let geo = ActuatorGeometry::default();
        let wps = default_path();
        let s = plan(&wps, Solver::Analytical, &geo).unwrap();
        s.save(dir.path().join("s.csv")).unwrap();
        assert_eq!(PressureSchedule::load(dir.path().join("s.csv")).unwrap(), s);

        let report = evaluate(&s, &wps, &geo, &EvalSettings::default()).unwrap();
        report.save_csv(dir.path().join("r.csv")).unwrap();
        let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert!(text.starts_with("index,tx,ty,tz,ax,ay,az,err_mm\n"));
        assert_eq!(text.lines().count(), 42);
        let svg = report.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
    }

    #[test]
    fn noisy_evaluation_is_seeded() {
        let geo = ActuatorGeometry::default();
        let wps = default_path();
        let s = plan(&wps, Solver::Analytical, &geo).unwrap();
        let settings = EvalSettings {
            noise: Some(NoiseModel::default()),
            seed: 4,
            reference_length: Some(150.0),
        };
        let a = evaluate(&s, &wps, &geo, &settings).unwrap();
        assert_eq!(a, evaluate(&s, &wps, &geo, &settings).unwrap());
        assert!(a.summary.mean_error_mm > 0.0);
        assert_eq!(a.summary.reference_length_mm, 150.0);
    }
}
