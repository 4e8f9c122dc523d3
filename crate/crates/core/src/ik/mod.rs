//! Closed-form inverse kinematics for position targets.
//!
//! Each model names, through its `ik_binding`, the three (or fewer) joints a
//! geometric solver drives. All other joints stay at their current values.
//! The solvers are the textbook geometric derivations:
//!
//! * **cartesian**: the tool moves linearly with the prismatic joints,
//!   `p = p0 + D q`, so `q = D^-1 (p - p0)`.
//! * **cylindrical**: `theta1 = atan2(y, x)` (less the tool's angular offset),
//!   the vertical stroke from `z`, the radial stroke from the horizontal range.
//! * **spherical**: `theta1` from `atan2(y, x)`, then the elevation and radial
//!   stroke from the target's position in the vertical arm plane.
//! * **scara**: the two parallel revolute joints solve a planar two-link
//!   problem by the law of cosines (elbow up/down), the quill takes `z`.
//! * **articulated**: `theta1` from `atan2(y, x)` with a front and a back
//!   shoulder branch, then the two-link problem in the vertical arm plane,
//!   giving up to four solutions.
//!
//! Reachability counts prismatic strokes as hard bounds on the workspace.
//! Revolute limits only decide feasibility: a branch that violates them is
//! still returned, flagged infeasible, so it can be shown and explained.

mod geometry;
mod planar;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fk::FkError;
use crate::robot_model::{JointKind, JointLimits, JointVector, ModelError, RobotModel};
use crate::transforms::Vec3;

use geometry::{extract, gram, gram_det, Geometry};
use planar::{solve_two_link, stroke_radius_range, stroke_roots, two_link_cosine, wrap_angle, V2};

/// Slack on prismatic strokes and workspace distances, in meters.
pub const STROKE_TOL: f64 = 1e-9;

/// Revolute values this close outside a limit are snapped onto it.
const LIMIT_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IkError {
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fk(#[from] FkError),
    #[error("target must be finite")]
    NonFiniteTarget,
}

/// Desired tool position in the base frame. It constrains the tool point with
/// every joint outside the IK binding held at its current value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkTarget {
    pub position: Vec3,
}

impl IkTarget {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        IkTarget {
            position: Vec3::new(x, y, z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkSolution {
    /// Complete joint vector: bound joints solved, the rest copied.
    pub q: JointVector,
    /// Values of the bound joints, in binding order.
    pub q_partial: Vec<f64>,
    pub branch: String,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasibility_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkSolutionSet {
    pub target: IkTarget,
    pub solutions: Vec<IkSolution>,
    pub reachable: bool,
    /// The first joint's angle was undetermined and kept at its current value.
    pub singular: bool,
}

impl IkSolutionSet {
    pub fn feasible(&self) -> impl Iterator<Item = &IkSolution> {
        self.solutions.iter().filter(|s| s.feasible)
    }

    pub fn by_branch(&self, label: &str) -> Option<&IkSolution> {
        self.solutions.iter().find(|s| s.branch == label)
    }

    /// Nearest feasible solution; the list is already sorted by distance.
    pub fn nearest_feasible(&self) -> Option<&IkSolution> {
        self.feasible().next()
    }
}

struct Candidate {
    values: Vec<f64>,
    branch: String,
}

struct FamilySolution {
    candidates: Vec<Candidate>,
    singular: bool,
}

/// Rejects models whose binding does not match a supported joint layout.
pub fn check_geometry(model: &RobotModel) -> Result<(), IkError> {
    extract(model, &model.home()).map(|_| ())
}

/// Every closed-form solution reaching `target`, nearest to `current_q` first.
pub fn solve_ik(model: &RobotModel, current_q: &[f64], target: &IkTarget) -> Result<IkSolutionSet, IkError> {
    if !target.position.is_finite() {
        return Err(IkError::NonFiniteTarget);
    }
    model.check_shape(current_q)?;
    if let Some(i) = current_q.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { index: i }.into());
    }
    let (bound, geometry) = extract(model, current_q)?;
    let current_bound: Vec<f64> = bound.iter().map(|&i| current_q[i]).collect();
    let raw = solve_family(&geometry, &current_bound, target.position);

    let mut solutions = Vec::with_capacity(raw.candidates.len());
    'candidates: for cand in raw.candidates {
        let mut q = current_q.to_vec();
        let mut violations = Vec::new();
        for (k, &idx) in bound.iter().enumerate() {
            let joint = &model.joints()[idx];
            let limits = joint.limits();
            let value = match joint.kind() {
                JointKind::Prismatic => {
                    let v = cand.values[k];
                    if v < limits.min - STROKE_TOL || v > limits.max + STROKE_TOL {
                        continue 'candidates;
                    }
                    limits.clamp(v)
                }
                JointKind::Revolute => pick_angle(cand.values[k], limits, current_q[idx]),
            };
            if !limits.contains(value) {
                violations.push(format!(
                    "joint '{}' = {value:.6} outside [{:.6}, {:.6}]",
                    joint.name(),
                    limits.min,
                    limits.max
                ));
            }
            q[idx] = value;
        }
        let feasible = violations.is_empty();
        solutions.push(IkSolution {
            q_partial: bound.iter().map(|&i| q[i]).collect(),
            q,
            branch: cand.branch,
            feasible,
            infeasibility_reason: (!feasible).then(|| violations.join("; ")),
        });
    }

    let distance = |s: &IkSolution| -> f64 { s.q.iter().zip(current_q).map(|(a, b)| (a - b) * (a - b)).sum() };
    solutions.sort_by(|a, b| {
        distance(a)
            .partial_cmp(&distance(b))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.branch.cmp(&b.branch))
    });

    Ok(IkSolutionSet {
        target: *target,
        reachable: !solutions.is_empty(),
        solutions,
        singular: raw.singular,
    })
}

/// Workspace membership with non-bound joints at their home values.
pub fn reachable(model: &RobotModel, target: &IkTarget) -> Result<bool, IkError> {
    reachable_from(model, &model.home(), target)
}

/// Workspace membership with non-bound joints at their values in `current_q`.
///
/// Tests the analytic workspace shape of each family (box, annular cylinder,
/// spherical shell, planar annulus times stroke) without enumerating branches.
pub fn reachable_from(model: &RobotModel, current_q: &[f64], target: &IkTarget) -> Result<bool, IkError> {
    if !target.position.is_finite() {
        return Err(IkError::NonFiniteTarget);
    }
    let (bound, geometry) = extract(model, current_q)?;
    let stroke = |k: usize| model.joints()[bound[k]].limits();
    let in_stroke = |v: f64, l: JointLimits| v >= l.min - STROKE_TOL && v <= l.max + STROKE_TOL;
    let in_range = |r: f64, (lo, hi): (f64, f64)| r >= lo - STROKE_TOL && r <= hi + STROKE_TOL;

    Ok(match &geometry {
        Geometry::Cartesian { base, dirs } => match cartesian_values(*base, dirs, target.position) {
            Some(q) => q.iter().enumerate().all(|(k, v)| in_stroke(*v, stroke(k))),
            None => false,
        },
        Geometry::Planar2r {
            frame,
            height,
            link1,
            link2,
            ..
        } => {
            let p = frame.invert().apply_point(target.position);
            (p.z - height).abs() <= STROKE_TOL && two_link_cosine(*link1, *link2, V2::new(p.x, p.y)).is_some()
        }
        Geometry::Scara {
            frame,
            signs,
            height,
            link1,
            link2,
        } => {
            let p = frame.invert().apply_point(target.position);
            in_stroke(signs[2] * (p.z - height), stroke(2))
                && two_link_cosine(*link1, *link2, V2::new(p.x, p.y)).is_some()
        }
        Geometry::Articulated {
            frame,
            lateral,
            shoulder,
            link1,
            link2,
            ..
        } => {
            let p = frame.invert().apply_point(target.position);
            arm_plane_offsets(p, *lateral)
                .into_iter()
                .any(|(_, bx)| two_link_cosine(*link1, *link2, V2::new(bx, p.z).sub(*shoulder)).is_some())
        }
        Geometry::Spherical {
            frame,
            lateral,
            shoulder,
            reach,
            extension,
            ..
        } => {
            let p = frame.invert().apply_point(target.position);
            let l = stroke(2);
            let range = stroke_radius_range(*reach, *extension, l.min, l.max);
            arm_plane_offsets(p, *lateral)
                .into_iter()
                .any(|(_, bx)| in_range(V2::new(bx, p.z).sub(*shoulder).norm(), range))
        }
        Geometry::Cylindrical {
            frame,
            signs,
            height,
            radial,
            extension,
        } => {
            let p = frame.invert().apply_point(target.position);
            let l = stroke(2);
            in_stroke(signs[1] * (p.z - height), stroke(1))
                && in_range(V2::new(p.x, p.y).norm(), stroke_radius_range(*radial, *extension, l.min, l.max))
        }
    })
}

/// Horizontal offsets of the arm plane that put the tool over the target:
/// the front shoulder branch and, unless they coincide, the back one.
fn arm_plane_offsets(p: Vec3, lateral: f64) -> Vec<(&'static str, f64)> {
    let rho = p.x.hypot(p.y);
    if rho < lateral.abs() - STROKE_TOL {
        return Vec::new();
    }
    let bx = (rho * rho - lateral * lateral).max(0.0).sqrt();
    if bx <= planar::SINGULAR_TOL {
        vec![("shoulder_front", 0.0)]
    } else {
        vec![("shoulder_front", bx), ("shoulder_back", -bx)]
    }
}

/// Waist angle putting the arm plane, offset `(bx, lateral)`, over `p`.
fn waist_angle(p: Vec3, bx: f64, lateral: f64, current: f64) -> (f64, bool) {
    if p.x.hypot(p.y) < planar::SINGULAR_TOL {
        (current, true)
    } else {
        (p.y.atan2(p.x) - lateral.atan2(bx), false)
    }
}

fn cartesian_values(base: Vec3, dirs: &[Vec3], target: Vec3) -> Option<Vec<f64>> {
    let r = target - base;
    let g = gram(dirs);
    let det = gram_det(&g);
    let rhs: Vec<f64> = dirs.iter().map(|d| d.dot(r)).collect();
    // Cramer's rule on the normal equations G q = D^T r.
    let q: Vec<f64> = (0..dirs.len())
        .map(|k| {
            let mut gk = g.clone();
            for (row, value) in gk.iter_mut().zip(&rhs) {
                row[k] = *value;
            }
            gram_det(&gk) / det
        })
        .collect();
    let mut reached = base;
    for (d, v) in dirs.iter().zip(&q) {
        reached += *d * *v;
    }
    (reached.distance(target) <= STROKE_TOL).then_some(q)
}

fn solve_family(geometry: &Geometry, current: &[f64], target: Vec3) -> FamilySolution {
    let mut candidates = Vec::new();
    let mut singular = false;
    match geometry {
        Geometry::Cartesian { base, dirs } => {
            if let Some(values) = cartesian_values(*base, dirs, target) {
                candidates.push(Candidate {
                    values,
                    branch: "unique".into(),
                });
            }
        }
        Geometry::Planar2r {
            frame,
            signs,
            height,
            link1,
            link2,
        } => {
            let p = frame.invert().apply_point(target);
            if (p.z - height).abs() <= STROKE_TOL {
                let sol = solve_two_link(*link1, *link2, V2::new(p.x, p.y), signs[0] * current[0]);
                singular = sol.singular;
                for b in sol.branches {
                    candidates.push(Candidate {
                        values: vec![signs[0] * b.shoulder, signs[1] * b.elbow],
                        branch: b.kind.label().into(),
                    });
                }
            }
        }
        Geometry::Scara {
            frame,
            signs,
            height,
            link1,
            link2,
        } => {
            let p = frame.invert().apply_point(target);
            let quill = signs[2] * (p.z - height);
            let sol = solve_two_link(*link1, *link2, V2::new(p.x, p.y), signs[0] * current[0]);
            singular = sol.singular;
            for b in sol.branches {
                candidates.push(Candidate {
                    values: vec![signs[0] * b.shoulder, signs[1] * b.elbow, quill],
                    branch: b.kind.label().into(),
                });
            }
        }
        Geometry::Articulated {
            frame,
            signs,
            lateral,
            shoulder,
            link1,
            link2,
        } => {
            let p = frame.invert().apply_point(target);
            for (side, bx) in arm_plane_offsets(p, *lateral) {
                let (waist, waist_singular) = waist_angle(p, bx, *lateral, signs[0] * current[0]);
                singular |= waist_singular;
                // Rotation about +y turns the (x, z) plane clockwise.
                let planar_target = V2::new(bx, p.z).sub(*shoulder);
                let sol = solve_two_link(*link1, *link2, planar_target, -signs[1] * current[1]);
                singular |= sol.singular;
                for b in sol.branches {
                    candidates.push(Candidate {
                        values: vec![signs[0] * waist, -signs[1] * b.shoulder, -signs[2] * b.elbow],
                        branch: format!("{side}_{}", b.kind.label()),
                    });
                }
            }
        }
        Geometry::Spherical {
            frame,
            signs,
            lateral,
            shoulder,
            reach,
            extension,
        } => {
            let p = frame.invert().apply_point(target);
            for (side, bx) in arm_plane_offsets(p, *lateral) {
                let (waist, waist_singular) = waist_angle(p, bx, *lateral, signs[0] * current[0]);
                singular |= waist_singular;
                let planar_target = V2::new(bx, p.z).sub(*shoulder);
                let roots = stroke_roots(*reach, *extension, planar_target.norm());
                for (i, stroke) in roots.into_iter().enumerate() {
                    let arm = reach.add(extension.scale(stroke));
                    let elevation = if planar_target.norm() < planar::SINGULAR_TOL {
                        singular = true;
                        -signs[1] * current[1]
                    } else {
                        planar_target.angle() - arm.angle()
                    };
                    let branch = if i == 0 {
                        side.to_string()
                    } else {
                        format!("{side}_reversed")
                    };
                    candidates.push(Candidate {
                        values: vec![signs[0] * waist, -signs[1] * elevation, stroke],
                        branch,
                    });
                }
            }
        }
        Geometry::Cylindrical {
            frame,
            signs,
            height,
            radial,
            extension,
        } => {
            let p = frame.invert().apply_point(target);
            let lift = signs[1] * (p.z - height);
            let horizontal = V2::new(p.x, p.y);
            for (i, stroke) in stroke_roots(*radial, *extension, horizontal.norm()).into_iter().enumerate() {
                let arm = radial.add(extension.scale(stroke));
                let base = if horizontal.norm() < planar::SINGULAR_TOL {
                    singular = true;
                    signs[0] * current[0]
                } else {
                    horizontal.angle() - arm.angle()
                };
                candidates.push(Candidate {
                    values: vec![signs[0] * base, lift, stroke],
                    branch: if i == 0 { "front".into() } else { "back".into() },
                });
            }
        }
    }
    FamilySolution { candidates, singular }
}

/// Chooses the `2 pi` representative of `raw`: the one within limits closest
/// to `current`, or the `(-pi, pi]` wrap if none fits.
fn pick_angle(raw: f64, limits: JointLimits, current: f64) -> f64 {
    let base = wrap_angle(raw);
    let snap = |v: f64| {
        if v < limits.min && v >= limits.min - LIMIT_SNAP {
            limits.min
        } else if v > limits.max && v <= limits.max + LIMIT_SNAP {
            limits.max
        } else {
            v
        }
    };
    (-2..=2)
        .map(|k| snap(base + 2.0 * PI * f64::from(k)))
        .filter(|v| limits.contains(*v))
        .min_by(|a, b| {
            (a - current)
                .abs()
                .partial_cmp(&(b - current).abs())
                .unwrap_or(Ordering::Equal)
        })
        .unwrap_or(base)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fk::fk_pose;
    use crate::robot_model::{load_model, Catalog};
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn planar_2r() -> RobotModel {
        load_model(
            r#"{"name": "planar_2r", "joints": [
                {"name": "shoulder", "kind": "revolute", "axis": [0, 0, 1]},
                {"name": "elbow", "kind": "revolute", "axis": [0, 0, 1], "origin": {"xyz": [1, 0, 0]}}],
                "tool_offset": {"xyz": [1, 0, 0]},
                "ik_binding": {"family": "planar2r", "joints": ["shoulder", "elbow"]}}"#,
        )
        .unwrap()
    }

    fn assert_round_trip(model: &RobotModel, set: &IkSolutionSet) {
        for s in &set.solutions {
            let p = fk_pose(model, &s.q).unwrap().position;
            assert!(p.distance(set.target.position) <= 1e-9, "{}: {p} vs {}", s.branch, set.target.position);
        }
    }

    #[test]
    fn planar_two_solutions() {
        let m = planar_2r();
        let set = solve_ik(&m, &[0.0, 0.0], &IkTarget::new(1.0, 1.0, 0.0)).unwrap();
        assert!(set.reachable);
        assert_eq!(set.solutions.len(), 2);
        let down = set.by_branch("elbow_down").unwrap();
        let up = set.by_branch("elbow_up").unwrap();
        assert!(down.q[0].abs() < 1e-15 && (down.q[1] - FRAC_PI_2).abs() < 1e-15);
        assert!((up.q[0] - FRAC_PI_2).abs() < 1e-15 && (up.q[1] + FRAC_PI_2).abs() < 1e-15);
        assert_round_trip(&m, &set);
    }

    #[test]
    fn planar_out_of_annulus() {
        let m = planar_2r();
        let set = solve_ik(&m, &[0.0, 0.0], &IkTarget::new(3.0, 0.0, 0.0)).unwrap();
        assert!(!set.reachable);
        assert!(set.solutions.is_empty());
        assert!(!reachable(&m, &IkTarget::new(3.0, 0.0, 0.0)).unwrap());
        // Off the motion plane.
        assert!(!solve_ik(&m, &[0.0, 0.0], &IkTarget::new(1.0, 1.0, 0.1)).unwrap().reachable);
    }

    #[test]
    fn no_binding_is_unsupported() {
        let m = load_model(r#"{"name": "o", "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 1]}]}"#)
            .unwrap();
        assert!(matches!(solve_ik(&m, &[0.0], &IkTarget::new(1.0, 0.0, 0.0)), Err(IkError::Unsupported(_))));
        assert!(matches!(reachable(&m, &IkTarget::new(1.0, 0.0, 0.0)), Err(IkError::Unsupported(_))));
    }

    #[test]
    fn non_finite_target() {
        let m = planar_2r();
        assert_eq!(solve_ik(&m, &[0.0, 0.0], &IkTarget::new(f64::NAN, 0.0, 0.0)), Err(IkError::NonFiniteTarget));
    }

    #[test]
    fn cartesian_identity_mapping() {
        let m = Catalog::builtin().get("cartesian_ppp").unwrap();
        let home = fk_pose(&m, &m.home()).unwrap().position;
        let target = home + Vec3::new(0.1, 0.2, 0.3);
        let set = solve_ik(&m, &m.home(), &IkTarget { position: target }).unwrap();
        assert_eq!(set.solutions.len(), 1);
        let q = &set.solutions[0].q_partial;
        for (got, want) in q.iter().zip([0.1, 0.2, 0.3]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(set.solutions[0].feasible);
    }

    #[test]
    fn cartesian_box_corner_outward() {
        let m = Catalog::builtin().get("cartesian_ppp").unwrap();
        let corner = fk_pose(&m, &[0.5, 0.5, 0.5]).unwrap().position;
        assert!(reachable(&m, &IkTarget { position: corner }).unwrap());
        let eps = 1e-6;
        let outside = corner + Vec3::new(eps, 0.0, 0.0);
        assert!(!reachable(&m, &IkTarget { position: outside }).unwrap());
        assert!(!solve_ik(&m, &m.home(), &IkTarget { position: outside }).unwrap().reachable);
    }

    #[test]
    fn cylindrical_quarter_turn() {
        let m = Catalog::builtin().get("cylindrical_rpp").unwrap();
        // Base origin z 0.1, lift origin z 0.05, reach origin x 0.2, no tool offset.
        let (r, z) = (0.45, 0.4);
        let set = solve_ik(&m, &m.home(), &IkTarget::new(0.0, r, z)).unwrap();
        assert_eq!(set.solutions.len(), 1);
        let q = &set.solutions[0].q;
        assert!((q[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((q[1] - (z - 0.15)).abs() < 1e-15);
        assert!((q[2] - (r - 0.2)).abs() < 1e-15);
        assert_round_trip(&m, &set);
    }

    #[test]
    fn spherical_straight_up_boundary() {
        let m = Catalog::builtin().get("spherical_rrp").unwrap();
        let q_top = [0.3, FRAC_PI_2, 0.3];
        let top = fk_pose(&m, &q_top).unwrap().position;
        let set = solve_ik(&m, &m.home(), &IkTarget { position: top }).unwrap();
        assert!(set.singular);
        assert_eq!(set.solutions.len(), 1);
        let s = &set.solutions[0];
        assert_eq!(s.q[0], m.home()[0]);
        assert!((s.q[1] - FRAC_PI_2).abs() < 1e-12);
        assert!((s.q[2] - 0.3).abs() < 1e-12);
        assert!(s.feasible);
        assert_round_trip(&m, &set);
    }

    #[test]
    fn articulated_on_waist_axis_keeps_waist() {
        let m = Catalog::builtin().get("articulated_rrr").unwrap();
        let current = [0.7, 0.0, 0.0];
        let set = solve_ik(&m, &current, &IkTarget::new(0.0, 0.0, 0.7)).unwrap();
        assert!(set.singular);
        assert!(set.reachable);
        assert_eq!(set.solutions.len(), 2);
        for s in &set.solutions {
            assert_eq!(s.q[0], 0.7);
            assert!(s.branch.starts_with("shoulder_front_"));
        }
        assert_round_trip(&m, &set);
    }

    #[test]
    fn articulated_four_branches_sorted() {
        let m = Catalog::builtin().get("articulated_rrr").unwrap();
        let q = [0.4, 0.3, 0.9];
        let target = IkTarget {
            position: fk_pose(&m, &q).unwrap().position,
        };
        let set = solve_ik(&m, &q, &target).unwrap();
        assert_eq!(set.solutions.len(), 4);
        assert_round_trip(&m, &set);
        let nearest = &set.solutions[0];
        for (a, b) in nearest.q.iter().zip(q) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut labels: Vec<_> = set.solutions.iter().map(|s| s.branch.as_str()).collect();
        labels.sort();
        assert_eq!(
            labels,
            [
                "shoulder_back_elbow_down",
                "shoulder_back_elbow_up",
                "shoulder_front_elbow_down",
                "shoulder_front_elbow_up"
            ]
        );
    }

    #[test]
    fn infeasible_branches_are_kept() {
        let m = Catalog::builtin().get("articulated_rrr").unwrap();
        let target = IkTarget {
            position: fk_pose(&m, &[0.0, 0.2, 0.5]).unwrap().position,
        };
        let set = solve_ik(&m, &m.home(), &target).unwrap();
        assert!(set.solutions.iter().any(|s| !s.feasible && s.infeasibility_reason.is_some()));
        assert!(set.solutions.iter().any(|s| s.feasible));
    }

    #[test]
    fn pick_angle_prefers_in_limit_representative() {
        let l = JointLimits { min: 0.0, max: 2.0 * PI };
        assert!((pick_angle(-FRAC_PI_2, l, 4.0) - 3.0 * FRAC_PI_2).abs() < 1e-15);
        let l = JointLimits { min: -1.0, max: 1.0 };
        assert_eq!(pick_angle(2.5, l, 0.0), 2.5);
    }
}
