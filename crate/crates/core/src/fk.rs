//! Forward kinematics by chained homogeneous transforms.
//!
//! Frame `k` is reached from frame `k - 1` through the factor
//! `origin_k * motion_k(q_k)`: the fixed offset first, then the joint motion.
//! The tool frame appends `tool_offset`. Both the engine-built mode and the
//! student-built ("identity matrices") mode use this convention.

use serde::{Deserialize, Serialize};

use crate::robot_model::{JointKind, JointSpec, ModelError, RobotModel};
use crate::transforms::{HomogeneousTransform, Pose, Rotation3, TransformError, INPUT_ORTHONORMAL_TOL};

/// Default entrywise tolerance for student matrices.
pub const DEFAULT_VALIDATION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FkError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("shape error: expected {expected} matrices for {} validation, got {got}", scope.as_str())]
    MatrixCount {
        scope: ValidationScope,
        expected: usize,
        got: usize,
    },
    #[error("validation tolerance must be finite and non-negative")]
    Tolerance,
}

/// Transform contributed by one joint at `value`.
pub fn joint_transform(joint: &JointSpec, value: f64) -> Result<HomogeneousTransform, TransformError> {
    let motion = match joint.kind() {
        JointKind::Revolute => HomogeneousTransform::rotation(Rotation3::about_axis(joint.axis(), value)?),
        JointKind::Prismatic => {
            if !value.is_finite() {
                return Err(TransformError::NonFinite("joint value"));
            }
            HomogeneousTransform::translation(joint.axis() * value)?
        }
    };
    Ok(joint.origin().compose(&motion))
}

/// The per-joint factors followed by the tool offset.
pub fn factors(model: &RobotModel, q: &[f64]) -> Result<Vec<HomogeneousTransform>, FkError> {
    model.check_shape(q)?;
    let mut out = Vec::with_capacity(q.len() + 1);
    for (joint, &value) in model.joints().iter().zip(q) {
        out.push(joint_transform(joint, value)?);
    }
    out.push(*model.tool_offset());
    Ok(out)
}

/// Every joint frame plus the tool frame, expressed in the base frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FrameChain {
    frames: Vec<HomogeneousTransform>,
}

impl FrameChain {
    pub fn frames(&self) -> &[HomogeneousTransform] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn tool(&self) -> &HomogeneousTransform {
        self.frames.last().expect("a frame chain always holds the tool frame")
    }

    /// Row-major 16-element arrays, as streamed to clients.
    pub fn to_row_major(&self) -> Vec<[f64; 16]> {
        self.frames.iter().map(|f| f.to_row_major()).collect()
    }
}

/// Prefix products of [`factors`]: `chain[k] = chain[k-1] * factor_k`.
pub fn fk_chain(model: &RobotModel, q: &[f64]) -> Result<FrameChain, FkError> {
    let factors = factors(model, q)?;
    let mut frames: Vec<HomogeneousTransform> = Vec::with_capacity(factors.len());
    for f in &factors {
        let next = match frames.last() {
            Some(prev) => prev.compose(f),
            None => *f,
        };
        frames.push(next);
    }
    Ok(FrameChain { frames })
}

/// Base-frame transform of the tool frame.
pub fn fk_transform(model: &RobotModel, q: &[f64]) -> Result<HomogeneousTransform, FkError> {
    Ok(*fk_chain(model, q)?.tool())
}

/// Pose of the tool frame.
pub fn fk_pose(model: &RobotModel, q: &[f64]) -> Result<Pose, FkError> {
    Ok(fk_transform(model, q)?.pose())
}

/// What the student matrices stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValidationScope {
    /// One matrix per joint factor, tool offset excluded.
    #[default]
    Joints,
    /// A single matrix for the full base-to-tool product.
    Product,
}

impl ValidationScope {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationScope::Joints => "joints",
            ValidationScope::Product => "product",
        }
    }
}

/// Structural problem found in a student matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralReason {
    NonFinite,
    PerspectiveNotZero,
    ScaleFactorNotOne,
    RotationNotOrthonormal,
    RotationNotProper,
}

impl StructuralReason {
    pub fn describe(self) -> &'static str {
        match self {
            StructuralReason::NonFinite => "matrix has non-finite entries",
            StructuralReason::PerspectiveNotZero => "perspective row must be zero",
            StructuralReason::ScaleFactorNotOne => "scale factor \u{2260} 1",
            StructuralReason::RotationNotOrthonormal => "rotation block is not orthonormal",
            StructuralReason::RotationNotProper => "rotation block has det \u{2260} 1",
        }
    }
}

/// Entrywise comparison of one student matrix against the engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixDiff {
    /// `|student - engine|` per entry, row-major 4x4.
    pub diffs: [[f64; 4]; 4],
    pub max_abs_error: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<StructuralReason>,
}

fn structural_reason(m: &[[f64; 4]; 4]) -> Option<StructuralReason> {
    match HomogeneousTransform::from_rows_with_tolerance(*m, INPUT_ORTHONORMAL_TOL) {
        Ok(_) => None,
        Err(TransformError::NonFinite(_)) => Some(StructuralReason::NonFinite),
        Err(TransformError::PerspectiveNonZero) => Some(StructuralReason::PerspectiveNotZero),
        Err(TransformError::ScaleFactor(_)) => Some(StructuralReason::ScaleFactorNotOne),
        Err(TransformError::NotOrthonormal(_)) => Some(StructuralReason::RotationNotOrthonormal),
        Err(TransformError::Improper(_)) => Some(StructuralReason::RotationNotProper),
        Err(TransformError::AxisNotUnit(_)) => unreachable!("no axis in a full matrix check"),
    }
}

/// Compares one matrix; a structural failure never passes.
pub fn diff_matrix(student: &[[f64; 4]; 4], engine: &HomogeneousTransform, tolerance: f64) -> MatrixDiff {
    let reference = engine.to_rows();
    let mut diffs = [[0.0; 4]; 4];
    let mut max_abs_error: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let d = (student[i][j] - reference[i][j]).abs();
            diffs[i][j] = d;
            // NaN never compares greater, so fold it in explicitly.
            if d > max_abs_error || d.is_nan() {
                max_abs_error = if d.is_nan() { f64::INFINITY } else { d };
            }
        }
    }
    let reason = structural_reason(student);
    MatrixDiff {
        diffs,
        max_abs_error,
        pass: reason.is_none() && max_abs_error <= tolerance,
        reason,
    }
}

/// Checks student-built matrices against the engine's factors (or product).
///
/// Wrong math shows up inside the returned diffs; only a wrong matrix count,
/// a bad tolerance or an invalid joint vector are errors.
pub fn validate_matrices(
    model: &RobotModel,
    q: &[f64],
    student: &[[[f64; 4]; 4]],
    scope: ValidationScope,
    tolerance: f64,
) -> Result<Vec<MatrixDiff>, FkError> {
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(FkError::Tolerance);
    }
    let expected = match scope {
        ValidationScope::Joints => model.dof(),
        ValidationScope::Product => 1,
    };
    if student.len() != expected {
        return Err(FkError::MatrixCount {
            scope,
            expected,
            got: student.len(),
        });
    }
    let engine: Vec<HomogeneousTransform> = match scope {
        ValidationScope::Joints => {
            let mut f = factors(model, q)?;
            f.pop();
            f
        }
        ValidationScope::Product => vec![fk_transform(model, q)?],
    };
    Ok(student
        .iter()
        .zip(&engine)
        .map(|(s, e)| diff_matrix(s, e, tolerance))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot_model::{load_model, Catalog};
    use crate::transforms::Vec3;
    use std::f64::consts::FRAC_PI_2;

    fn planar_2r() -> RobotModel {
        load_model(
            r#"{"name": "planar", "joints": [
                {"name": "a", "kind": "revolute", "axis": [0, 0, 1]},
                {"name": "b", "kind": "revolute", "axis": [0, 0, 1], "origin": {"xyz": [1, 0, 0]}}],
                "tool_offset": {"xyz": [1, 0, 0]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn joint_transform_examples() {
        let m = Catalog::builtin().get("articulated_rrr").unwrap();
        let waist = &m.joints()[0];
        assert_eq!(joint_transform(waist, 0.0).unwrap(), *waist.origin());

        let slide = load_model(r#"{"name": "s", "joints": [{"name": "p", "kind": "prismatic", "axis": [0, 0, 1]}]}"#)
            .unwrap();
        assert_eq!(
            joint_transform(&slide.joints()[0], 0.2).unwrap(),
            HomogeneousTransform::translation(Vec3::new(0.0, 0.0, 0.2)).unwrap()
        );

        let pin = planar_2r();
        assert_eq!(
            joint_transform(&pin.joints()[0], FRAC_PI_2).unwrap(),
            HomogeneousTransform::rotation(Rotation3::rot_z(FRAC_PI_2).unwrap())
        );
    }

    #[test]
    fn planar_quarter_turn() {
        let p = fk_pose(&planar_2r(), &[FRAC_PI_2, 0.0]).unwrap().position;
        assert!(p.distance(Vec3::new(0.0, 2.0, 0.0)) < 1e-15);
    }

    #[test]
    fn chain_shape_and_consistency() {
        let one = load_model(r#"{"name": "o", "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 1]}]}"#)
            .unwrap();
        assert_eq!(fk_chain(&one, &[0.3]).unwrap().len(), 2);

        let m = planar_2r();
        let q = [0.4, -1.2];
        let chain = fk_chain(&m, &q).unwrap();
        let f = factors(&m, &q).unwrap();
        for (k, fk) in f.iter().enumerate().take(chain.len()).skip(1) {
            assert_eq!(chain.frames()[k], chain.frames()[k - 1].compose(fk));
        }
        assert_eq!(chain.tool().position(), fk_pose(&m, &q).unwrap().position);
    }

    #[test]
    fn shape_errors() {
        let m = planar_2r();
        assert!(matches!(fk_pose(&m, &[0.0]), Err(FkError::Model(ModelError::Shape { expected: 2, got: 1 }))));
        let err = validate_matrices(&m, &[0.0, 0.0], &[], ValidationScope::Joints, 1e-3).unwrap_err();
        assert!(matches!(err, FkError::MatrixCount { expected: 2, got: 0, .. }));
    }

    #[test]
    fn validation_of_engine_matrices_passes_exactly() {
        let m = planar_2r();
        let q = [0.3, 0.9];
        let own: Vec<_> = factors(&m, &q).unwrap()[..2].iter().map(|t| t.to_rows()).collect();
        let diffs = validate_matrices(&m, &q, &own, ValidationScope::Joints, DEFAULT_VALIDATION_TOLERANCE).unwrap();
        assert!(diffs.iter().all(|d| d.pass && d.max_abs_error == 0.0));

        let product = [fk_transform(&m, &q).unwrap().to_rows()];
        let diffs = validate_matrices(&m, &q, &product, ValidationScope::Product, 0.0).unwrap();
        assert!(diffs[0].pass);
    }

    #[test]
    fn scale_factor_reason() {
        let m = planar_2r();
        let mut rows = factors(&m, &[0.0, 0.0]).unwrap().iter().map(|t| t.to_rows()).take(2).collect::<Vec<_>>();
        rows[1][3][3] = 2.0;
        let diffs = validate_matrices(&m, &[0.0, 0.0], &rows, ValidationScope::Joints, 1e-3).unwrap();
        assert!(diffs[0].pass);
        assert!(!diffs[1].pass);
        assert_eq!(diffs[1].reason, Some(StructuralReason::ScaleFactorNotOne));
        assert_eq!(diffs[1].max_abs_error, 1.0);
    }

    #[test]
    fn nan_entries_fail() {
        let mut rows = HomogeneousTransform::IDENTITY.to_rows();
        rows[0][3] = f64::NAN;
        let d = diff_matrix(&rows, &HomogeneousTransform::IDENTITY, 1e-3);
        assert!(!d.pass);
        assert_eq!(d.reason, Some(StructuralReason::NonFinite));
        assert_eq!(d.max_abs_error, f64::INFINITY);
    }
}
