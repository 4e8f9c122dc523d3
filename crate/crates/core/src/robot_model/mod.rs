//! Declarative serial manipulators.
//!
//! A model is an ordered list of joints. Each joint carries a fixed `origin`
//! transform from the previous joint frame (or the base) followed by its
//! motion: a rotation about `axis` for revolute joints, a translation along
//! `axis` for prismatic ones. The tool frame sits at `tool_offset` from the
//! last joint frame.
//!
//! Models are read from and written to a strict JSON document form; see
//! [`ModelDocument`].

mod catalog;

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::transforms::{HomogeneousTransform, TransformError, Vec3};

pub use catalog::{builtin_catalog, Catalog, REFERENCE_MODELS};

/// Default stroke for prismatic joints whose document omits `limits`.
pub const DEFAULT_PRISMATIC_STROKE: f64 = 0.5;

/// One value per joint: radians for revolute joints, meters for prismatic.
pub type JointVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid model: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("shape error: expected {expected} joint values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("joint value {index} is not finite")]
    NonFinite { index: usize },
}

impl ModelError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

impl JointKind {
    pub fn letter(self) -> char {
        match self {
            JointKind::Revolute => 'R',
            JointKind::Prismatic => 'P',
        }
    }
}

/// Structure family of the manipulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cartesian,
    Cylindrical,
    Spherical,
    Scara,
    Articulated,
    #[default]
    Custom,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Cartesian,
        Family::Cylindrical,
        Family::Spherical,
        Family::Scara,
        Family::Articulated,
        Family::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Cartesian => "cartesian",
            Family::Cylindrical => "cylindrical",
            Family::Spherical => "spherical",
            Family::Scara => "scara",
            Family::Articulated => "articulated",
            Family::Custom => "custom",
        }
    }

    /// Joint kinds the first three joints must have, if constrained.
    fn signature(self) -> Option<&'static [JointKind]> {
        use JointKind::{Prismatic as P, Revolute as R};
        match self {
            Family::Cartesian => Some(&[P, P, P]),
            Family::Cylindrical => Some(&[R, P, P]),
            Family::Spherical => Some(&[R, R, P]),
            Family::Scara => Some(&[R, R, P]),
            Family::Articulated => Some(&[R, R, R]),
            Family::Custom => None,
        }
    }
}

/// Closed-form solver family an IK binding selects.
///
/// `planar2r` is the two-link planar sub-problem shared by the SCARA and
/// articulated solvers, exposed on its own for planar teaching models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IkFamily {
    Cartesian,
    Cylindrical,
    Spherical,
    Scara,
    Articulated,
    Planar2r,
}

impl IkFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            IkFamily::Cartesian => "cartesian",
            IkFamily::Cylindrical => "cylindrical",
            IkFamily::Spherical => "spherical",
            IkFamily::Scara => "scara",
            IkFamily::Articulated => "articulated",
            IkFamily::Planar2r => "planar2r",
        }
    }

    fn accepts(self, kinds: &[JointKind]) -> bool {
        use JointKind::{Prismatic as P, Revolute as R};
        match self {
            IkFamily::Cartesian => (1..=3).contains(&kinds.len()) && kinds.iter().all(|k| *k == P),
            IkFamily::Cylindrical => kinds == [R, P, P],
            IkFamily::Spherical => kinds == [R, R, P],
            IkFamily::Scara => kinds == [R, R, P],
            IkFamily::Articulated => kinds == [R, R, R],
            IkFamily::Planar2r => kinds == [R, R],
        }
    }
}

/// Frame offset as written in documents: translation, then z-y-x rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy_zyx: [f64; 3],
}

impl FrameSpec {
    fn to_transform(self) -> Result<HomogeneousTransform, TransformError> {
        HomogeneousTransform::from_xyz_rpy(self.xyz, self.rpy_zyx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
}

impl JointLimits {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

impl From<[f64; 2]> for JointLimits {
    fn from(a: [f64; 2]) -> Self {
        JointLimits { min: a[0], max: a[1] }
    }
}

impl From<JointLimits> for [f64; 2] {
    fn from(l: JointLimits) -> Self {
        [l.min, l.max]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    name: String,
    kind: JointKind,
    axis: Vec3,
    origin_spec: FrameSpec,
    origin: HomogeneousTransform,
    limits: JointLimits,
    home: f64,
}

impl JointSpec {
    pub fn new(
        name: impl Into<String>,
        kind: JointKind,
        axis: Vec3,
        origin: FrameSpec,
        limits: JointLimits,
        home: f64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let field = |f: &str| format!("joint '{name}'.{f}");
        let axis = axis.check_unit().map_err(|e| ModelError::invalid(field("axis"), e.to_string()))?;
        let transform = origin
            .to_transform()
            .map_err(|e| ModelError::invalid(field("origin"), e.to_string()))?;
        if !limits.min.is_finite() || !limits.max.is_finite() {
            return Err(ModelError::invalid(field("limits"), "limits must be finite"));
        }
        if limits.min > limits.max {
            return Err(ModelError::invalid(
                field("limits"),
                format!("min {} > max {}", limits.min, limits.max),
            ));
        }
        if !home.is_finite() || !limits.contains(home) {
            return Err(ModelError::invalid(
                field("home"),
                format!("home {home} outside limits [{}, {}]", limits.min, limits.max),
            ));
        }
        Ok(JointSpec {
            name,
            kind,
            axis,
            origin_spec: origin,
            origin: transform,
            limits,
            home,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> JointKind {
        self.kind
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn origin(&self) -> &HomogeneousTransform {
        &self.origin
    }

    pub fn origin_spec(&self) -> FrameSpec {
        self.origin_spec
    }

    pub fn limits(&self) -> JointLimits {
        self.limits
    }

    pub fn home(&self) -> f64 {
        self.home
    }
}

/// Which joints the closed-form solver drives. Indices are in chain order and
/// consecutive.
#[derive(Debug, Clone, PartialEq)]
pub struct IkBinding {
    pub family: IkFamily,
    pub joints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    name: String,
    family: Family,
    joints: Vec<JointSpec>,
    tool_offset_spec: FrameSpec,
    tool_offset: HomogeneousTransform,
    ik_binding: Option<IkBinding>,
}

impl RobotModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn tool_offset(&self) -> &HomogeneousTransform {
        &self.tool_offset
    }

    pub fn ik_binding(&self) -> Option<&IkBinding> {
        self.ik_binding.as_ref()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn home(&self) -> JointVector {
        self.joints.iter().map(|j| j.home).collect()
    }

    /// Joint-kind signature such as `"RRPR"`.
    pub fn signature(&self) -> String {
        self.joints.iter().map(|j| j.kind.letter()).collect()
    }

    pub fn check_shape(&self, q: &[f64]) -> Result<(), ModelError> {
        if q.len() != self.joints.len() {
            return Err(ModelError::Shape {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.joints.len() && self.joints.iter().zip(q).all(|(j, v)| j.limits.contains(*v))
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self, ModelError> {
        if doc.name.trim().is_empty() {
            return Err(ModelError::invalid("name", "must not be empty"));
        }
        if doc.joints.is_empty() {
            return Err(ModelError::invalid("joints", "a model needs at least one joint"));
        }

        let mut seen = HashSet::new();
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, jd) in doc.joints.into_iter().enumerate() {
            if !seen.insert(jd.name.clone()) {
                return Err(ModelError::invalid(
                    format!("joints[{i}].name"),
                    format!("duplicate joint name '{}'", jd.name),
                ));
            }
            let limits = jd.limits.unwrap_or(match jd.kind {
                JointKind::Revolute => JointLimits { min: -PI, max: PI },
                JointKind::Prismatic => JointLimits {
                    min: 0.0,
                    max: DEFAULT_PRISMATIC_STROKE,
                },
            });
            let origin = jd.origin.unwrap_or_default();
            joints.push(JointSpec::new(
                jd.name,
                jd.kind,
                Vec3::from(jd.axis),
                origin,
                limits,
                jd.home.unwrap_or(0.0),
            )?);
        }

        let family = doc.family.unwrap_or_default();
        if let Some(sig) = family.signature() {
            let n = sig.len().min(joints.len());
            let ok = joints.len() >= sig.len() || family == Family::Cartesian;
            let kinds: Vec<JointKind> = joints.iter().take(n).map(|j| j.kind).collect();
            if !ok || kinds != sig[..n] {
                let want: String = sig.iter().map(|k| k.letter()).collect();
                let got: String = kinds.iter().map(|k| k.letter()).collect();
                return Err(ModelError::invalid(
                    "family",
                    format!("{} models start with joints {want}, found {got}", family.as_str()),
                ));
            }
        }

        let tool_offset_spec = doc.tool_offset.unwrap_or_default();
        let tool_offset = tool_offset_spec
            .to_transform()
            .map_err(|e| ModelError::invalid("tool_offset", e.to_string()))?;

        let mut model = RobotModel {
            name: doc.name,
            family,
            joints,
            tool_offset_spec,
            tool_offset,
            ik_binding: None,
        };

        if let Some(b) = doc.ik_binding {
            let mut indices = Vec::with_capacity(b.joints.len());
            for name in &b.joints {
                let idx = model.joint_index(name).ok_or_else(|| {
                    ModelError::invalid("ik_binding.joints", format!("unknown joint '{name}'"))
                })?;
                indices.push(idx);
            }
            if indices.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(ModelError::invalid(
                    "ik_binding.joints",
                    "bound joints must be distinct and consecutive in chain order",
                ));
            }
            let kinds: Vec<JointKind> = indices.iter().map(|&i| model.joints[i].kind).collect();
            if !b.family.accepts(&kinds) {
                let got: String = kinds.iter().map(|k| k.letter()).collect();
                return Err(ModelError::invalid(
                    "ik_binding",
                    format!("solver '{}' cannot drive joints of kind {got}", b.family.as_str()),
                ));
            }
            model.ik_binding = Some(IkBinding {
                family: b.family,
                joints: indices,
            });
            crate::ik::check_geometry(&model).map_err(|e| ModelError::invalid("ik_binding", e.to_string()))?;
        }

        Ok(model)
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            name: self.name.clone(),
            family: Some(self.family),
            tool_offset: Some(self.tool_offset_spec),
            joints: self
                .joints
                .iter()
                .map(|j| JointDocument {
                    name: j.name.clone(),
                    kind: j.kind,
                    axis: j.axis.to_array(),
                    origin: Some(j.origin_spec),
                    limits: Some(j.limits),
                    home: Some(j.home),
                })
                .collect(),
            ik_binding: self.ik_binding.as_ref().map(|b| IkBindingDocument {
                family: b.family,
                joints: b.joints.iter().map(|&i| self.joints[i].name.clone()).collect(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }
}

/// Model file schema. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_offset: Option<FrameSpec>,
    pub joints: Vec<JointDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ik_binding: Option<IkBindingDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDocument {
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<FrameSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<JointLimits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkBindingDocument {
    pub family: IkFamily,
    pub joints: Vec<String>,
}

/// Parses and validates a model document.
pub fn load_model(document: &str) -> Result<RobotModel, ModelError> {
    let doc: ModelDocument = serde_json::from_str(document).map_err(|e| ModelError::Parse(e.to_string()))?;
    RobotModel::from_document(doc)
}

/// Clips every entry of `q` into its joint limits. The flags mark the entries
/// that changed.
pub fn clamp(model: &RobotModel, q: &[f64]) -> Result<(JointVector, Vec<bool>), ModelError> {
    model.check_shape(q)?;
    let mut out = Vec::with_capacity(q.len());
    let mut flags = Vec::with_capacity(q.len());
    for (i, (joint, &v)) in model.joints.iter().zip(q).enumerate() {
        if !v.is_finite() {
            return Err(ModelError::NonFinite { index: i });
        }
        let c = joint.limits.clamp(v);
        flags.push(c != v);
        out.push(c);
    }
    Ok((out, flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"name": "pendulum", "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 1]}]}"#;

    #[test]
    fn minimal_document_defaults() {
        let m = load_model(MINIMAL).unwrap();
        assert_eq!(m.dof(), 1);
        assert_eq!(m.family(), Family::Custom);
        assert_eq!(m.joints()[0].limits(), JointLimits { min: -PI, max: PI });
        assert_eq!(*m.tool_offset(), HomogeneousTransform::IDENTITY);
        assert_eq!(*m.joints()[0].origin(), HomogeneousTransform::IDENTITY);
    }

    #[test]
    fn prismatic_default_stroke() {
        let m = load_model(r#"{"name": "slide", "joints": [{"name": "s", "kind": "prismatic", "axis": [1, 0, 0]}]}"#)
            .unwrap();
        assert_eq!(m.joints()[0].limits(), JointLimits { min: 0.0, max: DEFAULT_PRISMATIC_STROKE });
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let doc = MINIMAL.replace("[0, 0, 1]", "[0, 0, 2]");
        let err = load_model(&doc).unwrap_err();
        assert!(err.to_string().contains("axis not unit"), "{err}");
        assert!(matches!(err, ModelError::Invalid { ref field, .. } if field == "joint 'j'.axis"));
    }

    #[test]
    fn validation_errors_name_the_field() {
        let dup = r#"{"name": "d", "joints": [
            {"name": "a", "kind": "revolute", "axis": [0, 0, 1]},
            {"name": "a", "kind": "revolute", "axis": [0, 0, 1]}]}"#;
        assert!(matches!(load_model(dup), Err(ModelError::Invalid { field, .. }) if field == "joints[1].name"));

        let inverted = r#"{"name": "d", "joints": [
            {"name": "a", "kind": "revolute", "axis": [0, 0, 1], "limits": [1, -1], "home": 0}]}"#;
        assert!(matches!(load_model(inverted), Err(ModelError::Invalid { field, .. }) if field == "joint 'a'.limits"));

        let bad_home = r#"{"name": "d", "joints": [
            {"name": "a", "kind": "revolute", "axis": [0, 0, 1], "limits": [0, 1], "home": 2}]}"#;
        assert!(matches!(load_model(bad_home), Err(ModelError::Invalid { field, .. }) if field == "joint 'a'.home"));

        let unknown_joint = r#"{"name": "d", "joints": [
            {"name": "a", "kind": "prismatic", "axis": [1, 0, 0]}],
            "ik_binding": {"family": "cartesian", "joints": ["b"]}}"#;
        assert!(
            matches!(load_model(unknown_joint), Err(ModelError::Invalid { field, .. }) if field == "ik_binding.joints")
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let typo = MINIMAL.replace("\"axis\"", "\"axes\"");
        assert!(matches!(load_model(&typo), Err(ModelError::Parse(_))));
        let extra = r#"{"name": "x", "colour": "red", "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 1]}]}"#;
        assert!(matches!(load_model(extra), Err(ModelError::Parse(_))));
        assert!(matches!(load_model("{not json"), Err(ModelError::Parse(_))));
    }

    #[test]
    fn family_signature_is_enforced() {
        let doc = r#"{"name": "x", "family": "articulated", "joints": [
            {"name": "a", "kind": "revolute", "axis": [0, 0, 1]},
            {"name": "b", "kind": "prismatic", "axis": [0, 0, 1]},
            {"name": "c", "kind": "revolute", "axis": [0, 1, 0]}]}"#;
        assert!(matches!(load_model(doc), Err(ModelError::Invalid { field, .. }) if field == "family"));
    }

    #[test]
    fn clamp_examples() {
        let m = load_model(MINIMAL).unwrap();
        assert_eq!(clamp(&m, &[0.5]).unwrap(), (vec![0.5], vec![false]));
        assert_eq!(clamp(&m, &[4.0]).unwrap(), (vec![PI], vec![true]));
        assert_eq!(clamp(&m, &[-4.0]).unwrap(), (vec![-PI], vec![true]));
        assert_eq!(clamp(&m, &[0.0, 1.0]), Err(ModelError::Shape { expected: 1, got: 2 }));
        assert_eq!(clamp(&m, &[f64::NAN]), Err(ModelError::NonFinite { index: 0 }));
    }

    #[test]
    fn home_never_flags() {
        for model in builtin_catalog() {
            let (q, flags) = clamp(&model, &model.home()).unwrap();
            assert_eq!(q, model.home());
            assert!(flags.iter().all(|f| !f), "{}", model.name());
        }
    }
}
