//! Spatial representations: position vectors, 3x3 rotation matrices and 4x4
//! homogeneous transforms.
//!
//! Conventions used throughout the crate:
//!
//! * angles are radians,
//! * matrices are stored row-major and act on column vectors (`T * p`),
//! * Euler angles are z-y-x: `R = rot_z(yaw) * rot_y(pitch) * rot_x(roll)`,
//!   i.e. read left to right as rotations about the moving axes.
//!
//! A [`HomogeneousTransform`] only stores its rotation block and translation.
//! The bottom row `[0, 0, 0, 1]` (zero perspective, unit scale factor) is
//! emitted when the matrix is materialised and is never the result of
//! arithmetic.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance applied when validating rotations that come from outside the
/// engine (model files, hand-typed matrices).
pub const INPUT_ORTHONORMAL_TOL: f64 = 1e-6;

/// Tolerance engine-built rotations are held to.
pub const OUTPUT_ORTHONORMAL_TOL: f64 = 1e-9;

/// Tolerance on the norm of a joint axis.
pub const AXIS_UNIT_TOL: f64 = 1e-9;

const GIMBAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("rotation block is not orthonormal (max |R^T R - I| = {0:e})")]
    NotOrthonormal(f64),
    #[error("rotation block is not a proper rotation (det = {0})")]
    Improper(f64),
    #[error("perspective row must be zero")]
    PerspectiveNonZero,
    #[error("scale factor must be 1, got {0}")]
    ScaleFactor(f64),
    #[error("axis not unit (norm {0})")]
    AxisNotUnit(f64),
}

fn ensure_finite(value: f64, what: &'static str) -> Result<(), TransformError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(TransformError::NonFinite(what))
    }
}

/// A 3-vector: a position in meters or a unitless direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Checks the joint-axis invariant: finite and unit norm within 1e-9.
    pub fn check_unit(self) -> Result<Vec3, TransformError> {
        if !self.is_finite() {
            return Err(TransformError::NonFinite("axis"));
        }
        let n = self.norm();
        if (n - 1.0).abs() > AXIS_UNIT_TOL {
            return Err(TransformError::AxisNotUnit(n));
        }
        Ok(self)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A proper 3x3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[[f64; 3]; 3]")]
pub struct Rotation3 {
    rows: [[f64; 3]; 3],
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Rotation about the x axis:
    ///
    /// ```text
    /// | 1  0   0  |
    /// | 0  cos -sin |
    /// | 0  sin  cos |
    /// ```
    pub fn rot_x(angle: f64) -> Result<Self, TransformError> {
        ensure_finite(angle, "angle")?;
        let (s, c) = angle.sin_cos();
        Ok(Rotation3 {
            rows: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        })
    }

    /// Rotation about the y axis:
    ///
    /// ```text
    /// |  cos 0 sin |
    /// |  0   1  0  |
    /// | -sin 0 cos |
    /// ```
    pub fn rot_y(angle: f64) -> Result<Self, TransformError> {
        ensure_finite(angle, "angle")?;
        let (s, c) = angle.sin_cos();
        Ok(Rotation3 {
            rows: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        })
    }

    /// Rotation about the z axis:
    ///
    /// ```text
    /// | cos -sin 0 |
    /// | sin  cos 0 |
    /// |  0    0  1 |
    /// ```
    pub fn rot_z(angle: f64) -> Result<Self, TransformError> {
        ensure_finite(angle, "angle")?;
        let (s, c) = angle.sin_cos();
        Ok(Rotation3 {
            rows: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        })
    }

    /// Rotation of `angle` about a unit `axis`.
    ///
    /// Coordinate axes (and their negatives) map onto the exact single-axis
    /// matrices; any other axis goes through the Rodrigues formula.
    pub fn about_axis(axis: Vec3, angle: f64) -> Result<Self, TransformError> {
        ensure_finite(angle, "angle")?;
        let axis = axis.check_unit()?;
        match axis.to_array() {
            [1.0, 0.0, 0.0] => return Self::rot_x(angle),
            [-1.0, 0.0, 0.0] => return Self::rot_x(-angle),
            [0.0, 1.0, 0.0] => return Self::rot_y(angle),
            [0.0, -1.0, 0.0] => return Self::rot_y(-angle),
            [0.0, 0.0, 1.0] => return Self::rot_z(angle),
            [0.0, 0.0, -1.0] => return Self::rot_z(-angle),
            _ => {}
        }
        let Vec3 { x, y, z } = axis;
        let (s, c) = angle.sin_cos();
        let v = 1.0 - c;
        Ok(Rotation3 {
            rows: [
                [c + x * x * v, x * y * v - z * s, x * z * v + y * s],
                [y * x * v + z * s, c + y * y * v, y * z * v - x * s],
                [z * x * v - y * s, z * y * v + x * s, c + z * z * v],
            ],
        })
    }

    /// `rot_z(yaw) * rot_y(pitch) * rot_x(roll)`.
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Result<Self, TransformError> {
        Ok(Self::rot_z(yaw)? * Self::rot_y(pitch)? * Self::rot_x(roll)?)
    }

    /// Validates an externally supplied matrix at [`INPUT_ORTHONORMAL_TOL`].
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, TransformError> {
        Self::from_rows_with_tolerance(rows, INPUT_ORTHONORMAL_TOL)
    }

    pub fn from_rows_with_tolerance(rows: [[f64; 3]; 3], tol: f64) -> Result<Self, TransformError> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TransformError::NonFinite("rotation"));
        }
        let err = orthonormality_error(&rows);
        if err > tol {
            return Err(TransformError::NotOrthonormal(err));
        }
        let det = det3(&rows);
        if (det - 1.0).abs() > tol {
            return Err(TransformError::Improper(det));
        }
        Ok(Rotation3 { rows })
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.rows
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    pub fn transpose(&self) -> Rotation3 {
        let r = &self.rows;
        Rotation3 {
            rows: [
                [r[0][0], r[1][0], r[2][0]],
                [r[0][1], r[1][1], r[2][1]],
                [r[0][2], r[1][2], r[2][2]],
            ],
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.rows)
    }

    /// Max entrywise deviation of `R^T R` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rows)
    }

    /// Extracts z-y-x Euler angles with pitch in `[-pi/2, pi/2]`.
    ///
    /// At gimbal lock (`|cos pitch| < 1e-9`) roll is fixed to 0, yaw absorbs
    /// the free angle and the result is flagged `singular`.
    pub fn euler_zyx(&self) -> EulerZyx {
        let r = &self.rows;
        let cos_pitch = r[0][0].hypot(r[1][0]);
        let pitch = (-r[2][0]).atan2(cos_pitch);
        if cos_pitch < GIMBAL_TOL {
            // With roll = 0 the matrix reduces to rot_z(yaw) * rot_y(+-pi/2),
            // whose (0,1) and (1,1) entries are -sin(yaw) and cos(yaw).
            let yaw = (-r[0][1]).atan2(r[1][1]);
            EulerZyx {
                yaw,
                pitch: std::f64::consts::FRAC_PI_2.copysign(-r[2][0]),
                roll: 0.0,
                singular: true,
            }
        } else {
            EulerZyx {
                yaw: r[1][0].atan2(r[0][0]),
                pitch,
                roll: r[2][1].atan2(r[2][2]),
                singular: false,
            }
        }
    }
}

impl From<Rotation3> for [[f64; 3]; 3] {
    fn from(r: Rotation3) -> Self {
        r.rows
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;
    fn mul(self, o: Rotation3) -> Rotation3 {
        let a = &self.rows;
        let b = &o.rows;
        let mut rows = [[0.0; 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Rotation3 { rows }
    }
}

fn det3(r: &[[f64; 3]; 3]) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

fn orthonormality_error(r: &[[f64; 3]; 3]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - expected).abs());
        }
    }
    worst
}

/// z-y-x Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerZyx {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    /// Set at gimbal lock, where only the matrix is authoritative.
    pub singular: bool,
}

impl EulerZyx {
    pub fn to_array(self) -> [f64; 3] {
        [self.yaw, self.pitch, self.roll]
    }
}

/// A rigid 4x4 homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform {
    rotation: Rotation3,
    translation: Vec3,
}

impl Default for HomogeneousTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl HomogeneousTransform {
    pub const IDENTITY: HomogeneousTransform = HomogeneousTransform {
        rotation: Rotation3::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn translation(p: Vec3) -> Result<Self, TransformError> {
        if !p.is_finite() {
            return Err(TransformError::NonFinite("translation"));
        }
        Ok(HomogeneousTransform {
            rotation: Rotation3::IDENTITY,
            translation: p,
        })
    }

    /// Pure rotation; the translation column is zero.
    pub fn rotation(r: Rotation3) -> Self {
        HomogeneousTransform {
            rotation: r,
            translation: Vec3::ZERO,
        }
    }

    /// Rotation and translation applied together. `r` is re-validated at the
    /// input tolerance since callers may have built it by hand.
    pub fn from_parts(r: Rotation3, p: Vec3) -> Result<Self, TransformError> {
        let rotation = Rotation3::from_rows(r.rows)?;
        if !p.is_finite() {
            return Err(TransformError::NonFinite("translation"));
        }
        Ok(HomogeneousTransform {
            rotation,
            translation: p,
        })
    }

    /// Translation `xyz` followed by the z-y-x Euler rotation `rpy_zyx`
    /// (yaw, pitch, roll). This is the form used in model files.
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy_zyx: [f64; 3]) -> Result<Self, TransformError> {
        let r = Rotation3::from_euler_zyx(rpy_zyx[0], rpy_zyx[1], rpy_zyx[2])?;
        Self::from_parts(r, Vec3::from(xyz))
    }

    /// Validates a full 4x4 matrix: finite entries, zero perspective row,
    /// unit scale factor, and an orthonormal rotation block within `tol`.
    pub fn from_rows_with_tolerance(m: [[f64; 4]; 4], tol: f64) -> Result<Self, TransformError> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TransformError::NonFinite("matrix"));
        }
        if m[3][0] != 0.0 || m[3][1] != 0.0 || m[3][2] != 0.0 {
            return Err(TransformError::PerspectiveNonZero);
        }
        if m[3][3] != 1.0 {
            return Err(TransformError::ScaleFactor(m[3][3]));
        }
        let rows = [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ];
        let rotation = Rotation3::from_rows_with_tolerance(rows, tol)?;
        Ok(HomogeneousTransform {
            rotation,
            translation: Vec3::new(m[0][3], m[1][3], m[2][3]),
        })
    }

    pub fn from_rows(m: [[f64; 4]; 4]) -> Result<Self, TransformError> {
        Self::from_rows_with_tolerance(m, INPUT_ORTHONORMAL_TOL)
    }

    pub fn rotation_block(&self) -> Rotation3 {
        self.rotation
    }

    pub fn translation_part(&self) -> Vec3 {
        self.translation
    }

    pub fn position(&self) -> Vec3 {
        self.translation
    }

    /// The full matrix. Row 3 is the constant `[0, 0, 0, 1]`.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation.rows;
        let p = self.translation;
        [
            [r[0][0], r[0][1], r[0][2], p.x],
            [r[1][0], r[1][1], r[1][2], p.y],
            [r[2][0], r[2][1], r[2][2], p.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    /// Row-major flattening, the layout used on the wire.
    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_rows();
        let mut out = [0.0; 16];
        for (i, row) in m.iter().enumerate() {
            out[i * 4..i * 4 + 4].copy_from_slice(row);
        }
        out
    }

    /// `self * other`.
    pub fn compose(&self, other: &HomogeneousTransform) -> HomogeneousTransform {
        HomogeneousTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation.apply(other.translation) + self.translation,
        }
    }

    /// Closed-form rigid inverse `[R^T | -R^T p]`.
    pub fn invert(&self) -> HomogeneousTransform {
        let rt = self.rotation.transpose();
        HomogeneousTransform {
            rotation: rt,
            translation: -rt.apply(self.translation),
        }
    }

    /// Maps a point (w = 1).
    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    /// Maps a direction (w = 0); translation is ignored.
    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.apply(v)
    }

    pub fn pose(&self) -> Pose {
        Pose {
            position: self.translation,
            orientation: self.rotation,
            euler_zyx: self.rotation.euler_zyx(),
        }
    }
}

impl Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;
    fn mul(self, o: HomogeneousTransform) -> HomogeneousTransform {
        self.compose(&o)
    }
}

impl Serialize for HomogeneousTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomogeneousTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let flat = <[f64; 16]>::deserialize(d)?;
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row.copy_from_slice(&flat[i * 4..i * 4 + 4]);
        }
        HomogeneousTransform::from_rows(m).map_err(serde::de::Error::custom)
    }
}

/// Position and orientation of a frame in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Rotation3,
    pub euler_zyx: EulerZyx,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn assert_vec_close(a: Vec3, b: Vec3, tol: f64) {
        assert!(a.distance(b) <= tol, "{a} vs {b}");
    }

    #[test]
    fn zero_angle_is_identity() {
        assert_eq!(Rotation3::rot_z(0.0).unwrap(), Rotation3::IDENTITY);
        assert_eq!(Rotation3::rot_y(0.0).unwrap(), Rotation3::IDENTITY);
        assert_eq!(Rotation3::rot_x(0.0).unwrap(), Rotation3::IDENTITY);
    }

    #[test]
    fn quarter_turn_about_z_maps_x_to_y() {
        let r = Rotation3::rot_z(FRAC_PI_2).unwrap();
        assert_vec_close(r.apply(Vec3::X), Vec3::Y, 1e-15);
    }

    #[test]
    fn rot_z_entries_match_textbook_layout() {
        let a = 0.7_f64;
        let r = Rotation3::rot_z(a).unwrap().rows();
        assert_eq!(r, [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]]);
        let r = Rotation3::rot_y(a).unwrap().rows();
        assert_eq!(r, [[a.cos(), 0.0, a.sin()], [0.0, 1.0, 0.0], [-a.sin(), 0.0, a.cos()]]);
        let r = Rotation3::rot_x(a).unwrap().rows();
        assert_eq!(r, [[1.0, 0.0, 0.0], [0.0, a.cos(), -a.sin()], [0.0, a.sin(), a.cos()]]);
    }

    #[test]
    fn non_finite_angle_is_rejected() {
        assert_eq!(Rotation3::rot_x(f64::NAN), Err(TransformError::NonFinite("angle")));
        assert!(Rotation3::rot_z(f64::INFINITY).is_err());
        assert!(HomogeneousTransform::translation(Vec3::new(0.0, f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn translations() {
        let t0 = HomogeneousTransform::translation(Vec3::ZERO).unwrap();
        assert_eq!(t0, HomogeneousTransform::IDENTITY);

        let a = HomogeneousTransform::translation(Vec3::new(1.0, 2.0, 3.0)).unwrap();
        let b = HomogeneousTransform::translation(Vec3::new(-1.0, -2.0, -3.0)).unwrap();
        assert_eq!(a * b, HomogeneousTransform::IDENTITY);

        let t = HomogeneousTransform::translation(Vec3::X).unwrap();
        assert_eq!(t.apply_point(Vec3::Y), Vec3::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn from_parts_round_trips_and_maps_points() {
        let id = HomogeneousTransform::from_parts(Rotation3::IDENTITY, Vec3::ZERO).unwrap();
        assert_eq!(id, HomogeneousTransform::IDENTITY);

        let r = Rotation3::rot_z(FRAC_PI_2).unwrap();
        let t = HomogeneousTransform::from_parts(r, Vec3::X).unwrap();
        assert_eq!(t.rotation_block(), r);
        assert_eq!(t.translation_part(), Vec3::X);
        assert_vec_close(t.apply_point(Vec3::X), Vec3::new(1.0, 1.0, 0.0), 1e-15);
    }

    #[test]
    fn from_parts_rejects_bad_rotation() {
        let sheared = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(Rotation3::from_rows(sheared), Err(TransformError::NotOrthonormal(_))));
        let mirror = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(matches!(Rotation3::from_rows(mirror), Err(TransformError::Improper(_))));
    }

    #[test]
    fn compose_examples() {
        let t = HomogeneousTransform::from_xyz_rpy([0.3, -0.2, 1.0], [0.1, 0.2, 0.3]).unwrap();
        assert_eq!(t * HomogeneousTransform::IDENTITY, t);

        let tx = HomogeneousTransform::translation(Vec3::X).unwrap();
        let ty = HomogeneousTransform::translation(Vec3::Y).unwrap();
        assert_eq!(tx * ty, HomogeneousTransform::translation(Vec3::new(1.0, 1.0, 0.0)).unwrap());

        let rz = HomogeneousTransform::rotation(Rotation3::rot_z(FRAC_PI_2).unwrap());
        assert_vec_close((rz * tx).apply_point(Vec3::ZERO), Vec3::Y, 1e-15);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(HomogeneousTransform::IDENTITY.invert(), HomogeneousTransform::IDENTITY);
        let t = HomogeneousTransform::translation(Vec3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(t.invert(), HomogeneousTransform::translation(Vec3::new(-1.0, -2.0, -3.0)).unwrap());
    }

    #[test]
    fn euler_examples() {
        let e = Rotation3::IDENTITY.euler_zyx();
        assert_eq!(e.to_array(), [0.0, 0.0, 0.0]);
        assert!(!e.singular);

        let e = Rotation3::rot_z(0.3).unwrap().euler_zyx();
        assert!((e.yaw - 0.3).abs() < 1e-15);
        assert_eq!(e.pitch, 0.0);
        assert_eq!(e.roll, 0.0);
    }

    #[test]
    fn euler_gimbal_lock_is_flagged_and_rebuilds() {
        for pitch in [FRAC_PI_2, -FRAC_PI_2] {
            let r = Rotation3::from_euler_zyx(0.4, pitch, -0.9).unwrap();
            let e = r.euler_zyx();
            assert!(e.singular);
            assert_eq!(e.roll, 0.0);
            assert_eq!(e.pitch, pitch);
            let back = Rotation3::from_euler_zyx(e.yaw, e.pitch, e.roll).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back.get(i, j) - r.get(i, j)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn about_axis_matches_single_axis_matrices() {
        let a = 1.1;
        assert_eq!(Rotation3::about_axis(Vec3::Z, a).unwrap(), Rotation3::rot_z(a).unwrap());
        assert_eq!(Rotation3::about_axis(-Vec3::Y, a).unwrap(), Rotation3::rot_y(-a).unwrap());
        // Rodrigues on an oblique axis agrees with a composition route.
        let axis = Vec3::new(1.0, 1.0, 0.0) * (1.0 / 2f64.sqrt());
        let r = Rotation3::about_axis(axis, PI).unwrap();
        assert_vec_close(r.apply(Vec3::X), Vec3::Y, 1e-15);
        assert!(Rotation3::about_axis(Vec3::new(0.0, 0.0, 2.0), a).is_err());
    }

    #[test]
    fn full_matrix_validation_reports_structure() {
        let mut m = HomogeneousTransform::IDENTITY.to_rows();
        m[3][3] = 2.0;
        assert_eq!(HomogeneousTransform::from_rows(m), Err(TransformError::ScaleFactor(2.0)));
        let mut m = HomogeneousTransform::IDENTITY.to_rows();
        m[3][1] = 0.5;
        assert_eq!(HomogeneousTransform::from_rows(m), Err(TransformError::PerspectiveNonZero));
    }

    #[test]
    fn serde_is_row_major() {
        let t = HomogeneousTransform::translation(Vec3::new(1.0, 2.0, 3.0)).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[1.0,0.0,0.0,1.0,0.0,1.0,0.0,2.0,0.0,0.0,1.0,3.0,0.0,0.0,0.0,1.0]");
        let back: HomogeneousTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
