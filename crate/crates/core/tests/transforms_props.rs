use std::f64::consts::{FRAC_PI_2, PI};

use kinesim_core::transforms::{HomogeneousTransform, Rotation3, Vec3};
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

fn to_na(t: &HomogeneousTransform) -> Matrix4<f64> {
    let m = t.to_rows();
    Matrix4::from_fn(|i, j| m[i][j])
}

fn max_abs_diff(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (a - b).abs().max()
}

fn angle() -> impl Strategy<Value = f64> {
    -4.0 * PI..4.0 * PI
}

fn transform() -> impl Strategy<Value = HomogeneousTransform> {
    (angle(), -FRAC_PI_2..FRAC_PI_2, angle(), -5.0..5.0, -5.0..5.0, -5.0..5.0)
        .prop_map(|(a, b, g, x, y, z)| HomogeneousTransform::from_xyz_rpy([x, y, z], [a, b, g]).unwrap())
}

#[test]
fn rotated_translation_maps_point_like_a_plain_matrix_product() {
    // Oracle: the same 4x4 built entry by entry and multiplied by nalgebra.
    let t = HomogeneousTransform::from_parts(Rotation3::rot_z(FRAC_PI_2).unwrap(), Vec3::X).unwrap();
    let c = FRAC_PI_2.cos();
    let s = FRAC_PI_2.sin();
    let oracle = Matrix4::new(c, -s, 0.0, 1.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let expected = oracle * Vector4::new(1.0, 0.0, 0.0, 1.0);
    let got = t.apply_point(Vec3::X);
    assert_eq!([got.x, got.y, got.z], [expected.x, expected.y, expected.z]);
    assert!(got.distance(Vec3::new(1.0, 1.0, 0.0)) < 1e-15);
}

#[test]
fn rotation_then_translation_sends_origin_to_y() {
    let rz = HomogeneousTransform::rotation(Rotation3::rot_z(FRAC_PI_2).unwrap());
    let tx = HomogeneousTransform::translation(Vec3::X).unwrap();
    let oracle = to_na(&rz) * to_na(&tx) * Vector4::new(0.0, 0.0, 0.0, 1.0);
    let got = rz.compose(&tx).apply_point(Vec3::ZERO);
    assert!((got.x - oracle.x).abs() < 1e-15 && (got.y - oracle.y).abs() < 1e-15 && (got.z - oracle.z).abs() < 1e-15);
    assert!(got.distance(Vec3::Y) < 1e-15);
}

proptest! {
    #[test]
    fn axis_rotation_and_its_reverse_cancel(a in angle()) {
        for (f, name) in [(Rotation3::rot_x as fn(f64) -> _, "x"), (Rotation3::rot_y, "y"), (Rotation3::rot_z, "z")] {
            let r = f(a).unwrap() * f(-a).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((r.get(i, j) - id).abs() <= 1e-12, "axis {name}");
                }
            }
        }
    }

    #[test]
    fn composition_is_associative(a in transform(), b in transform(), c in transform()) {
        let left = to_na(&((a * b) * c));
        let right = to_na(&(a * (b * c)));
        prop_assert!(max_abs_diff(&left, &right) <= 1e-12);
    }

    #[test]
    fn produced_rotations_are_proper(a in transform(), b in transform()) {
        for t in [a, b, a * b, a.invert(), b.invert() * a] {
            let r = t.rotation_block();
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-9);
            prop_assert!(r.orthonormality_error() <= 1e-9);
            prop_assert_eq!(t.to_rows()[3], [0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn rigid_inverse_matches_general_inverse(t in transform()) {
        let general = to_na(&t).try_inverse().unwrap();
        prop_assert!(max_abs_diff(&to_na(&t.invert()), &general) <= 1e-9);
        prop_assert!(max_abs_diff(&to_na(&(t * t.invert())), &Matrix4::identity()) <= 1e-9);
    }

    #[test]
    fn euler_angles_rebuild_the_rotation(t in transform()) {
        let r = t.rotation_block();
        let e = r.euler_zyx();
        prop_assert!(e.pitch.abs() <= FRAC_PI_2);
        let back = Rotation3::from_euler_zyx(e.yaw, e.pitch, e.roll).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((back.get(i, j) - r.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn non_singular_euler_angles_round_trip(
        yaw in -PI + 1e-6..PI - 1e-6,
        pitch in -FRAC_PI_2 + 1e-3..FRAC_PI_2 - 1e-3,
        roll in -PI + 1e-6..PI - 1e-6,
    ) {
        let e = Rotation3::from_euler_zyx(yaw, pitch, roll).unwrap().euler_zyx();
        prop_assert!(!e.singular);
        prop_assert!((e.yaw - yaw).abs() <= 1e-9);
        prop_assert!((e.pitch - pitch).abs() <= 1e-9);
        prop_assert!((e.roll - roll).abs() <= 1e-9);
    }
}
