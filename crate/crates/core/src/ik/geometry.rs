//! Extraction of the per-family constants the closed forms need.
//!
//! Every solver works in the frame `W` that sits right before the first bound
//! joint's motion (base, any leading joints at their current values, and the
//! first bound joint's origin). Joints after the bound ones are frozen at
//! their current values and folded, together with the tool offset, into the
//! tail point `t`: the tool position expressed in the last bound joint frame.
//!
//! Accepted layouts (axes given in each joint's own frame):
//!
//! | family      | joint 1 | joint 2     | joint 3          |
//! |-------------|---------|-------------|------------------|
//! | planar2r    | R, +-z  | R, +-z      |                  |
//! | scara       | R, +-z  | R, +-z      | P, +-z           |
//! | articulated | R, +-z  | R, +-y      | R, +-y           |
//! | spherical   | R, +-z  | R, +-y      | P, +-x           |
//! | cylindrical | R, +-z  | P, +-z      | P, horizontal    |
//! | cartesian   | P, any linearly independent axes             |
//!
//! The origins of joints 2 and 3 must be pure translations; the origin of the
//! first bound joint may be any rigid transform.

use crate::fk::factors;
use crate::robot_model::{IkFamily, JointSpec, RobotModel};
use crate::transforms::{HomogeneousTransform, Rotation3, Vec3};

use super::planar::V2;
use super::IkError;

const LAYOUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Geometry {
    Cartesian {
        /// Tool position with the bound joints at zero.
        base: Vec3,
        /// Base-frame direction of each bound joint.
        dirs: Vec<Vec3>,
    },
    Planar2r {
        frame: HomogeneousTransform,
        signs: [f64; 2],
        height: f64,
        link1: V2,
        link2: V2,
    },
    Scara {
        frame: HomogeneousTransform,
        signs: [f64; 3],
        /// Tool height in `W` with the quill at zero.
        height: f64,
        link1: V2,
        link2: V2,
    },
    Articulated {
        frame: HomogeneousTransform,
        signs: [f64; 3],
        /// Constant offset of the arm plane from the waist axis.
        lateral: f64,
        shoulder: V2,
        link1: V2,
        link2: V2,
    },
    Spherical {
        frame: HomogeneousTransform,
        signs: [f64; 3],
        lateral: f64,
        shoulder: V2,
        /// Tool point in the elevation plane with the extension at zero.
        reach: V2,
        extension: V2,
    },
    Cylindrical {
        frame: HomogeneousTransform,
        signs: [f64; 2],
        height: f64,
        /// Horizontal tool offset with the radial stroke at zero.
        radial: V2,
        extension: V2,
    },
}

fn axis_sign(joint: &JointSpec, reference: Vec3) -> Result<f64, IkError> {
    let a = joint.axis();
    if a.distance(reference) <= LAYOUT_TOL {
        Ok(1.0)
    } else if a.distance(-reference) <= LAYOUT_TOL {
        Ok(-1.0)
    } else {
        Err(IkError::Unsupported(format!(
            "joint '{}' axis must be parallel to {reference}",
            joint.name()
        )))
    }
}

fn pure_translation(joint: &JointSpec) -> Result<Vec3, IkError> {
    let r = joint.origin().rotation_block();
    let identity = Rotation3::IDENTITY;
    let off = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .any(|(i, j)| (r.get(i, j) - identity.get(i, j)).abs() > LAYOUT_TOL);
    if off {
        return Err(IkError::Unsupported(format!(
            "joint '{}' origin must not rotate the frame",
            joint.name()
        )));
    }
    Ok(joint.origin().translation_part())
}

fn xy(v: Vec3) -> V2 {
    V2::new(v.x, v.y)
}

fn xz(v: Vec3) -> V2 {
    V2::new(v.x, v.z)
}

fn non_degenerate(link: V2, what: &str) -> Result<V2, IkError> {
    if link.norm() <= 1e-9 {
        return Err(IkError::Unsupported(format!("{what} has zero length")));
    }
    Ok(link)
}

/// Builds the solver constants for `model` with excess joints at `q`.
pub(crate) fn extract(model: &RobotModel, q: &[f64]) -> Result<(Vec<usize>, Geometry), IkError> {
    let binding = model
        .ik_binding()
        .ok_or_else(|| IkError::Unsupported(format!("model '{}' has no ik_binding", model.name())))?;
    model.check_shape(q)?;
    let bound = binding.joints.clone();
    let first = bound[0];
    let last = *bound.last().expect("bindings are non-empty");

    let f = factors(model, q)?;
    let mut frame = HomogeneousTransform::IDENTITY;
    for factor in &f[..first] {
        frame = frame.compose(factor);
    }
    frame = frame.compose(model.joints()[first].origin());
    let mut tail = HomogeneousTransform::IDENTITY;
    for factor in &f[last + 1..] {
        tail = tail.compose(factor);
    }
    let t = tail.translation_part();

    let j = |k: usize| &model.joints()[bound[k]];

    let geometry = match binding.family {
        IkFamily::Cartesian => {
            let mut zeroed = q.to_vec();
            for &i in &bound {
                zeroed[i] = 0.0;
            }
            let zf = factors(model, &zeroed)?;
            let mut acc = HomogeneousTransform::IDENTITY;
            let mut dirs = Vec::with_capacity(bound.len());
            for (i, factor) in zf.iter().enumerate() {
                if bound.contains(&i) {
                    let before = acc.compose(model.joints()[i].origin());
                    dirs.push(before.apply_vector(model.joints()[i].axis()));
                }
                acc = acc.compose(factor);
            }
            let g = gram(&dirs);
            if gram_det(&g).abs() <= 1e-12 {
                return Err(IkError::Unsupported("prismatic axes are linearly dependent".into()));
            }
            Geometry::Cartesian {
                base: acc.translation_part(),
                dirs,
            }
        }
        IkFamily::Planar2r => {
            let s1 = axis_sign(j(0), Vec3::Z)?;
            let s2 = axis_sign(j(1), Vec3::Z)?;
            let o2 = pure_translation(j(1))?;
            Geometry::Planar2r {
                frame,
                signs: [s1, s2],
                height: o2.z + t.z,
                link1: non_degenerate(xy(o2), "first link")?,
                link2: non_degenerate(xy(t), "second link")?,
            }
        }
        IkFamily::Scara => {
            let s1 = axis_sign(j(0), Vec3::Z)?;
            let s2 = axis_sign(j(1), Vec3::Z)?;
            let s3 = axis_sign(j(2), Vec3::Z)?;
            let o2 = pure_translation(j(1))?;
            let o3 = pure_translation(j(2))?;
            Geometry::Scara {
                frame,
                signs: [s1, s2, s3],
                height: o2.z + o3.z + t.z,
                link1: non_degenerate(xy(o2), "first link")?,
                link2: non_degenerate(xy(o3 + t), "second link")?,
            }
        }
        IkFamily::Articulated => {
            let s1 = axis_sign(j(0), Vec3::Z)?;
            let s2 = axis_sign(j(1), Vec3::Y)?;
            let s3 = axis_sign(j(2), Vec3::Y)?;
            let o2 = pure_translation(j(1))?;
            let o3 = pure_translation(j(2))?;
            Geometry::Articulated {
                frame,
                signs: [s1, s2, s3],
                lateral: o2.y + o3.y + t.y,
                shoulder: xz(o2),
                link1: non_degenerate(xz(o3), "upper arm")?,
                link2: non_degenerate(xz(t), "forearm")?,
            }
        }
        IkFamily::Spherical => {
            let s1 = axis_sign(j(0), Vec3::Z)?;
            let s2 = axis_sign(j(1), Vec3::Y)?;
            let s3 = axis_sign(j(2), Vec3::X)?;
            let o2 = pure_translation(j(1))?;
            let o3 = pure_translation(j(2))?;
            Geometry::Spherical {
                frame,
                signs: [s1, s2, s3],
                lateral: o2.y + o3.y + t.y,
                shoulder: xz(o2),
                reach: xz(o3 + t),
                extension: V2::new(s3, 0.0),
            }
        }
        IkFamily::Cylindrical => {
            let s1 = axis_sign(j(0), Vec3::Z)?;
            let s2 = axis_sign(j(1), Vec3::Z)?;
            let o2 = pure_translation(j(1))?;
            let o3 = pure_translation(j(2))?;
            let a3 = j(2).axis();
            if a3.z.abs() > LAYOUT_TOL {
                return Err(IkError::Unsupported(format!(
                    "joint '{}' axis must be horizontal",
                    j(2).name()
                )));
            }
            let dir = xy(a3);
            let dir = dir.scale(1.0 / dir.norm());
            Geometry::Cylindrical {
                frame,
                signs: [s1, s2],
                height: o2.z + o3.z + t.z,
                radial: xy(o2 + o3 + t),
                extension: dir,
            }
        }
    };
    Ok((bound, geometry))
}

pub(crate) fn gram(dirs: &[Vec3]) -> Vec<Vec<f64>> {
    dirs.iter().map(|a| dirs.iter().map(|b| a.dot(*b)).collect()).collect()
}

pub(crate) fn gram_det(g: &[Vec<f64>]) -> f64 {
    match g.len() {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        3 => {
            g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
        }
        _ => 0.0,
    }
}
