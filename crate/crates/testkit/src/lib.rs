//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls into the engine's transform or kinematics code: the
//! forward oracle rebuilds every chain from the model document with
//! nalgebra, and the two-link oracle counts solution basins by brute force.

use std::f64::consts::PI;

use kinesim_core::robot_model::{FrameSpec, JointKind, ModelDocument, RobotModel};
use kinesim_core::session::{Command, Mode};
use kinesim_core::transforms::Vec3;
use nalgebra::{Isometry3, Matrix4, Translation3, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as TestRng;

/// Planar two-link arm with unit links in the base xy plane.
pub const PLANAR_2R_DOCUMENT: &str = r#"{
  "name": "planar_2r",
  "joints": [
    {"name": "shoulder", "kind": "revolute", "axis": [0, 0, 1]},
    {"name": "elbow", "kind": "revolute", "axis": [0, 0, 1], "origin": {"xyz": [1, 0, 0]}}
  ],
  "tool_offset": {"xyz": [1, 0, 0]},
  "ik_binding": {"family": "planar2r", "joints": ["shoulder", "elbow"]}
}"#;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform joint vector inside the model's limits.
pub fn random_q(model: &RobotModel, rng: &mut impl Rng) -> Vec<f64> {
    model
        .joints()
        .iter()
        .map(|j| {
            let l = j.limits();
            if l.min == l.max {
                l.min
            } else {
                rng.random_range(l.min..=l.max)
            }
        })
        .collect()
}

fn frame(spec: Option<FrameSpec>) -> Isometry3<f64> {
    let spec = spec.unwrap_or_default();
    let [yaw, pitch, roll] = spec.rpy_zyx;
    // nalgebra's (roll, pitch, yaw) constructor is Rz(yaw) Ry(pitch) Rx(roll).
    Isometry3::from_parts(
        Translation3::new(spec.xyz[0], spec.xyz[1], spec.xyz[2]),
        UnitQuaternion::from_euler_angles(roll, pitch, yaw),
    )
}

/// Base-frame pose of every joint frame followed by the tool frame.
pub fn oracle_frames(doc: &ModelDocument, q: &[f64]) -> Vec<Matrix4<f64>> {
    assert_eq!(doc.joints.len(), q.len(), "oracle: joint vector shape");
    let mut acc = Isometry3::identity();
    let mut out = Vec::with_capacity(q.len() + 1);
    for (joint, &v) in doc.joints.iter().zip(q) {
        let axis = Vector3::from(joint.axis);
        let motion = match joint.kind {
            JointKind::Revolute => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), v),
            ),
            JointKind::Prismatic => Isometry3::from_parts(Translation3::from(axis * v), UnitQuaternion::identity()),
        };
        acc = acc * frame(joint.origin) * motion;
        out.push(acc.to_homogeneous());
    }
    acc *= frame(doc.tool_offset);
    out.push(acc.to_homogeneous());
    out
}

pub fn oracle_tool_position(doc: &ModelDocument, q: &[f64]) -> Vector3<f64> {
    let m = oracle_frames(doc, q).pop().expect("chain has a tool frame");
    Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])
}

/// Largest absolute entry difference between a row-major engine matrix and
/// an oracle matrix.
pub fn max_entry_diff(engine: &[[f64; 4]; 4], oracle: &Matrix4<f64>) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in engine.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((v - oracle[(i, j)]).abs());
        }
    }
    worst
}

/// Brute-force basin finder for the planar two-link arm with links along x.
///
/// Every cell of a `step`-spaced grid over the torus `[0, 2pi)^2` that is no
/// worse than its eight neighbours seeds a local descent; refined points are
/// merged when they lie within `merge` radians of each other or when no cost
/// barrier separates them.
pub struct TwoLinkOracle {
    l1: f64,
    l2: f64,
    n: usize,
    step: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basin {
    pub shoulder: f64,
    pub elbow: f64,
    /// Distance from the tool to the target at the refined point.
    pub residual: f64,
}

impl TwoLinkOracle {
    pub fn new(l1: f64, l2: f64, step_degrees: f64) -> Self {
        let n = (360.0 / step_degrees).round() as usize;
        let step = 2.0 * PI / n as f64;
        let (sin, cos) = (0..n).map(|i| (i as f64 * step).sin_cos()).unzip();
        TwoLinkOracle { l1, l2, n, step, cos, sin }
    }

    fn cost(&self, a: f64, b: f64, target: (f64, f64)) -> f64 {
        let x = self.l1 * a.cos() + self.l2 * (a + b).cos() - target.0;
        let y = self.l1 * a.sin() + self.l2 * (a + b).sin() - target.1;
        x * x + y * y
    }

    fn grid_cost(&self, i: usize, j: usize, target: (f64, f64)) -> f64 {
        let k = (i + j) % self.n;
        let x = self.l1 * self.cos[i] + self.l2 * self.cos[k] - target.0;
        let y = self.l1 * self.sin[i] + self.l2 * self.sin[k] - target.1;
        x * x + y * y
    }

    fn residual(&self, a: f64, b: f64, target: (f64, f64)) -> [f64; 2] {
        [
            self.l1 * a.cos() + self.l2 * (a + b).cos() - target.0,
            self.l1 * a.sin() + self.l2 * (a + b).sin() - target.1,
        ]
    }

    /// Coarse descent from a grid seed.
    fn compass(&self, mut a: f64, mut b: f64, target: (f64, f64)) -> (f64, f64) {
        let mut f = self.cost(a, b, target);
        let mut h = self.step;
        while h > 1e-6 {
            let mut moved = false;
            for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, -h), (-h, h)] {
                let g = self.cost(a + da, b + db, target);
                if g < f {
                    a += da;
                    b += db;
                    f = g;
                    moved = true;
                    break;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        (a, b)
    }

    /// Levenberg-Marquardt on the two residual components. Converges even
    /// where the minimum is degenerate (outstretched arm).
    fn polish(&self, mut a: f64, mut b: f64, target: (f64, f64)) -> (f64, f64) {
        let mut lambda = 1e-3;
        let mut f = self.cost(a, b, target);
        for _ in 0..500 {
            let r = self.residual(a, b, target);
            let (s1, c1) = a.sin_cos();
            let (s12, c12) = (a + b).sin_cos();
            let j = [[-self.l1 * s1 - self.l2 * s12, -self.l2 * s12], [self.l1 * c1 + self.l2 * c12, self.l2 * c12]];
            let g = [j[0][0] * r[0] + j[1][0] * r[1], j[0][1] * r[0] + j[1][1] * r[1]];
            let h00 = j[0][0] * j[0][0] + j[1][0] * j[1][0] + lambda;
            let h11 = j[0][1] * j[0][1] + j[1][1] * j[1][1] + lambda;
            let h01 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
            let det = h00 * h11 - h01 * h01;
            let da = -(h11 * g[0] - h01 * g[1]) / det;
            let db = -(h00 * g[1] - h01 * g[0]) / det;
            let trial = self.cost(a + da, b + db, target);
            if trial < f {
                a += da;
                b += db;
                f = trial;
                lambda = (lambda / 3.0).max(1e-15);
            } else {
                lambda *= 4.0;
            }
            if da.abs().max(db.abs()) < 1e-16 || lambda > 1e10 {
                break;
            }
        }
        (a, b)
    }

    /// Descent to a local minimum, restarted from any lower point found on a
    /// ring of probes so that saddles are not mistaken for minima.
    fn refine(&self, a: f64, b: f64, target: (f64, f64)) -> (f64, f64) {
        let (ca, cb) = self.compass(a, b, target);
        let (mut a, mut b) = self.polish(ca, cb, target);
        let mut f = self.cost(a, b, target);
        'descend: loop {
            for r in [1e-2, 1e-3] {
                for k in 0..72 {
                    let (s, c) = (k as f64 * PI / 36.0).sin_cos();
                    if self.cost(a + r * c, b + r * s, target) < f {
                        let (ca, cb) = self.compass(a + r * c, b + r * s, target);
                        (a, b) = self.polish(ca, cb, target);
                        f = self.cost(a, b, target);
                        continue 'descend;
                    }
                }
            }
            return (a, b);
        }
    }

    /// True when the straight path between two points never rises above the
    /// higher endpoint, i.e. they share a basin.
    fn connected(&self, p: &Basin, q: &Basin, target: (f64, f64)) -> bool {
        let da = wrap(q.shoulder - p.shoulder);
        let db = wrap(q.elbow - p.elbow);
        let ceiling = self.cost(p.shoulder, p.elbow, target).max(self.cost(q.shoulder, q.elbow, target)) + 1e-14;
        (1..64).all(|i| {
            let s = i as f64 / 64.0;
            self.cost(p.shoulder + s * da, p.elbow + s * db, target) <= ceiling
        })
    }

    /// All distinct local minima of the squared tool-target distance.
    pub fn basins(&self, target: (f64, f64), merge: f64) -> Vec<Basin> {
        let n = self.n;
        let grid: Vec<f64> = (0..n * n).map(|c| self.grid_cost(c / n, c % n, target)).collect();
        let at = |i: usize, j: usize| grid[(i % n) * n + (j % n)];
        let mut found: Vec<Basin> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let f = at(i, j);
                let is_min = [(n - 1, n - 1), (n - 1, 0), (n - 1, 1), (0, n - 1), (0, 1), (1, n - 1), (1, 0), (1, 1)]
                    .iter()
                    .all(|&(di, dj)| f <= at(i + di, j + dj));
                if !is_min {
                    continue;
                }
                let (a, b) = self.refine(i as f64 * self.step, j as f64 * self.step, target);
                let basin = Basin {
                    shoulder: wrap(a),
                    elbow: wrap(b),
                    residual: self.cost(a, b, target).sqrt(),
                };
                let same = |o: &Basin| {
                    angle_gap(o.shoulder, basin.shoulder).max(angle_gap(o.elbow, basin.elbow)) <= merge
                        || self.connected(o, &basin, target)
                };
                if !found.iter().any(same) {
                    found.push(basin);
                }
            }
        }
        found
    }
}

const BRANCH_LABELS: [&str; 12] = [
    "unique",
    "elbow_up",
    "elbow_down",
    "elbow_straight",
    "front",
    "back",
    "front_reversed",
    "front_elbow_up",
    "front_elbow_down",
    "back_elbow_up",
    "back_elbow_down",
    "no_such_branch",
];

/// A random but reproducible command stream for `model`. It mixes legal and
/// illegal mode switches, out-of-range joint values and indices, reachable
/// and unreachable targets, unknown branches, student matrices that are
/// right or perturbed, resets and ticks (some with non-positive `dt`).
pub fn fuzz_commands(model: &RobotModel, seed: u64, count: usize) -> Vec<Command> {
    let mut r = rng(seed);
    let doc = model.to_document();
    let modes = [Mode::Menu, Mode::DirectKinematics, Mode::InverseKinematics, Mode::Validate];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let c = match r.random_range(0..100) {
            0..=9 => Command::SetMode {
                mode: modes[r.random_range(0..modes.len())],
            },
            10..=34 => {
                let index = r.random_range(0..model.dof() + 1);
                let value = match model.joints().get(index) {
                    Some(j) => {
                        let l = j.limits();
                        let pad = 0.25 * (l.max - l.min) + 0.1;
                        r.random_range(l.min - pad..l.max + pad)
                    }
                    None => r.random_range(-1.0..1.0),
                };
                Command::SetJoint { index, value }
            }
            35..=49 => {
                let target = if r.random_bool(0.7) {
                    let p = oracle_tool_position(&doc, &random_q(model, &mut r));
                    Vec3::new(p.x, p.y, p.z)
                } else {
                    Vec3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-1.0..2.0))
                };
                let branch = r
                    .random_bool(0.3)
                    .then(|| BRANCH_LABELS[r.random_range(0..BRANCH_LABELS.len())].to_string());
                Command::RequestIk { target, branch }
            }
            50..=59 => Command::ChooseBranch {
                branch: BRANCH_LABELS[r.random_range(0..BRANCH_LABELS.len())].to_string(),
            },
            60..=67 => {
                let q = random_q(model, &mut r);
                let mut matrices: Vec<[[f64; 4]; 4]> = oracle_frames(&doc, &q)
                    .iter()
                    .map(|m| std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])))
                    .collect();
                matrices.pop();
                if r.random_bool(0.5) {
                    let k = r.random_range(0..matrices.len());
                    matrices[k][r.random_range(0..3)][r.random_range(0..4)] += r.random_range(-0.5..0.5);
                }
                Command::ValidateMatrices {
                    matrices,
                    scope: Default::default(),
                    tolerance: r.random_bool(0.5).then(|| r.random_range(1e-6..1e-2)),
                }
            }
            68..=71 => Command::Reset,
            _ => Command::Tick {
                dt: r.random_range(-0.05..0.2),
            },
        };
        out.push(c);
    }
    out
}

/// Wraps into `(-pi, pi]`.
pub fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Distance between two angles on the circle.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}
