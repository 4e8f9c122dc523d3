//! Kinematics engine for the kinesim teaching simulator.
//!
//! The crate is organised bottom-up:
//!
//! * [`transforms`] holds the spatial representations: position vectors,
//!   axis rotations and 4x4 homogeneous transforms.
//! * [`robot_model`] describes serial manipulators declaratively and ships the
//!   built-in catalog.
//! * [`fk`] chains per-joint transforms into end-effector poses and checks
//!   student-built matrices.
//! * [`ik`] solves position targets in closed form for the classic structure
//!   families, returning every solution branch.
//! * [`session`] is the simulator state machine driven by the CLI and service.

pub mod fk;
pub mod ik;
pub mod robot_model;
pub mod session;
pub mod transforms;

pub use fk::{fk_chain, fk_pose, joint_transform, validate_matrices, FrameChain, MatrixDiff};
pub use ik::{reachable, solve_ik, IkSolution, IkSolutionSet, IkTarget};
pub use robot_model::{builtin_catalog, load_model, Catalog, Family, JointKind, JointSpec, RobotModel};
pub use session::{Command, Mode, Session, SessionState};
pub use transforms::{HomogeneousTransform, Pose, Rotation3, Vec3};
