//! Simulator state machine.
//!
//! A session walks the mode graph `menu <-> direct_kinematics <->
//! inverse_kinematics <-> validate`. Commands are applied one at a time;
//! a rejected command leaves the state untouched and every accepted change
//! bumps `revision` by one. Because commands carry everything they need
//! (including `tick` durations), replaying a recorded command log reproduces
//! the final state bit for bit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fk::{fk_chain, validate_matrices, FkError, MatrixDiff, ValidationScope, DEFAULT_VALIDATION_TOLERANCE};
use crate::ik::{solve_ik, IkError, IkSolutionSet, IkTarget};
use crate::robot_model::{clamp, JointVector, RobotModel};
use crate::transforms::{Pose, Vec3};

/// Default duration of the move toward a chosen IK branch, in seconds.
pub const DEFAULT_ANIMATION_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Menu,
    DirectKinematics,
    InverseKinematics,
    Validate,
}

impl Mode {
    fn rank(self) -> u8 {
        match self {
            Mode::Menu => 0,
            Mode::DirectKinematics => 1,
            Mode::InverseKinematics => 2,
            Mode::Validate => 3,
        }
    }

    /// Edges of the mode graph; each mode links only to its neighbours.
    pub fn can_switch_to(self, to: Mode) -> bool {
        self.rank().abs_diff(to.rank()) == 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Menu => "menu",
            Mode::DirectKinematics => "direct_kinematics",
            Mode::InverseKinematics => "inverse_kinematics",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    SetMode {
        mode: Mode,
    },
    SetJoint {
        index: usize,
        value: f64,
    },
    RequestIk {
        target: Vec3,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branch: Option<String>,
    },
    ChooseBranch {
        branch: String,
    },
    ValidateMatrices {
        matrices: Vec<[[f64; 4]; 4]>,
        #[serde(default)]
        scope: ValidationScope,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Reset,
    Tick {
        dt: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetMode { .. } => "set_mode",
            Command::SetJoint { .. } => "set_joint",
            Command::RequestIk { .. } => "request_ik",
            Command::ChooseBranch { .. } => "choose_branch",
            Command::ValidateMatrices { .. } => "validate_matrices",
            Command::Reset => "reset",
            Command::Tick { .. } => "tick",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("command '{command}' is not allowed in mode '{}'", mode.as_str())]
    WrongMode { command: &'static str, mode: Mode },
    #[error("cannot switch from '{}' to '{}'", from.as_str(), to.as_str())]
    IllegalTransition { from: Mode, to: Mode },
    #[error("joint index {index} out of range for a {dof}-joint model")]
    JointIndex { index: usize, dof: usize },
    #[error("value must be finite")]
    NonFinite,
    #[error("no branch labelled '{0}' in the current solution set")]
    UnknownBranch(String),
    #[error("branch '{0}' violates joint limits")]
    InfeasibleBranch(String),
    #[error("no IK solutions to choose from")]
    NoSolutions,
    #[error(transparent)]
    Ik(#[from] IkError),
    #[error(transparent)]
    Fk(#[from] FkError),
}

/// Linear joint-space motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub q_start: JointVector,
    pub q_end: JointVector,
    pub duration: f64,
    /// Normalised progress in `[0, 1]`.
    pub t: f64,
}

impl Trajectory {
    pub fn new(q_start: JointVector, q_end: JointVector, duration: f64) -> Self {
        Trajectory {
            q_start,
            q_end,
            duration,
            t: 0.0,
        }
    }

    /// `(1 - t) q_start + t q_end`: exact at both ends and at the midpoint.
    pub fn sample(&self, t: f64) -> JointVector {
        let t = t.clamp(0.0, 1.0);
        self.q_start
            .iter()
            .zip(&self.q_end)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub model: String,
    pub mode: Mode,
    pub q: JointVector,
    pub target: Option<IkTarget>,
    pub last_solutions: Option<IkSolutionSet>,
    pub animation: Option<Trajectory>,
    pub revision: u64,
    /// Which entries the last `set_joint` clipped.
    pub clamped_flags: Option<Vec<bool>>,
    pub diffs: Option<Vec<MatrixDiff>>,
}

/// What clients see after every change: the state plus derived kinematics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateEvent {
    pub session_id: String,
    pub model: String,
    pub revision: u64,
    pub mode: Mode,
    pub q: JointVector,
    /// `fk_chain` frames, row-major.
    pub frames: Vec<[f64; 16]>,
    pub pose: Pose,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<IkTarget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solutions: Option<IkSolutionSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub animation: Option<Trajectory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped_flags: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffs: Option<Vec<MatrixDiff>>,
}

#[derive(Debug, Clone)]
pub struct Session {
    model: Arc<RobotModel>,
    state: SessionState,
    animation_seconds: f64,
}

impl Session {
    /// A fresh session: the model is selected, so it starts in
    /// `direct_kinematics` at the home configuration with revision 1.
    pub fn new(session_id: impl Into<String>, model: Arc<RobotModel>) -> Self {
        let state = SessionState {
            session_id: session_id.into(),
            model: model.name().to_string(),
            mode: Mode::DirectKinematics,
            q: model.home(),
            target: None,
            last_solutions: None,
            animation: None,
            revision: 1,
            clamped_flags: None,
            diffs: None,
        };
        Session {
            model,
            state,
            animation_seconds: DEFAULT_ANIMATION_SECONDS,
        }
    }

    pub fn with_animation_seconds(mut self, seconds: f64) -> Self {
        self.animation_seconds = seconds;
        self
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn model(&self) -> &Arc<RobotModel> {
        &self.model
    }

    pub fn revision(&self) -> u64 {
        self.state.revision
    }

    pub fn is_animating(&self) -> bool {
        self.state.animation.is_some()
    }

    pub fn event(&self) -> StateEvent {
        let chain = fk_chain(&self.model, &self.state.q).expect("session q always matches the model");
        StateEvent {
            session_id: self.state.session_id.clone(),
            model: self.state.model.clone(),
            revision: self.state.revision,
            mode: self.state.mode,
            q: self.state.q.clone(),
            frames: chain.to_row_major(),
            pose: chain.tool().pose(),
            target: self.state.target,
            solutions: self.state.last_solutions.clone(),
            animation: self.state.animation.clone(),
            clamped_flags: self.state.clamped_flags.clone(),
            diffs: self.state.diffs.clone(),
        }
    }

    fn require_mode(&self, command: &'static str, mode: Mode) -> Result<(), SessionError> {
        if self.state.mode != mode {
            return Err(SessionError::WrongMode {
                command,
                mode: self.state.mode,
            });
        }
        Ok(())
    }

    /// Applies one command. Returns whether the state changed; on error the
    /// state is untouched.
    pub fn apply(&mut self, command: &Command) -> Result<bool, SessionError> {
        let mut next = self.state.clone();
        let changed = match command {
            Command::SetMode { mode } => {
                if !self.state.mode.can_switch_to(*mode) {
                    return Err(SessionError::IllegalTransition {
                        from: self.state.mode,
                        to: *mode,
                    });
                }
                next.mode = *mode;
                next.clamped_flags = None;
                if *mode == Mode::Menu {
                    next.target = None;
                    next.last_solutions = None;
                    next.animation = None;
                    next.diffs = None;
                }
                true
            }
            Command::SetJoint { index, value } => {
                self.require_mode("set_joint", Mode::DirectKinematics)?;
                if *index >= self.model.dof() {
                    return Err(SessionError::JointIndex {
                        index: *index,
                        dof: self.model.dof(),
                    });
                }
                if !value.is_finite() {
                    return Err(SessionError::NonFinite);
                }
                let limits = self.model.joints()[*index].limits();
                let clamped = limits.clamp(*value);
                let mut flags = vec![false; self.model.dof()];
                flags[*index] = clamped != *value;
                next.q[*index] = clamped;
                next.animation = None;
                next.clamped_flags = Some(flags);
                true
            }
            Command::RequestIk { target, branch } => {
                self.require_mode("request_ik", Mode::InverseKinematics)?;
                let target = IkTarget { position: *target };
                let set = solve_ik(&self.model, &self.state.q, &target)?;
                let chosen = match branch {
                    Some(label) => Some(pick_branch(&set, label)?),
                    None => set.nearest_feasible().map(|s| s.q.clone()),
                };
                next.animation = chosen.map(|q_end| Trajectory::new(self.state.q.clone(), q_end, self.animation_seconds));
                next.target = Some(target);
                next.last_solutions = Some(set);
                next.clamped_flags = None;
                true
            }
            Command::ChooseBranch { branch } => {
                self.require_mode("choose_branch", Mode::InverseKinematics)?;
                let set = self.state.last_solutions.as_ref().ok_or(SessionError::NoSolutions)?;
                let q_end = pick_branch(set, branch)?;
                next.animation = Some(Trajectory::new(self.state.q.clone(), q_end, self.animation_seconds));
                next.clamped_flags = None;
                true
            }
            Command::ValidateMatrices {
                matrices,
                scope,
                tolerance,
            } => {
                self.require_mode("validate_matrices", Mode::Validate)?;
                let tol = tolerance.unwrap_or(DEFAULT_VALIDATION_TOLERANCE);
                let diffs = validate_matrices(&self.model, &self.state.q, matrices, *scope, tol)?;
                next.diffs = Some(diffs);
                next.clamped_flags = None;
                true
            }
            Command::Reset => {
                next.q = self.model.home();
                next.target = None;
                next.last_solutions = None;
                next.animation = None;
                next.diffs = None;
                next.clamped_flags = None;
                true
            }
            Command::Tick { dt } => self.advance(&mut next, *dt),
        };
        if changed {
            next.revision = self.state.revision + 1;
            self.state = next;
        }
        Ok(changed)
    }

    /// Moves the animation forward by `dt` seconds. Without an animation, or
    /// with a non-positive `dt`, nothing happens.
    pub fn tick(&mut self, dt: f64) -> bool {
        self.apply(&Command::Tick { dt }).expect("tick never fails")
    }

    fn advance(&self, next: &mut SessionState, dt: f64) -> bool {
        let Some(anim) = next.animation.as_mut() else {
            return false;
        };
        if !dt.is_finite() || dt <= 0.0 {
            return false;
        }
        let step = if anim.duration > 0.0 { dt / anim.duration } else { 1.0 };
        anim.t = (anim.t + step).min(1.0);
        if anim.t >= 1.0 {
            next.q = anim.q_end.clone();
            next.animation = None;
        } else {
            let sample = anim.sample(anim.t);
            next.q = clamp(&self.model, &sample).expect("trajectory samples match the model").0;
        }
        next.clamped_flags = None;
        true
    }
}

fn pick_branch(set: &IkSolutionSet, label: &str) -> Result<JointVector, SessionError> {
    let sol = set
        .by_branch(label)
        .ok_or_else(|| SessionError::UnknownBranch(label.to_string()))?;
    if !sol.feasible {
        return Err(SessionError::InfeasibleBranch(label.to_string()));
    }
    Ok(sol.q.clone())
}

/// One command per line, JSON-encoded.
pub fn encode_log(commands: &[Command]) -> String {
    let mut out = String::new();
    for c in commands {
        out.push_str(&serde_json::to_string(c).expect("commands always serialize"));
        out.push('\n');
    }
    out
}

pub fn decode_log(text: &str) -> Result<Vec<Command>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Replays a command log on a fresh session. Rejected commands are skipped,
/// exactly as they were when the log was recorded.
pub fn replay(session_id: &str, model: Arc<RobotModel>, commands: &[Command]) -> Session {
    let mut s = Session::new(session_id, model);
    for c in commands {
        let _ = s.apply(c);
    }
    s
}
