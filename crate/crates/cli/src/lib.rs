//! `kinesim` command line: model listing, FK/IK evaluation, matrix
//! validation and the network service.
//!
//! [`run`] does all the work and returns the exit code with the captured
//! output, so transcripts can be checked without spawning a process.
//!
//! Exit codes: 0 success, 1 usage error, 2 parse or validation error, 3 no
//! feasible IK solution.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kinesim_core::fk::{fk_chain, validate_matrices, ValidationScope, DEFAULT_VALIDATION_TOLERANCE};
use kinesim_core::ik::{solve_ik, IkTarget};
use kinesim_core::robot_model::{Catalog, JointKind, RobotModel};
use kinesim_core::transforms::HomogeneousTransform;
use kinesim_service::{ModelSummary, ServiceConfig, DEFAULT_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kinesim", version, about = "Robot kinematics engine and teaching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Catalog operations.
    Models {
        #[command(subcommand)]
        action: ModelsCmd,
    },
    /// Forward kinematics: tool pose (or every frame) for a joint vector.
    Fk(FkArgs),
    /// Inverse kinematics: every branch reaching a target position.
    Ik(IkArgs),
    /// Compare hand-built matrices against the engine.
    Validate(ValidateArgs),
    /// Run the HTTP/WebSocket service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum ModelsCmd {
    /// Names, families and joint counts.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scope {
    Joints,
    Product,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    model: String,
    /// Extra model documents to load next to the built-in catalog.
    #[arg(long, value_name = "DIR")]
    models: Option<PathBuf>,
    /// Revolute values are given (and angles printed) in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct FkArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated joint values.
    #[arg(long, allow_hyphen_values = true)]
    joints: String,
    /// Print every frame instead of the tool pose.
    #[arg(long)]
    chain: bool,
}

#[derive(Debug, Args)]
struct IkArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated x,y,z in the base frame.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    /// Current joint values; defaults to the model's home.
    #[arg(long, allow_hyphen_values = true)]
    current: Option<String>,
    /// Also list branches that violate joint limits.
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    joints: String,
    /// JSON list of 4x4 row-major matrices.
    #[arg(long, value_name = "FILE")]
    matrices: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VALIDATION_TOLERANCE)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = Scope::Joints)]
    scope: Scope,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, value_name = "DIR")]
    models: Option<PathBuf>,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, message: impl std::fmt::Display) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Fixed 9-decimal formatting with negative zero folded into zero.
pub fn fmt9(v: f64) -> String {
    let s = format!("{v:.9}");
    if s == "-0.000000000" {
        "0.000000000".to_string()
    } else {
        s
    }
}

fn join9(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt9).collect::<Vec<_>>().join(" ")
}

/// Parses `a,b,c` into reals.
pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("{what}: '{t}' is not a finite number")),
            }
        })
        .collect()
}

fn load_catalog(dir: &Option<PathBuf>) -> Result<Catalog, String> {
    let mut catalog = Catalog::builtin();
    if let Some(dir) = dir {
        catalog.load_dir(dir).map_err(|e| e.to_string())?;
    }
    Ok(catalog)
}

struct Ctx {
    model: std::sync::Arc<RobotModel>,
    degrees: bool,
    format: Format,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, String> {
        let model = load_catalog(&common.models)?.get(&common.model).map_err(|e| e.to_string())?;
        Ok(Ctx {
            model,
            degrees: common.degrees,
            format: common.format,
        })
    }

    /// Joint vector in engine units, shape-checked.
    fn joints(&self, text: &str) -> Result<Vec<f64>, String> {
        let mut q = parse_list(text, "joints")?;
        self.model.check_shape(&q).map_err(|e| e.to_string())?;
        if self.degrees {
            for (v, j) in q.iter_mut().zip(self.model.joints()) {
                if j.kind() == JointKind::Revolute {
                    *v = v.to_radians();
                }
            }
        }
        Ok(q)
    }

    fn angle(&self, v: f64) -> f64 {
        if self.degrees {
            v.to_degrees()
        } else {
            v
        }
    }

    /// Joint values back in boundary units.
    fn shown(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(self.model.joints())
            .map(|(&v, j)| if j.kind() == JointKind::Revolute { self.angle(v) } else { v })
            .collect()
    }

    fn unit(&self) -> &'static str {
        if self.degrees {
            "deg"
        } else {
            "rad"
        }
    }
}

fn write_matrix(out: &mut String, m: &HomogeneousTransform) {
    for row in m.to_rows() {
        let _ = writeln!(out, "  {}", join9(row));
    }
}

fn json_line(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string(v).expect("wire types always serialize");
    s.push('\n');
    s
}

fn cmd_models(format: Format) -> Outcome {
    let catalog = Catalog::builtin();
    if format == Format::Json {
        let summaries: Vec<ModelSummary> = catalog.models().iter().map(|m| ModelSummary::of(m)).collect();
        return Outcome::ok(json_line(&summaries));
    }
    let mut out = format!("{:<16} {:<12} {:>3}  {}\n", "NAME", "FAMILY", "DOF", "JOINTS");
    for m in catalog.models() {
        let _ = writeln!(out, "{:<16} {:<12} {:>3}  {}", m.name(), m.family().as_str(), m.dof(), m.signature());
    }
    Outcome::ok(out)
}

fn cmd_fk(args: &FkArgs) -> Result<Outcome, String> {
    let ctx = Ctx::new(&args.common)?;
    let q = ctx.joints(&args.joints)?;
    let chain = fk_chain(&ctx.model, &q).map_err(|e| e.to_string())?;
    let pose = chain.tool().pose();
    if ctx.format == Format::Json {
        let body = serde_json::json!({
            "model": ctx.model.name(),
            "q": q,
            "frames": chain.to_row_major(),
            "pose": pose,
        });
        return Ok(Outcome::ok(json_line(&body)));
    }
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", ctx.model.name());
    let _ = writeln!(out, "q: {}", join9(ctx.shown(&q)));
    let p = pose.position;
    let e = pose.euler_zyx;
    let _ = writeln!(out, "position: {}", join9([p.x, p.y, p.z]));
    let _ = writeln!(
        out,
        "euler_zyx: {} (yaw pitch roll, {}){}",
        join9([ctx.angle(e.yaw), ctx.angle(e.pitch), ctx.angle(e.roll)]),
        ctx.unit(),
        if e.singular { " gimbal-locked" } else { "" }
    );
    if args.chain {
        for (k, frame) in chain.frames().iter().enumerate() {
            match ctx.model.joints().get(k) {
                Some(j) => {
                    let _ = writeln!(out, "frame {k} {}", j.name());
                }
                None => out.push_str("tool\n"),
            }
            write_matrix(&mut out, frame);
        }
    }
    Ok(Outcome::ok(out))
}

fn cmd_ik(args: &IkArgs) -> Result<Outcome, String> {
    let ctx = Ctx::new(&args.common)?;
    let t = parse_list(&args.target, "target")?;
    let [x, y, z] = t[..] else {
        return Err(format!("target: expected 3 values, got {}", t.len()));
    };
    let current = match &args.current {
        Some(text) => ctx.joints(text)?,
        None => ctx.model.home(),
    };
    let set = solve_ik(&ctx.model, &current, &IkTarget::new(x, y, z)).map_err(|e| e.to_string())?;
    let feasible = set.feasible().count();
    let code = if feasible > 0 { EXIT_OK } else { EXIT_UNREACHABLE };
    if ctx.format == Format::Json {
        return Ok(Outcome {
            code,
            stdout: json_line(&set),
            stderr: String::new(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", ctx.model.name());
    let _ = writeln!(out, "target: {}", join9([x, y, z]));
    let _ = writeln!(out, "reachable: {}", if set.reachable { "yes" } else { "no" });
    if set.singular {
        out.push_str("singular: first joint undetermined, current value kept\n");
    }
    let _ = writeln!(out, "solutions: {} ({feasible} feasible)", set.solutions.len());
    for s in set.solutions.iter().filter(|s| args.all || s.feasible) {
        let _ = write!(
            out,
            "{:<26} {:<10} q: {}",
            s.branch,
            if s.feasible { "feasible" } else { "infeasible" },
            join9(ctx.shown(&s.q))
        );
        if let Some(reason) = &s.infeasibility_reason {
            let _ = write!(out, " ({reason})");
        }
        out.push('\n');
    }
    if feasible == 0 {
        out.push_str(if set.reachable {
            "unreachable: no branch within joint limits\n"
        } else {
            "unreachable\n"
        });
    }
    Ok(Outcome {
        code,
        stdout: out,
        stderr: String::new(),
    })
}

fn cmd_validate(args: &ValidateArgs) -> Result<Outcome, String> {
    let ctx = Ctx::new(&args.common)?;
    let q = ctx.joints(&args.joints)?;
    let text = std::fs::read_to_string(&args.matrices).map_err(|e| format!("{}: {e}", args.matrices.display()))?;
    let matrices: Vec<[[f64; 4]; 4]> =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", args.matrices.display()))?;
    let scope = match args.scope {
        Scope::Joints => ValidationScope::Joints,
        Scope::Product => ValidationScope::Product,
    };
    let diffs = validate_matrices(&ctx.model, &q, &matrices, scope, args.tolerance).map_err(|e| e.to_string())?;
    let all_pass = diffs.iter().all(|d| d.pass);
    let code = if all_pass { EXIT_OK } else { EXIT_INVALID };
    if ctx.format == Format::Json {
        return Ok(Outcome {
            code,
            stdout: json_line(&diffs),
            stderr: String::new(),
        });
    }
    let mut out = String::new();
    for (k, d) in diffs.iter().enumerate() {
        let label = match scope {
            ValidationScope::Joints => ctx.model.joints()[k].name().to_string(),
            ValidationScope::Product => "product".to_string(),
        };
        let _ = write!(
            out,
            "matrix {k} {label}: {} max_abs_error {}",
            if d.pass { "pass" } else { "FAIL" },
            fmt9(d.max_abs_error)
        );
        if let Some(reason) = d.reason {
            let _ = write!(out, " ({})", reason.describe());
        }
        out.push('\n');
    }
    let _ = writeln!(out, "result: {}", if all_pass { "pass" } else { "fail" });
    Ok(Outcome {
        code,
        stdout: out,
        stderr: String::new(),
    })
}

fn cmd_serve(args: &ServeArgs) -> Outcome {
    let _ = tracing_subscriber::fmt().with_target(false).try_init();
    let config = ServiceConfig {
        port: args.port,
        models_dir: args.models.clone(),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return Outcome::fail(EXIT_INVALID, e),
    };
    match runtime.block_on(kinesim_service::serve(config)) {
        Ok(()) => Outcome::ok(String::new()),
        Err(e) => Outcome::fail(EXIT_INVALID, e),
    }
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(text)
            };
        }
    };
    let result = match &cli.command {
        Cmd::Models {
            action: ModelsCmd::List { format },
        } => Ok(cmd_models(*format)),
        Cmd::Fk(a) => cmd_fk(a),
        Cmd::Ik(a) => cmd_ik(a),
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Serve(a) => Ok(cmd_serve(a)),
    };
    result.unwrap_or_else(|message| Outcome::fail(EXIT_INVALID, message))
}
