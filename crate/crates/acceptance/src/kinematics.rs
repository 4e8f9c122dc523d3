use std::f64::consts::PI;

use kinesim_core::fk::{
    diff_matrix, factors, fk_chain, fk_pose, validate_matrices, StructuralReason, ValidationScope,
};
use kinesim_core::ik::{reachable, solve_ik, IkTarget};
use kinesim_core::robot_model::{load_model, Catalog, JointKind, RobotModel, REFERENCE_MODELS};
use kinesim_core::transforms::{HomogeneousTransform, Rotation3, Vec3};
use kinesim_testkit::{
    angle_gap, max_entry_diff, oracle_frames, oracle_tool_position, random_q, rng, TestRng, TwoLinkOracle,
    PLANAR_2R_DOCUMENT,
};
use nalgebra::{Matrix3, Matrix4};
use rand::Rng;

use crate::{ensure, Outcome};

fn na4(t: &HomogeneousTransform) -> Matrix4<f64> {
    let m = t.to_rows();
    Matrix4::from_fn(|i, j| m[i][j])
}

fn na3(r: &Rotation3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r.get(i, j))
}

fn random_rotation(r: &mut TestRng) -> Rotation3 {
    match r.random_range(0..3) {
        0 => Rotation3::from_euler_zyx(r.random_range(-PI..PI), r.random_range(-PI..PI), r.random_range(-PI..PI)),
        1 => {
            let axis = loop {
                let v = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
                if v.norm() > 0.1 {
                    break v * (1.0 / v.norm());
                }
            };
            Rotation3::about_axis(axis, r.random_range(-4.0 * PI..4.0 * PI))
        }
        _ => Ok(Rotation3::rot_x(r.random_range(-PI..PI)).unwrap()
            * Rotation3::rot_y(r.random_range(-PI..PI)).unwrap()
            * Rotation3::rot_z(r.random_range(-PI..PI)).unwrap()),
    }
    .expect("random rotations are well formed")
}

fn random_transform(r: &mut TestRng) -> HomogeneousTransform {
    let p = Vec3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
    HomogeneousTransform::from_parts(random_rotation(r), p).expect("produced rotations validate")
}

fn bottom_row_exact(t: &HomogeneousTransform) -> bool {
    t.to_rows()[3].map(f64::to_bits) == [0.0f64, 0.0, 0.0, 1.0].map(f64::to_bits)
}

pub fn transform_algebra() -> Outcome {
    let mut r = rng(1);
    let mut worst_orth = 0.0f64;
    let mut worst_det = 0.0f64;
    for i in 0..10_000 {
        // Alternate plain rotations with products of several, which is where
        // rounding accumulates.
        let rot = if i % 2 == 0 {
            random_rotation(&mut r)
        } else {
            (0..5).fold(random_rotation(&mut r), |acc, _| acc * random_rotation(&mut r))
        };
        let m = na3(&rot);
        worst_orth = worst_orth.max((m.transpose() * m - Matrix3::identity()).abs().max());
        worst_det = worst_det.max((m.determinant() - 1.0).abs());
    }
    ensure!(worst_orth <= 1e-9, "R^T R deviates from I by {worst_orth:e}");
    ensure!(worst_det <= 1e-9, "det deviates from 1 by {worst_det:e}");

    let mut worst_inv = 0.0f64;
    let mut produced = 0usize;
    for _ in 0..100 {
        let a = random_transform(&mut r);
        let b = random_transform(&mut r);
        let general = na4(&a).try_inverse().ok_or("oracle could not invert")?;
        worst_inv = worst_inv.max((na4(&a.invert()) - general).abs().max());
        for t in [a, b, a.invert(), a.compose(&b), b.compose(&a.invert()), a * b * a.invert()] {
            produced += 1;
            ensure!(bottom_row_exact(&t), "bottom row {:?}", t.to_rows()[3]);
        }
    }
    ensure!(worst_inv <= 1e-9, "inverse differs from the oracle by {worst_inv:e}");
    Ok(format!(
        "10000 rotations: max |RtR-I| {worst_orth:.1e}, max |det-1| {worst_det:.1e}; 100 inverses: max err {worst_inv:.1e}; {produced} bottom rows exact"
    ))
}

pub fn fk_determinism_structure() -> Outcome {
    let catalog = Catalog::builtin();
    let mut worst_link = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut evaluated = 0;
    for (m, model) in catalog.models().iter().enumerate() {
        let doc = model.to_document();
        let mut r = rng(10 + m as u64);
        for _ in 0..1000 {
            let q = random_q(model, &mut r);
            let a = fk_pose(model, &q).map_err(|e| e.to_string())?;
            let b = fk_pose(model, &q).map_err(|e| e.to_string())?;
            let bits = |p: &kinesim_core::Pose| {
                let o = p.orientation.rows();
                (
                    [p.position.x, p.position.y, p.position.z].map(f64::to_bits),
                    o.map(|row| row.map(f64::to_bits)),
                )
            };
            ensure!(bits(&a) == bits(&b), "{}: fk_pose not bit-identical", model.name());

            let f = factors(model, &q).map_err(|e| e.to_string())?;
            let chain = fk_chain(model, &q).map_err(|e| e.to_string())?;
            let mut acc = f[0];
            ensure!(chain.frames()[0] == acc, "{}: frame 0", model.name());
            for (k, fk) in f.iter().enumerate().skip(1) {
                acc = acc.compose(fk);
                ensure!(chain.frames()[k] == acc, "{}: prefix identity breaks at frame {k}", model.name());
            }

            let origins: Vec<Vec3> = chain.frames().iter().map(|t| t.position()).collect();
            for (k, joint) in doc.joints.iter().enumerate() {
                if joint.kind != JointKind::Revolute {
                    continue;
                }
                let before = if k == 0 { Vec3::ZERO } else { origins[k - 1] };
                let xyz = Vec3::from(joint.origin.map(|o| o.xyz).unwrap_or_default());
                worst_link = worst_link.max((origins[k].distance(before) - xyz.norm()).abs());
            }
            let tool = Vec3::from(doc.tool_offset.map(|o| o.xyz).unwrap_or_default());
            worst_link = worst_link.max((origins[model.dof()].distance(origins[model.dof() - 1]) - tool.norm()).abs());

            for (frame, oracle) in chain.frames().iter().zip(oracle_frames(&doc, &q)) {
                worst_oracle = worst_oracle.max(max_entry_diff(&frame.to_rows(), &oracle));
            }
            evaluated += 1;
        }
    }
    ensure!(worst_link <= 1e-9, "link length drifts by {worst_link:e}");
    ensure!(worst_oracle <= 1e-9, "frames differ from the independent chain by {worst_oracle:e}");
    Ok(format!(
        "{evaluated} joint vectors over {} models: bit-identical, prefix exact, link drift {worst_link:.1e}, oracle err {worst_oracle:.1e}",
        catalog.models().len()
    ))
}

/// `q` with the bound joints redrawn, so the solver cannot echo its input.
fn scramble_bound(model: &RobotModel, q: &[f64], r: &mut TestRng) -> Vec<f64> {
    let fresh = random_q(model, r);
    let mut out = q.to_vec();
    for &i in &model.ik_binding().expect("bound model").joints {
        out[i] = fresh[i];
    }
    out
}

pub fn ik_round_trip() -> Outcome {
    let catalog = Catalog::builtin();
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    let mut names: Vec<&str> = REFERENCE_MODELS.iter().map(|(_, n)| *n).collect();
    names.push("wyvernclaws5");
    for (m, name) in names.iter().enumerate() {
        let model = catalog.get(name).map_err(|e| e.to_string())?;
        let doc = model.to_document();
        let bound = model.ik_binding().expect("reference models are bound").joints.clone();
        let mut r = rng(20 + m as u64);
        let mut model_worst = 0.0f64;
        for _ in 0..10_000 {
            let q = random_q(&model, &mut r);
            let target = fk_pose(&model, &q).map_err(|e| e.to_string())?.position;
            let current = scramble_bound(&model, &q, &mut r);
            let set = solve_ik(&model, &current, &IkTarget { position: target }).map_err(|e| e.to_string())?;
            let mut best = f64::INFINITY;
            for s in set.feasible() {
                let engine = fk_pose(&model, &s.q).map_err(|e| e.to_string())?.position.distance(target);
                let o = oracle_tool_position(&doc, &s.q);
                let oracle = Vec3::new(o.x, o.y, o.z).distance(target);
                best = best.min(engine.max(oracle));
            }
            ensure!(best <= 1e-9, "{name}: best feasible branch misses by {best:e} for q={q:?}");
            model_worst = model_worst.max(best);
            for s in &set.solutions {
                for (i, (a, b)) in s.q.iter().zip(&current).enumerate() {
                    if !bound.contains(&i) {
                        ensure!(a.to_bits() == b.to_bits(), "{name}: joint {i} outside the binding moved");
                    }
                }
            }
        }
        worst = worst.max(model_worst);
        lines.push(format!("{name} {model_worst:.1e}"));
    }
    Ok(format!("10000 per model, worst error {worst:.1e} [{}]; excess joints held", lines.join(", ")))
}

pub fn branch_completeness() -> Outcome {
    let model = load_model(PLANAR_2R_DOCUMENT).map_err(|e| e.to_string())?;
    let oracle = TwoLinkOracle::new(1.0, 1.0, 0.5);
    let mut r = rng(30);
    let (mut interior, mut boundary) = (0, 0);
    for i in 0..100 {
        let heading = r.random_range(-PI..PI);
        // Every tenth target sits on the outer rim. The inner rim is the
        // origin, where the shoulder angle is undetermined.
        let radius = if i % 10 == 0 { 2.0 } else { r.random_range(0.1..1.9) };
        let t = (radius * heading.cos(), radius * heading.sin());
        let set = solve_ik(&model, &[0.0, 0.0], &IkTarget::new(t.0, t.1, 0.0)).map_err(|e| e.to_string())?;
        let basins = oracle.basins(t, 1e-4);
        let extra: Vec<_> = basins.iter().filter(|b| b.residual > 1e-6).collect();
        ensure!(extra.is_empty(), "target {t:?}: oracle found non-solution basins {extra:?}");
        ensure!(
            basins.len() == set.solutions.len(),
            "target {t:?}: oracle {} basins, solver {} branches",
            basins.len(),
            set.solutions.len()
        );
        for b in &basins {
            let matched = set
                .solutions
                .iter()
                .any(|s| angle_gap(s.q[0], b.shoulder).max(angle_gap(s.q[1], b.elbow)) <= 1e-5);
            ensure!(matched, "target {t:?}: basin {b:?} has no branch");
        }
        match set.solutions.len() {
            2 => interior += 1,
            1 => boundary += 1,
            n => return Err(format!("target {t:?}: {n} branches")),
        }
    }
    ensure!(boundary == 10 && interior == 90, "{interior} interior / {boundary} boundary");
    Ok(format!("100 targets at 0.5 deg: {interior} with 2 branches, {boundary} with 1, no extra basins"))
}

pub fn reachability_agreement() -> Outcome {
    let catalog = Catalog::builtin();
    let mut checked = 0;
    let mut inside = 0;
    for (m, (_, name)) in REFERENCE_MODELS.iter().enumerate() {
        let model = catalog.get(name).map_err(|e| e.to_string())?;
        let doc = model.to_document();
        let mut r = rng(40 + m as u64);
        for i in 0..1000 {
            let target = if i % 2 == 0 {
                let p = oracle_tool_position(&doc, &random_q(&model, &mut r));
                IkTarget::new(p.x, p.y, p.z)
            } else {
                IkTarget::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-0.3..1.3))
            };
            let analytic = reachable(&model, &target).map_err(|e| e.to_string())?;
            let solved = !solve_ik(&model, &model.home(), &target).map_err(|e| e.to_string())?.solutions.is_empty();
            ensure!(analytic == solved, "{name}: reachable()={analytic} but solve_ik non-empty={solved} at {target:?}");
            checked += 1;
            inside += solved as usize;
        }
    }
    Ok(format!("{checked} targets ({inside} reachable), 0 disagreements"))
}

pub fn validation_mode() -> Outcome {
    let catalog = Catalog::builtin();
    let mut r = rng(50);
    let mut cases = 0;
    for model in catalog.models() {
        for _ in 0..100 {
            let q = random_q(model, &mut r);
            let mut f = factors(model, &q).map_err(|e| e.to_string())?;
            f.pop();
            let student: Vec<[[f64; 4]; 4]> = f.iter().map(|t| t.to_rows()).collect();
            let diffs = validate_matrices(model, &q, &student, ValidationScope::Joints, 0.0).map_err(|e| e.to_string())?;
            for d in &diffs {
                ensure!(d.pass && d.max_abs_error == 0.0, "{}: engine matrices do not pass at 0", model.name());
            }
            let product = [fk_chain(model, &q).map_err(|e| e.to_string())?.tool().to_rows()];
            let d = validate_matrices(model, &q, &product, ValidationScope::Product, 0.0).map_err(|e| e.to_string())?;
            ensure!(d[0].pass && d[0].max_abs_error == 0.0, "{}: product does not pass at 0", model.name());
            cases += 1;
        }
    }

    // A student who writes rot_z with the sine signs swapped.
    let model = catalog.get("articulated_rrr").map_err(|e| e.to_string())?;
    let mut flips = 0;
    for _ in 0..200 {
        let alpha = r.random_range(-PI..PI);
        let q = [alpha, 0.3, -0.4];
        let engine = factors(&model, &q).map_err(|e| e.to_string())?;
        let mut student: Vec<[[f64; 4]; 4]> = engine[..3].iter().map(|t| t.to_rows()).collect();
        student[0][0][1] = -student[0][0][1];
        student[0][1][0] = -student[0][1][0];
        let diffs = validate_matrices(&model, &q, &student, ValidationScope::Joints, 1e-9).map_err(|e| e.to_string())?;
        let predicted = 2.0 * alpha.sin().abs();
        let d = &diffs[0];
        ensure!((d.max_abs_error - predicted).abs() <= 1e-12, "alpha {alpha}: {} vs {predicted}", d.max_abs_error);
        ensure!(d.reason.is_none(), "alpha {alpha}: sign flip flagged as structural");
        for i in 0..4 {
            for j in 0..4 {
                let at_flip = (i, j) == (0, 1) || (i, j) == (1, 0);
                let expect = if at_flip { predicted } else { 0.0 };
                ensure!((d.diffs[i][j] - expect).abs() <= 1e-12, "alpha {alpha}: entry ({i},{j}) = {}", d.diffs[i][j]);
            }
        }
        ensure!(d.pass == (predicted <= 1e-9), "alpha {alpha}: pass flag");
        ensure!(diffs[1].pass && diffs[2].pass, "untouched matrices fail");
        flips += 1;
    }

    let engine = HomogeneousTransform::IDENTITY;
    let mut scaled = engine.to_rows();
    scaled[3][3] = 2.0;
    let d = diff_matrix(&scaled, &engine, 10.0);
    ensure!(d.reason == Some(StructuralReason::ScaleFactorNotOne), "scale factor 2: {:?}", d.reason);
    ensure!(!d.pass, "scale factor 2 passed under a loose tolerance");
    Ok(format!(
        "{cases} engine inputs pass at 0; {flips} sign flips fail with 2|sin a| at (0,1),(1,0); scale 2 -> {}",
        StructuralReason::ScaleFactorNotOne.describe()
    ))
}
