//! Planar helpers shared by the family solvers.
//!
//! Angles here are counter-clockwise in the plane of the sub-problem. Each
//! family maps them back to joint values through the joint's axis sign.

use std::f64::consts::PI;

/// Slack allowed when the cosine of the elbow angle lands just outside
/// `[-1, 1]` at the workspace boundary.
pub(crate) const COSINE_TOL: f64 = 1e-9;

/// Below this distance from the elbow fold/stretch the two elbow branches are
/// reported as one.
const COINCIDENT_TOL: f64 = 1e-12;

/// Below this radius an `atan2` is undefined and the caller's angle is kept.
pub(crate) const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct V2 {
    pub x: f64,
    pub y: f64,
}

impl V2 {
    pub fn new(x: f64, y: f64) -> Self {
        V2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn dot(self, o: V2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn add(self, o: V2) -> V2 {
        V2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: V2) -> V2 {
        V2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> V2 {
        V2::new(self.x * s, self.y * s)
    }

    pub fn rotate(self, angle: f64) -> V2 {
        let (s, c) = angle.sin_cos();
        V2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Elbow {
    Up,
    Down,
    Straight,
    Folded,
}

impl Elbow {
    pub fn label(self) -> &'static str {
        match self {
            Elbow::Up => "elbow_up",
            Elbow::Down => "elbow_down",
            Elbow::Straight => "elbow_straight",
            Elbow::Folded => "elbow_folded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TwoLinkBranch {
    pub shoulder: f64,
    pub elbow: f64,
    pub kind: Elbow,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct TwoLinkSolution {
    pub branches: Vec<TwoLinkBranch>,
    pub singular: bool,
}

/// Cosine of the relative link angle needed to reach `target`, if within the
/// annulus (after the boundary clamp).
pub(crate) fn two_link_cosine(link1: V2, link2: V2, target: V2) -> Option<f64> {
    let n1 = link1.norm();
    let n2 = link2.norm();
    let r2 = target.dot(target);
    let c = (r2 - n1 * n1 - n2 * n2) / (2.0 * n1 * n2);
    if !(-1.0 - COSINE_TOL..=1.0 + COSINE_TOL).contains(&c) {
        None
    } else {
        Some(c.clamp(-1.0, 1.0))
    }
}

/// Solves `R(shoulder) * (link1 + R(elbow) * link2) = target`.
///
/// With `a1`, `a2` the directions of the link vectors and `n1`, `n2` their
/// lengths, the law of cosines gives
///
/// ```text
/// cos(a2 + elbow - a1) = (|target|^2 - n1^2 - n2^2) / (2 n1 n2)
/// ```
///
/// which has two mirror solutions inside the annulus `[|n1 - n2|, n1 + n2]`
/// and one on its boundary. The shoulder angle then rotates the bent arm onto
/// the target: `shoulder = atan2(target) - atan2(link1 + R(elbow) link2)`.
///
/// A positive relative bend is `elbow_down` (the elbow sits clockwise of the
/// shoulder-target line), a negative one `elbow_up`.
pub(crate) fn solve_two_link(link1: V2, link2: V2, target: V2, current_shoulder: f64) -> TwoLinkSolution {
    let Some(cos_rel) = two_link_cosine(link1, link2, target) else {
        return TwoLinkSolution::default();
    };
    let offset = link1.angle() - link2.angle();
    let bends: Vec<(f64, Elbow)> = if 1.0 - cos_rel <= COINCIDENT_TOL {
        vec![(0.0, Elbow::Straight)]
    } else if 1.0 + cos_rel <= COINCIDENT_TOL {
        vec![(PI, Elbow::Folded)]
    } else {
        let rel = cos_rel.acos();
        vec![(rel, Elbow::Down), (-rel, Elbow::Up)]
    };

    let singular = target.norm() < SINGULAR_TOL;
    let branches = bends
        .into_iter()
        .map(|(rel, kind)| {
            let elbow = rel + offset;
            let arm = link1.add(link2.rotate(elbow));
            let shoulder = if singular {
                current_shoulder
            } else {
                target.angle() - arm.angle()
            };
            TwoLinkBranch { shoulder, elbow, kind }
        })
        .collect();
    TwoLinkSolution { branches, singular }
}

/// Real roots of `|base + s * dir| = radius` for scalar `s`, largest first.
/// `dir` must be a unit vector.
pub(crate) fn stroke_roots(base: V2, dir: V2, radius: f64) -> Vec<f64> {
    let b = base.dot(dir);
    let disc = b * b - base.dot(base) + radius * radius;
    let scale = (base.dot(base) + radius * radius).max(1.0);
    if disc < -COSINE_TOL * scale {
        return Vec::new();
    }
    let root = disc.max(0.0).sqrt();
    if root <= COINCIDENT_TOL {
        vec![-b]
    } else {
        vec![-b + root, -b - root]
    }
}

/// Range of `|base + s * dir|` over `s` in `[lo, hi]`.
pub(crate) fn stroke_radius_range(base: V2, dir: V2, lo: f64, hi: f64) -> (f64, f64) {
    let at = |s: f64| base.add(dir.scale(s)).norm();
    let closest = (-base.dot(dir)).clamp(lo, hi);
    (at(closest), at(lo).max(at(hi)))
}

/// Wraps into `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn reach(link1: V2, link2: V2, b: &TwoLinkBranch) -> V2 {
        link1.add(link2.rotate(b.elbow)).rotate(b.shoulder)
    }

    #[test]
    fn unit_links_target_one_one() {
        let l = V2::new(1.0, 0.0);
        let s = solve_two_link(l, l, V2::new(1.0, 1.0), 0.0);
        assert_eq!(s.branches.len(), 2);
        let down = s.branches[0];
        let up = s.branches[1];
        assert_eq!(down.kind, Elbow::Down);
        assert!(down.shoulder.abs() < 1e-15 && (down.elbow - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(up.kind, Elbow::Up);
        assert!((up.shoulder - FRAC_PI_2).abs() < 1e-15 && (up.elbow + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn outside_annulus_has_no_branch() {
        let l = V2::new(1.0, 0.0);
        assert!(solve_two_link(l, l, V2::new(3.0, 0.0), 0.0).branches.is_empty());
        let short = V2::new(0.5, 0.0);
        assert!(solve_two_link(l, short, V2::new(0.2, 0.0), 0.0).branches.is_empty());
    }

    #[test]
    fn boundary_collapses_to_one_branch() {
        let l = V2::new(1.0, 0.0);
        let s = solve_two_link(l, l, V2::new(0.0, 2.0), 0.0);
        assert_eq!(s.branches.len(), 1);
        assert_eq!(s.branches[0].kind, Elbow::Straight);
        assert!(reach(l, l, &s.branches[0]).sub(V2::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn fold_to_origin_is_singular() {
        let l = V2::new(1.0, 0.0);
        let s = solve_two_link(l, l, V2::new(0.0, 0.0), 0.7);
        assert!(s.singular);
        assert_eq!(s.branches.len(), 1);
        assert_eq!(s.branches[0].kind, Elbow::Folded);
        assert_eq!(s.branches[0].shoulder, 0.7);
    }

    #[test]
    fn offset_links_round_trip() {
        let l1 = V2::new(0.3, 0.05);
        let l2 = V2::new(0.2, -0.1);
        let target = V2::new(-0.1, 0.35);
        let s = solve_two_link(l1, l2, target, 0.0);
        assert_eq!(s.branches.len(), 2);
        for b in &s.branches {
            assert!(reach(l1, l2, b).sub(target).norm() < 1e-14);
        }
    }

    #[test]
    fn stroke_roots_and_range() {
        let base = V2::new(0.2, 0.0);
        let dir = V2::new(1.0, 0.0);
        assert_eq!(stroke_roots(base, dir, 0.5), vec![0.3, -0.7]);
        assert_eq!(stroke_radius_range(base, dir, 0.0, 0.4), (0.2, 0.6000000000000001));
        let (lo, hi) = stroke_radius_range(V2::new(0.0, 0.1), dir, -1.0, 1.0);
        assert_eq!(lo, 0.1);
        assert!((hi - 1.01f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
    }
}
