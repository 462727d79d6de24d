//! Gripper pose optimization.
//!
//! The objective of a candidate pose `(R, t)` relative to the initial gripper
//! pose `(R0, t0)` is
//!
//! ```text
//! cost(P^s ∪ (R R0ᵀ (P^m − t0) + t)) + α‖t − t0‖₂ + β‖euler(R R0ᵀ)‖₁
//! ```
//!
//! minimized by a derivative-free coordinate pattern search over six numbers:
//! Euler deltas `e` (so that `R = rot(e)·R0`) and the translation offset.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::costs::{eval, CostError, EvalContext, ExactResolver, PartResolver, Scene, SceneView, GRIPPER};
use crate::geometry::{euler_from_rotation, rotation_from_euler, EulerXYZ, PoseSE3, RigidMotion, Vector3};
use crate::language::{TypedExpr, TypedNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("the program moves scene parts but nothing is grasped")]
    NoMovingParts,
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub alpha: f64,
    pub beta: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Initial pattern step for translation, meters.
    pub translation_step: f64,
    /// Initial pattern step for rotation, radians.
    pub rotation_step: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.05,
            max_iterations: 2000,
            restarts: 8,
            tolerance: 1e-8,
            seed: 0,
            translation_step: 0.05,
            rotation_step: 0.2,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Config(m.to_owned()));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be > 0");
        }
        if !(self.translation_step > 0.0 && self.rotation_step > 0.0) {
            return bad("initial steps must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub pose: PoseSE3,
    pub objective: f64,
    pub cost_term: f64,
    pub reg_translation: f64,
    pub reg_rotation: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the start that produced the result; 0 is the initial pose.
    pub restart: usize,
}

/// The three summands of the objective at one pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub cost_term: f64,
    pub reg_translation: f64,
    pub reg_rotation: f64,
    pub total: f64,
}

fn tokens(name: &str) -> Vec<&str> {
    name.split_whitespace().collect()
}

/// Split scene parts into those carried by the gripper and the rest.
///
/// A part moves when it is grasped, or shares its `object` label with a
/// grasped part. Parts without labels fall back to a word-boundary prefix
/// rule: "knife blade" moves with a grasped "knife".
pub fn partition_moving_static(scene: &Scene) -> (BTreeSet<String>, BTreeSet<String>) {
    let grasped: Vec<(&String, &crate::costs::Part)> = scene.parts.iter().filter(|(_, p)| p.grasped).collect();
    let mut moving = BTreeSet::new();
    let mut fixed = BTreeSet::new();
    for (name, part) in &scene.parts {
        let moves = part.grasped
            || grasped.iter().any(|(g_name, g)| match (&part.object, &g.object) {
                (Some(a), Some(b)) => a == b,
                _ => {
                    let (mine, theirs) = (tokens(name), tokens(g_name));
                    mine.len() >= theirs.len() && mine[..theirs.len()] == theirs[..]
                }
            });
        if moves {
            moving.insert(name.clone());
        } else {
            fixed.insert(name.clone());
        }
    }
    (moving, fixed)
}

const GRIPPER_WORDS: &[&str] = &["get_gripper_pos", "gripper_open_cost", "gripper_close_first_cost"];

fn references_gripper(expr: &TypedExpr) -> bool {
    let mut found = false;
    expr.visit(&mut |e| match &e.node {
        TypedNode::Str(s) if s == GRIPPER => found = true,
        TypedNode::Call { word, .. } if GRIPPER_WORDS.contains(&word.as_str()) => found = true,
        _ => {}
    });
    found
}

fn references_parts(expr: &TypedExpr) -> bool {
    expr.string_literals().iter().any(|s| *s != GRIPPER)
}

/// Pose reached from the initial gripper pose by the 6-vector `x`.
pub fn pose_from_params(initial: &PoseSE3, x: &[f64; 6]) -> PoseSE3 {
    let delta = rotation_from_euler(&EulerXYZ::new(x[0], x[1], x[2]));
    let rotation = delta * initial.rotation();
    let translation = initial.translation + Vector3::new(x[3], x[4], x[5]);
    PoseSE3::new(rotation, translation).expect("product of rotations is a rotation")
}

struct Problem<'a> {
    expr: &'a TypedExpr,
    scene: &'a Scene,
    initial: PoseSE3,
    moving: BTreeSet<String>,
    resolver: &'a dyn PartResolver,
    alpha: f64,
    beta: f64,
}

impl<'a> Problem<'a> {
    fn new(expr: &'a TypedExpr, scene: &'a Scene, cfg: &SolveConfig, resolver: &'a dyn PartResolver) -> Self {
        Self {
            expr,
            scene,
            initial: scene.gripper.pose(),
            moving: partition_moving_static(scene).0,
            resolver,
            alpha: cfg.alpha,
            beta: cfg.beta,
        }
    }

    fn at_pose(&self, pose: &PoseSE3) -> Result<Objective, CostError> {
        let motion = RigidMotion::between(&self.initial, pose);
        let ctx = EvalContext::with_view(SceneView::moved(self.scene, &motion, &self.moving))
            .baseline(SceneView::new(self.scene))
            .resolver(self.resolver);
        let cost_term = eval(self.expr, &ctx)?.value();
        let reg_translation = (pose.translation - self.initial.translation).norm();
        let reg_rotation = euler_from_rotation(&motion.rotation).l1_norm();
        Ok(Objective {
            cost_term,
            reg_translation,
            reg_rotation,
            total: cost_term + self.alpha * reg_translation + self.beta * reg_rotation,
        })
    }

    fn at(&self, x: &[f64; 6]) -> Result<f64, CostError> {
        Ok(self.at_pose(&pose_from_params(&self.initial, x))?.total)
    }
}

/// Objective value and its decomposition at `pose`.
pub fn objective(expr: &TypedExpr, scene: &Scene, pose: &PoseSE3, cfg: &SolveConfig) -> Result<Objective, CostError> {
    objective_with(expr, scene, pose, cfg, &ExactResolver)
}

pub fn objective_with(
    expr: &TypedExpr,
    scene: &Scene,
    pose: &PoseSE3,
    cfg: &SolveConfig,
    resolver: &dyn PartResolver,
) -> Result<Objective, CostError> {
    Problem::new(expr, scene, cfg, resolver).at_pose(pose)
}

/// Exploratory move along coordinate `i`: `+1` if stepping up improves on
/// `fx`, else `-1` if stepping down does, else `0`. Returns the new value.
fn explore(p: &Problem, x: &mut [f64; 6], fx: f64, i: usize, step: f64) -> Result<(i8, f64), CostError> {
    for sign in [1i8, -1] {
        let mut y = *x;
        y[i] += f64::from(sign) * step;
        let fy = p.at(&y)?;
        if fy < fx {
            *x = y;
            return Ok((sign, fy));
        }
    }
    Ok((0, fx))
}

/// Direction the search would first move along each coordinate from the
/// initial pose, with the configured initial steps.
pub fn probe(expr: &TypedExpr, scene: &Scene, cfg: &SolveConfig) -> Result<[i8; 6], CostError> {
    let p = Problem::new(expr, scene, cfg, &ExactResolver);
    let x0 = [0.0; 6];
    let f0 = p.at(&x0)?;
    let mut out = [0i8; 6];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut x = x0;
        *slot = explore(&p, &mut x, f0, i, initial_steps(cfg)[i])?.0;
    }
    Ok(out)
}

fn initial_steps(cfg: &SolveConfig) -> [f64; 6] {
    let (r, t) = (cfg.rotation_step, cfg.translation_step);
    [r, r, r, t, t, t]
}

/// Steps below this are treated as collapsed.
const MIN_STEP: f64 = 1e-10;

struct Run {
    x: [f64; 6],
    f: f64,
    iterations: usize,
    converged: bool,
}

fn pattern_search(p: &Problem, start: [f64; 6], cfg: &SolveConfig) -> Result<Run, CostError> {
    let mut x = start;
    let mut f = p.at(&x)?;
    let mut steps = initial_steps(cfg);
    let max_steps = steps.map(|s| s * 16.0);
    for iteration in 1..=cfg.max_iterations {
        let before = f;
        for i in 0..6 {
            let (moved, fy) = explore(p, &mut x, f, i, steps[i])?;
            f = fy;
            steps[i] = if moved != 0 { (steps[i] * 2.0).min(max_steps[i]) } else { steps[i] * 0.5 };
        }
        let collapsed = steps.iter().all(|&s| s < MIN_STEP.max(cfg.tolerance * 1e-2));
        if before - f < cfg.tolerance && collapsed {
            return Ok(Run {
                x,
                f,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(Run {
        x,
        f,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

fn restart_points(cfg: &SolveConfig) -> Vec<[f64; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![[0.0; 6]];
    for _ in 1..cfg.restarts.max(1) {
        let mut x = [0.0; 6];
        for v in &mut x[..3] {
            *v = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        }
        for v in &mut x[3..] {
            *v = rng.gen_range(-0.2..0.2);
        }
        out.push(x);
    }
    out
}

pub fn solve(expr: &TypedExpr, scene: &Scene, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    solve_with(expr, scene, cfg, &ExactResolver)
}

pub fn solve_with(
    expr: &TypedExpr,
    scene: &Scene,
    cfg: &SolveConfig,
    resolver: &dyn PartResolver,
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let p = Problem::new(expr, scene, cfg, resolver);
    if p.moving.is_empty() && !references_gripper(expr) && references_parts(expr) {
        return Err(SolveError::NoMovingParts);
    }
    let mut best: Option<(usize, Run)> = None;
    for (index, start) in restart_points(cfg).into_iter().enumerate() {
        let run = pattern_search(&p, start, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| run.f < b.f) {
            best = Some((index, run));
        }
    }
    let (restart, run) = best.expect("at least one start");
    let pose = pose_from_params(&p.initial, &run.x);
    let o = p.at_pose(&pose)?;
    Ok(SolveResult {
        pose,
        objective: o.total,
        cost_term: o.cost_term,
        reg_translation: o.reg_translation,
        reg_rotation: o.reg_rotation,
        iterations: run.iterations,
        converged: run.converged,
        restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point3, PointCloud};
    use crate::language::Language;

    fn blob(c: [f64; 3]) -> PointCloud {
        let d = 0.01;
        let pts: Vec<[f64; 3]> = [-d, d]
            .iter()
            .flat_map(|&x| [-d, d].into_iter().flat_map(move |y| [-d, d].into_iter().map(move |z| [c[0] + x, c[1] + y, c[2] + z])))
            .collect();
        PointCloud::from_triples(&pts).unwrap()
    }

    fn names(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn partition_examples() {
        let s = Scene::new(Point3::origin())
            .with_part("knife", blob([0.0; 3]), true, None)
            .with_part("knife blade", blob([0.1, 0.0, 0.0]), false, None)
            .with_part("carrot", blob([0.5, 0.0, 0.0]), false, None);
        let (m, st) = partition_moving_static(&s);
        assert_eq!(m, names(&["knife", "knife blade"]));
        assert_eq!(st, names(&["carrot"]));

        let s = Scene::new(Point3::origin())
            .with_part("pen", blob([0.0; 3]), true, Some("pen"))
            .with_part("pen holder", blob([0.3, 0.0, 0.0]), false, Some("pen holder"));
        assert_eq!(partition_moving_static(&s).0, names(&["pen"]));

        let mut s = s;
        s.parts.get_mut("pen").unwrap().grasped = false;
        assert!(partition_moving_static(&s).0.is_empty());
    }

    fn cube_scene() -> Scene {
        Scene::new(Point3::new(0.0, 0.0, 0.2))
            .with_part("cube", blob([0.0, 0.0, 0.2]), true, None)
            .with_part("target", blob([0.3, 0.1, 0.0]), false, None)
    }

    #[test]
    fn one_dimensional_translation_moves_the_whole_way() {
        let s = cube_scene();
        let expr = Language::default().compile("move_cost('cube', 'target', offset=[0, 0, 0.1])").unwrap();
        let r = solve(&expr, &s, &SolveConfig::default()).unwrap();
        assert!(r.cost_term < 1e-3, "{r:?}");
        // analytic optimum: translation = target + offset - initial centroid
        let expected = Vector3::new(0.3, 0.1, -0.1);
        assert!((r.pose.translation - s.gripper.position - expected).norm() < 1e-3);
        let o = objective(&expr, &s, &r.pose, &SolveConfig::default()).unwrap();
        assert!((o.total - r.objective).abs() < 1e-9);
    }

    #[test]
    fn zero_program_keeps_initial_pose() {
        let s = cube_scene();
        let expr = Language::default().compile("0").unwrap();
        let r = solve(&expr, &s, &SolveConfig::default()).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.pose, s.gripper.pose());
        assert_eq!(r.restart, 0);
    }

    #[test]
    fn initial_pose_objective_is_plain_evaluation() {
        let s = cube_scene();
        let expr = Language::default().compile("move_cost('cube', 'target')").unwrap();
        let o = objective(&expr, &s, &s.gripper.pose(), &SolveConfig::default()).unwrap();
        let plain = eval(&expr, &EvalContext::new(&s)).unwrap().value();
        assert_eq!(o.total, plain);
        assert_eq!(o.reg_translation + o.reg_rotation, 0.0);
    }

    #[test]
    fn nothing_grasped_is_an_error_unless_gripper_moves() {
        let mut s = cube_scene();
        s.parts.get_mut("cube").unwrap().grasped = false;
        let lang = Language::default();
        let expr = lang.compile("move_cost('cube', 'target')").unwrap();
        assert_eq!(solve(&expr, &s, &SolveConfig::default()).unwrap_err(), SolveError::NoMovingParts);
        let approach = lang.compile("move_cost('gripper', 'target')").unwrap();
        let r = solve(&approach, &s, &SolveConfig::default()).unwrap();
        assert!(r.cost_term < 1e-3);
    }

    #[test]
    fn bad_config_rejected() {
        let s = cube_scene();
        let expr = Language::default().compile("0").unwrap();
        let cfg = SolveConfig {
            max_iterations: 0,
            ..SolveConfig::default()
        };
        assert!(matches!(solve(&expr, &s, &cfg), Err(SolveError::Config(_))));
    }

    #[test]
    fn result_serializes_pose_row_major() {
        let s = cube_scene();
        let expr = Language::default().compile("0").unwrap();
        let r = solve(&expr, &s, &SolveConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["pose"]["rotation"].as_array().unwrap().len(), 9);
        assert_eq!(v["pose"]["translation"].as_array().unwrap().len(), 3);
        assert!(v.get("converged").is_some());
    }
}
