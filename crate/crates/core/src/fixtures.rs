//! Synthetic scenes and the shipped data corpus.
//!
//! Every part is sampled with eightfold mirror symmetry about its local
//! center, so centroids sit exactly on the construction center and principal
//! axes follow the construction frame.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::Scene;
use crate::geometry::{rotation_about_axis, Point3, PointCloud, PoseSE3, Vector3};
use crate::language::VocabularyDocument;
use crate::metrics::JudgmentCorpus;
use crate::retrieval::PartDatabase;

/// Points per part.
pub const POINTS_PER_PART: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("unknown scene kind `{0}` (expected one of: pen_holder, carrot_knife, teapot_lid, cube_target)")]
    UnknownKind(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SceneKind {
    PenHolder,
    CarrotKnife,
    TeapotLid,
    CubeTarget,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [Self::PenHolder, Self::CarrotKnife, Self::TeapotLid, Self::CubeTarget];

    pub fn name(self) -> &'static str {
        match self {
            Self::PenHolder => "pen_holder",
            Self::CarrotKnife => "carrot_knife",
            Self::TeapotLid => "teapot_lid",
            Self::CubeTarget => "cube_target",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FixtureError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    /// Half extents along local x, y, z.
    Box(f64, f64, f64),
    /// Solid cylinder along local z: radius, half length.
    Cylinder(f64, f64),
}

/// `POINTS_PER_PART` points of `shape`, placed at `center` with local axes
/// rotated by `rotation`.
fn sample(rng: &mut ChaCha8Rng, shape: Shape, center: Point3, rotation: &Matrix3<f64>) -> PointCloud {
    let mut points = Vec::with_capacity(POINTS_PER_PART);
    for _ in 0..POINTS_PER_PART / 8 {
        let local = match shape {
            Shape::Box(a, b, c) => Vector3::new(rng.gen::<f64>() * a, rng.gen::<f64>() * b, rng.gen::<f64>() * c),
            Shape::Cylinder(r, h) => {
                let rho = r * rng.gen::<f64>().sqrt();
                let theta = rng.gen::<f64>() * FRAC_PI_2;
                Vector3::new(rho * theta.cos(), rho * theta.sin(), rng.gen::<f64>() * h)
            }
        };
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    let v = Vector3::new(sx * local.x, sy * local.y, sz * local.z);
                    points.push(center + rotation * v);
                }
            }
        }
    }
    PointCloud::new(points).expect("sampled cloud is finite and non-empty")
}

/// Rotation taking local z onto `dir`.
fn z_onto(dir: Vector3) -> Matrix3<f64> {
    let d = dir.normalize();
    let z = Vector3::z();
    let axis = z.cross(&d);
    if axis.norm() < 1e-12 {
        return if d.z > 0.0 { Matrix3::identity() } else { rotation_about_axis(&Vector3::x(), std::f64::consts::PI) };
    }
    rotation_about_axis(&axis, z.dot(&d).clamp(-1.0, 1.0).acos())
}

/// Unit axis of the pen in the pen/holder scene: 30° off vertical in the xz plane.
pub fn pen_axis() -> Vector3 {
    Vector3::new(FRAC_PI_6.sin(), 0.0, FRAC_PI_6.cos())
}

/// Deterministic scene of the given kind; `seed` only moves sample points.
pub fn make_scene(kind: SceneKind, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = Matrix3::identity();
    match kind {
        SceneKind::PenHolder => {
            let pen_center = Point3::new(0.4, 0.0, 0.25);
            let mut s = Scene::new(pen_center);
            s.insert_part("pen", sample(&mut rng, Shape::Cylinder(0.006, 0.07), pen_center, &z_onto(pen_axis())), true, Some("pen"));
            s.insert_part(
                "pen holder",
                sample(&mut rng, Shape::Cylinder(0.03, 0.06), Point3::new(0.6, 0.1, 0.06), &id),
                false,
                Some("pen holder"),
            );
            s
        }
        SceneKind::CarrotKnife => {
            let blade_center = Point3::new(0.3, 0.2, 0.15);
            let handle_center = blade_center + Vector3::new(0.0, 0.0, 0.1);
            let yaw = rotation_about_axis(&Vector3::z(), FRAC_PI_4);
            let mut s = Scene::new(handle_center);
            s.insert_part(
                "carrot",
                sample(&mut rng, Shape::Cylinder(0.015, 0.08), Point3::new(0.5, 0.0, 0.02), &z_onto(Vector3::y())),
                false,
                Some("carrot"),
            );
            s.insert_part("knife", sample(&mut rng, Shape::Box(0.012, 0.008, 0.04), handle_center, &yaw), true, Some("knife"));
            s.insert_part(
                "knife blade",
                sample(&mut rng, Shape::Box(0.06, 0.012, 0.002), blade_center, &yaw),
                false,
                Some("knife"),
            );
            s
        }
        SceneKind::TeapotLid => {
            let lid_center = Point3::new(0.2, -0.3, 0.12);
            let mut s = Scene::new(lid_center + Vector3::new(0.0, 0.0, 0.02));
            let teapot = Point3::new(0.55, 0.1, 0.0);
            let mut part = |s: &mut Scene, name: &str, shape, c: Point3, r: &Matrix3<f64>, grasped, object| {
                s.insert_part(name, sample(&mut rng, shape, c, r), grasped, Some(object));
            };
            part(&mut s, "teapot body", Shape::Cylinder(0.07, 0.06), teapot + Vector3::new(0.0, 0.0, 0.06), &id, false, "teapot");
            part(&mut s, "teapot opening", Shape::Cylinder(0.035, 0.004), teapot + Vector3::new(0.0, 0.0, 0.124), &id, false, "teapot");
            part(
                &mut s,
                "teapot spout",
                Shape::Cylinder(0.008, 0.04),
                teapot + Vector3::new(0.1, 0.0, 0.08),
                &z_onto(Vector3::new(1.0, 0.0, 1.0)),
                false,
                "teapot",
            );
            part(
                &mut s,
                "teapot handle",
                Shape::Box(0.01, 0.006, 0.04),
                teapot + Vector3::new(-0.09, 0.0, 0.07),
                &id,
                false,
                "teapot",
            );
            part(&mut s, "teapot lid", Shape::Cylinder(0.04, 0.004), lid_center, &id, true, "teapot lid");
            part(
                &mut s,
                "teapot lid knob",
                Shape::Cylinder(0.008, 0.006),
                lid_center + Vector3::new(0.0, 0.0, 0.012),
                &id,
                false,
                "teapot lid",
            );
            s
        }
        SceneKind::CubeTarget => {
            let cube = Point3::new(0.3, -0.2, 0.15);
            let mut s = Scene::new(cube);
            s.insert_part("red cube", sample(&mut rng, Shape::Box(0.025, 0.025, 0.025), cube, &id), true, Some("red cube"));
            s.insert_part(
                "red circle",
                sample(&mut rng, Shape::Cylinder(0.05, 0.001), Point3::new(0.5, 0.2, 0.001), &id),
                false,
                Some("red circle"),
            );
            s.insert_part(
                "blue cube",
                sample(&mut rng, Shape::Box(0.025, 0.025, 0.025), Point3::new(0.1, 0.3, 0.025), &id),
                false,
                Some("blue cube"),
            );
            s
        }
    }
}

/// A gripper pose at which the carrot/knife program vanishes: the initial
/// pose yawed by −45° about world z.
pub fn carrot_knife_solution(scene: &Scene) -> PoseSE3 {
    let r = rotation_about_axis(&Vector3::z(), -FRAC_PI_4) * scene.gripper.rotation;
    PoseSE3::new(r, scene.gripper.position).expect("rotation")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: usize,
    pub title: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskList {
    pub tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicAction {
    pub action: String,
    pub template: String,
    /// Guidance comment lines shown with the template.
    #[serde(default)]
    pub notes: Vec<String>,
    /// Placeholder substitutions producing a concrete program on the
    /// kitchen scene, applied in order.
    #[serde(default)]
    pub bindings: Vec<(String, String)>,
}

impl AtomicAction {
    pub fn instantiate(&self) -> String {
        self.bindings
            .iter()
            .fold(self.template.clone(), |acc, (from, to)| acc.replace(from.as_str(), to))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub atomic_actions: Vec<AtomicAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockMap {
    /// Responses per instruction, returned in order on successive attempts.
    pub responses: BTreeMap<String, Vec<String>>,
}

const TASKS: &str = include_str!("../data/tasks.json");
const JUDGMENTS: &str = include_str!("../data/judgments.json");
const TEMPLATES: &str = include_str!("../data/templates.json");
const PARTS_DB: &str = include_str!("../data/parts_db.json");
const MOCK: &str = include_str!("../data/mock.json");
const BASELINE_PROFILES: [(&str, &str); 3] = [
    ("instruct2act", include_str!("../data/profiles/instruct2act.json")),
    ("omnimanip", include_str!("../data/profiles/omnimanip.json")),
    ("rekep", include_str!("../data/profiles/rekep.json")),
];

fn shipped<T: for<'de> Deserialize<'de>>(text: &str) -> T {
    serde_json::from_str(text).expect("shipped fixture parses")
}

pub fn tasks() -> TaskList {
    shipped(TASKS)
}

pub fn judgment_corpus() -> JudgmentCorpus {
    shipped(JUDGMENTS)
}

pub fn prompt_template() -> PromptTemplate {
    shipped(TEMPLATES)
}

pub fn part_database() -> PartDatabase {
    shipped(PARTS_DB)
}

pub fn mock_map() -> MockMap {
    shipped(MOCK)
}

/// All representation profiles, sorted by name.
pub fn profile_documents() -> Vec<VocabularyDocument> {
    let mut docs: Vec<VocabularyDocument> = BASELINE_PROFILES.iter().map(|(_, t)| shipped(t)).collect();
    docs.push(VocabularyDocument::seam());
    docs.sort_by(|a, b| a.name.cmp(&b.name));
    docs
}

/// Seed used for the scenes written by [`regenerate`].
pub const DEFAULT_SEED: u64 = 7;

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("fixture serializes");
    s.push('\n');
    s
}

/// Write the whole fixture tree under `out`:
///
/// ```text
/// scenes/<kind>.json  profiles/<name>.json  tasks.json  judgments.json
/// templates.json  parts_db.json  mock.json
/// ```
pub fn regenerate(out: &Path) -> Result<Vec<String>, FixtureError> {
    let io = |e: std::io::Error| FixtureError::Io(format!("{}: {e}", out.display()));
    let mut files: Vec<(String, String)> = Vec::new();
    for kind in SceneKind::ALL {
        let mut text = make_scene(kind, DEFAULT_SEED).to_json_pretty();
        text.push('\n');
        files.push((format!("scenes/{kind}.json"), text));
    }
    for doc in profile_documents() {
        files.push((format!("profiles/{}.json", doc.name), pretty(&doc)));
    }
    files.push(("tasks.json".into(), pretty(&tasks())));
    files.push(("judgments.json".into(), pretty(&judgment_corpus())));
    files.push(("templates.json".into(), pretty(&prompt_template())));
    files.push(("parts_db.json".into(), pretty(&part_database())));
    files.push(("mock.json".into(), pretty(&mock_map())));
    std::fs::create_dir_all(out.join("scenes")).map_err(io)?;
    std::fs::create_dir_all(out.join("profiles")).map_err(io)?;
    for (rel, text) in &files {
        std::fs::write(out.join(rel), text).map_err(io)?;
    }
    Ok(files.into_iter().map(|(rel, _)| rel).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{eval, EvalContext, SceneView};
    use crate::geometry::{principal_axis, RigidMotion};
    use crate::language::Language;
    use crate::solver::partition_moving_static;

    #[test]
    fn scenes_are_deterministic_and_valid() {
        for kind in SceneKind::ALL {
            let a = make_scene(kind, 7);
            assert_eq!(a, make_scene(kind, 7), "{kind}");
            a.validate().unwrap();
            assert!(a.parts.values().all(|p| p.cloud.len() == POINTS_PER_PART));
            assert_eq!(Scene::from_json(&a.to_json()).unwrap(), a);
        }
        assert_ne!(make_scene(SceneKind::CubeTarget, 7), make_scene(SceneKind::CubeTarget, 8));
        assert!(matches!("moon_base".parse::<SceneKind>(), Err(FixtureError::UnknownKind(_))));
    }

    #[test]
    fn pen_is_thirty_degrees_off() {
        let s = make_scene(SceneKind::PenHolder, 7);
        let a = principal_axis(&s.parts["pen"].cloud).unwrap();
        let b = principal_axis(&s.parts["pen holder"].cloud).unwrap();
        let deg = a.dot(&b).abs().acos().to_degrees();
        assert!((deg - 30.0).abs() < 0.5, "{deg}");
    }

    #[test]
    fn carrot_knife_known_solution_vanishes() {
        let s = make_scene(SceneKind::CarrotKnife, 7);
        let expr = Language::default().compile(&mock_map().responses["cut the carrot with the grasped knife"][0]).unwrap();
        let motion = RigidMotion::between(&s.gripper.pose(), &carrot_knife_solution(&s));
        let moving = partition_moving_static(&s).0;
        let ctx = EvalContext::with_view(SceneView::moved(&s, &motion, &moving));
        let c = eval(&expr, &ctx).unwrap().value();
        assert!(c < 1e-6, "{c}");
        assert!(eval(&expr, &EvalContext::new(&s)).unwrap().value() > 0.5);
    }

    #[test]
    fn shipped_data_loads() {
        let t = tasks();
        assert_eq!(t.tasks.len(), 33);
        assert_eq!(t.tasks[0].title, "Sort the Red Cube");
        assert_eq!(t.tasks[32].title, "Plug in the Lamp");
        assert_eq!(prompt_template().atomic_actions.len(), 6);
        part_database().validate().unwrap();
        let names: Vec<_> = profile_documents().into_iter().map(|d| d.name).collect();
        assert_eq!(names, ["instruct2act", "omnimanip", "rekep", "seam"]);
        let lang = Language::default();
        for (instruction, responses) in &mock_map().responses {
            if instruction != "recite a poem" {
                let last = responses.last().unwrap();
                lang.validate_stages(last).unwrap();
            }
        }
    }
}
