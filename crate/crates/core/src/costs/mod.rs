//! Evaluation of typed programs against a scene.
//!
//! Distances are in meters, alignments are dimensionless in `[0, 1]`; terms
//! are summed unweighted unless [`CostWeights`] says otherwise.

pub mod scene;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{direction_of, Dimension, GeometryError, Point3, Vector3};
use crate::language::{BinOp, Sort, TypedExpr, TypedNode};

pub use scene::{Gripper, Part, Scene, SceneError, SceneView, Snapshot, GRIPPER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("no part matches `{0}`")]
    MissingPart(String),
    #[error("scene has no recorded history")]
    EmptyHistory,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("expression has sort {0}, expected cost")]
    NotACost(Sort),
    #[error("word `{0}` has no evaluator")]
    UnsupportedWord(String),
}

/// Non-negative, finite cost.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct CostValue(pub f64);

impl CostValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Maps a name written in a program to a part of the scene.
pub trait PartResolver: Send + Sync {
    fn resolve(&self, scene: &Scene, name: &str) -> Result<String, CostError>;
}

/// Exact name lookup.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactResolver;

impl PartResolver for ExactResolver {
    fn resolve(&self, scene: &Scene, name: &str) -> Result<String, CostError> {
        if scene.parts.contains_key(name) {
            Ok(name.to_owned())
        } else {
            Err(CostError::MissingPart(name.to_owned()))
        }
    }
}

/// Optional per-word multipliers; words not listed weigh 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostWeights(pub BTreeMap<String, f64>);

impl CostWeights {
    pub fn weight(&self, word: &str) -> f64 {
        self.0.get(word).copied().unwrap_or(1.0)
    }
}

static EXACT: ExactResolver = ExactResolver;

#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub view: SceneView<'a>,
    /// Scene as it was when the current stage started; anchors relative
    /// words (`move_cost_with_offset`, `rotate_cost`). Defaults to `view`.
    pub baseline: Option<SceneView<'a>>,
    pub resolver: &'a dyn PartResolver,
    pub weights: Option<&'a CostWeights>,
}

impl<'a> EvalContext<'a> {
    pub fn new(scene: &'a Scene) -> Self {
        Self {
            view: SceneView::new(scene),
            baseline: None,
            resolver: &EXACT,
            weights: None,
        }
    }

    pub fn with_view(view: SceneView<'a>) -> Self {
        Self {
            view,
            baseline: None,
            resolver: &EXACT,
            weights: None,
        }
    }

    pub fn baseline(mut self, baseline: SceneView<'a>) -> Self {
        self.baseline = Some(baseline);
        self
    }

    pub fn resolver(mut self, resolver: &'a dyn PartResolver) -> Self {
        self.resolver = resolver;
        self
    }

    pub fn weights(mut self, weights: &'a CostWeights) -> Self {
        self.weights = Some(weights);
        self
    }

    fn baseline_view(&self) -> SceneView<'a> {
        self.baseline.unwrap_or(self.view)
    }

    fn part(&self, name: &str) -> Result<(String, &'a Part), CostError> {
        let scene = self.view.scene;
        let resolved = self.resolver.resolve(scene, name)?;
        let part = scene
            .parts
            .get(&resolved)
            .ok_or_else(|| CostError::MissingPart(name.to_owned()))?;
        Ok((resolved, part))
    }

    pub fn centroid(&self, name: &str) -> Result<Point3, CostError> {
        if name == GRIPPER {
            return Ok(self.view.gripper_position());
        }
        let (resolved, part) = self.part(name)?;
        Ok(self.view.centroid(part, &resolved))
    }

    /// Principal axis; for the gripper, its approach (local z) axis.
    pub fn axis(&self, name: &str) -> Result<Vector3, CostError> {
        if name == GRIPPER {
            return Ok(self.view.gripper_rotation().column(2).into_owned());
        }
        let (resolved, part) = self.part(name)?;
        Ok(self.view.axis(part, &resolved)?)
    }

    pub fn extent(&self, name: &str, dim: Dimension) -> Result<f64, CostError> {
        if name == GRIPPER {
            return Ok(0.0);
        }
        let (resolved, part) = self.part(name)?;
        Ok(self.view.extent(part, &resolved, dim))
    }

    /// Centroid recorded in the most recent history snapshot.
    pub fn centroid_last(&self, name: &str) -> Result<Point3, CostError> {
        let snapshot = self.view.scene.history.last().ok_or(CostError::EmptyHistory)?;
        if name == GRIPPER {
            return Ok(snapshot.gripper_position());
        }
        let resolved = self.resolver.resolve(self.view.scene, name)?;
        snapshot
            .centroid(&resolved)
            .ok_or_else(|| CostError::MissingPart(name.to_owned()))
    }

    fn at_baseline(&self) -> EvalContext<'a> {
        EvalContext {
            view: self.baseline_view(),
            ..*self
        }
    }
}

/// Intermediate value of a sub-expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Point(Point3),
    Vec(Vector3),
    Scalar(f64),
    Cost(f64),
    Str(String),
    Void,
}

impl Value {
    fn scalar(&self) -> f64 {
        match self {
            Value::Scalar(v) | Value::Cost(v) => *v,
            other => unreachable!("type checker guarantees a scalar, got {other:?}"),
        }
    }

    fn coords(&self) -> Vector3 {
        match self {
            Value::Point(p) => p.coords,
            Value::Vec(v) => *v,
            other => unreachable!("type checker guarantees a point or vector, got {other:?}"),
        }
    }
}

/// Evaluate a cost-sorted program.
pub fn eval(expr: &TypedExpr, ctx: &EvalContext) -> Result<CostValue, CostError> {
    if expr.sort != Sort::Cost {
        return Err(CostError::NotACost(expr.sort));
    }
    match eval_value(expr, ctx)? {
        Value::Cost(c) => Ok(CostValue(c)),
        other => unreachable!("cost-sorted expression produced {other:?}"),
    }
}

pub fn eval_value(expr: &TypedExpr, ctx: &EvalContext) -> Result<Value, CostError> {
    Ok(match &expr.node {
        TypedNode::Number(n) => match expr.sort {
            Sort::Cost => Value::Cost(*n),
            _ => Value::Scalar(*n),
        },
        TypedNode::Str(s) => Value::Str(s.clone()),
        TypedNode::Triple(items) => {
            let v = Vector3::new(
                eval_value(&items[0], ctx)?.scalar(),
                eval_value(&items[1], ctx)?.scalar(),
                eval_value(&items[2], ctx)?.scalar(),
            );
            match expr.sort {
                Sort::Vec => Value::Vec(v),
                _ => Value::Point(Point3::from(v)),
            }
        }
        TypedNode::Neg(inner) => Value::Scalar(-eval_value(inner, ctx)?.scalar()),
        TypedNode::ScalarArith { op, lhs, rhs } => {
            let a = eval_value(lhs, ctx)?.scalar();
            let b = eval_value(rhs, ctx)?.scalar();
            Value::Scalar(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
            })
        }
        TypedNode::PointArith { op, lhs, rhs } => {
            let a = eval_value(lhs, ctx)?.coords();
            let b = eval_value(rhs, ctx)?.coords();
            Value::Point(Point3::from(match op {
                BinOp::Sub => a - b,
                _ => a + b,
            }))
        }
        TypedNode::VecScale { vector, factor } => {
            let v = eval_value(vector, ctx)?.coords();
            Value::Vec(v * eval_value(factor, ctx)?.scalar())
        }
        TypedNode::Sum(a, b) => Value::Cost(eval_value(a, ctx)?.scalar() + eval_value(b, ctx)?.scalar()),
        TypedNode::Call { word, args } => {
            let value = eval_call(word, args, ctx)?;
            match (value, ctx.weights) {
                (Value::Cost(c), Some(w)) => Value::Cost(c * w.weight(word)),
                (v, _) => v,
            }
        }
    })
}

fn arg(args: &[Option<TypedExpr>], i: usize) -> &TypedExpr {
    args[i].as_ref().expect("required argument is bound by the type checker")
}

fn string_arg(args: &[Option<TypedExpr>], i: usize, ctx: &EvalContext) -> Result<String, CostError> {
    match eval_value(arg(args, i), ctx)? {
        Value::Str(s) => Ok(s),
        other => unreachable!("type checker guarantees a string, got {other:?}"),
    }
}

/// A `string | point` argument: part names denote their centroid.
fn location_arg(args: &[Option<TypedExpr>], i: usize, ctx: &EvalContext) -> Result<Point3, CostError> {
    match eval_value(arg(args, i), ctx)? {
        Value::Str(name) => ctx.centroid(&name),
        Value::Point(p) => Ok(p),
        Value::Vec(v) => Ok(Point3::from(v)),
        other => unreachable!("type checker guarantees a location, got {other:?}"),
    }
}

fn vector_arg(args: &[Option<TypedExpr>], i: usize, ctx: &EvalContext) -> Result<Vector3, CostError> {
    Ok(eval_value(arg(args, i), ctx)?.coords())
}

fn eval_call(word: &str, args: &[Option<TypedExpr>], ctx: &EvalContext) -> Result<Value, CostError> {
    let dim = |d| -> Result<Value, CostError> { Ok(Value::Scalar(ctx.extent(&string_arg(args, 0, ctx)?, d)?)) };
    match word {
        "get_axis" => Ok(Value::Vec(ctx.axis(&string_arg(args, 0, ctx)?)?)),
        "get_centroid" => Ok(Value::Point(ctx.centroid(&string_arg(args, 0, ctx)?)?)),
        "centroid_last" => Ok(Value::Point(ctx.centroid_last(&string_arg(args, 0, ctx)?)?)),
        "get_height" => dim(Dimension::Height),
        "get_width" => dim(Dimension::Width),
        "get_length" => dim(Dimension::Length),
        "get_gripper_pos" => Ok(Value::Point(ctx.view.gripper_position())),
        "direction_of" => {
            let start = location_arg(args, 0, ctx)?;
            let end = location_arg(args, 1, ctx)?;
            Ok(Value::Vec(direction_of(&start, &end)?))
        }
        "move_cost" => {
            let source = location_arg(args, 0, ctx)?;
            let target = location_arg(args, 1, ctx)?;
            let offset = match &args[2] {
                Some(e) => eval_value(e, ctx)?.coords(),
                None => Vector3::zeros(),
            };
            Ok(Value::Cost(move_cost(&source, &(target + offset))))
        }
        "move_cost_with_offset" => {
            let name = string_arg(args, 0, ctx)?;
            let current = ctx.centroid(&name)?;
            let anchor = ctx.at_baseline().centroid(&name)?;
            let offset = vector_arg(args, 1, ctx)?;
            Ok(Value::Cost(move_cost(&current, &(anchor + offset))))
        }
        "parallel_cost" => Ok(Value::Cost(parallel_cost(&vector_arg(args, 0, ctx)?, &vector_arg(args, 1, ctx)?)?)),
        "perpendicular_cost" => Ok(Value::Cost(perpendicular_cost(
            &vector_arg(args, 0, ctx)?,
            &vector_arg(args, 1, ctx)?,
        )?)),
        "upright_cost" => {
            let up = ctx.centroid(&string_arg(args, 0, ctx)?)?;
            let down = ctx.centroid(&string_arg(args, 1, ctx)?)?;
            Ok(Value::Cost(upright_cost(&up, &down)?))
        }
        "rotate_cost" => {
            let axis = vector_arg(args, 0, ctx)?;
            let angle = eval_value(arg(args, 1), ctx)?.scalar();
            let before = vector_arg(args, 2, &ctx.at_baseline())?;
            let after = vector_arg(args, 2, ctx)?;
            Ok(Value::Cost(rotate_cost(&axis, angle, &before, &after)?))
        }
        "orbit_cost" => {
            let center_name = string_arg(args, 0, ctx)?;
            let center = ctx.centroid(&center_name)?;
            let axis = ctx.axis(&center_name)?;
            let radius = eval_value(arg(args, 1), ctx)?.scalar();
            let moving = ctx.centroid(&string_arg(args, 2, ctx)?)?;
            Ok(Value::Cost(orbit_cost(&center, &axis, radius, &moving)?))
        }
        "gripper_open_cost" => Ok(Value::Cost(1.0 - ctx.view.scene.gripper.open_fraction)),
        "gripper_close_first_cost" => Ok(Value::Cost(ctx.view.scene.gripper.open_fraction)),
        "gripper_open" | "gripper_close" => Ok(Value::Void),
        other => Err(CostError::UnsupportedWord(other.to_owned())),
    }
}

/// Euclidean distance in meters.
pub fn move_cost(current: &Point3, target: &Point3) -> f64 {
    (current - target).norm()
}

fn unit(v: &Vector3) -> Result<Vector3, CostError> {
    let n = v.norm();
    if !n.is_finite() || n <= 1e-12 {
        return Err(GeometryError::DegenerateAxis.into());
    }
    Ok(v / n)
}

/// `|cos|` of the angle between `a` and `b`, clamped to `[0, 1]`.
fn abs_cosine(a: &Vector3, b: &Vector3) -> Result<f64, CostError> {
    Ok(unit(a)?.dot(&unit(b)?).abs().min(1.0))
}

/// `1 - |a.b|`: zero when the axes are parallel or anti-parallel.
pub fn parallel_cost(a: &Vector3, b: &Vector3) -> Result<f64, CostError> {
    Ok(1.0 - abs_cosine(a, b)?)
}

/// `|a.b|`: zero when the axes are orthogonal.
pub fn perpendicular_cost(a: &Vector3, b: &Vector3) -> Result<f64, CostError> {
    abs_cosine(a, b)
}

/// `1 - d.z` for the unit direction from `down` to `up`, in `[0, 2]`.
pub fn upright_cost(up: &Point3, down: &Point3) -> Result<f64, CostError> {
    let d = direction_of(down, up)?;
    Ok((1.0 - d.z).clamp(0.0, 2.0))
}

/// Distance of `moving` from the circle of `radius` around the line through
/// `center` along `axis`, measured radially.
pub fn orbit_cost(center: &Point3, axis: &Vector3, radius: f64, moving: &Point3) -> Result<f64, CostError> {
    let a = unit(axis)?;
    let rel = moving - center;
    let radial = rel - a * rel.dot(&a);
    Ok((radial.norm() - radius).abs())
}

/// Signed rotation of `reference` about `axis`, from `before` to `after`,
/// compared to the target `angle`; normalized to `[0, 1]`.
pub fn rotate_cost(axis: &Vector3, angle: f64, before: &Vector3, after: &Vector3) -> Result<f64, CostError> {
    let a = unit(axis)?;
    let project = |v: &Vector3| unit(&(v - a * v.dot(&a)));
    let b0 = project(before)?;
    let b1 = project(after)?;
    let achieved = a.dot(&b0.cross(&b1)).atan2(b0.dot(&b1));
    Ok(wrap_pi(achieved - angle).abs() / PI)
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PointCloud, RigidMotion};
    use crate::language::Language;
    use std::collections::BTreeSet;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_triples(pts).unwrap()
    }

    fn rod(center: [f64; 3], dir: [f64; 3], half: f64) -> PointCloud {
        let d = Vector3::from(dir).normalize() * half;
        let c = Vector3::from(center);
        let pts: Vec<[f64; 3]> = (-5..=5)
            .map(|i| {
                let p = c + d * (i as f64 / 5.0);
                [p.x, p.y, p.z]
            })
            .collect();
        cloud(&pts)
    }

    fn run(src: &str, scene: &Scene) -> Result<f64, CostError> {
        let t = Language::default().compile(src).unwrap();
        eval(&t, &EvalContext::new(scene)).map(|c| c.0)
    }

    fn base_scene() -> Scene {
        Scene::new(Point3::new(0.1, 0.2, 0.3))
            .with_part("a", cloud(&[[0.0, 0.0, 0.0]]), false, None)
            .with_part("b", cloud(&[[0.0, 0.0, 0.1]]), false, None)
            .with_part("c", cloud(&[[1.0, 1.0, 0.0]]), false, None)
            .with_part("d", cloud(&[[4.0, 5.0, 0.0]]), false, None)
    }

    #[test]
    fn sum_of_zeros_is_zero() {
        assert_eq!(run("0", &base_scene()).unwrap(), 0.0);
        assert_eq!(run("move_cost('a', 'a') + move_cost('b', 'b')", &base_scene()).unwrap(), 0.0);
    }

    #[test]
    fn move_cost_examples() {
        let s = base_scene();
        assert!((run("move_cost('a', 'b')", &s).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(run("move_cost('b', 'a', offset=[0, 0, 0.1])", &s).unwrap(), 0.0);
        assert_eq!(run("move_cost(get_centroid('c'), get_centroid('d'))", &s).unwrap(), 5.0);
        assert!(matches!(run("move_cost('a', 'zz')", &s), Err(CostError::MissingPart(n)) if n == "zz"));
    }

    #[test]
    fn alignment_examples() {
        let z = Vector3::z();
        assert_eq!(parallel_cost(&z, &-z).unwrap(), 0.0);
        assert_eq!(perpendicular_cost(&Vector3::x(), &Vector3::y()).unwrap(), 0.0);
        let diag = Vector3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
        // 1 - 1/sqrt(2)
        assert!((parallel_cost(&Vector3::x(), &diag).unwrap() - 0.2928932188134524).abs() < 1e-12);
        assert!(matches!(parallel_cost(&Vector3::zeros(), &z), Err(CostError::Geometry(GeometryError::DegenerateAxis))));
    }

    #[test]
    fn upright_examples() {
        let o = Point3::origin();
        assert_eq!(upright_cost(&Point3::new(0.0, 0.0, 1.0), &o).unwrap(), 0.0);
        assert_eq!(upright_cost(&Point3::new(0.0, 0.0, -1.0), &o).unwrap(), 2.0);
        assert_eq!(upright_cost(&Point3::new(1.0, 0.0, 0.0), &o).unwrap(), 1.0);
        assert!(upright_cost(&o, &o).is_err());
    }

    #[test]
    fn orbit_and_rotate_examples() {
        let o = Point3::origin();
        assert_eq!(orbit_cost(&o, &Vector3::z(), 0.5, &Point3::new(2.0, 0.0, 0.0)).unwrap(), 1.5);
        assert_eq!(orbit_cost(&o, &Vector3::z(), 0.5, &Point3::new(0.0, 0.5, 3.0)).unwrap(), 0.0);
        let quarter = rotate_cost(&Vector3::z(), PI / 2.0, &Vector3::x(), &Vector3::y()).unwrap();
        assert!(quarter < 1e-15);
        let wrong_way = rotate_cost(&Vector3::z(), -PI / 2.0, &Vector3::x(), &Vector3::y()).unwrap();
        assert!((wrong_way - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gripper_state_costs() {
        let mut s = base_scene();
        assert_eq!(run("gripper_open_cost()", &s).unwrap(), 0.0);
        assert_eq!(run("gripper_close_first_cost()", &s).unwrap(), 1.0);
        s.gripper.open_fraction = 0.5;
        assert_eq!(run("gripper_open_cost()", &s).unwrap(), 0.5);
        assert_eq!(run("gripper_close_first_cost()", &s).unwrap(), 0.5);
    }

    #[test]
    fn getters() {
        let mut s = base_scene();
        let lang = Language::default();
        let ctx = EvalContext::new(&s);
        let v = eval_value(&crate::language::infer(&crate::language::parse("get_gripper_pos()").unwrap(), &lang.vocabulary, &lang.grammar).unwrap(), &ctx).unwrap();
        assert_eq!(v, Value::Point(Point3::new(0.1, 0.2, 0.3)));
        assert_eq!(ctx.centroid_last("gripper").unwrap_err(), CostError::EmptyHistory);
        s.gripper.position = Point3::origin();
        s.history.push(s.snapshot());
        s.gripper.position = Point3::new(1.0, 1.0, 1.0);
        assert_eq!(EvalContext::new(&s).centroid_last("gripper").unwrap(), Point3::origin());
    }

    #[test]
    fn carrot_knife_listing_vanishes_on_constructed_scene() {
        let s = Scene::new(Point3::new(0.5, 0.0, 0.2))
            .with_part("carrot", rod([0.5, 0.0, 0.0], [0.0, 1.0, 0.0], 0.07), false, None)
            .with_part("knife blade", rod([0.5, 0.0, 0.1], [1.0, 0.0, 0.0], 0.06), true, None)
            .with_part("knife", rod([0.5, 0.0, 0.2], [1.0, 0.0, 0.0], 0.04), true, None);
        let c = run(
            r#"perpendicular_cost(get_axis("carrot"), get_axis("knife blade")) + move_cost(get_centroid("knife"), get_centroid("knife blade"), offset=[0,0,0.1])"#,
            &s,
        )
        .unwrap();
        assert!(c < 1e-6, "{c}");
    }

    #[test]
    fn weights_scale_terms() {
        let s = base_scene();
        let t = Language::default().compile("move_cost('a', 'b') + gripper_close_first_cost()").unwrap();
        let w = CostWeights([("move_cost".to_string(), 10.0)].into());
        let c = eval(&t, &EvalContext::new(&s).weights(&w)).unwrap().0;
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn move_with_offset_anchors_at_baseline() {
        let s = base_scene();
        let t = Language::default().compile("move_cost_with_offset('a', offset=[0, 0, 0.1])").unwrap();
        let motion = RigidMotion {
            rotation: nalgebra::Matrix3::identity(),
            from: Point3::origin(),
            to: Point3::new(0.0, 0.0, 0.1),
        };
        let moving: BTreeSet<String> = ["a".to_string()].into();
        let ctx = EvalContext::with_view(SceneView::moved(&s, &motion, &moving)).baseline(SceneView::new(&s));
        assert!(eval(&t, &ctx).unwrap().0 < 1e-15);
        assert!((eval(&t, &EvalContext::new(&s)).unwrap().0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn void_programs_are_not_costs() {
        let t = Language::default().compile("gripper_open()").unwrap();
        assert_eq!(eval(&t, &EvalContext::new(&base_scene())).unwrap_err(), CostError::NotACost(Sort::Void));
    }
}
