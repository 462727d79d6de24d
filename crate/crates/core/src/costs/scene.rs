//! Labeled point-cloud scenes and their JSON form.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    apply_motion, canonical_sign, check_rotation, principal_axis, Dimension, GeometryError, Point3, PointCloud,
    PoseSE3, RigidMotion, Vector3,
};

/// Part name that always refers to the gripper itself.
pub const GRIPPER: &str = "gripper";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("part `{0}` has an invalid cloud: {1}")]
    Cloud(String, GeometryError),
    #[error("`{GRIPPER}` is reserved and cannot name a part")]
    ReservedName,
    #[error("gripper open fraction {0} is outside [0, 1]")]
    OpenFraction(f64),
    #[error("gripper rotation is invalid: {0}")]
    Rotation(GeometryError),
    #[error("{0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub cloud: PointCloud,
    pub grasped: bool,
    /// Owning object, when the scene labels it explicitly.
    pub object: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gripper {
    pub position: Point3,
    pub rotation: Matrix3<f64>,
    /// 1 = fully open, 0 = closed.
    pub open_fraction: f64,
}

impl Gripper {
    pub fn pose(&self) -> PoseSE3 {
        PoseSE3::new(self.rotation, self.position).expect("scene gripper rotation is validated on construction")
    }
}

/// State recorded before a stage runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub gripper: [f64; 3],
    #[serde(default)]
    pub centroids: BTreeMap<String, [f64; 3]>,
}

impl Snapshot {
    pub fn gripper_position(&self) -> Point3 {
        Point3::from(self.gripper)
    }

    pub fn centroid(&self, name: &str) -> Option<Point3> {
        self.centroids.get(name).map(|c| Point3::from(*c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub parts: BTreeMap<String, Part>,
    pub gripper: Gripper,
    pub history: Vec<Snapshot>,
}

impl Scene {
    pub fn new(gripper_position: Point3) -> Self {
        Self {
            parts: BTreeMap::new(),
            gripper: Gripper {
                position: gripper_position,
                rotation: Matrix3::identity(),
                open_fraction: 1.0,
            },
            history: Vec::new(),
        }
    }

    pub fn with_part(mut self, name: &str, cloud: PointCloud, grasped: bool, object: Option<&str>) -> Self {
        self.insert_part(name, cloud, grasped, object);
        self
    }

    pub fn insert_part(&mut self, name: &str, cloud: PointCloud, grasped: bool, object: Option<&str>) {
        assert_ne!(name, GRIPPER, "`gripper` is a reserved part name");
        self.parts.insert(
            name.to_owned(),
            Part {
                cloud,
                grasped,
                object: object.map(str::to_owned),
            },
        );
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.parts.contains_key(GRIPPER) {
            return Err(SceneError::ReservedName);
        }
        let f = self.gripper.open_fraction;
        if !(0.0..=1.0).contains(&f) {
            return Err(SceneError::OpenFraction(f));
        }
        check_rotation(&self.gripper.rotation).map_err(SceneError::Rotation)
    }

    pub fn grasped(&self) -> BTreeSet<String> {
        self.parts
            .iter()
            .filter(|(_, p)| p.grasped)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let p = self.gripper.position;
        Snapshot {
            gripper: [p.x, p.y, p.z],
            centroids: self
                .parts
                .iter()
                .map(|(n, part)| {
                    let c = part.cloud.stats().centroid;
                    (n.clone(), [c.x, c.y, c.z])
                })
                .collect(),
        }
    }

    /// Materialize a gripper motion: moving parts and the gripper are carried
    /// along, everything else stays put.
    pub fn apply_motion(&self, motion: &RigidMotion, moving: &BTreeSet<String>) -> Scene {
        let mut out = self.clone();
        for (name, part) in out.parts.iter_mut() {
            if moving.contains(name) {
                part.cloud = apply_motion(&part.cloud, motion);
            }
        }
        out.gripper.position = motion.apply_point(&self.gripper.position);
        out.gripper.rotation = motion.rotation * self.gripper.rotation;
        out
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: SceneDoc = serde_path_to_error::deserialize(de)
            .map_err(|e| SceneError::Json(format!("{} at `{}`", e.inner(), e.path())))?;
        doc.into_scene()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SceneDoc::from(self)).expect("scene serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&SceneDoc::from(self)).expect("scene serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartDoc {
    points: Vec<[f64; 3]>,
    #[serde(default)]
    grasped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object: Option<String>,
}

fn default_open() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GripperDoc {
    position: [f64; 3],
    #[serde(default = "default_open")]
    open_fraction: f64,
    /// Row-major 3x3; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<[f64; 9]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    parts: BTreeMap<String, PartDoc>,
    gripper: GripperDoc,
    #[serde(default)]
    history: Vec<Snapshot>,
}

impl SceneDoc {
    fn into_scene(self) -> Result<Scene, SceneError> {
        let rotation = self
            .gripper
            .rotation
            .map(|r| Matrix3::from_row_slice(&r))
            .unwrap_or_else(Matrix3::identity);
        let mut parts = BTreeMap::new();
        for (name, p) in self.parts {
            if name == GRIPPER {
                return Err(SceneError::ReservedName);
            }
            let cloud = PointCloud::from_triples(&p.points).map_err(|e| SceneError::Cloud(name.clone(), e))?;
            parts.insert(
                name,
                Part {
                    cloud,
                    grasped: p.grasped,
                    object: p.object,
                },
            );
        }
        let scene = Scene {
            parts,
            gripper: Gripper {
                position: Point3::from(self.gripper.position),
                rotation,
                open_fraction: self.gripper.open_fraction,
            },
            history: self.history,
        };
        scene.validate()?;
        Ok(scene)
    }
}

impl From<&Scene> for SceneDoc {
    fn from(s: &Scene) -> Self {
        let r = &s.gripper.rotation;
        let rotation = (*r != Matrix3::identity()).then(|| {
            [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ]
        });
        let p = s.gripper.position;
        SceneDoc {
            parts: s
                .parts
                .iter()
                .map(|(n, part)| {
                    (
                        n.clone(),
                        PartDoc {
                            points: part.cloud.to_triples(),
                            grasped: part.grasped,
                            object: part.object.clone(),
                        },
                    )
                })
                .collect(),
            gripper: GripperDoc {
                position: [p.x, p.y, p.z],
                open_fraction: s.gripper.open_fraction,
                rotation,
            },
            history: s.history.clone(),
        }
    }
}

/// A scene seen through a pending gripper motion, without copying clouds.
///
/// Centroids and axes of moving parts are derived from the cached moments of
/// the original cloud; only extents touch the points again.
#[derive(Debug, Clone, Copy)]
pub struct SceneView<'a> {
    pub scene: &'a Scene,
    motion: Option<(&'a RigidMotion, &'a BTreeSet<String>)>,
}

impl<'a> SceneView<'a> {
    pub fn new(scene: &'a Scene) -> Self {
        Self { scene, motion: None }
    }

    pub fn moved(scene: &'a Scene, motion: &'a RigidMotion, moving: &'a BTreeSet<String>) -> Self {
        Self {
            scene,
            motion: Some((motion, moving)),
        }
    }

    fn part_motion(&self, name: &str) -> Option<&'a RigidMotion> {
        self.motion.and_then(|(m, moving)| moving.contains(name).then_some(m))
    }

    pub fn has_part(&self, name: &str) -> bool {
        self.scene.parts.contains_key(name)
    }

    pub fn centroid(&self, part: &Part, name: &str) -> Point3 {
        let c = part.cloud.stats().centroid;
        match self.part_motion(name) {
            Some(m) => m.apply_point(&c),
            None => c,
        }
    }

    pub fn axis(&self, part: &Part, name: &str) -> Result<Vector3, GeometryError> {
        let axis = principal_axis(&part.cloud)?;
        Ok(match self.part_motion(name) {
            Some(m) => canonical_sign(m.apply_vector(&axis)),
            None => axis,
        })
    }

    pub fn extent(&self, part: &Part, name: &str, dim: Dimension) -> f64 {
        match self.part_motion(name) {
            Some(m) => {
                let k = dim.world_index();
                let (lo, hi) = part
                    .cloud
                    .points()
                    .iter()
                    .map(|p| m.apply_point(p)[k])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi - lo
            }
            None => crate::geometry::extent(&part.cloud, dim),
        }
    }

    pub fn gripper_position(&self) -> Point3 {
        match self.motion {
            Some((m, _)) => m.apply_point(&self.scene.gripper.position),
            None => self.scene.gripper.position,
        }
    }

    pub fn gripper_rotation(&self) -> Matrix3<f64> {
        match self.motion {
            Some((m, _)) => m.rotation * self.scene.gripper.rotation,
            None => self.scene.gripper.rotation,
        }
    }
}
