//! Point-cloud primitives and rigid-body math that every vocabulary word
//! grounds into.
//!
//! Points and vectors are plain `nalgebra` types in the world frame (meters).
//! Rotations use the XYZ intrinsic Euler convention throughout:
//! `R = Rx(rx) * Ry(ry) * Rz(rz)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Distances below this are treated as coincident points.
pub const COINCIDENT_EPS: f64 = 1e-9;

/// Tolerance used when checking that a matrix is a proper rotation.
pub const ROTATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("principal axis is undefined: all points coincide")]
    DegenerateAxis,
    #[error("direction is undefined: start and end coincide")]
    DegenerateDirection,
    #[error("matrix is not a proper rotation (orthonormality error {orthonormality:.3e}, det {det})")]
    NotARotation { orthonormality: f64, det: f64 },
}

/// Cached first and second moments plus the axis-aligned bounds of a cloud.
#[derive(Debug, Clone)]
pub struct CloudStats {
    pub centroid: Point3,
    /// Population (1/N) covariance.
    pub covariance: Matrix3<f64>,
    pub min: Point3,
    pub max: Point3,
}

/// A non-empty set of finite points. Moments are computed once on first use.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point3>,
    stats: OnceLock<CloudStats>,
}

impl PartialEq for PointCloud {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        if let Some(index) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self {
            points,
            stats: OnceLock::new(),
        })
    }

    pub fn from_triples(triples: &[[f64; 3]]) -> Result<Self, GeometryError> {
        Self::new(triples.iter().map(|t| Point3::new(t[0], t[1], t[2])).collect())
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_triples(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    pub fn stats(&self) -> &CloudStats {
        self.stats.get_or_init(|| compute_stats(&self.points))
    }
}

fn compute_stats(points: &[Point3]) -> CloudStats {
    let n = points.len() as f64;
    let mut sum = Vector3::zeros();
    let mut min = points[0];
    let mut max = points[0];
    for p in points {
        sum += p.coords;
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    let centroid = Point3::from(sum / n);
    let mut covariance = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        covariance += d * d.transpose();
    }
    CloudStats {
        centroid,
        covariance: covariance / n,
        min,
        max,
    }
}

/// Arithmetic mean of the points.
pub fn centroid(cloud: &PointCloud) -> Point3 {
    cloud.stats().centroid
}

/// Dominant eigenvector of a covariance matrix, sign-normalized.
pub fn principal_axis_of_covariance(covariance: &Matrix3<f64>) -> Result<Vector3, GeometryError> {
    let eigen = SymmetricEigen::new(*covariance);
    let (best, &largest) = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("3x3 matrix has three eigenvalues");
    if largest.is_nan() || largest <= 1e-24 {
        return Err(GeometryError::DegenerateAxis);
    }
    let axis = eigen.eigenvectors.column(best).normalize();
    Ok(canonical_sign(axis))
}

/// Flip `v` so that its largest-magnitude component is positive.
pub fn canonical_sign(v: Vector3) -> Vector3 {
    let mut pivot = 0;
    for k in 1..3 {
        if v[k].abs() > v[pivot].abs() {
            pivot = k;
        }
    }
    if v[pivot] < 0.0 {
        -v
    } else {
        v
    }
}

/// Unit direction of largest variance (PCA), with the sign fixed so that the
/// largest-magnitude component is positive.
pub fn principal_axis(cloud: &PointCloud) -> Result<Vector3, GeometryError> {
    principal_axis_of_covariance(&cloud.stats().covariance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    /// World z.
    Height,
    /// World y.
    Width,
    /// World x.
    Length,
}

impl Dimension {
    pub fn world_index(self) -> usize {
        match self {
            Dimension::Length => 0,
            Dimension::Width => 1,
            Dimension::Height => 2,
        }
    }
}

/// Axis-aligned extent of the cloud along one world axis.
pub fn extent(cloud: &PointCloud, dimension: Dimension) -> f64 {
    let stats = cloud.stats();
    let k = dimension.world_index();
    stats.max[k] - stats.min[k]
}

/// Unit vector pointing from `start` to `end`.
pub fn direction_of(start: &Point3, end: &Point3) -> Result<Vector3, GeometryError> {
    let d = end - start;
    let norm = d.norm();
    if norm <= COINCIDENT_EPS {
        return Err(GeometryError::DegenerateDirection);
    }
    Ok(d / norm)
}

/// Gripper (end-effector) pose: a proper rotation plus a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    rotation: Matrix3<f64>,
    pub translation: Point3,
}

impl PoseSE3 {
    pub fn new(rotation: Matrix3<f64>, translation: Point3) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Point3::origin(),
        }
    }

    pub fn from_translation(translation: Point3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
        ]
    }

    pub fn from_row_major(rotation: [f64; 9], translation: [f64; 3]) -> Result<Self, GeometryError> {
        Self::new(
            Matrix3::from_row_slice(&rotation),
            Point3::new(translation[0], translation[1], translation[2]),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl Serialize for PoseSE3 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            rotation: self.rotation_row_major(),
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PoseSE3 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        PoseSE3::from_row_major(repr.rotation, repr.translation).map_err(serde::de::Error::custom)
    }
}

pub fn check_rotation(m: &Matrix3<f64>) -> Result<(), GeometryError> {
    let orthonormality = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if orthonormality > ROTATION_EPS || (det - 1.0).abs() > ROTATION_EPS || !det.is_finite() {
        return Err(GeometryError::NotARotation {
            orthonormality,
            det,
        });
    }
    Ok(())
}

/// The rigid map `p -> rotation * (p - from) + to`.
///
/// Between two gripper poses `(R0, t0)` and `(R, t)` the rotation is
/// `R * R0^-1`, which carries every attached point along with the gripper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub from: Point3,
    pub to: Point3,
}

impl RigidMotion {
    pub fn between(pose_from: &PoseSE3, pose_to: &PoseSE3) -> Self {
        Self {
            rotation: pose_to.rotation * pose_from.rotation.transpose(),
            from: pose_from.translation,
            to: pose_to.translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            from: Point3::origin(),
            to: Point3::origin(),
        }
    }

    #[inline]
    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.to + self.rotation * (p - self.from)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }
}

/// Map every point of `cloud` through the motion from `pose_from` to `pose_to`.
pub fn transform_cloud(cloud: &PointCloud, pose_from: &PoseSE3, pose_to: &PoseSE3) -> PointCloud {
    let motion = RigidMotion::between(pose_from, pose_to);
    apply_motion(cloud, &motion)
}

pub fn apply_motion(cloud: &PointCloud, motion: &RigidMotion) -> PointCloud {
    let points = cloud.points.iter().map(|p| motion.apply_point(p)).collect();
    PointCloud {
        points,
        stats: OnceLock::new(),
    }
}

/// XYZ intrinsic Euler angles in radians, each in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerXYZ {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl EulerXYZ {
    pub fn new(rx: f64, ry: f64, rz: f64) -> Self {
        Self { rx, ry, rz }
    }

    pub fn l1_norm(&self) -> f64 {
        self.rx.abs() + self.ry.abs() + self.rz.abs()
    }
}

fn wrap_half_open(angle: f64) -> f64 {
    // atan2 can return exactly -pi; the convention keeps +pi instead.
    if angle <= -PI {
        angle + 2.0 * PI
    } else {
        angle
    }
}

pub fn rotation_from_euler(e: &EulerXYZ) -> Matrix3<f64> {
    let (sx, cx) = e.rx.sin_cos();
    let (sy, cy) = e.ry.sin_cos();
    let (sz, cz) = e.rz.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    rx * ry * rz
}

/// Inverse of [`rotation_from_euler`]. At gimbal lock (`cos(ry)` below 1e-9)
/// the split between `rx` and `rz` is ambiguous; `rz` is pinned to zero.
pub fn euler_from_rotation(m: &Matrix3<f64>) -> EulerXYZ {
    let sy = m[(0, 2)].clamp(-1.0, 1.0);
    let cos_ry = m[(0, 0)].hypot(m[(0, 1)]);
    if cos_ry < 1e-9 {
        let ry = if sy > 0.0 { PI / 2.0 } else { -PI / 2.0 };
        let rx = (m[(1, 0)] * sy.signum()).atan2(m[(1, 1)]);
        return EulerXYZ::new(wrap_half_open(rx), ry, 0.0);
    }
    let ry = sy.atan2(cos_ry);
    let rx = (-m[(1, 2)]).atan2(m[(2, 2)]);
    let rz = (-m[(0, 1)]).atan2(m[(0, 0)]);
    EulerXYZ::new(wrap_half_open(rx), ry, wrap_half_open(rz))
}

/// Rotation by `angle` radians about a unit `axis`.
pub fn rotation_about_axis(axis: &Vector3, angle: f64) -> Matrix3<f64> {
    let unit = nalgebra::Unit::new_normalize(*axis);
    *nalgebra::Rotation3::from_axis_angle(&unit, angle).matrix()
}
