//! Synthetic two-camera scenes: spheres moving through a box, imaged by two
//! pinhole cameras, with the exact epipolar geometry as ground truth.
//!
//! World coordinates have `y` up. Each visible sphere yields one detection
//! per frame: the projection of its center, jittered by Gaussian noise, with
//! radius `f · R / z`.

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::{BarcodeError, Detection, VideoTrack};
use crate::geometry::{
    is_area_inlier, symmetric_epipolar_distance, FundamentalMatrix, GeometryError, HomogeneousPoint, ImageFrame,
};
use crate::matching::LinePairCandidate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scene configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Track(#[from] BarcodeError),
}

fn config_error<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::Config(msg.into()))
}

/// A pinhole camera with square pixels and the principal point at the
/// image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub center: Vector3<f64>,
    /// Rows: image right, image down, viewing direction.
    pub rotation: Matrix3<f64>,
    pub focal: f64,
    pub frame: ImageFrame,
}

impl Camera {
    pub fn look_at(center: [f64; 3], target: [f64; 3], focal: f64, frame: ImageFrame) -> Result<Self, SimError> {
        let c = Vector3::from(center);
        let forward = Vector3::from(target) - c;
        if forward.norm() < 1e-12 {
            return config_error("camera target equals its center");
        }
        let forward = forward.normalize();
        let right = forward.cross(&Vector3::y());
        if right.norm() < 1e-9 {
            return config_error("camera looks straight up or down");
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Ok(Self { center: c, rotation, focal, frame })
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(self.focal, 0.0, self.frame.w() / 2.0, 0.0, self.focal, self.frame.h() / 2.0, 0.0, 0.0, 1.0)
    }

    /// `K [R | -R C]`.
    pub fn projection(&self) -> Matrix3x4<f64> {
        let t = -(self.rotation * self.center);
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        rt.set_column(3, &t);
        self.intrinsics() * rt
    }

    /// Pixel position and depth of a world point, if it is in front.
    pub fn project(&self, x: &Vector3<f64>) -> Option<([f64; 2], f64)> {
        let p = self.rotation * (x - self.center);
        if p.z <= 1e-6 {
            return None;
        }
        let u = self.focal * p.x / p.z + self.frame.w() / 2.0;
        let v = self.focal * p.y / p.z + self.frame.h() / 2.0;
        Some(([u, v], p.z))
    }

    /// Image of a world point (its own center for the other camera gives
    /// the epipole).
    pub fn image_of(&self, x: &Vector3<f64>) -> Result<HomogeneousPoint, GeometryError> {
        HomogeneousPoint::from_vector(&(self.projection() * Vector4::new(x.x, x.y, x.z, 1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub center: [f64; 3],
    pub target: [f64; 3],
    pub focal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MotionModel {
    /// Straight lines at constant speed, reflecting off the volume walls.
    Linear3d,
    /// Constant-speed legs between random waypoints inside the volume.
    PiecewiseLinear3d,
    /// Waypoint legs on the horizontal plane `y = height`.
    Planar { height: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub n_frames: usize,
    pub n_objects: usize,
    /// Sphere radius range, world units.
    pub radius: [f64; 2],
    /// Speed range, world units per frame.
    pub speed: [f64; 2],
    pub volume_min: [f64; 3],
    pub volume_max: [f64; 3],
    pub motion: MotionModel,
    pub camera_a: CameraSpec,
    pub camera_b: CameraSpec,
    /// Centroid jitter, pixels.
    pub sigma: f64,
    pub seed: u64,
}

impl SceneConfig {
    /// A desk-sized scene: 640×480, eight spheres over 500 frames, camera B
    /// 50° to 80° around the volume from camera A.
    pub fn desk(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6465_736b);
        let azimuth = rng.random_range(50f64..80.0).to_radians();
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let dist_b = rng.random_range(10.0..11.0);
        let lift = rng.random_range(-0.6..0.6);
        Self {
            width: 640,
            height: 480,
            n_frames: 500,
            n_objects: 8,
            radius: [0.15, 0.3],
            speed: [0.1, 0.2],
            volume_min: [-2.5, -1.8, -2.5],
            volume_max: [2.5, 1.8, 2.5],
            motion: MotionModel::Linear3d,
            camera_a: CameraSpec { center: [0.0, 0.4, -10.0], target: [0.0, 0.0, 0.0], focal: 500.0 },
            camera_b: CameraSpec {
                center: [side * dist_b * azimuth.sin(), 0.4 + lift, -dist_b * azimuth.cos()],
                target: [0.0, 0.0, 0.0],
                focal: 520.0,
            },
            sigma: 0.3,
            seed,
        }
    }

    /// Motion on the ground plane `y = 0`, camera A standing on it and
    /// camera B looking down from above.
    pub fn planar(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x706c_616e);
        let azimuth = rng.random_range(30f64..70.0).to_radians();
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let elevation = rng.random_range(5.0..8.0);
        Self {
            width: 640,
            height: 480,
            n_frames: 500,
            n_objects: 8,
            radius: [0.15, 0.3],
            speed: [0.1, 0.2],
            volume_min: [-3.0, 0.0, -3.0],
            volume_max: [3.0, 0.0, 3.0],
            motion: MotionModel::Planar { height: 0.0 },
            camera_a: CameraSpec { center: [0.0, 0.0, -10.0], target: [0.0, 0.0, 0.0], focal: 500.0 },
            camera_b: CameraSpec {
                center: [side * 9.0 * azimuth.sin(), elevation, -9.0 * azimuth.cos()],
                target: [0.0, 0.0, 0.0],
                focal: 480.0,
            },
            sigma: 0.3,
            seed,
        }
    }

    pub fn frame(&self) -> ImageFrame {
        ImageFrame::new(self.width, self.height)
    }

    pub fn cameras(&self) -> Result<(Camera, Camera), SimError> {
        let frame = self.frame();
        let a = Camera::look_at(self.camera_a.center, self.camera_a.target, self.camera_a.focal, frame)?;
        let b = Camera::look_at(self.camera_b.center, self.camera_b.target, self.camera_b.focal, frame)?;
        Ok((a, b))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.width == 0 || self.height == 0 {
            return config_error("image size must be positive");
        }
        if self.n_frames == 0 {
            return config_error("n_frames must be positive");
        }
        if self.n_objects == 0 {
            return config_error("n_objects must be positive");
        }
        let [r0, r1] = self.radius;
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return config_error("radius range must satisfy 0 < min <= max");
        }
        let [s0, s1] = self.speed;
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return config_error("speed range must satisfy 0 < min <= max");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return config_error("sigma must be non-negative");
        }
        for (k, (lo, hi)) in self.volume_min.iter().zip(&self.volume_max).enumerate() {
            let flat_ok = k == 1 && matches!(self.motion, MotionModel::Planar { .. });
            if !(lo < hi || (flat_ok && lo <= hi)) {
                return config_error("motion volume is empty");
            }
        }
        if self.camera_a.focal <= 0.0 || self.camera_b.focal <= 0.0 {
            return config_error("focal lengths must be positive");
        }
        let ca = Vector3::from(self.camera_a.center);
        let cb = Vector3::from(self.camera_b.center);
        if (ca - cb).norm() < 1e-9 {
            return config_error("camera centers coincide");
        }
        if let MotionModel::Planar { height } = self.motion {
            if (ca.y - height).abs() > 1e-9 {
                return config_error("planar motion needs camera A on the motion plane");
            }
            if (cb.y - height).abs() < 1e-6 {
                return config_error("planar motion needs camera B off the motion plane");
            }
        }
        self.cameras().map(|_| ())
    }
}

/// Exact epipolar geometry of a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub fundamental: FundamentalMatrix,
    pub e_a: HomogeneousPoint,
    pub e_b: HomogeneousPoint,
}

impl GroundTruth {
    /// `F = [e_B]ₓ P_B P_A⁺`, evaluated through the relative pose as
    /// `K_B⁻ᵀ [t]ₓ R K_A⁻¹` with `R = R_B R_Aᵀ` and `t = R_B (C_A − C_B)`,
    /// which avoids the poorly conditioned pseudo-inverse.
    pub fn from_cameras(a: &Camera, b: &Camera) -> Result<Self, SimError> {
        let e_b = b.image_of(&a.center)?;
        let e_a = a.image_of(&b.center)?;
        let r = b.rotation * a.rotation.transpose();
        let t = b.rotation * (a.center - b.center);
        let inv = |c: &Camera| c.intrinsics().try_inverse().ok_or(GeometryError::RankDeficientSystem);
        let f = inv(b)?.transpose() * t.cross_matrix() * r * inv(a)?;
        Ok(Self { fundamental: FundamentalMatrix::from_matrix(f)?, e_a, e_b })
    }

    /// `n` exact correspondences: `p_A` uniform over image A, `p_B` uniform
    /// along the part of its epipolar line inside image B. Points whose line
    /// misses image B are redrawn.
    pub fn sample_correspondences<R: Rng + ?Sized>(
        &self,
        frame_a: &ImageFrame,
        frame_b: &ImageFrame,
        n: usize,
        rng: &mut R,
    ) -> Vec<(HomogeneousPoint, HomogeneousPoint)> {
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < 100 * n.max(1) {
            attempts += 1;
            let pa = HomogeneousPoint::finite(rng.random_range(0.0..frame_a.w()), rng.random_range(0.0..frame_a.h()));
            let Ok(lb) = self.fundamental.line_in_b(&pa) else { continue };
            let Some((s, e)) = frame_b.clip(&lb) else { continue };
            let t: f64 = rng.random();
            let pb = HomogeneousPoint::finite(s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1]));
            out.push((pa, pb));
        }
        out
    }
}

/// Serialized ground truth: `{"F": [9], "eA": [3], "eB": [3]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthFile {
    #[serde(rename = "F")]
    pub f: [f64; 9],
    #[serde(rename = "eA")]
    pub e_a: [f64; 3],
    #[serde(rename = "eB")]
    pub e_b: [f64; 3],
}

impl From<&GroundTruth> for GroundTruthFile {
    fn from(gt: &GroundTruth) -> Self {
        Self { f: gt.fundamental.to_row_major(), e_a: gt.e_a.coords(), e_b: gt.e_b.coords() }
    }
}

impl TryFrom<GroundTruthFile> for GroundTruth {
    type Error = GeometryError;

    fn try_from(f: GroundTruthFile) -> Result<Self, Self::Error> {
        Ok(Self {
            fundamental: FundamentalMatrix::from_row_major(&f.f)?,
            e_a: HomogeneousPoint::try_from(f.e_a)?,
            e_b: HomogeneousPoint::try_from(f.e_b)?,
        })
    }
}

/// World positions of every sphere in every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub radii: Vec<f64>,
    /// `positions[frame][object]`.
    pub positions: Vec<Vec<Vector3<f64>>>,
}

/// Which sphere produced each detection, in detection order.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub trajectories: Trajectories,
    /// `objects_a[frame][detection]` is a sphere index.
    pub objects_a: Vec<Vec<usize>>,
    pub objects_b: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub video_a: VideoTrack,
    pub video_b: VideoTrack,
    pub ground_truth: GroundTruth,
    pub truth: SceneTruth,
}

fn random_in<R: Rng + ?Sized>(rng: &mut R, lo: &[f64; 3], hi: &[f64; 3]) -> Vector3<f64> {
    Vector3::from_fn(|k, _| if lo[k] < hi[k] { rng.random_range(lo[k]..hi[k]) } else { lo[k] })
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, planar: bool) -> Vector3<f64> {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let mut v = Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        if planar {
            v.y = 0.0;
        }
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

/// Moves the spheres for every frame according to the motion model.
pub fn simulate_motion(cfg: &SceneConfig) -> Result<Trajectories, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.volume_min, cfg.volume_max);
    let (lo, hi) = match cfg.motion {
        MotionModel::Planar { height } => ([lo[0], height, lo[2]], [hi[0], height, hi[2]]),
        _ => (lo, hi),
    };
    let planar = matches!(cfg.motion, MotionModel::Planar { .. });
    let radii: Vec<f64> = (0..cfg.n_objects).map(|_| rng.random_range(cfg.radius[0]..=cfg.radius[1])).collect();
    let speeds: Vec<f64> = (0..cfg.n_objects).map(|_| rng.random_range(cfg.speed[0]..=cfg.speed[1])).collect();
    let mut pos: Vec<Vector3<f64>> = (0..cfg.n_objects).map(|_| random_in(&mut rng, &lo, &hi)).collect();
    let mut vel: Vec<Vector3<f64>> = speeds.iter().map(|&s| s * random_direction(&mut rng, planar)).collect();
    let mut goal: Vec<Vector3<f64>> = (0..cfg.n_objects).map(|_| random_in(&mut rng, &lo, &hi)).collect();

    let mut positions = Vec::with_capacity(cfg.n_frames);
    for _ in 0..cfg.n_frames {
        positions.push(pos.clone());
        for k in 0..cfg.n_objects {
            match cfg.motion {
                MotionModel::Linear3d => {
                    let mut p = pos[k] + vel[k];
                    for d in 0..3 {
                        if lo[d] >= hi[d] {
                            continue;
                        }
                        if p[d] < lo[d] {
                            p[d] = 2.0 * lo[d] - p[d];
                            vel[k][d] = -vel[k][d];
                        } else if p[d] > hi[d] {
                            p[d] = 2.0 * hi[d] - p[d];
                            vel[k][d] = -vel[k][d];
                        }
                    }
                    pos[k] = p;
                }
                MotionModel::PiecewiseLinear3d | MotionModel::Planar { .. } => {
                    let mut step = speeds[k];
                    loop {
                        let to = goal[k] - pos[k];
                        let d = to.norm();
                        if d > step {
                            pos[k] += to * (step / d);
                            break;
                        }
                        pos[k] = goal[k];
                        step -= d;
                        goal[k] = random_in(&mut rng, &lo, &hi);
                    }
                }
            }
        }
    }
    Ok(Trajectories { radii, positions })
}

/// Images the trajectories in both cameras.
pub fn render(cfg: &SceneConfig, trajectories: &Trajectories) -> Result<Scene, SimError> {
    let (cam_a, cam_b) = cfg.cameras()?;
    let ground_truth = GroundTruth::from_cameras(&cam_a, &cam_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6a69_7474_6572);
    let jitter = Normal::new(0.0, cfg.sigma.max(0.0)).map_err(|e| SimError::Config(e.to_string()))?;
    let frame = cfg.frame();
    let mut frames_a = Vec::with_capacity(trajectories.positions.len());
    let mut frames_b = Vec::with_capacity(trajectories.positions.len());
    let mut objects_a = Vec::new();
    let mut objects_b = Vec::new();
    for spheres in &trajectories.positions {
        for (cam, frames, objects) in [(&cam_a, &mut frames_a, &mut objects_a), (&cam_b, &mut frames_b, &mut objects_b)]
        {
            let mut dets = Vec::new();
            let mut ids = Vec::new();
            for (k, x) in spheres.iter().enumerate() {
                let Some(([u, v], z)) = cam.project(x) else { continue };
                let (du, dv) =
                    if cfg.sigma > 0.0 { (jitter.sample(&mut rng), jitter.sample(&mut rng)) } else { (0.0, 0.0) };
                let (u, v) = (u + du, v + dv);
                if !frame.contains(u, v) {
                    continue;
                }
                dets.push(Detection::new(u, v, cam.focal * trajectories.radii[k] / z));
                ids.push(k);
            }
            frames.push(dets);
            objects.push(ids);
        }
    }
    Ok(Scene {
        video_a: VideoTrack::from_detections(frame, frames_a)?,
        video_b: VideoTrack::from_detections(frame, frames_b)?,
        ground_truth,
        truth: SceneTruth { trajectories: trajectories.clone(), objects_a, objects_b },
    })
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene, SimError> {
    let trajectories = simulate_motion(cfg)?;
    render(cfg, &trajectories)
}

/// Accuracy of a recovered model against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Mean symmetric epipolar distance over exact correspondences, pixels.
    pub sed: f64,
    /// Euclidean epipole errors when both epipoles are finite.
    pub epipole_error_a: Option<f64>,
    pub epipole_error_b: Option<f64>,
    /// Share of candidates whose lines are area inliers of the true pencils.
    pub inlier_rate: Option<f64>,
    pub samples: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    fundamental: &FundamentalMatrix,
    e_a: &HomogeneousPoint,
    e_b: &HomogeneousPoint,
    candidates: &[LinePairCandidate],
    gt: &GroundTruth,
    frame_a: &ImageFrame,
    frame_b: &ImageFrame,
    n_samples: usize,
    seed: u64,
) -> Result<EvaluationReport, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matches = gt.sample_correspondences(frame_a, frame_b, n_samples.max(1), &mut rng);
    let sed = symmetric_epipolar_distance(fundamental, &matches)?;
    let inlier_rate = (!candidates.is_empty()).then(|| {
        let hits = candidates
            .iter()
            .filter(|c| is_area_inlier(&c.l_a, &gt.e_a, frame_a) && is_area_inlier(&c.l_b, &gt.e_b, frame_b))
            .count();
        hits as f64 / candidates.len() as f64
    });
    Ok(EvaluationReport {
        sed,
        epipole_error_a: e_a.distance(&gt.e_a),
        epipole_error_b: e_b.distance(&gt.e_b),
        inlier_rate,
        samples: matches.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::find_recurring_pixels;

    #[test]
    fn ground_truth_annihilates_epipoles() {
        for seed in 0..5 {
            let cfg = SceneConfig::desk(seed);
            let (a, b) = cfg.cameras().unwrap();
            let gt = GroundTruth::from_cameras(&a, &b).unwrap();
            let f = gt.fundamental.matrix();
            assert!((f * gt.e_a.unit()).norm() < 1e-10);
            assert!((f.transpose() * gt.e_b.unit()).norm() < 1e-10);
        }
    }

    #[test]
    fn projected_world_points_satisfy_epipolar_constraint() {
        let cfg = SceneConfig::desk(1);
        let (a, b) = cfg.cameras().unwrap();
        let gt = GroundTruth::from_cameras(&a, &b).unwrap();
        let x = Vector3::new(0.7, -0.3, 1.1);
        let pa = a.image_of(&x).unwrap();
        let pb = b.image_of(&x).unwrap();
        let d = crate::geometry::signed_distance(&gt.fundamental.line_in_b(&pa).unwrap(), &pb).unwrap();
        assert!(d.abs() < 1e-9, "distance {d}");
    }

    #[test]
    fn sampled_correspondences_are_exact() {
        let cfg = SceneConfig::desk(2);
        let scene = generate_scene(&SceneConfig { n_frames: 3, ..cfg.clone() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frame = cfg.frame();
        let m = scene.ground_truth.sample_correspondences(&frame, &frame, 200, &mut rng);
        assert_eq!(m.len(), 200);
        for (pa, pb) in m {
            let r = pb.to_vector().dot(&(scene.ground_truth.fundamental.matrix() * pa.to_vector()));
            assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn coincident_cameras_are_rejected() {
        let mut cfg = SceneConfig::desk(0);
        cfg.camera_b = cfg.camera_a;
        assert!(matches!(generate_scene(&cfg), Err(SimError::Config(_))));
        let cfg = SceneConfig { n_frames: 0, ..SceneConfig::desk(0) };
        assert!(matches!(generate_scene(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SceneConfig { n_frames: 40, ..SceneConfig::desk(9) };
        assert_eq!(generate_scene(&cfg).unwrap(), generate_scene(&cfg).unwrap());
    }

    #[test]
    fn sphere_crossing_a_ray_twice_is_recurring() {
        // Noise-free: one sphere sits on camera A's optical axis at two
        // depths, frames 0 and 2, and elsewhere in frame 1.
        let cfg = SceneConfig { n_frames: 3, n_objects: 1, sigma: 0.0, ..SceneConfig::desk(4) };
        let (a, _) = cfg.cameras().unwrap();
        let dir = (Vector3::zeros() - a.center).normalize();
        let traj = Trajectories {
            radii: vec![0.2],
            positions: vec![vec![a.center + 8.0 * dir], vec![Vector3::new(1.5, 1.0, 0.0)], vec![a.center + 11.0 * dir]],
        };
        let scene = render(&cfg, &traj).unwrap();
        let rps = find_recurring_pixels(&scene.video_a, 1.0);
        assert_eq!(rps.len(), 1);
        let frames: Vec<usize> = rps[0].frames().collect();
        assert_eq!(frames, vec![0, 2]);
    }

    #[test]
    fn ground_truth_json_shape() {
        let cfg = SceneConfig::desk(0);
        let (a, b) = cfg.cameras().unwrap();
        let gt = GroundTruth::from_cameras(&a, &b).unwrap();
        let json = serde_json::to_value(GroundTruthFile::from(&gt)).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 3);
        for k in ["F", "eA", "eB"] {
            assert!(keys.contains(&k));
        }
        let back = GroundTruth::try_from(serde_json::from_value::<GroundTruthFile>(json).unwrap()).unwrap();
        assert!(back.fundamental.distance(&gt.fundamental) < 1e-12);
    }

    #[test]
    fn model_equal_to_truth_has_zero_error() {
        let cfg = SceneConfig::desk(3);
        let (a, b) = cfg.cameras().unwrap();
        let gt = GroundTruth::from_cameras(&a, &b).unwrap();
        let frame = cfg.frame();
        let r = evaluate_model(&gt.fundamental, &gt.e_a, &gt.e_b, &[], &gt, &frame, &frame, 500, 1).unwrap();
        assert!(r.sed < 1e-9);
        assert_eq!(r.epipole_error_a, Some(0.0));
        assert!(r.inlier_rate.is_none());
    }
}
