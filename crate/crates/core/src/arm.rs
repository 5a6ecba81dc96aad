//! Six-joint manipulator kinematics.
//!
//! Each joint row uses the standard Denavit–Hartenberg convention
//! `Rz(theta + offset) * Tz(d) * Tx(a) * Rx(twist)`, chained after a fixed
//! translation from the chassis frame to the arm base. Angles at the API are
//! degrees; the Jacobian maps radians per second to metres / radians per second.

use nalgebra::{Isometry3, Matrix3, Matrix6, Point3, Rotation3, Translation3, UnitQuaternion, Vector3, Vector6};
use thiserror::Error;

pub const JOINTS: usize = 6;
/// Combined mass of the six links and the gripper.
pub const ARM_MASS_KG: f64 = 4.3;
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArmError {
    #[error("joint {joint} angle {angle_deg:.3} deg outside [{min_deg}, {max_deg}]")]
    JointLimit { joint: usize, angle_deg: f64, min_deg: f64, max_deg: f64 },
    #[error("invalid arm configuration: {0}")]
    InvalidConfig(String),
    #[error("target is not a valid rotation matrix")]
    InvalidTarget,
    #[error(
        "target unreachable after {iterations} iterations \
         (position residual {position_residual:.3e} m, orientation residual {orientation_residual:.3e} rad)"
    )]
    Unreachable { iterations: usize, position_residual: f64, orientation_residual: f64 },
}

pub type Result<T> = std::result::Result<T, ArmError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointParams {
    /// Link length along the new x axis, metres.
    pub a: f64,
    /// Link twist about the new x axis, degrees.
    pub twist_deg: f64,
    /// Link offset along the previous z axis, metres.
    pub d: f64,
    /// Constant added to the joint angle, degrees.
    pub offset_deg: f64,
    pub min_deg: f64,
    pub max_deg: f64,
    /// Point mass placed at the midpoint of the link segment, kg.
    pub mass: f64,
}

impl JointParams {
    fn transform(&self, angle_deg: f64) -> Isometry3<f64> {
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), (angle_deg + self.offset_deg).to_radians());
        let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.twist_deg.to_radians());
        Isometry3::from_parts(Translation3::identity(), rz)
            * Isometry3::translation(self.a, 0.0, self.d)
            * Isometry3::from_parts(Translation3::identity(), rx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmConfig {
    pub joints: [JointParams; JOINTS],
    pub gripper_mass: f64,
    /// Gripper reach point in the final link frame, metres.
    pub reach: [f64; 3],
    /// Arm base origin in the chassis frame, metres.
    pub base: [f64; 3],
}

impl Default for ArmConfig {
    /// A 0.55 m arm: waist, shoulder, elbow and a three-axis wrist, mounted
    /// on the chassis top ahead of centre. The home pose holds the upper arm
    /// vertical with the forearm pointing forward.
    fn default() -> Self {
        let row = |a, twist_deg, d, offset_deg, lim: f64, mass| JointParams {
            a,
            twist_deg,
            d,
            offset_deg,
            min_deg: -lim,
            max_deg: lim,
            mass,
        };
        Self {
            joints: [
                row(0.0, 90.0, 0.10, 0.0, 170.0, 0.9),
                row(0.20, 0.0, 0.0, 90.0, 120.0, 1.0),
                row(0.0, 90.0, 0.0, 0.0, 150.0, 0.7),
                row(0.0, -90.0, 0.15, 0.0, 170.0, 0.6),
                row(0.0, 90.0, 0.0, 0.0, 120.0, 0.4),
                row(0.0, 0.0, 0.05, 0.0, 170.0, 0.3),
            ],
            gripper_mass: 0.4,
            reach: [0.0, 0.0, 0.05],
            base: [0.10, 0.0, 0.21],
        }
    }
}

impl ArmConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, j) in self.joints.iter().enumerate() {
            let vals = [j.a, j.twist_deg, j.d, j.offset_deg, j.min_deg, j.max_deg, j.mass];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(ArmError::InvalidConfig(format!("joint {} has non-finite parameters", i + 1)));
            }
            if j.min_deg >= j.max_deg {
                return Err(ArmError::InvalidConfig(format!("joint {} limits min >= max", i + 1)));
            }
            if j.min_deg > 0.0 || j.max_deg < 0.0 {
                return Err(ArmError::InvalidConfig(format!(
                    "joint {} limits must contain the home angle 0",
                    i + 1
                )));
            }
            if j.mass < 0.0 {
                return Err(ArmError::InvalidConfig(format!("joint {} mass is negative", i + 1)));
            }
        }
        if !(self.gripper_mass >= 0.0) {
            return Err(ArmError::InvalidConfig("gripper mass must be >= 0".into()));
        }
        let total = self.total_mass();
        if (total - ARM_MASS_KG).abs() > 1e-9 {
            return Err(ArmError::InvalidConfig(format!(
                "link masses plus gripper must total {ARM_MASS_KG} kg, got {total}"
            )));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.joints.iter().map(|j| j.mass).sum::<f64>() + self.gripper_mass
    }

    /// Sum of link lengths and offsets plus the gripper reach: an upper bound
    /// on the distance from the arm base to the gripper.
    pub fn max_reach(&self) -> f64 {
        self.joints.iter().map(|j| j.a.abs() + j.d.abs()).sum::<f64>()
            + Vector3::from(self.reach).norm()
    }

    pub fn home(&self) -> JointState {
        JointState::default()
    }

    pub fn check_limits(&self, joints: &JointState) -> Result<()> {
        for (i, (&q, p)) in joints.angles.iter().zip(&self.joints).enumerate() {
            if !(q >= p.min_deg && q <= p.max_deg) {
                return Err(ArmError::JointLimit {
                    joint: i + 1,
                    angle_deg: q,
                    min_deg: p.min_deg,
                    max_deg: p.max_deg,
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, angles: &mut [f64; JOINTS]) {
        for (q, p) in angles.iter_mut().zip(&self.joints) {
            *q = q.clamp(p.min_deg, p.max_deg);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub angles: [f64; JOINTS],
    /// Degrees per second.
    pub velocities: [f64; JOINTS],
}

impl JointState {
    pub fn from_angles(angles: [f64; JOINTS]) -> Self {
        Self { angles, velocities: [0.0; JOINTS] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndEffectorPose {
    /// Gripper reach point in the chassis frame.
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
}

impl EndEffectorPose {
    /// `true` when the orientation is orthonormal with determinant +1 to 1e-9.
    pub fn is_valid_rotation(&self) -> bool {
        orthonormality_error(&self.orientation) < 1e-9 && (self.orientation.determinant() - 1.0).abs() < 1e-9
    }
}

/// `max |(R^T R - I)_ij|`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

/// Every frame of one forward-kinematics evaluation, in the chassis frame.
#[derive(Debug, Clone)]
pub struct ArmFrames {
    /// `frames[0]` is the arm base, `frames[i]` the frame after joint `i`.
    pub frames: [Isometry3<f64>; JOINTS + 1],
    pub gripper: Point3<f64>,
}

impl ArmFrames {
    pub fn origin(&self, i: usize) -> Vector3<f64> {
        self.frames[i].translation.vector
    }

    /// Rotation axis of joint `i` (1-based), the z axis of frame `i - 1`.
    pub fn axis(&self, joint: usize) -> Vector3<f64> {
        self.frames[joint - 1].rotation * Vector3::z()
    }

    /// Midpoint of link segment `i` (1-based): origin `i - 1` to origin `i`.
    pub fn link_midpoint(&self, link: usize) -> Vector3<f64> {
        0.5 * (self.origin(link - 1) + self.origin(link))
    }

    pub fn pose(&self) -> EndEffectorPose {
        EndEffectorPose {
            position: self.gripper.coords,
            orientation: *self.frames[JOINTS].rotation.to_rotation_matrix().matrix(),
        }
    }

    /// Velocity of `point` per unit rate (rad/s) of joint `joint`, for a point
    /// carried by a link at or after that joint.
    fn point_column(&self, joint: usize, point: &Vector3<f64>) -> Vector3<f64> {
        self.axis(joint).cross(&(point - self.origin(joint - 1)))
    }

    /// Linear velocity of each mass (six link midpoints, then the gripper) per
    /// unit rate of each joint: `cols[mass][joint]`.
    fn mass_jacobians(&self) -> Vec<(Vector3<f64>, [Vector3<f64>; JOINTS])> {
        let mut out = Vec::with_capacity(JOINTS + 1);
        for link in 1..=JOINTS {
            let mid = self.link_midpoint(link);
            let (start, end) = (self.origin(link - 1), self.origin(link));
            let mut cols = [Vector3::zeros(); JOINTS];
            for j in 1..=link {
                // the segment start moves with joints before `link`, the end with all up to it
                let v_end = self.point_column(j, &end);
                let v_start = if j < link { self.point_column(j, &start) } else { Vector3::zeros() };
                cols[j - 1] = 0.5 * (v_start + v_end);
            }
            out.push((mid, cols));
        }
        let g = self.gripper.coords;
        let mut cols = [Vector3::zeros(); JOINTS];
        for (j, col) in cols.iter_mut().enumerate() {
            *col = self.point_column(j + 1, &g);
        }
        out.push((g, cols));
        out
    }
}

/// Chains the link transforms without checking limits.
pub fn arm_frames(config: &ArmConfig, angles: &[f64; JOINTS]) -> ArmFrames {
    let base = Isometry3::translation(config.base[0], config.base[1], config.base[2]);
    let mut frames = [base; JOINTS + 1];
    for i in 0..JOINTS {
        frames[i + 1] = frames[i] * config.joints[i].transform(angles[i]);
    }
    let gripper = frames[JOINTS] * Point3::from(config.reach);
    ArmFrames { frames, gripper }
}

/// Gripper pose in the chassis frame.
pub fn forward_kinematics(config: &ArmConfig, joints: &JointState) -> Result<EndEffectorPose> {
    config.check_limits(joints)?;
    Ok(arm_frames(config, &joints.angles).pose())
}

/// Geometric Jacobian at the gripper reach point. Rows 0..3 are linear
/// velocity, rows 3..6 angular velocity, per rad/s of each joint.
pub fn jacobian(config: &ArmConfig, joints: &JointState) -> Result<Matrix6<f64>> {
    config.check_limits(joints)?;
    Ok(jacobian_unchecked(&arm_frames(config, &joints.angles)))
}

fn jacobian_unchecked(frames: &ArmFrames) -> Matrix6<f64> {
    let mut jac = Matrix6::zeros();
    let p = frames.gripper.coords;
    for j in 1..=JOINTS {
        let z = frames.axis(j);
        let lin = z.cross(&(p - frames.origin(j - 1)));
        jac.fixed_view_mut::<3, 1>(0, j - 1).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, j - 1).copy_from(&z);
    }
    jac
}

/// Rotation taking `current` to `target`, as an axis-angle vector.
fn orientation_error(target: &Matrix3<f64>, current: &Matrix3<f64>) -> Vector3<f64> {
    let err = Rotation3::from_matrix_unchecked(target * current.transpose());
    err.scaled_axis()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    /// Initial damping; adapted per iteration as steps are accepted or rejected.
    pub damping: f64,
    pub max_step_deg: f64,
    /// Iteration budget of each attempt.
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Extra attempts from fixed in-limit seeds after the caller's seed fails.
    pub restarts: usize,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 0.01,
            max_step_deg: 10.0,
            max_iterations: 200,
            position_tolerance: 1e-6,
            orientation_tolerance: 1e-4,
            restarts: 64,
        }
    }
}

/// Damped-least-squares inverse kinematics with the default options.
pub fn inverse_kinematics(config: &ArmConfig, target: &EndEffectorPose, seed: &JointState) -> Result<JointState> {
    inverse_kinematics_with(config, target, seed, &IkOptions::default())
}

/// Runs damped least squares from `seed`; if that attempt stalls in a local
/// minimum, retries from a fixed, deterministic sequence of seeds spread over
/// the joint limits. Returns the first converged solution.
pub fn inverse_kinematics_with(
    config: &ArmConfig,
    target: &EndEffectorPose,
    seed: &JointState,
    opts: &IkOptions,
) -> Result<JointState> {
    if !target.is_valid_rotation() || !target.position.iter().all(|v| v.is_finite()) {
        return Err(ArmError::InvalidTarget);
    }
    let mut best = match solve_from(config, target, seed.angles, opts) {
        Ok(q) => return Ok(JointState { angles: q, velocities: seed.velocities }),
        Err(residual) => residual,
    };
    // Reachability bound: no seed can help beyond the arm's total length.
    let base = Vector3::from(config.base);
    if (target.position - base).norm() > config.max_reach() + opts.position_tolerance {
        return Err(unreachable(opts, best));
    }
    for k in 0..opts.restarts {
        match solve_from(config, target, restart_seed(config, k), opts) {
            Ok(q) => return Ok(JointState { angles: q, velocities: seed.velocities }),
            Err(residual) => {
                if residual.0 < best.0 {
                    best = residual;
                }
            }
        }
    }
    Err(unreachable(opts, best))
}

fn unreachable(opts: &IkOptions, residual: (f64, f64)) -> ArmError {
    ArmError::Unreachable {
        iterations: opts.max_iterations,
        position_residual: residual.0,
        orientation_residual: residual.1,
    }
}

/// Low-discrepancy point `k` of the joint box (Halton sequence, bases 2..13).
fn restart_seed(config: &ArmConfig, k: usize) -> [f64; JOINTS] {
    const BASES: [usize; JOINTS] = [2, 3, 5, 7, 11, 13];
    let mut q = [0.0; JOINTS];
    for (i, (qi, p)) in q.iter_mut().zip(&config.joints).enumerate() {
        let (mut n, mut f, mut h) = (k + 1, 1.0, 0.0);
        while n > 0 {
            f /= BASES[i] as f64;
            h += f * (n % BASES[i]) as f64;
            n /= BASES[i];
        }
        *qi = p.min_deg + h * (p.max_deg - p.min_deg);
    }
    q
}

/// One damped-least-squares attempt. The damping starts at `opts.damping^2`
/// and is relaxed after each step that lowers the error, raised after each
/// rejected step. Joint limits are enforced by clamping every iterate.
fn solve_from(
    config: &ArmConfig,
    target: &EndEffectorPose,
    seed: [f64; JOINTS],
    opts: &IkOptions,
) -> std::result::Result<[f64; JOINTS], (f64, f64)> {
    let mut q = seed;
    config.clamp(&mut q);
    let max_step = opts.max_step_deg.to_radians();
    // Orientation rows are scaled by a characteristic length so both halves
    // of the error carry comparable weight.
    let scale = (0.5 * config.max_reach()).max(1e-3);
    let evaluate = |q: &[f64; JOINTS]| {
        let frames = arm_frames(config, q);
        let pose = frames.pose();
        let e_pos = target.position - pose.position;
        let e_rot = orientation_error(&target.orientation, &pose.orientation);
        let err = Vector6::new(e_pos.x, e_pos.y, e_pos.z, scale * e_rot.x, scale * e_rot.y, scale * e_rot.z);
        (frames, e_pos.norm(), e_rot.norm(), err)
    };
    let converged =
        |pos: f64, rot: f64| pos < opts.position_tolerance && rot < opts.orientation_tolerance;
    let mut mu = opts.damping * opts.damping;
    let (mut frames, mut pos_res, mut rot_res, mut err) = evaluate(&q);
    for _ in 0..opts.max_iterations {
        if converged(pos_res, rot_res) {
            return Ok(q);
        }
        let mut jac = jacobian_unchecked(&frames);
        jac.fixed_rows_mut::<3>(3).scale_mut(scale);
        let jjt = jac * jac.transpose() + Matrix6::identity() * mu;
        let Some(chol) = jjt.cholesky() else { break };
        let mut dq = jac.transpose() * chol.solve(&err);
        let largest = dq.amax();
        if largest > max_step {
            dq *= max_step / largest;
        }
        let mut trial = q;
        for (qi, d) in trial.iter_mut().zip(dq.iter()) {
            *qi += d.to_degrees();
        }
        config.clamp(&mut trial);
        let next = evaluate(&trial);
        if next.3.norm() < err.norm() {
            q = trial;
            (frames, pos_res, rot_res, err) = next;
            mu = (mu * 0.3).max(1e-12);
        } else {
            mu = (mu * 4.0).min(1e2);
        }
    }
    if converged(pos_res, rot_res) {
        Ok(q)
    } else {
        Err((pos_res, rot_res))
    }
}

/// Link CoMs (segment midpoints) and the gripper point with their masses.
pub fn mass_points(config: &ArmConfig, angles: &[f64; JOINTS]) -> Vec<(f64, Vector3<f64>)> {
    let frames = arm_frames(config, angles);
    let mut pts: Vec<(f64, Vector3<f64>)> = (1..=JOINTS)
        .map(|i| (config.joints[i - 1].mass, frames.link_midpoint(i)))
        .collect();
    pts.push((config.gripper_mass, frames.gripper.coords));
    pts
}

/// Mass-weighted centre of the arm in the chassis frame.
pub fn arm_com(config: &ArmConfig, angles: &[f64; JOINTS]) -> Vector3<f64> {
    let pts = mass_points(config, angles);
    let m: f64 = pts.iter().map(|(m, _)| m).sum();
    if m <= 0.0 {
        return Vector3::from(config.base);
    }
    pts.iter().fold(Vector3::zeros(), |acc, (mi, p)| acc + p * *mi) / m
}

fn rates_rad(joints: &JointState) -> [f64; JOINTS] {
    joints.velocities.map(f64::to_radians)
}

/// Point-mass angular momentum about the arm base origin, kg m^2/s.
pub fn angular_momentum(config: &ArmConfig, joints: &JointState) -> Vector3<f64> {
    let frames = arm_frames(config, &joints.angles);
    let base = frames.origin(0);
    let masses = std::iter::once(config.joints.map(|j| j.mass))
        .flat_map(|m| m.into_iter())
        .chain(std::iter::once(config.gripper_mass));
    let w = rates_rad(joints);
    frames
        .mass_jacobians()
        .into_iter()
        .zip(masses)
        .fold(Vector3::zeros(), |acc, ((p, cols), m)| {
            let v = cols.iter().zip(&w).fold(Vector3::zeros(), |v, (c, wi)| v + c * *wi);
            acc + (p - base).cross(&v) * m
        })
}

/// Quasi-static gravity torque about each joint axis, N m, with gravity along
/// the chassis -z axis.
pub fn gravity_torques(config: &ArmConfig, angles: &[f64; JOINTS]) -> [f64; JOINTS] {
    let frames = arm_frames(config, angles);
    let gravity = Vector3::new(0.0, 0.0, -GRAVITY);
    let masses: Vec<f64> = config.joints.iter().map(|j| j.mass).chain(std::iter::once(config.gripper_mass)).collect();
    let mut tau = [0.0; JOINTS];
    for ((_, cols), m) in frames.mass_jacobians().into_iter().zip(masses) {
        for (t, c) in tau.iter_mut().zip(cols.iter()) {
            *t += m * gravity.dot(c);
        }
    }
    tau
}

/// Mechanical power drawn against gravity: `sum |tau_g,i * omega_i|`, watts.
pub fn power_estimate(config: &ArmConfig, joints: &JointState) -> f64 {
    let tau = gravity_torques(config, &joints.angles);
    tau.iter().zip(rates_rad(joints)).map(|(t, w)| (t * w).abs()).sum()
}
