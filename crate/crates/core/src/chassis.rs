//! Two-body tracked chassis: rear base plus a front flipper hinged on a shared
//! lateral axis.
//!
//! Body frame: x forward, y left, z up, origin at the footprint centre on the
//! contact plane. World attitude is `Rz(heading) * Ry(-pitch) * Rx(roll)`, so
//! positive pitch raises the nose and positive roll raises the left side.
//!
//! The flipper occupies `[hinge_x, length/2]` when in line with the base and
//! swings nose-up by the flipper angle about the hinge line at contact level.
//! Stability is quasi-static: the zero-moment point is the vertical projection
//! of the centre of mass, and the margin is its signed distance to the
//! horizontal projection of the track contact polygon.

use nalgebra::{Rotation3, Vector3};
use thiserror::Error;

use crate::arm::{self, ArmConfig, JointState};
use crate::geometry::{self, Point2};
use crate::protocol::ActuatorSetpoints;
use crate::terrain::{TerrainError, TerrainGrid};

/// Table mass budget in grams: arm 4300 + tracks 18700 + others 630.
pub const TOTAL_MASS_GRAMS: u32 = 23_630;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChassisError {
    #[error("footprint out of terrain bounds: {0}")]
    OutOfBounds(#[from] TerrainError),
    #[error("support polygon is degenerate ({points} distinct contact points)")]
    SingularSupport { points: usize },
    #[error("invalid chassis configuration: {0}")]
    InvalidConfig(String),
    #[error("timestep {0} s outside (0, 0.1]")]
    InvalidTimestep(f64),
}

pub type Result<T> = std::result::Result<T, ChassisError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChassisConfig {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub mass_arm: f64,
    pub mass_tracks: f64,
    pub mass_others: f64,
    pub flipper_max_deg: f64,
    pub climb_max_deg: f64,
    pub payload_max: f64,
    /// Height of the assembled robot's centre of mass at the design pose
    /// (flipper in line, arm at home, no payload), which sits over the
    /// footprint centre.
    pub com_height: f64,
    /// Share of the track mass carried by the front body.
    pub front_fraction: f64,
    /// Hinge position along the body x axis, metres from centre.
    pub hinge_x: f64,
    pub v_max: f64,
    /// Flipper slew rate at full stick, deg/s.
    pub flipper_rate_max: f64,
    /// Contact tolerance for conformation, metres.
    pub contact_tolerance: f64,
}

impl Default for ChassisConfig {
    fn default() -> Self {
        Self {
            length: 0.450,
            width: 0.270,
            height: 0.210,
            mass_arm: 4.3,
            mass_tracks: 18.70,
            mass_others: 0.63,
            flipper_max_deg: 45.0,
            climb_max_deg: 40.0,
            payload_max: 12.0,
            com_height: 0.105,
            front_fraction: 0.5,
            hinge_x: 0.0,
            v_max: 0.5,
            flipper_rate_max: 30.0,
            contact_tolerance: 0.005,
        }
    }
}

fn grams(kg: f64) -> Option<u32> {
    let g = kg * 1000.0;
    ((g - g.round()).abs() < 1e-6 && g >= 0.0).then(|| g.round() as u32)
}

impl ChassisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ChassisError::InvalidConfig(m));
        let dims = [self.length, self.width, self.height, self.com_height, self.v_max, self.flipper_rate_max];
        if dims.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("dimensions, com_height, v_max and flipper_rate_max must be > 0".into());
        }
        let budget = [self.mass_arm, self.mass_tracks, self.mass_others].map(grams);
        match budget {
            [Some(a), Some(t), Some(o)] if a + t + o == TOTAL_MASS_GRAMS => {}
            _ => {
                return bad(format!(
                    "masses {} + {} + {} kg must total 23.63 kg to the gram",
                    self.mass_arm, self.mass_tracks, self.mass_others
                ))
            }
        }
        if !(self.front_fraction > 0.0 && self.front_fraction < 1.0) {
            return bad(format!("front_fraction must be in (0, 1), got {}", self.front_fraction));
        }
        if self.flipper_max_deg != 45.0 {
            return bad(format!("flipper_max must be 45 deg, got {}", self.flipper_max_deg));
        }
        if !(self.climb_max_deg > 0.0 && self.climb_max_deg < self.flipper_max_deg) {
            return bad("climb_max must be in (0, flipper_max)".into());
        }
        if !(self.payload_max >= 0.0) {
            return bad("payload_max must be >= 0".into());
        }
        if !(self.hinge_x.abs() < self.length / 2.0) {
            return bad("hinge_x must lie strictly inside the footprint".into());
        }
        if !(self.contact_tolerance > 0.0) {
            return bad("contact_tolerance must be > 0".into());
        }
        Ok(())
    }

    /// Unloaded mass, exactly 23.63 kg for a valid config.
    pub fn total_mass(&self) -> f64 {
        let g: u32 = [self.mass_arm, self.mass_tracks, self.mass_others]
            .iter()
            .map(|&m| grams(m).unwrap_or(0))
            .sum();
        g as f64 / 1000.0
    }

    pub fn flipper_length(&self) -> f64 {
        self.length / 2.0 - self.hinge_x
    }
}

/// How the front body meets the ground.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FlipperContact {
    /// In line with the base and resting on the same plane.
    #[default]
    InLine,
    /// Raised by the terrain; touches it `reach` metres from the hinge.
    Raised { reach: f64 },
    /// Not touching the ground.
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChassisState {
    pub position: [f64; 2],
    /// Height of the body origin on the contact plane.
    pub elevation: f64,
    pub heading_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    /// Actual flipper angle after conformation.
    pub flipper_angle_deg: f64,
    /// Operator-set flipper angle; terrain can only raise the flipper above it.
    pub flipper_rest_deg: f64,
    pub flipper_contact: FlipperContact,
    pub track_speed_left: f64,
    pub track_speed_right: f64,
    pub payload_mass: f64,
}

impl ChassisState {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Self {
            position: [x, y],
            elevation: 0.0,
            heading_deg,
            pitch_deg: 0.0,
            roll_deg: 0.0,
            flipper_angle_deg: 0.0,
            flipper_rest_deg: 0.0,
            flipper_contact: FlipperContact::InLine,
            track_speed_left: 0.0,
            track_speed_right: 0.0,
            payload_mass: 0.0,
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        body_rotation(self.heading_deg, self.pitch_deg, self.roll_deg)
    }

    pub fn origin(&self) -> Vector3<f64> {
        Vector3::new(self.position[0], self.position[1], self.elevation)
    }

    pub fn to_world(&self, body: &Vector3<f64>) -> Vector3<f64> {
        self.origin() + self.rotation() * body
    }

    pub fn forward(&self) -> Vector3<f64> {
        self.rotation() * Vector3::x()
    }
}

pub fn body_rotation(heading_deg: f64, pitch_deg: f64, roll_deg: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), heading_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::y_axis(), -pitch_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), roll_deg.to_radians())
}

/// Rear-body contact corners in the body frame.
pub fn rear_corners(config: &ChassisConfig) -> [Vector3<f64>; 4] {
    let (x0, x1, hw) = (-config.length / 2.0, config.hinge_x, config.width / 2.0);
    [
        Vector3::new(x0, -hw, 0.0),
        Vector3::new(x0, hw, 0.0),
        Vector3::new(x1, -hw, 0.0),
        Vector3::new(x1, hw, 0.0),
    ]
}

/// Points `reach` metres from the hinge along both flipper tracks with the
/// flipper raised by `alpha_deg`, in the body frame.
pub fn flipper_points(config: &ChassisConfig, alpha_deg: f64, reach: f64) -> [Vector3<f64>; 2] {
    let a = alpha_deg.to_radians();
    let hw = config.width / 2.0;
    let (dx, dz) = (reach * a.cos(), reach * a.sin());
    [
        Vector3::new(config.hinge_x + dx, -hw, dz),
        Vector3::new(config.hinge_x + dx, hw, dz),
    ]
}

/// The flipper's far contact edge (both track tips) at angle `alpha_deg`.
pub fn front_contact_edge(config: &ChassisConfig, alpha_deg: f64) -> [Vector3<f64>; 2] {
    flipper_points(config, alpha_deg, config.flipper_length())
}

struct Plane {
    a: f64,
    gx: f64,
    gy: f64,
}

impl Plane {
    fn z(&self, x: f64, y: f64) -> f64 {
        self.a + self.gx * x + self.gy * y
    }
}

/// Least-squares `z = a + gx x + gy y`.
fn fit_plane(pts: &[Vector3<f64>]) -> Option<Plane> {
    let n = pts.len() as f64;
    let mean = pts.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
        sxz += d.x * d.z;
        syz += d.y * d.z;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() < 1e-18 {
        return None;
    }
    let gx = (sxz * syy - syz * sxy) / det;
    let gy = (syz * sxx - sxz * sxy) / det;
    Some(Plane { a: mean.z - gx * mean.x - gy * mean.y, gx, gy })
}

/// Pitch, roll and elevation of a body resting on `plane` at `state`'s
/// position and heading.
fn attitude_on(plane: &Plane, state: &mut ChassisState) {
    let psi = state.heading_deg.to_radians();
    let u = Vector3::new(psi.cos(), psi.sin(), 0.0);
    let rise = plane.gx * u.x + plane.gy * u.y;
    let ex = Vector3::new(u.x, u.y, rise).normalize();
    let n = Vector3::new(-plane.gx, -plane.gy, 1.0).normalize();
    let ey = n.cross(&ex).normalize();
    let pitch = rise.atan();
    state.pitch_deg = pitch.to_degrees();
    state.roll_deg = (ey.z / pitch.cos()).clamp(-1.0, 1.0).asin().to_degrees();
    state.elevation = plane.z(state.position[0], state.position[1]);
}

fn sample_world(
    state: &ChassisState,
    terrain: &TerrainGrid,
    body: &Vector3<f64>,
) -> std::result::Result<Vector3<f64>, TerrainError> {
    let w = state.to_world(body);
    Ok(Vector3::new(w.x, w.y, terrain.height_at(w.x, w.y)?))
}

/// Settles the chassis onto the terrain.
///
/// The base plane is a least-squares fit of terrain heights under the four
/// rear corners (and the two flipper tips when they sit on that plane). The
/// flipper then rises to clear the highest terrain point under it, never
/// below the operator-set rest angle and never above `flipper_max`.
pub fn passive_conform(state: &ChassisState, config: &ChassisConfig, terrain: &TerrainGrid) -> Result<ChassisState> {
    let mut out = *state;
    let corners = rear_corners(config);
    let tips = front_contact_edge(config, 0.0);
    let tol = config.contact_tolerance;

    for _ in 0..4 {
        let pts = corners
            .iter()
            .map(|c| sample_world(&out, terrain, c))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let plane = fit_plane(&pts).ok_or(ChassisError::SingularSupport { points: pts.len() })?;
        attitude_on(&plane, &mut out);
    }

    // Terrain under the in-line flipper, expressed in the body frame.
    let flen = config.flipper_length();
    let samples = ((flen / (terrain.cell_size() / 4.0)).ceil() as usize).max(8);
    let mut inline_ok = true;
    let mut demand = f64::NEG_INFINITY;
    let mut demand_reach = flen;
    let rot_t = out.rotation().transpose();
    for tip in &tips {
        for k in 1..=samples {
            let s = flen * k as f64 / samples as f64;
            let body = Vector3::new(config.hinge_x + s, tip.y, 0.0);
            let q = sample_world(&out, terrain, &body)?;
            let local = rot_t * (q - out.origin());
            if local.z.abs() > tol {
                inline_ok = false;
            }
            let dx = local.x - config.hinge_x;
            if dx > 1e-9 {
                let ang = local.z.atan2(dx);
                if ang > demand {
                    demand = ang;
                    demand_reach = dx.hypot(local.z).min(flen);
                }
            }
        }
    }

    if inline_ok {
        let mut pts = corners
            .iter()
            .chain(tips.iter())
            .map(|c| sample_world(&out, terrain, c))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(plane) = fit_plane(&pts) {
            attitude_on(&plane, &mut out);
        }
        pts.clear();
    }

    let demand_deg = demand.to_degrees();
    let rest = out.flipper_rest_deg.clamp(0.0, config.flipper_max_deg);
    if rest <= 1e-12 && inline_ok {
        out.flipper_angle_deg = 0.0;
        out.flipper_contact = FlipperContact::InLine;
    } else if demand_deg > rest + 1e-9 {
        out.flipper_angle_deg = demand_deg.min(config.flipper_max_deg);
        out.flipper_contact = FlipperContact::Raised { reach: demand_reach };
    } else {
        out.flipper_angle_deg = rest;
        out.flipper_contact = FlipperContact::Clear;
    }
    Ok(out)
}

/// Body-frame positions and masses of the lumped chassis parts.
///
/// The two track bodies and the remaining hardware are placed so that, at the
/// design pose, the whole robot's centre of mass is `(0, 0, com_height)`.
fn chassis_masses(config: &ChassisConfig, arm_config: &ArmConfig, alpha_deg: f64) -> [(f64, Vector3<f64>); 3] {
    let m_total = config.total_mass();
    let m_body = m_total - config.mass_arm;
    let arm_home = arm::arm_com(arm_config, &[0.0; arm::JOINTS]);
    let design = Vector3::new(0.0, 0.0, config.com_height);
    let body_com = (design * m_total - arm_home * config.mass_arm) / m_body;

    let m_front = config.front_fraction * config.mass_tracks;
    let m_rear = config.mass_tracks - m_front;
    let half = config.length / 2.0;
    let front0 = body_com + Vector3::new(half * (1.0 - config.front_fraction), 0.0, 0.0);
    let rear = body_com - Vector3::new(half * config.front_fraction, 0.0, 0.0);

    let hinge = Vector3::new(config.hinge_x, front0.y, 0.0);
    let swing = Rotation3::from_axis_angle(&Vector3::y_axis(), -alpha_deg.to_radians());
    let front = hinge + swing * (front0 - hinge);
    [(m_front, front), (m_rear, rear), (config.mass_others, body_com)]
}

/// Whole-robot centre of mass in the body frame, including arm links and a
/// payload held at the gripper.
pub fn compute_com(
    state: &ChassisState,
    config: &ChassisConfig,
    arm_config: &ArmConfig,
    joints: &JointState,
) -> Vector3<f64> {
    let mut sum = Vector3::zeros();
    let mut mass = 0.0;
    for (m, p) in chassis_masses(config, arm_config, state.flipper_angle_deg) {
        sum += p * m;
        mass += m;
    }
    let frames = arm::arm_frames(arm_config, &joints.angles);
    for (m, p) in arm::mass_points(arm_config, &joints.angles) {
        sum += p * m;
        mass += m;
    }
    if state.payload_mass > 0.0 {
        sum += frames.gripper.coords * state.payload_mass;
        mass += state.payload_mass;
    }
    sum / mass
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Centre of mass, world frame.
    pub com: [f64; 3],
    /// Vertical projection of the centre of mass.
    pub zmp: Point2,
    /// Counter-clockwise convex hull of the contact points, world XY.
    pub support_polygon: Vec<Point2>,
    /// Signed distance from `zmp` to the polygon boundary, positive inside.
    pub margin: f64,
    pub tipped: bool,
}

/// Contact points of the tracks in the body frame for a given flipper contact.
pub fn contact_points(state: &ChassisState, config: &ChassisConfig, contact: FlipperContact) -> Vec<Vector3<f64>> {
    let mut pts: Vec<Vector3<f64>> = rear_corners(config).to_vec();
    match contact {
        FlipperContact::InLine => pts.extend(front_contact_edge(config, 0.0)),
        FlipperContact::Raised { reach } => pts.extend(flipper_points(config, state.flipper_angle_deg, reach)),
        FlipperContact::Clear => {}
    }
    pts
}

/// Stability for an explicit flipper contact; see [`compute_stability`].
pub fn stability_with_contact(
    state: &ChassisState,
    config: &ChassisConfig,
    arm_config: &ArmConfig,
    joints: &JointState,
    contact: FlipperContact,
) -> Result<StabilityReport> {
    let rot = state.rotation();
    let origin = state.origin();
    let world: Vec<Point2> = contact_points(state, config, contact)
        .iter()
        .map(|p| {
            let w = origin + rot * p;
            [w.x, w.y]
        })
        .collect();
    let hull = geometry::convex_hull(&world);
    if hull.len() < 2 {
        return Err(ChassisError::SingularSupport { points: hull.len() });
    }
    let com = origin + rot * compute_com(state, config, arm_config, joints);
    let zmp = [com.x, com.y];
    // a line support (body standing on end) cannot hold the load anywhere
    // off the line, and only marginally on it
    let degenerate = hull.len() < 3 || geometry::polygon_area(&hull) < 1e-12;
    let margin = if degenerate {
        -geometry::signed_distance(zmp, &hull).abs()
    } else {
        geometry::signed_distance(zmp, &hull)
    };
    let tipped = margin < 0.0 || degenerate;
    Ok(StabilityReport { com: [com.x, com.y, com.z], zmp, support_polygon: hull, margin, tipped })
}

/// Quasi-static stability of a conformed state. The support polygon is the
/// rear footprint, extended by the flipper contact when the flipper touches
/// the ground.
pub fn compute_stability(
    state: &ChassisState,
    config: &ChassisConfig,
    arm_config: &ArmConfig,
    joints: &JointState,
    terrain: &TerrainGrid,
) -> Result<StabilityReport> {
    for p in contact_points(state, config, state.flipper_contact) {
        let w = state.to_world(&p);
        terrain.height_at(w.x, w.y)?;
    }
    stability_with_contact(state, config, arm_config, joints, state.flipper_contact)
}

/// Climb gate: slope within the rated climb angle (and within what the
/// flipper can reach) and payload within capacity. Both limits inclusive.
pub fn check_climbable(slope_deg: f64, flipper_max_deg: f64, payload_kg: f64, config: &ChassisConfig) -> bool {
    slope_deg <= config.climb_max_deg.min(flipper_max_deg) && payload_kg <= config.payload_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TipAxis {
    Pitch,
    Roll,
}

/// Static tip-over angle with the design centre of mass, degrees.
pub fn tip_over_angle(config: &ChassisConfig, axis: TipAxis) -> f64 {
    let half = match axis {
        TipAxis::Pitch => config.length / 2.0,
        TipAxis::Roll => config.width / 2.0,
    };
    half.atan2(config.com_height).to_degrees()
}

/// Skid-steer kinematic update followed by re-conformation.
///
/// On a bounds error the caller keeps the previous state; the robot halts at
/// the terrain edge.
pub fn step_locomotion(
    state: &ChassisState,
    setpoints: &ActuatorSetpoints,
    config: &ChassisConfig,
    terrain: &TerrainGrid,
    dt: f64,
) -> Result<ChassisState> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(ChassisError::InvalidTimestep(dt));
    }
    let mut next = *state;
    let vl = setpoints.track_left.clamp(-config.v_max, config.v_max);
    let vr = setpoints.track_right.clamp(-config.v_max, config.v_max);
    next.track_speed_left = vl;
    next.track_speed_right = vr;
    next.flipper_rest_deg =
        (state.flipper_rest_deg + setpoints.flipper_rate * dt).clamp(0.0, config.flipper_max_deg);

    let v = 0.5 * (vl + vr);
    let omega = (vr - vl) / config.width;
    let psi = state.heading_deg.to_radians();
    let ground = v * dt * state.pitch_deg.to_radians().cos();
    next.position[0] += ground * psi.cos();
    next.position[1] += ground * psi.sin();
    if omega != 0.0 {
        next.heading_deg = (state.heading_deg + (omega * dt).to_degrees()).rem_euclid(360.0);
    }
    passive_conform(&next, config, terrain)
}
