//! Fixed-step world simulation, mission logic, tick logs and replay.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arm::{self, JointState, JOINTS};
use crate::chassis::{
    check_climbable, compute_stability, passive_conform, step_locomotion, ChassisState, StabilityReport,
};
use crate::detection::{DetectionLog, DetectionRecord};
use crate::protocol::{
    self, safe_stop_check, translate, ActuatorSetpoints, ArmSummary, ChassisSummary, CommandMessage, Detection,
    GripperCommand, GripperState, Heartbeat, LinkState, Message, Mixer, StabilitySummary, TelemetryMessage,
};
use crate::scenario::{Goal, Scenario, ScenarioError};
use crate::sensors::{sample_all, SensorFrame, SensorMount};
use crate::terrain::{ClimbZone, TerrainGrid};

/// Gripper-to-object distance that counts as a grasp, metres.
pub const GRASP_EPSILON: f64 = 0.05;
/// Detector camera in the body frame.
pub const CAMERA_MOUNT: [f64; 3] = [0.2, 0.0, 0.3];
/// A sight line blocked closer than this to the object counts as occluded.
const OCCLUSION_MARGIN: f64 = 0.05;
const LATENCY_MEAN_MS: f64 = 50.0;
const LATENCY_SD_MS: f64 = 5.0;
/// Keeps the latency stream independent of the sensor-noise stream.
const LATENCY_STREAM: u64 = 0x6c61_7465_6e63_7921;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("command stream line {line}: {msg}")]
    Stream { line: usize, msg: String },
    #[error("tick log line {line}: {msg}")]
    Log { line: usize, msg: String },
    #[error("replay diverged at tick {tick}")]
    ReplayMismatch { tick: u64 },
    #[error("world construction failed: {0}")]
    Init(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Operator input applied at the start of a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Input {
    Command(CommandMessage),
    /// Keeps the link alive with neutral controls.
    Heartbeat(Heartbeat),
}

impl Input {
    pub fn timestamp_ms(&self) -> u64 {
        match self {
            Input::Command(c) => c.timestamp_ms,
            Input::Heartbeat(h) => h.timestamp_ms,
        }
    }

    pub fn into_message(self) -> Message {
        match self {
            Input::Command(c) => Message::Command(c),
            Input::Heartbeat(h) => Message::Heartbeat(h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailReason {
    TipOver,
    ClimbLimit,
    OutOfBounds,
    GoalsUnmet,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailReason::TipOver => "tip-over",
            FailReason::ClimbLimit => "climb-limit",
            FailReason::OutOfBounds => "out-of-bounds",
            FailReason::GoalsUnmet => "goals-unmet",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum MissionStatus {
    Running,
    Success { tick: u64 },
    Failed { tick: u64, reason: FailReason },
}

impl MissionStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, MissionStatus::Running)
    }
}

impl fmt::Display for MissionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissionStatus::Running => f.write_str("running"),
            MissionStatus::Success { tick } => write!(f, "success at tick {tick}"),
            MissionStatus::Failed { tick, reason } => write!(f, "fail({reason}) at tick {tick}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub id: String,
    pub label: String,
    /// World position, metres.
    pub position: [f64; 3],
    pub graspable: bool,
    pub mass: f64,
}

/// One line of the tick log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickEntry {
    pub tick: u64,
    pub input: Option<Input>,
    pub mission_index: usize,
    pub status: MissionStatus,
    pub fault: Option<String>,
    pub telemetry: TelemetryMessage,
}

/// Result of the stub detector for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub detections: Vec<Detection>,
    pub ground_truth: Option<String>,
    pub prediction: Option<String>,
}

/// Objects are seen when within `range` (horizontal distance from the chassis
/// origin), in the forward half-plane, and not hidden by terrain along the
/// camera sight line. Confidence falls linearly to zero at `range`.
pub fn stub_detect<'a>(
    chassis: &ChassisState,
    objects: impl IntoIterator<Item = &'a ObjectState>,
    terrain: &TerrainGrid,
    range: f64,
) -> DetectorOutput {
    let psi = chassis.heading_deg.to_radians();
    let fwd = [psi.cos(), psi.sin()];
    let cam = chassis.to_world(&Vector3::from(CAMERA_MOUNT));
    let mut in_view: Vec<(f64, &ObjectState, bool)> = Vec::new();
    for o in objects {
        let (dx, dy) = (o.position[0] - chassis.position[0], o.position[1] - chassis.position[1]);
        let dist = dx.hypot(dy);
        if dist > range || dx * fwd[0] + dy * fwd[1] <= 0.0 {
            continue;
        }
        let target = Vector3::from(o.position);
        let sight = target - cam;
        let len = sight.norm();
        let dir = sight / len;
        let visible = match terrain.raycast([cam.x, cam.y, cam.z], [dir.x, dir.y, dir.z], len) {
            Some(t) => t >= len - OCCLUSION_MARGIN,
            None => true,
        };
        in_view.push((dist, o, visible));
    }
    in_view.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    let ground_truth = in_view.first().map(|(_, o, _)| o.label.clone());
    let mut detections = Vec::new();
    for (dist, o, visible) in &in_view {
        if !visible {
            continue;
        }
        let (dx, dy) = (o.position[0] - chassis.position[0], o.position[1] - chassis.position[1]);
        let bearing = (dy.atan2(dx).to_degrees() - chassis.heading_deg + 180.0).rem_euclid(360.0) - 180.0;
        detections.push(Detection {
            label: o.label.clone(),
            confidence: (1.0 - dist / range).max(0.0),
            range_m: *dist,
            bearing_deg: bearing,
        });
    }
    let prediction = detections.first().map(|d| d.label.clone());
    DetectorOutput { detections, ground_truth, prediction }
}

pub struct World {
    scenario: Scenario,
    terrain: TerrainGrid,
    zones: Vec<ClimbZone>,
    mixer: Mixer,
    mount: SensorMount,
    dt: f64,
    pub tick: u64,
    pub chassis: ChassisState,
    pub joints: JointState,
    pub selected_joint: usize,
    pub gripper: GripperState,
    /// Index into `objects`.
    pub held: Option<usize>,
    pub objects: Vec<ObjectState>,
    pub sensors: SensorFrame,
    pub stability: StabilityReport,
    pub detections: Vec<Detection>,
    pub mission_index: usize,
    pub status: MissionStatus,
    pub safe_stop: bool,
    pub fault: Option<String>,
    active: CommandMessage,
    last_input_tick: u64,
    sensor_rng: ChaCha8Rng,
    latency_rng: ChaCha8Rng,
    detection_log: Vec<DetectionRecord>,
}

impl World {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let terrain = scenario.validate()?;
        let start = ChassisState::new(scenario.start[0], scenario.start[1], scenario.start[2]);
        let chassis = passive_conform(&start, &scenario.chassis, &terrain).map_err(|e| SimError::Init(e.to_string()))?;
        let joints = scenario.arm.home();
        let stability = compute_stability(&chassis, &scenario.chassis, &scenario.arm, &joints, &terrain)
            .map_err(|e| SimError::Init(e.to_string()))?;
        let mut objects = Vec::with_capacity(scenario.objects.len());
        for o in &scenario.objects {
            let ground = terrain.height_at(o.position[0], o.position[1]).map_err(|e| SimError::Init(e.to_string()))?;
            objects.push(ObjectState {
                id: o.id.clone(),
                label: o.label.clone(),
                position: [o.position[0], o.position[1], ground + o.position[2]],
                graspable: o.graspable,
                mass: o.mass,
            });
        }
        let mut sensor_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let mount = SensorMount::default();
        let sensors = sample_all(0, &chassis, &terrain, &scenario.environment, &mount, &mut sensor_rng);
        Ok(Self {
            zones: scenario.climb_zones(),
            mixer: Mixer::new(&scenario.chassis, scenario.arm_rate, scenario.tick_rate),
            mount,
            dt: 1.0 / scenario.tick_rate,
            tick: 0,
            chassis,
            joints,
            selected_joint: 0,
            gripper: GripperState::Open,
            held: None,
            objects,
            sensors,
            stability,
            detections: Vec::new(),
            mission_index: 0,
            status: MissionStatus::Running,
            safe_stop: false,
            fault: None,
            active: CommandMessage::neutral(0, 0),
            last_input_tick: 0,
            latency_rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ LATENCY_STREAM),
            sensor_rng,
            detection_log: Vec::new(),
            terrain,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn terrain(&self) -> &TerrainGrid {
        &self.terrain
    }

    pub fn tick_rate(&self) -> f64 {
        self.scenario.tick_rate
    }

    pub fn detection_log(&self) -> DetectionLog {
        DetectionLog { dataset: self.scenario.dataset, records: self.detection_log.clone() }
    }

    /// Gripper reach point in world coordinates.
    pub fn gripper_position(&self) -> Vector3<f64> {
        let local = arm::arm_frames(&self.scenario.arm, &self.joints.angles).gripper.coords;
        self.chassis.to_world(&local)
    }

    fn fail(&mut self, reason: FailReason) {
        if !self.status.is_terminal() {
            self.status = MissionStatus::Failed { tick: self.tick, reason };
        }
    }

    fn frozen(&self) -> bool {
        matches!(self.status, MissionStatus::Failed { .. })
    }

    fn command_age_ms(&self) -> u64 {
        ((self.tick - self.last_input_tick) as f64 * 1000.0 / self.scenario.tick_rate).round() as u64
    }

    /// Advances one tick of `1 / tick_rate` seconds.
    ///
    /// Order: link check, channel mixing, locomotion with conformation and
    /// the climb gate, arm slew, gripper, stability, sensors, detection,
    /// mission goals, telemetry. A failed mission freezes the robot; sensing
    /// and stability keep running.
    pub fn step(&mut self, input: Option<Input>) -> TickEntry {
        if let Some(inp) = &input {
            self.active = match inp {
                Input::Command(c) => c.clone(),
                Input::Heartbeat(h) => CommandMessage::neutral(h.seq, h.timestamp_ms),
            };
            self.last_input_tick = self.tick;
        }
        self.safe_stop = safe_stop_check(self.command_age_ms(), self.scenario.cmd_timeout_ms) == LinkState::SafeStop;

        let setpoints = if self.safe_stop || self.frozen() {
            ActuatorSetpoints::hold(&self.joints, self.selected_joint)
        } else {
            translate(&self.active, &self.joints, &self.mixer)
        };

        if self.frozen() {
            self.chassis.track_speed_left = 0.0;
            self.chassis.track_speed_right = 0.0;
        } else {
            self.locomote(&setpoints);
        }
        if !self.frozen() {
            self.slew_arm(&setpoints);
            self.actuate_gripper(setpoints.gripper);
        }
        if let Some(h) = self.held {
            let p = self.gripper_position();
            self.objects[h].position = [p.x, p.y, p.z];
        }

        match compute_stability(&self.chassis, &self.scenario.chassis, &self.scenario.arm, &self.joints, &self.terrain) {
            Ok(r) => {
                let tipped = r.tipped;
                self.stability = r;
                if tipped {
                    self.fail(FailReason::TipOver);
                }
            }
            Err(e) => {
                self.fault = Some(e.to_string());
                self.fail(FailReason::OutOfBounds);
            }
        }

        self.sensors = sample_all(
            self.tick,
            &self.chassis,
            &self.terrain,
            &self.scenario.environment,
            &self.mount,
            &mut self.sensor_rng,
        );

        let held = self.held;
        let visible = self.objects.iter().enumerate().filter(|(i, _)| Some(*i) != held).map(|(_, o)| o);
        let out = stub_detect(&self.chassis, visible, &self.terrain, self.scenario.detection_range);
        let latency = Normal::new(LATENCY_MEAN_MS, LATENCY_SD_MS).unwrap().sample(&mut self.latency_rng).max(1.0);
        self.detection_log.push(DetectionRecord {
            frame_id: self.tick,
            ground_truth: out.ground_truth,
            prediction: out.prediction,
            latency_ms: latency,
        });
        self.detections = out.detections;

        self.evaluate_goals();

        let entry = TickEntry {
            tick: self.tick,
            input,
            mission_index: self.mission_index,
            status: self.status,
            fault: self.fault.clone(),
            telemetry: self.telemetry(),
        };
        self.tick += 1;
        entry
    }

    fn locomote(&mut self, sp: &ActuatorSetpoints) {
        let cfg = &self.scenario.chassis;
        match step_locomotion(&self.chassis, sp, cfg, &self.terrain, self.dt) {
            Ok(next) => {
                let nose = next.to_world(&Vector3::new(cfg.length / 2.0, 0.0, 0.0));
                let blocked = self.zones.iter().any(|z| {
                    z.contains(nose.x, nose.y)
                        && !check_climbable(z.slope_deg, cfg.flipper_max_deg, next.payload_mass, cfg)
                });
                if blocked {
                    self.chassis.track_speed_left = 0.0;
                    self.chassis.track_speed_right = 0.0;
                    self.fail(FailReason::ClimbLimit);
                } else {
                    self.chassis = next;
                }
            }
            Err(e) => {
                self.chassis.track_speed_left = 0.0;
                self.chassis.track_speed_right = 0.0;
                self.fault = Some(e.to_string());
                self.fail(FailReason::OutOfBounds);
            }
        }
    }

    fn slew_arm(&mut self, sp: &ActuatorSetpoints) {
        let limit = self.scenario.arm_rate * self.dt;
        let mut next = self.joints.angles;
        for (q, t) in next.iter_mut().zip(sp.arm_joint_targets) {
            *q += (t - *q).clamp(-limit, limit);
        }
        self.scenario.arm.clamp(&mut next);
        for i in 0..JOINTS {
            self.joints.velocities[i] = (next[i] - self.joints.angles[i]) / self.dt;
        }
        self.joints.angles = next;
        self.selected_joint = sp.selected_joint;
    }

    fn actuate_gripper(&mut self, cmd: GripperCommand) {
        match cmd {
            GripperCommand::Hold => {}
            GripperCommand::Close => {
                self.gripper = GripperState::Closed;
                if self.held.is_none() {
                    let g = self.gripper_position();
                    self.held = self
                        .objects
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| o.graspable)
                        .map(|(i, o)| (i, (Vector3::from(o.position) - g).norm()))
                        .filter(|&(_, d)| d <= GRASP_EPSILON)
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(i, _)| i);
                    if let Some(h) = self.held {
                        self.chassis.payload_mass = self.objects[h].mass;
                    }
                }
            }
            GripperCommand::Open => {
                self.gripper = GripperState::Open;
                if let Some(h) = self.held.take() {
                    let o = &mut self.objects[h];
                    if let Ok(ground) = self.terrain.height_at(o.position[0], o.position[1]) {
                        o.position[2] = ground;
                    }
                    self.chassis.payload_mass = 0.0;
                }
            }
        }
    }

    fn goal_met(&self, goal: &Goal) -> bool {
        let [x, y] = self.chassis.position;
        match goal {
            Goal::Reach(r) => r.contains(x, y),
            Goal::Detect(label) => self.detections.iter().any(|d| &d.label == label),
            Goal::Grasp(id) => self.held.is_some_and(|h| &self.objects[h].id == id),
            Goal::Return { radius } => (x - self.scenario.start[0]).hypot(y - self.scenario.start[1]) <= *radius,
        }
    }

    fn evaluate_goals(&mut self) {
        if self.status.is_terminal() {
            return;
        }
        while self.mission_index < self.scenario.goals.len() && self.goal_met(&self.scenario.goals[self.mission_index]) {
            self.mission_index += 1;
        }
        if self.mission_index == self.scenario.goals.len() && !self.scenario.goals.is_empty() {
            self.status = MissionStatus::Success { tick: self.tick };
        }
    }

    /// Ends a recorded run: unfinished goals become a failure.
    pub fn end_of_stream(&mut self) {
        if !self.status.is_terminal() {
            self.status = MissionStatus::Failed { tick: self.tick.saturating_sub(1), reason: FailReason::GoalsUnmet };
        }
    }

    pub fn mission_status_text(&self) -> String {
        match self.status {
            MissionStatus::Running => match self.scenario.goals.get(self.mission_index) {
                Some(g) => format!("running {}/{}: {}", self.mission_index, self.scenario.goals.len(), g.describe()),
                None => "running".into(),
            },
            other => other.to_string(),
        }
    }

    pub fn telemetry(&self) -> TelemetryMessage {
        let c = &self.chassis;
        TelemetryMessage {
            seq: self.tick,
            tick: self.tick,
            chassis: ChassisSummary {
                x: c.position[0],
                y: c.position[1],
                z: c.elevation,
                heading_deg: c.heading_deg,
                pitch_deg: c.pitch_deg,
                roll_deg: c.roll_deg,
                flipper_deg: c.flipper_angle_deg,
                track_left: c.track_speed_left,
                track_right: c.track_speed_right,
                payload_kg: c.payload_mass,
            },
            stability: StabilitySummary {
                margin_m: self.stability.margin,
                tipped: self.stability.tipped,
                zmp: self.stability.zmp,
            },
            arm: ArmSummary {
                joints_deg: self.joints.angles,
                selected_joint: self.selected_joint as u8 + 1,
                gripper: self.gripper,
                held: self.held.map(|h| self.objects[h].id.clone()),
            },
            sensors: self.sensors.clone(),
            detections: self.detections.clone(),
            safe_stop: self.safe_stop,
            mission_status: self.mission_status_text(),
        }
    }
}

/// Append-only record of a run, one JSON line per tick after a
/// `ticklog v1` header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickLog {
    pub entries: Vec<TickEntry>,
}

pub const TICKLOG_HEADER: &str = "ticklog v1";

fn entry_line(e: &TickEntry) -> String {
    serde_json::to_string(e).expect("tick entries serialize")
}

impl TickLog {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 512);
        out.push_str(TICKLOG_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&entry_line(e));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(TICKLOG_HEADER) {
            return Err(SimError::Log { line: 1, msg: format!("expected `{TICKLOG_HEADER}`") });
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let e: TickEntry =
                serde_json::from_str(line).map_err(|err| SimError::Log { line: i + 2, msg: err.to_string() })?;
            if e.tick != i as u64 {
                return Err(SimError::Log { line: i + 2, msg: format!("expected tick {i}, found {}", e.tick) });
            }
            entries.push(e);
        }
        Ok(Self { entries })
    }
}

/// Recorded operator inputs, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandStream {
    pub inputs: Vec<Input>,
}

impl CommandStream {
    /// Parses protocol frames; only `command` and `heartbeat` are accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let mut inputs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |msg: String| SimError::Stream { line: i + 1, msg };
            match protocol::decode(line).map_err(|e| err(e.to_string()))? {
                Message::Command(c) => inputs.push(Input::Command(c)),
                Message::Heartbeat(h) => inputs.push(Input::Heartbeat(h)),
                other => return Err(err(format!("unexpected frame in command stream: {other:?}"))),
            }
        }
        Ok(Self { inputs })
    }

    pub fn to_text(&self) -> String {
        self.inputs
            .iter()
            .map(|i| protocol::encode_line(&i.clone().into_message()).expect("recorded inputs are valid"))
            .collect()
    }

    /// Tick at which an input stamped `timestamp_ms` takes effect: the first
    /// tick whose time is not earlier than the stamp.
    pub fn tick_for(timestamp_ms: u64, tick_rate: f64) -> u64 {
        (timestamp_ms as f64 * tick_rate / 1000.0).ceil() as u64
    }

    /// Inputs keyed by tick; a later input for the same tick replaces an
    /// earlier one. Also returns the last scheduled tick.
    pub fn schedule(&self, tick_rate: f64) -> (BTreeMap<u64, Input>, u64) {
        let mut by_tick = BTreeMap::new();
        for inp in &self.inputs {
            by_tick.insert(Self::tick_for(inp.timestamp_ms(), tick_rate), inp.clone());
        }
        let last = by_tick.keys().next_back().copied().unwrap_or(0);
        (by_tick, last)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: MissionStatus,
    pub log: TickLog,
    pub detections: DetectionLog,
}

/// Plays a recorded command stream until the mission ends or the stream
/// runs out.
pub fn run_mission(scenario: &Scenario, stream: &CommandStream) -> Result<RunResult> {
    let mut world = World::new(scenario.clone())?;
    let (mut schedule, last) = stream.schedule(scenario.tick_rate);
    let mut log = TickLog::default();
    for tick in 0..=last {
        log.entries.push(world.step(schedule.remove(&tick)));
        if world.status.is_terminal() {
            break;
        }
    }
    world.end_of_stream();
    Ok(RunResult { status: world.status, log, detections: world.detection_log() })
}

/// Re-runs the inputs recorded in `log_text` and checks that every line
/// comes out byte-identical.
pub fn replay(log_text: &str, scenario: &Scenario) -> Result<TickLog> {
    let recorded = TickLog::from_text(log_text)?;
    let mut world = World::new(scenario.clone())?;
    let mut out = TickLog::default();
    for (line, entry) in log_text.lines().skip(1).zip(&recorded.entries) {
        let e = world.step(entry.input.clone());
        if entry_line(&e) != line {
            return Err(SimError::ReplayMismatch { tick: entry.tick });
        }
        out.entries.push(e);
    }
    Ok(out)
}
