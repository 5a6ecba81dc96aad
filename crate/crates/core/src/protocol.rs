//! Station/robot wire protocol, v1.
//!
//! One JSON object per line. Every frame carries `"v": 1` and a `"type"`
//! discriminator: `command`, `telemetry`, `heartbeat`, `session` or `reject`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::arm::{JointState, JOINTS};
use crate::chassis::ChassisConfig;
use crate::sensors::SensorFrame;

pub const PROTOCOL_VERSION: u64 = 1;
pub const CHANNELS: usize = 6;
pub const DEFAULT_CMD_TIMEOUT_MS: u64 = 500;
pub const DEFAULT_TELEMETRY_HZ: u32 = 10;

const KNOWN_TYPES: [&str; 5] = ["command", "telemetry", "heartbeat", "session", "reject"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("malformed frame ({reason}): {line}")]
    Parse { line: String, reason: String },
    #[error("unknown frame type {kind:?}: {line}")]
    UnknownType { line: String, kind: String },
    #[error("invalid message: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandMessage {
    pub seq: u64,
    pub timestamp_ms: u64,
    pub channels: [f64; CHANNELS],
}

impl CommandMessage {
    pub fn neutral(seq: u64, timestamp_ms: u64) -> Self {
        Self { seq, timestamp_ms, channels: [0.0; CHANNELS] }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.channels.iter().enumerate() {
            if !(c.is_finite() && (-1.0..=1.0).contains(c)) {
                return Err(ProtocolError::Invalid(format!("channel {} = {} outside [-1, 1]", i + 1, c)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heartbeat {
    pub seq: u64,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Authoritative,
    Observer,
}

/// Sent by the robot on connect and whenever a connection's role changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub role: Role,
    pub tick_rate_hz: f64,
    pub telemetry_hz: u32,
}

/// Acknowledges a command that was not applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub seq: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChassisSummary {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub flipper_deg: f64,
    pub track_left: f64,
    pub track_right: f64,
    pub payload_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub margin_m: f64,
    pub tipped: bool,
    pub zmp: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GripperState {
    #[default]
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub joints_deg: [f64; JOINTS],
    /// 1-based joint currently driven by channel 5.
    pub selected_joint: u8,
    pub gripper: GripperState,
    pub held: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
    pub range_m: f64,
    pub bearing_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryMessage {
    pub seq: u64,
    pub tick: u64,
    pub chassis: ChassisSummary,
    pub stability: StabilitySummary,
    pub arm: ArmSummary,
    pub sensors: SensorFrame,
    pub detections: Vec<Detection>,
    pub safe_stop: bool,
    pub mission_status: String,
}

impl TelemetryMessage {
    fn numbers(&self) -> Vec<f64> {
        let c = &self.chassis;
        let s = &self.sensors;
        let mut v = vec![
            c.x,
            c.y,
            c.z,
            c.heading_deg,
            c.pitch_deg,
            c.roll_deg,
            c.flipper_deg,
            c.track_left,
            c.track_right,
            c.payload_kg,
            self.stability.margin_m,
            self.stability.zmp[0],
            self.stability.zmp[1],
            s.temperature_c,
            s.humidity_pct,
            s.gas_ppm,
            s.heading_deg,
        ];
        v.extend(s.ultrasonic_m);
        v.extend(self.arm.joints_deg);
        for d in &self.detections {
            v.extend([d.confidence, d.range_m, d.bearing_deg]);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Command(CommandMessage),
    Telemetry(TelemetryMessage),
    Heartbeat(Heartbeat),
    Session(Session),
    Reject(Reject),
}

impl Message {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(ProtocolError::Invalid("non-finite numeric field".into()))
            }
        };
        match self {
            Message::Command(c) => c.validate(),
            Message::Telemetry(t) => finite(&t.numbers()),
            Message::Session(s) => finite(&[s.tick_rate_hz]),
            Message::Heartbeat(_) | Message::Reject(_) => Ok(()),
        }
    }
}

/// Serializes one frame, without the trailing newline.
pub fn encode(msg: &Message) -> Result<String> {
    msg.validate()?;
    let mut value = serde_json::to_value(msg).map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    if let Value::Object(map) = &mut value {
        map.insert("v".into(), Value::from(PROTOCOL_VERSION));
    }
    Ok(value.to_string())
}

/// Serializes one frame followed by `\n`.
pub fn encode_line(msg: &Message) -> Result<String> {
    encode(msg).map(|mut s| {
        s.push('\n');
        s
    })
}

pub fn decode(line: &str) -> Result<Message> {
    let line = line.trim_end_matches(['\r', '\n']);
    let parse_err = |reason: String| ProtocolError::Parse { line: line.to_string(), reason };
    let mut value: Value = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| parse_err("frame is not an object".into()))?;
    match obj.remove("v") {
        Some(v) if v.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(v) => return Err(parse_err(format!("unsupported version {v}"))),
        None => return Err(parse_err("missing version".into())),
    }
    let kind = match obj.get("type") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(parse_err("missing type".into())),
    };
    if !KNOWN_TYPES.contains(&kind.as_str()) {
        return Err(ProtocolError::UnknownType { line: line.to_string(), kind });
    }
    let msg: Message = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
    msg.validate().map_err(|e| parse_err(e.to_string()))?;
    Ok(msg)
}

/// Decodes every non-empty line independently; a bad line does not affect
/// the ones after it.
pub fn decode_stream(text: &str) -> Vec<Result<Message>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(decode).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GripperCommand {
    Open,
    Close,
    #[default]
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorSetpoints {
    pub track_left: f64,
    pub track_right: f64,
    /// Flipper rest-angle rate, deg/s.
    pub flipper_rate: f64,
    /// 0-based joint selected by channel 4.
    pub selected_joint: usize,
    pub arm_joint_targets: [f64; JOINTS],
    pub gripper: GripperCommand,
}

impl ActuatorSetpoints {
    /// Tracks and flipper stopped, arm held where it is.
    pub fn hold(arm: &JointState, selected_joint: usize) -> Self {
        Self { selected_joint, arm_joint_targets: arm.angles, ..Default::default() }
    }
}

/// Scales for the channel mixer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixer {
    pub v_max: f64,
    pub flipper_rate_max: f64,
    /// Joint target increment per command at full channel 5 deflection, deg.
    pub arm_step_deg: f64,
}

impl Mixer {
    pub fn new(config: &ChassisConfig, arm_rate_deg_s: f64, tick_rate_hz: f64) -> Self {
        Self {
            v_max: config.v_max,
            flipper_rate_max: config.flipper_rate_max,
            arm_step_deg: arm_rate_deg_s / tick_rate_hz,
        }
    }
}

/// 0-based joint index selected by channel 4: [-1, 1] quantized to 6 bins.
pub fn select_joint(ch4: f64) -> usize {
    (((ch4.clamp(-1.0, 1.0) + 1.0) / 2.0 * (JOINTS - 1) as f64).round() as usize).min(JOINTS - 1)
}

pub fn translate(cmd: &CommandMessage, arm: &JointState, mixer: &Mixer) -> ActuatorSetpoints {
    let [throttle, steer, flipper, select, move_, grip] = cmd.channels;
    let joint = select_joint(select);
    let mut targets = arm.angles;
    targets[joint] += move_ * mixer.arm_step_deg;
    let gripper = if grip > 0.5 {
        GripperCommand::Close
    } else if grip < -0.5 {
        GripperCommand::Open
    } else {
        GripperCommand::Hold
    };
    ActuatorSetpoints {
        track_left: mixer.v_max * (throttle + steer).clamp(-1.0, 1.0),
        track_right: mixer.v_max * (throttle - steer).clamp(-1.0, 1.0),
        flipper_rate: flipper * mixer.flipper_rate_max,
        selected_joint: joint,
        arm_joint_targets: targets,
        gripper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkState {
    Normal,
    SafeStop,
}

pub fn safe_stop_check(last_command_age_ms: u64, timeout_ms: u64) -> LinkState {
    if last_command_age_ms > timeout_ms {
        LinkState::SafeStop
    } else {
        LinkState::Normal
    }
}
