//! Helpers shared by the property tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::VecDeque;

use proptest::prelude::*;
use rescue_sim::protocol::{
    ArmSummary, ChassisSummary, CommandMessage, Detection, GripperState, Heartbeat, Message, Reject, Role, Session,
    StabilitySummary, TelemetryMessage,
};
use rescue_sim::scenario::Scenario;
use rescue_sim::sensors::SensorFrame;
use rescue_sim::sim::{Input, TickLog, World};

pub fn num() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

pub fn channels() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-1.0f64..=1.0)
}

pub fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 _\\-\"\\\\\u{00e9}\u{4e2d}]{0,24}"
}

pub fn telemetry() -> impl Strategy<Value = TelemetryMessage> {
    let chassis = prop::array::uniform10(num()).prop_map(|v| ChassisSummary {
        x: v[0],
        y: v[1],
        z: v[2],
        heading_deg: v[3],
        pitch_deg: v[4],
        roll_deg: v[5],
        flipper_deg: v[6],
        track_left: v[7],
        track_right: v[8],
        payload_kg: v[9],
    });
    let stability = (num(), any::<bool>(), num(), num())
        .prop_map(|(m, t, x, y)| StabilitySummary { margin_m: m, tipped: t, zmp: [x, y] });
    let arm = (prop::array::uniform6(num()), 1u8..=6, any::<bool>(), prop::option::of(text())).prop_map(
        |(j, s, closed, held)| ArmSummary {
            joints_deg: j,
            selected_joint: s,
            gripper: if closed { GripperState::Closed } else { GripperState::Open },
            held,
        },
    );
    let sensors = (any::<u64>(), prop::option::of(num()), num(), num(), num(), num()).prop_map(|(t, u, a, b, c, d)| {
        SensorFrame { tick: t, ultrasonic_m: u, temperature_c: a, humidity_pct: b, gas_ppm: c, heading_deg: d }
    });
    let detections = prop::collection::vec(
        (text(), num(), num(), num())
            .prop_map(|(l, c, r, b)| Detection { label: l, confidence: c, range_m: r, bearing_deg: b }),
        0..4,
    );
    (any::<u64>(), any::<u64>(), chassis, stability, arm, sensors, detections, any::<bool>(), text()).prop_map(
        |(seq, tick, chassis, stability, arm, sensors, detections, safe_stop, mission_status)| TelemetryMessage {
            seq,
            tick,
            chassis,
            stability,
            arm,
            sensors,
            detections,
            safe_stop,
            mission_status,
        },
    )
}

pub fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        (any::<u64>(), any::<u64>(), channels())
            .prop_map(|(s, t, c)| Message::Command(CommandMessage { seq: s, timestamp_ms: t, channels: c })),
        telemetry().prop_map(Message::Telemetry),
        (any::<u64>(), any::<u64>()).prop_map(|(s, t)| Message::Heartbeat(Heartbeat { seq: s, timestamp_ms: t })),
        (any::<bool>(), num(), any::<u32>()).prop_map(|(a, r, h)| Message::Session(Session {
            role: if a { Role::Authoritative } else { Role::Observer },
            tick_rate_hz: r,
            telemetry_hz: h,
        })),
        (any::<u64>(), text()).prop_map(|(s, r)| Message::Reject(Reject { seq: s, reason: r })),
    ]
}

/// Drives forward with commands every `period_ms` until `stop_ms`, goes
/// silent until `resume_ms`, then sends one more command.
pub fn gap_log(tick_rate: f64, period_ms: u64, stop_ms: u64, resume_ms: u64) -> TickLog {
    let sc = Scenario { tick_rate, start: [1.0, 2.0, 0.0], ..Default::default() };
    let mut world = World::new(sc).unwrap();
    let mut sends: VecDeque<u64> = (0..=stop_ms).step_by(period_ms as usize).collect();
    sends.push_back(resume_ms);
    let end = ((resume_ms as f64 + 300.0) * tick_rate / 1000.0) as u64;
    let mut log = TickLog::default();
    for tick in 0..end {
        let now = (tick as f64 * 1000.0 / tick_rate).round() as u64;
        let mut input = None;
        while sends.front().is_some_and(|&t| t <= now) {
            let t = sends.pop_front().unwrap();
            let c = CommandMessage { seq: tick, timestamp_ms: t, channels: [0.4, 0.0, 0.0, 0.0, 0.0, 0.0] };
            input = Some(Input::Command(c));
        }
        log.entries.push(world.step(input));
    }
    log
}

/// Checks safe-stop against command age computed from the log alone.
pub fn check_link_rule(log: &TickLog, tick_rate: f64, timeout_ms: f64) {
    let mut last = 0u64;
    let mut engaged = false;
    for e in &log.entries {
        if e.input.is_some() {
            last = e.tick;
        }
        let age = (e.tick - last) as f64 * 1000.0 / tick_rate;
        let expected = age > timeout_ms + 1e-9;
        assert_eq!(e.telemetry.safe_stop, expected, "tick {} age {age}", e.tick);
        if expected && !engaged {
            // first stopped tick is no more than one tick past the timeout
            assert!(age <= timeout_ms + 1000.0 / tick_rate + 1e-9);
        }
        if expected {
            assert_eq!(e.telemetry.chassis.track_left, 0.0);
            assert_eq!(e.telemetry.chassis.track_right, 0.0);
        }
        engaged = expected;
    }
}
