//! C ABI over the simulator core.
//!
//! Every function returns an `i32` status: `RS_OK` or a negative error code.
//! On error, `rs_last_error` copies a message describing the failure on the
//! calling thread. Terrain and world objects are opaque handles owned by the
//! caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rescue_sim::arm::{self, ArmConfig, ArmError, EndEffectorPose, JointState, JOINTS};
use rescue_sim::chassis::{self, ChassisConfig, TipAxis};
use rescue_sim::detection::{self, ConfusionCounts};
use rescue_sim::protocol::{encode, CommandMessage, Heartbeat, Message};
use rescue_sim::scenario::Scenario;
use rescue_sim::sim::{FailReason, Input, MissionStatus, SimError, World};
use rescue_sim::terrain::TerrainGrid;

use nalgebra::{Matrix3, Vector3};

pub const RS_OK: i32 = 0;
/// A required pointer argument was null.
pub const RS_ERR_NULL: i32 = -1;
/// An argument was out of range or not valid UTF-8.
pub const RS_ERR_INVALID_ARG: i32 = -2;
/// Input text or file could not be read or parsed.
pub const RS_ERR_PARSE: i32 = -3;
/// Inverse kinematics did not converge.
pub const RS_ERR_UNREACHABLE: i32 = -4;
/// A query fell outside the terrain.
pub const RS_ERR_OUT_OF_BOUNDS: i32 = -5;
/// A metric had a zero denominator.
pub const RS_ERR_UNDEFINED: i32 = -6;
/// The caller's buffer is too small; the required size is returned via `len`.
pub const RS_ERR_BUFFER: i32 = -7;
/// A Rust panic was caught at the boundary.
pub const RS_ERR_PANIC: i32 = -99;

pub const RS_STATUS_RUNNING: i32 = 0;
pub const RS_STATUS_SUCCESS: i32 = 1;
pub const RS_STATUS_FAILED: i32 = 2;

pub const RS_FAIL_NONE: i32 = 0;
pub const RS_FAIL_TIP_OVER: i32 = 1;
pub const RS_FAIL_CLIMB_LIMIT: i32 = 2;
pub const RS_FAIL_OUT_OF_BOUNDS: i32 = 3;
pub const RS_FAIL_GOALS_UNMET: i32 = 4;

pub const RS_AXIS_PITCH: i32 = 0;
pub const RS_AXIS_ROLL: i32 = 1;

/// Heightmap handle.
pub struct RsTerrain(TerrainGrid);

/// Simulation handle.
pub struct RsWorld(World);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RsMetrics {
    pub recall: f64,
    pub precision: f64,
    pub map: f64,
    pub f1: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RsWorldState {
    pub tick: u64,
    /// One of the `RS_STATUS_*` values.
    pub status: i32,
    /// One of the `RS_FAIL_*` values.
    pub fail_reason: i32,
    /// Tick at which the status became terminal, 0 while running.
    pub status_tick: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub stability_margin_m: f64,
    pub safe_stop: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

type FfiResult<T> = Result<T, (i32, String)>;

/// Runs `f`, recording any error or panic for `rs_last_error`.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RS_OK,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside rescue-sim");
            RS_ERR_PANIC
        }
    }
}

fn null(name: &str) -> (i32, String) {
    (RS_ERR_NULL, format!("{name} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (RS_ERR_INVALID_ARG, format!("{name} is not UTF-8")))
}

unsafe fn read_array<const N: usize>(p: *const f64, name: &str) -> FfiResult<[f64; N]> {
    if p.is_null() {
        return Err(null(name));
    }
    let mut out = [0.0; N];
    out.copy_from_slice(std::slice::from_raw_parts(p, N));
    Ok(out)
}

unsafe fn write_out<T>(p: *mut T, v: T, name: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

fn sim_error(e: SimError) -> (i32, String) {
    let code = match e {
        SimError::Init(_) => RS_ERR_INVALID_ARG,
        _ => RS_ERR_PARSE,
    };
    (code, e.to_string())
}

fn arm_error(e: ArmError) -> (i32, String) {
    let code = match e {
        ArmError::Unreachable { .. } => RS_ERR_UNREACHABLE,
        _ => RS_ERR_INVALID_ARG,
    };
    (code, e.to_string())
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string. On entry `*len` is the buffer size; on return it is
/// the message length without the terminator. Returns `RS_ERR_BUFFER` when the
/// buffer is too small.
///
/// # Safety
/// `buf` must be valid for `*len` bytes and `len` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_last_error(buf: *mut c_char, len: *mut usize) -> i32 {
    if len.is_null() {
        return RS_ERR_NULL;
    }
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    write_c_string(&msg, buf, len)
}

unsafe fn write_c_string(s: &str, buf: *mut c_char, len: *mut usize) -> i32 {
    let cap = *len;
    *len = s.len();
    if buf.is_null() || cap < s.len() + 1 {
        return RS_ERR_BUFFER;
    }
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
    *buf.add(s.len()) = 0;
    RS_OK
}

/// Parses a terrain file's text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_terrain_from_text(text: *const c_char, out: *mut *mut RsTerrain) -> i32 {
    guard(|| {
        let text = read_str(text, "text")?;
        let grid = TerrainGrid::from_text(text).map_err(|e| (RS_ERR_PARSE, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(RsTerrain(grid))), "out")
    })
}

/// Bilinear height at `(x, y)`.
///
/// # Safety
/// `terrain` must come from `rs_terrain_from_text`; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_terrain_height_at(terrain: *const RsTerrain, x: f64, y: f64, out: *mut f64) -> i32 {
    guard(|| {
        let t = terrain.as_ref().ok_or_else(|| null("terrain"))?;
        let h = t.0.height_at(x, y).map_err(|e| (RS_ERR_OUT_OF_BOUNDS, e.to_string()))?;
        write_out(out, h, "out")
    })
}

/// Slope in degrees at `(x, y)`.
///
/// # Safety
/// `terrain` must come from `rs_terrain_from_text`; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_terrain_slope_at(terrain: *const RsTerrain, x: f64, y: f64, out: *mut f64) -> i32 {
    guard(|| {
        let t = terrain.as_ref().ok_or_else(|| null("terrain"))?;
        let s = t.0.slope_at(x, y).map_err(|e| (RS_ERR_OUT_OF_BOUNDS, e.to_string()))?;
        write_out(out, s, "out")
    })
}

/// # Safety
/// `terrain` must come from `rs_terrain_from_text` and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rs_terrain_free(terrain: *mut RsTerrain) {
    if !terrain.is_null() {
        drop(Box::from_raw(terrain));
    }
}

/// Climb gate for the default chassis.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_check_climbable(slope_deg: f64, flipper_max_deg: f64, payload_kg: f64, out: *mut bool) -> i32 {
    guard(|| {
        let ok = chassis::check_climbable(slope_deg, flipper_max_deg, payload_kg, &ChassisConfig::default());
        write_out(out, ok, "out")
    })
}

/// Static tip-over angle of the default chassis about `axis`
/// (`RS_AXIS_PITCH` or `RS_AXIS_ROLL`), degrees.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_tip_over_angle(axis: i32, out: *mut f64) -> i32 {
    guard(|| {
        let axis = match axis {
            RS_AXIS_PITCH => TipAxis::Pitch,
            RS_AXIS_ROLL => TipAxis::Roll,
            other => return Err((RS_ERR_INVALID_ARG, format!("unknown axis {other}"))),
        };
        write_out(out, chassis::tip_over_angle(&ChassisConfig::default(), axis), "out")
    })
}

/// Gripper pose of the default arm for joint angles in degrees. Writes the
/// position (3 values) and the row-major rotation (9 values).
///
/// # Safety
/// `angles_deg` must point to 6 doubles, `position` to 3, `rotation` to 9.
#[no_mangle]
pub unsafe extern "C" fn rs_arm_forward(angles_deg: *const f64, position: *mut f64, rotation: *mut f64) -> i32 {
    guard(|| {
        let angles = read_array::<JOINTS>(angles_deg, "angles_deg")?;
        if position.is_null() || rotation.is_null() {
            return Err(null("position or rotation"));
        }
        let pose = arm::forward_kinematics(&ArmConfig::default(), &JointState::from_angles(angles)).map_err(arm_error)?;
        write_pose(&pose, position, rotation);
        Ok(())
    })
}

unsafe fn write_pose(pose: &EndEffectorPose, position: *mut f64, rotation: *mut f64) {
    let p = std::slice::from_raw_parts_mut(position, 3);
    p.copy_from_slice(pose.position.as_slice());
    let r = std::slice::from_raw_parts_mut(rotation, 9);
    for i in 0..3 {
        for j in 0..3 {
            r[i * 3 + j] = pose.orientation[(i, j)];
        }
    }
}

/// Joint angles in degrees reaching the given gripper pose, starting from
/// `seed_deg`. Returns `RS_ERR_UNREACHABLE` when no solution converges.
///
/// # Safety
/// `position` must point to 3 doubles, `rotation` to 9 (row-major),
/// `seed_deg` and `out_deg` to 6.
#[no_mangle]
pub unsafe extern "C" fn rs_arm_inverse(
    position: *const f64,
    rotation: *const f64,
    seed_deg: *const f64,
    out_deg: *mut f64,
) -> i32 {
    guard(|| {
        let p = read_array::<3>(position, "position")?;
        let r = read_array::<9>(rotation, "rotation")?;
        let seed = read_array::<JOINTS>(seed_deg, "seed_deg")?;
        if out_deg.is_null() {
            return Err(null("out_deg"));
        }
        let target = EndEffectorPose { position: Vector3::from(p), orientation: Matrix3::from_row_slice(&r) };
        let sol = arm::inverse_kinematics(&ArmConfig::default(), &target, &JointState::from_angles(seed))
            .map_err(arm_error)?;
        std::slice::from_raw_parts_mut(out_deg, JOINTS).copy_from_slice(&sol.angles);
        Ok(())
    })
}

/// Detection metrics from confusion counts.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_metrics(tp: u64, fp: u64, fn_: u64, tn: u64, out: *mut RsMetrics) -> i32 {
    guard(|| {
        let c = ConfusionCounts::new(tp, fp, fn_, tn);
        let undefined = |e: detection::DetectionError| (RS_ERR_UNDEFINED, e.to_string());
        let m = RsMetrics {
            recall: detection::recall(&c).map_err(undefined)?,
            precision: detection::precision(&c).map_err(undefined)?,
            map: detection::map_metric(&c).map_err(undefined)?,
            f1: detection::f1(&c).map_err(undefined)?,
        };
        write_out(out, m, "out")
    })
}

/// Loads a scenario file and builds a world from it.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_world_load(path: *const c_char, out: *mut *mut RsWorld) -> i32 {
    guard(|| {
        let path = read_str(path, "path")?;
        let sc = Scenario::load(Path::new(path)).map_err(|e| sim_error(e.into()))?;
        let world = World::new(sc).map_err(sim_error)?;
        write_out(out, Box::into_raw(Box::new(RsWorld(world))), "out")
    })
}

/// Advances one tick applying an operator command (6 channels in [-1, 1]).
///
/// # Safety
/// `world` must come from `rs_world_load`; `channels` must point to 6 doubles.
#[no_mangle]
pub unsafe extern "C" fn rs_world_step_command(
    world: *mut RsWorld,
    seq: u64,
    timestamp_ms: u64,
    channels: *const f64,
) -> i32 {
    guard(|| {
        let w = world.as_mut().ok_or_else(|| null("world"))?;
        let channels = read_array::<6>(channels, "channels")?;
        if channels.iter().any(|c| !(-1.0..=1.0).contains(c)) {
            return Err((RS_ERR_INVALID_ARG, "channels must lie in [-1, 1]".into()));
        }
        w.0.step(Some(Input::Command(CommandMessage { seq, timestamp_ms, channels })));
        Ok(())
    })
}

/// Advances one tick with a heartbeat (`heartbeat != 0`) or no input at all.
///
/// # Safety
/// `world` must come from `rs_world_load`.
#[no_mangle]
pub unsafe extern "C" fn rs_world_step(world: *mut RsWorld, heartbeat: i32, seq: u64, timestamp_ms: u64) -> i32 {
    guard(|| {
        let w = world.as_mut().ok_or_else(|| null("world"))?;
        let input = (heartbeat != 0).then_some(Input::Heartbeat(Heartbeat { seq, timestamp_ms }));
        w.0.step(input);
        Ok(())
    })
}

/// Marks the operator stream as finished; a running mission fails with
/// unmet goals.
///
/// # Safety
/// `world` must come from `rs_world_load`.
#[no_mangle]
pub unsafe extern "C" fn rs_world_end_of_stream(world: *mut RsWorld) -> i32 {
    guard(|| {
        world.as_mut().ok_or_else(|| null("world"))?.0.end_of_stream();
        Ok(())
    })
}

/// Snapshot of the world.
///
/// # Safety
/// `world` must come from `rs_world_load`; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rs_world_state(world: *const RsWorld, out: *mut RsWorldState) -> i32 {
    guard(|| {
        let w = &world.as_ref().ok_or_else(|| null("world"))?.0;
        let (status, fail_reason, status_tick) = match w.status {
            MissionStatus::Running => (RS_STATUS_RUNNING, RS_FAIL_NONE, 0),
            MissionStatus::Success { tick } => (RS_STATUS_SUCCESS, RS_FAIL_NONE, tick),
            MissionStatus::Failed { tick, reason } => (
                RS_STATUS_FAILED,
                match reason {
                    FailReason::TipOver => RS_FAIL_TIP_OVER,
                    FailReason::ClimbLimit => RS_FAIL_CLIMB_LIMIT,
                    FailReason::OutOfBounds => RS_FAIL_OUT_OF_BOUNDS,
                    FailReason::GoalsUnmet => RS_FAIL_GOALS_UNMET,
                },
                tick,
            ),
        };
        let t = w.telemetry();
        let s = RsWorldState {
            tick: w.tick,
            status,
            fail_reason,
            status_tick,
            x: t.chassis.x,
            y: t.chassis.y,
            z: t.chassis.z,
            heading_deg: t.chassis.heading_deg,
            pitch_deg: t.chassis.pitch_deg,
            roll_deg: t.chassis.roll_deg,
            stability_margin_m: t.stability.margin_m,
            safe_stop: w.safe_stop,
        };
        write_out(out, s, "out")
    })
}

/// Current telemetry as one protocol frame (JSON, no trailing newline).
/// Buffer handling follows `rs_last_error`.
///
/// # Safety
/// `world` must come from `rs_world_load`; `buf` valid for `*len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_world_telemetry_json(world: *const RsWorld, buf: *mut c_char, len: *mut usize) -> i32 {
    let mut code = RS_OK;
    let rc = guard(|| {
        let w = &world.as_ref().ok_or_else(|| null("world"))?.0;
        if len.is_null() {
            return Err(null("len"));
        }
        let frame = encode(&Message::Telemetry(w.telemetry())).map_err(|e| (RS_ERR_INVALID_ARG, e.to_string()))?;
        code = write_c_string(&frame, buf, len);
        Ok(())
    });
    if rc != RS_OK {
        rc
    } else {
        code
    }
}

/// # Safety
/// `world` must come from `rs_world_load` and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rs_world_free(world: *mut RsWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}
