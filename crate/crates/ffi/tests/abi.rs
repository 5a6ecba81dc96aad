use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rescue_sim::arm::{self, ArmConfig, JointState};
use rescue_sim::protocol::{decode, Message};
use rescue_sim_ffi::*;

fn scenario(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let mut len = buf.len();
    assert_eq!(unsafe { rs_last_error(buf.as_mut_ptr(), &mut len) }, RS_OK);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(rs_tip_over_angle(RS_AXIS_ROLL, ptr::null_mut()), RS_ERR_NULL);
        assert_eq!(last_error(), "out is null");
        assert_eq!(rs_world_load(ptr::null(), &mut ptr::null_mut()), RS_ERR_NULL);
        let mut s = RsWorldState::default();
        assert_eq!(rs_world_state(ptr::null(), &mut s), RS_ERR_NULL);
        assert_eq!(rs_last_error(ptr::null_mut(), ptr::null_mut()), RS_ERR_NULL);
        rs_world_free(ptr::null_mut());
        rs_terrain_free(ptr::null_mut());
    }
}

#[test]
fn error_buffer_reports_required_size() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(rs_tip_over_angle(42, &mut out), RS_ERR_INVALID_ARG);
        let mut len = 2;
        let mut small = [0 as c_char; 2];
        assert_eq!(rs_last_error(small.as_mut_ptr(), &mut len), RS_ERR_BUFFER);
        assert_eq!(len, last_error().len());
        assert_eq!(last_error(), "unknown axis 42");
    }
}

#[test]
fn chassis_limits_match_core() {
    unsafe {
        let (mut pitch, mut roll) = (0.0, 0.0);
        assert_eq!(rs_tip_over_angle(RS_AXIS_PITCH, &mut pitch), RS_OK);
        assert_eq!(rs_tip_over_angle(RS_AXIS_ROLL, &mut roll), RS_OK);
        assert!((pitch - 64.9831).abs() < 1e-3 && (roll - 52.13).abs() < 1e-2);
        let mut ok = false;
        assert_eq!(rs_check_climbable(40.0, 90.0, 10.0, &mut ok), RS_OK);
        assert!(ok);
        assert_eq!(rs_check_climbable(40.5, 90.0, 10.0, &mut ok), RS_OK);
        assert!(!ok);
    }
}

#[test]
fn metrics_and_undefined_denominators() {
    unsafe {
        let mut m = RsMetrics::default();
        assert_eq!(rs_metrics(3, 1, 2, 4, &mut m), RS_OK);
        assert_eq!((m.recall, m.precision), (0.6, 0.75));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rs_metrics(0, 0, 0, 5, &mut m), RS_ERR_UNDEFINED);
    }
}

#[test]
fn arm_roundtrip_through_the_abi() {
    let q = [10.0, 40.0, -30.0, 20.0, 35.0, -15.0];
    let (mut p, mut r) = ([0.0; 3], [0.0; 9]);
    unsafe {
        assert_eq!(rs_arm_forward(q.as_ptr(), p.as_mut_ptr(), r.as_mut_ptr()), RS_OK);
    }
    let core = arm::forward_kinematics(&ArmConfig::default(), &JointState::from_angles(q)).unwrap();
    assert_eq!(p, [core.position.x, core.position.y, core.position.z]);
    assert_eq!(r[1], core.orientation[(0, 1)], "rotation is row-major");

    let seed = ArmConfig::default().home().angles;
    let mut sol = [0.0; 6];
    unsafe {
        assert_eq!(rs_arm_inverse(p.as_ptr(), r.as_ptr(), seed.as_ptr(), sol.as_mut_ptr()), RS_OK);
    }
    let back = arm::forward_kinematics(&ArmConfig::default(), &JointState::from_angles(sol)).unwrap();
    assert!((back.position - core.position).norm() < 1e-6);

    let far = [5.0, 0.0, 0.0];
    let ident = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    unsafe {
        assert_eq!(rs_arm_inverse(far.as_ptr(), ident.as_ptr(), seed.as_ptr(), sol.as_mut_ptr()), RS_ERR_UNREACHABLE);
        let out_of_limits = [0.0, 0.0, 0.0, 0.0, 0.0, 400.0];
        assert_eq!(rs_arm_forward(out_of_limits.as_ptr(), p.as_mut_ptr(), r.as_mut_ptr()), RS_ERR_INVALID_ARG);
    }
}

#[test]
fn terrain_handle_queries() {
    let text = rescue_sim::terrain::TerrainGrid::flat(0.1, [0.0, 0.0], 11, 11, 0.25).unwrap().to_text();
    let text = CString::new(text).unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(rs_terrain_from_text(text.as_ptr(), &mut t), RS_OK);
        let mut h = 0.0;
        assert_eq!(rs_terrain_height_at(t, 0.5, 0.5, &mut h), RS_OK);
        assert_eq!(h, 0.25);
        assert_eq!(rs_terrain_slope_at(t, 0.5, 0.5, &mut h), RS_OK);
        assert_eq!(h, 0.0);
        assert_eq!(rs_terrain_height_at(t, 5.0, 0.5, &mut h), RS_ERR_OUT_OF_BOUNDS);
        rs_terrain_free(t);
        let bad = CString::new("garbage").unwrap();
        assert_eq!(rs_terrain_from_text(bad.as_ptr(), &mut t), RS_ERR_PARSE);
    }
}

#[test]
fn world_steps_and_fails_on_steep_stair() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(rs_world_load(scenario("stair_steep.scenario").as_ptr(), &mut w), RS_OK);
        let full = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut s = RsWorldState::default();
        for i in 0..2000u64 {
            assert_eq!(rs_world_step_command(w, i, i * 20, full.as_ptr()), RS_OK);
            rs_world_state(w, &mut s);
            if s.status != RS_STATUS_RUNNING {
                break;
            }
        }
        assert_eq!((s.status, s.fail_reason), (RS_STATUS_FAILED, RS_FAIL_CLIMB_LIMIT));
        let wild = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(rs_world_step_command(w, 0, 0, wild.as_ptr()), RS_ERR_INVALID_ARG);
        rs_world_free(w);

        assert_eq!(rs_world_load(scenario("stair_rescue.scenario").as_ptr(), &mut w), RS_OK);
        for i in 0..5 {
            assert_eq!(rs_world_step(w, 1, i, i * 20), RS_OK);
        }
        let mut len = 0;
        assert_eq!(rs_world_telemetry_json(w, ptr::null_mut(), &mut len), RS_ERR_BUFFER);
        let mut buf = vec![0 as c_char; len + 1];
        len = buf.len();
        assert_eq!(rs_world_telemetry_json(w, buf.as_mut_ptr(), &mut len), RS_OK);
        let json = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        let Ok(Message::Telemetry(t)) = decode(json) else { panic!("{json}") };
        assert_eq!(t.tick, 5);
        assert_eq!(rs_world_end_of_stream(w), RS_OK);
        rs_world_state(w, &mut s);
        assert_eq!((s.status, s.fail_reason), (RS_STATUS_FAILED, RS_FAIL_GOALS_UNMET));
        rs_world_free(w);

        assert_eq!(rs_world_load(c"/no/such.scenario".as_ptr(), &mut w), RS_ERR_PARSE);
        assert!(last_error().contains("/no/such.scenario"));
    }
}

/// Compiles a C program against the generated header and links the static
/// library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("librescue_sim_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).arg(scenario("stair_rescue.scenario").to_str().unwrap()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
