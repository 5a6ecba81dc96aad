use nalgebra::{Matrix3, Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rescue_sim::arm::{
    angular_momentum, arm_com, arm_frames, forward_kinematics, inverse_kinematics, jacobian, orthonormality_error, ArmConfig,
    ArmError, JointState, JOINTS,
};

fn random_joints(cfg: &ArmConfig, rng: &mut impl Rng) -> JointState {
    let mut q = [0.0; JOINTS];
    for (a, p) in q.iter_mut().zip(&cfg.joints) {
        *a = rng.random_range(p.min_deg..=p.max_deg);
    }
    JointState::from_angles(q)
}

/// Central differences of the gripper position and orientation, per radian
/// of each joint.
fn numeric_jacobian(cfg: &ArmConfig, q: &JointState, h_deg: f64) -> [[f64; JOINTS]; 6] {
    let mut out = [[0.0; JOINTS]; 6];
    let h = h_deg.to_radians();
    for j in 0..JOINTS {
        let (mut plus, mut minus) = (*q, *q);
        plus.angles[j] += h_deg;
        minus.angles[j] -= h_deg;
        // unchecked on purpose: a probe may step just past a limit
        let fp = arm_frames(cfg, &plus.angles).pose();
        let fm = arm_frames(cfg, &minus.angles).pose();
        let dp = (fp.position - fm.position) / (2.0 * h);
        // dR/dq * R^T is the skew matrix of the angular rate
        let r0 = arm_frames(cfg, &q.angles).pose().orientation;
        let w = (fp.orientation - fm.orientation) / (2.0 * h) * r0.transpose();
        let dw = Vector3::new(w[(2, 1)] - w[(1, 2)], w[(0, 2)] - w[(2, 0)], w[(1, 0)] - w[(0, 1)]) * 0.5;
        for r in 0..3 {
            out[r][j] = dp[r];
            out[r + 3][j] = dw[r];
        }
    }
    out
}

#[test]
fn fk_rotations_are_orthonormal() {
    let cfg = ArmConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let pose = forward_kinematics(&cfg, &random_joints(&cfg, &mut rng)).unwrap();
        assert!(orthonormality_error(&pose.orientation) < 1e-9);
        assert!((pose.orientation.determinant() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let cfg = ArmConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let q = random_joints(&cfg, &mut rng);
        let jac = jacobian(&cfg, &q).unwrap();
        let num = numeric_jacobian(&cfg, &q, 1e-4);
        for r in 0..6 {
            for c in 0..JOINTS {
                assert!((jac[(r, c)] - num[r][c]).abs() < 1e-5, "({r},{c}) {} vs {}", jac[(r, c)], num[r][c]);
            }
        }
    }
}

#[test]
fn ik_recovers_fk_targets_or_errors() {
    let cfg = ArmConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut solved = 0;
    for _ in 0..1000 {
        let target = forward_kinematics(&cfg, &random_joints(&cfg, &mut rng)).unwrap();
        match inverse_kinematics(&cfg, &target, &cfg.home()) {
            Ok(sol) => {
                let got = forward_kinematics(&cfg, &sol).unwrap();
                assert!((got.position - target.position).norm() < 1e-6);
                let rot = Rotation3::from_matrix_unchecked(target.orientation * got.orientation.transpose());
                assert!(rot.angle() < 1e-4);
                solved += 1;
            }
            Err(e) => assert!(matches!(e, ArmError::Unreachable { .. }), "{e}"),
        }
    }
    assert!(solved >= 990, "solved {solved}/1000");
}

#[test]
fn ik_rejects_targets_beyond_reach() {
    let cfg = ArmConfig::default();
    let mut far = forward_kinematics(&cfg, &cfg.home()).unwrap();
    far.position = Vector3::from(cfg.base) + Vector3::new(cfg.max_reach() + 0.1, 0.0, 0.0);
    assert!(matches!(inverse_kinematics(&cfg, &far, &cfg.home()), Err(ArmError::Unreachable { .. })));
    far.orientation = Matrix3::identity() * 2.0;
    assert_eq!(inverse_kinematics(&cfg, &far, &cfg.home()), Err(ArmError::InvalidTarget));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gripper_stays_within_max_reach(seed in any::<u64>()) {
        let cfg = ArmConfig::default();
        let q = random_joints(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = forward_kinematics(&cfg, &q).unwrap().position;
        prop_assert!((p - Vector3::from(cfg.base)).norm() <= cfg.max_reach() + 1e-12);
    }

    #[test]
    fn waist_turn_rotates_about_vertical(seed in any::<u64>(), turn in -60.0f64..60.0) {
        let cfg = ArmConfig::default();
        let mut q = random_joints(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        q.angles[0] = q.angles[0].clamp(-100.0, 100.0);
        let a = forward_kinematics(&cfg, &q).unwrap().position - Vector3::from(cfg.base);
        q.angles[0] += turn;
        let b = forward_kinematics(&cfg, &q).unwrap().position - Vector3::from(cfg.base);
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), turn.to_radians()) * a;
        prop_assert!((b - expected).norm() < 1e-12);
    }

    #[test]
    fn momentum_is_linear_in_velocity(seed in any::<u64>(), k in -3.0f64..3.0) {
        let cfg = ArmConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = random_joints(&cfg, &mut rng);
        for v in q.velocities.iter_mut() {
            *v = rng.random_range(-30.0..30.0);
        }
        let base = angular_momentum(&cfg, &q);
        let mut scaled = q;
        for v in scaled.velocities.iter_mut() {
            *v *= k;
        }
        prop_assert!((angular_momentum(&cfg, &scaled) - base * k).norm() < 1e-9);
    }

    #[test]
    fn arm_com_lies_inside_reach(seed in any::<u64>()) {
        let cfg = ArmConfig::default();
        let q = random_joints(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let com = arm_com(&cfg, &q.angles);
        prop_assert!((com - Vector3::from(cfg.base)).norm() <= cfg.max_reach());
    }
}
