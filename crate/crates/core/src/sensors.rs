//! Simulated sensor suite: sonar, temperature/humidity, gas and compass.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chassis::ChassisState;
use crate::terrain::TerrainGrid;

pub const ULTRASONIC_MAX_RANGE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Heat,
    Gas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardSource {
    pub position: [f64; 3],
    pub kind: HazardKind,
    pub intensity: f64,
    pub sigma: f64,
}

impl HazardSource {
    pub fn contribution(&self, p: &Vector3<f64>) -> f64 {
        let d2 = (p - Vector3::from(self.position)).norm_squared();
        self.intensity * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Per-channel Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorNoise {
    pub temperature: f64,
    pub humidity: f64,
    pub gas: f64,
    pub ultrasonic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentField {
    pub ambient_temperature: f64,
    pub ambient_humidity: f64,
    pub ambient_gas: f64,
    pub sources: Vec<HazardSource>,
    pub declination_deg: f64,
    pub noise: Option<SensorNoise>,
}

impl Default for EnvironmentField {
    fn default() -> Self {
        Self {
            ambient_temperature: 25.0,
            ambient_humidity: 50.0,
            ambient_gas: 0.0,
            sources: Vec::new(),
            declination_deg: 0.0,
            noise: None,
        }
    }
}

impl EnvironmentField {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=100.0).contains(&self.ambient_humidity) {
            return Err(format!("ambient humidity {} outside [0, 100]", self.ambient_humidity));
        }
        if !(self.ambient_gas >= 0.0) {
            return Err("ambient gas must be >= 0".into());
        }
        for s in &self.sources {
            if !(s.sigma > 0.0) || !(s.intensity >= 0.0) {
                return Err(format!("hazard source needs sigma > 0 and intensity >= 0, got {s:?}"));
            }
        }
        if let Some(n) = &self.noise {
            if [n.temperature, n.humidity, n.gas, n.ultrasonic].iter().any(|v| !(*v >= 0.0)) {
                return Err("noise deviations must be >= 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentReading {
    pub temperature_c: f64,
    pub humidity_pct: f64,
    pub gas_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub tick: u64,
    /// `None` when nothing is within range.
    pub ultrasonic_m: Option<f64>,
    pub temperature_c: f64,
    pub humidity_pct: f64,
    pub gas_ppm: f64,
    pub heading_deg: f64,
}

/// Sonar mount in the body frame. `pitch_deg` tilts the beam nose-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorMount {
    pub offset: [f64; 3],
    pub pitch_deg: f64,
    pub max_range: f64,
}

impl Default for SensorMount {
    fn default() -> Self {
        Self { offset: [0.225, 0.0, 0.10], pitch_deg: 0.0, max_range: ULTRASONIC_MAX_RANGE }
    }
}

pub fn sample_ultrasonic(state: &ChassisState, terrain: &TerrainGrid, mount: &SensorMount) -> Option<f64> {
    let origin = state.to_world(&Vector3::from(mount.offset));
    let tilt = Rotation3::from_axis_angle(&Vector3::y_axis(), -mount.pitch_deg.to_radians());
    let dir = state.rotation() * tilt * Vector3::x();
    terrain
        .raycast([origin.x, origin.y, origin.z], [dir.x, dir.y, dir.z], mount.max_range)
        .filter(|&d| d > 0.0)
}

/// Noise-free field values at the chassis origin.
pub fn sample_environment(state: &ChassisState, field: &EnvironmentField) -> EnvironmentReading {
    let p = state.origin();
    let sum = |kind| -> f64 {
        field.sources.iter().filter(|s| s.kind == kind).map(|s| s.contribution(&p)).sum()
    };
    EnvironmentReading {
        temperature_c: field.ambient_temperature + sum(HazardKind::Heat),
        humidity_pct: field.ambient_humidity.clamp(0.0, 100.0),
        gas_ppm: field.ambient_gas + sum(HazardKind::Gas),
    }
}

pub fn sample_compass(heading_deg: f64, declination_deg: f64) -> f64 {
    let h = (heading_deg + declination_deg).rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Samples every sensor. `rng` is only drawn from when the field has noise
/// enabled, so noise-free runs do not depend on it.
pub fn sample_all<R: Rng>(
    tick: u64,
    state: &ChassisState,
    terrain: &TerrainGrid,
    field: &EnvironmentField,
    mount: &SensorMount,
    rng: &mut R,
) -> SensorFrame {
    let env = sample_environment(state, field);
    let mut frame = SensorFrame {
        tick,
        ultrasonic_m: sample_ultrasonic(state, terrain, mount),
        temperature_c: env.temperature_c,
        humidity_pct: env.humidity_pct,
        gas_ppm: env.gas_ppm,
        heading_deg: sample_compass(state.heading_deg, field.declination_deg),
    };
    if let Some(n) = &field.noise {
        let mut jitter = |sd: f64| if sd > 0.0 { Normal::new(0.0, sd).unwrap().sample(rng) } else { 0.0 };
        frame.temperature_c += jitter(n.temperature);
        frame.humidity_pct = (frame.humidity_pct + jitter(n.humidity)).clamp(0.0, 100.0);
        frame.gas_ppm = (frame.gas_ppm + jitter(n.gas)).max(0.0);
        let e = jitter(n.ultrasonic);
        frame.ultrasonic_m = frame.ultrasonic_m.map(|d| (d + e).clamp(1e-6, mount.max_range));
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn wall_at(x_face: f64) -> TerrainGrid {
        TerrainGrid::from_fn(0.01, [0.0, 0.0], 101, 801, |x, _| if x >= x_face { 2.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn sonar_hits_wall() {
        let state = ChassisState::new(1.0, 0.5, 0.0);
        // mount at x = 1.225; wall face 1.0 m further on
        let d = sample_ultrasonic(&state, &wall_at(2.225), &SensorMount::default()).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 0.005);
    }

    #[test]
    fn sonar_out_of_range() {
        let state = ChassisState::new(1.0, 0.5, 0.0);
        let open = TerrainGrid::flat(0.05, [0.0, 0.0], 21, 141, 0.0).unwrap();
        assert_eq!(sample_ultrasonic(&state, &open, &SensorMount::default()), None);
        let far = TerrainGrid::from_fn(0.05, [0.0, 0.0], 21, 181, |x, _| if x >= 6.3 { 2.0 } else { 0.0 }).unwrap();
        assert_eq!(sample_ultrasonic(&state, &far, &SensorMount::default()), None);
    }

    #[test]
    fn environment_fields() {
        let state = ChassisState::new(1.0, 2.0, 0.0);
        let mut field = EnvironmentField { ambient_gas: 5.0, ..Default::default() };
        let r = sample_environment(&state, &field);
        assert_eq!((r.temperature_c, r.humidity_pct, r.gas_ppm), (25.0, 50.0, 5.0));
        field.sources.push(HazardSource { position: [1.0, 2.0, 0.0], kind: HazardKind::Gas, intensity: 400.0, sigma: 0.5 });
        assert_eq!(sample_environment(&state, &field).gas_ppm, 405.0);
        field.sources[0].position = [1.5, 2.0, 0.0];
        assert_abs_diff_eq!(sample_environment(&state, &field).gas_ppm - 5.0, 400.0 * 0.606_530_659_712_633_4, epsilon = 1e-9);
        assert_eq!(sample_environment(&state, &field).temperature_c, 25.0);
    }

    #[test]
    fn compass_wraps() {
        assert_eq!(sample_compass(0.0, 0.0), 0.0);
        assert_eq!(sample_compass(350.0, 20.0), 10.0);
        assert_eq!(sample_compass(90.0, -90.0), 0.0);
        assert_eq!(sample_compass(-1e-20, 0.0), 0.0);
    }

    #[test]
    fn validation() {
        let mut f = EnvironmentField::default();
        assert!(f.validate().is_ok());
        f.ambient_humidity = 101.0;
        assert!(f.validate().is_err());
        f.ambient_humidity = 40.0;
        f.sources.push(HazardSource { position: [0.0; 3], kind: HazardKind::Heat, intensity: 1.0, sigma: 0.0 });
        assert!(f.validate().is_err());
    }
}
