//! Scenario files.
//!
//! Line-oriented text starting with `scenario v1`. Each further line is a
//! keyword followed by `key=value` pairs; `#` starts a comment.
//!
//! ```text
//! scenario v1
//! seed 7
//! terrain stair rise=0.15 run=0.30 count=5
//! start x=0.6 y=1.5 heading=0
//! object id=victim label=person x=3.6 y=1.5 z=0.05 graspable=true mass=0.5
//! goal detect label=person
//! goal grasp id=victim
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::arm::{ArmConfig, JOINTS};
use crate::chassis::{passive_conform, ChassisConfig, ChassisState};
use crate::detection::DatasetId;
use crate::sensors::{EnvironmentField, HazardKind, HazardSource, SensorNoise};
use crate::terrain::{ClimbZone, ScenarioTerrain, TerrainGrid};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq)]
pub enum TerrainSpec {
    Builtin(ScenarioTerrain),
    /// Grid file in the `terrain v1` text format.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    /// x, y in world metres; z is height above the terrain surface.
    pub position: [f64; 3],
    pub graspable: bool,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// Chassis origin inside the rectangle.
    Reach(Rect),
    /// Stub detector reports this label.
    Detect(String),
    /// The gripper holds this object.
    Grasp(String),
    /// Chassis origin back within `radius` of the start position.
    Return { radius: f64 },
}

impl Goal {
    pub fn describe(&self) -> String {
        match self {
            Goal::Reach(r) => format!("reach [{}, {}]x[{}, {}]", r.x_min, r.x_max, r.y_min, r.y_max),
            Goal::Detect(l) => format!("detect {l}"),
            Goal::Grasp(id) => format!("grasp {id}"),
            Goal::Return { radius } => format!("return within {radius} m"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub tick_rate: f64,
    pub dataset: DatasetId,
    pub terrain: TerrainSpec,
    /// Extra climb zones on top of the layout's own.
    pub zones: Vec<ClimbZone>,
    /// x, y, heading in degrees.
    pub start: [f64; 3],
    pub chassis: ChassisConfig,
    pub arm: ArmConfig,
    pub environment: EnvironmentField,
    pub objects: Vec<SceneObject>,
    pub goals: Vec<Goal>,
    pub detection_range: f64,
    pub cmd_timeout_ms: u64,
    /// Joint slew limit, deg/s.
    pub arm_rate: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 0,
            tick_rate: 50.0,
            dataset: DatasetId::D1,
            terrain: TerrainSpec::Builtin(ScenarioTerrain::Flat),
            zones: Vec::new(),
            start: [1.0, 2.0, 0.0],
            chassis: ChassisConfig::default(),
            arm: ArmConfig::default(),
            environment: EnvironmentField::default(),
            objects: Vec::new(),
            goals: Vec::new(),
            detection_range: 3.0,
            cmd_timeout_ms: crate::protocol::DEFAULT_CMD_TIMEOUT_MS,
            arm_rate: 30.0,
        }
    }
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(line: usize, tokens: &[&'a str]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in tokens {
            let (k, v) = t.split_once('=').ok_or_else(|| ScenarioError::Parse {
                line,
                msg: format!("expected key=value, got {t:?}"),
            })?;
            if map.insert(k, v).is_some() {
                return Err(ScenarioError::Parse { line, msg: format!("duplicate key {k:?}") });
            }
        }
        Ok(Self { line, map })
    }

    fn err(&self, msg: String) -> ScenarioError {
        ScenarioError::Parse { line: self.line, msg }
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.map.remove(key)
    }

    fn req(&mut self, key: &str) -> Result<&'a str> {
        self.take(key).ok_or_else(|| self.err(format!("missing {key}=")))
    }

    fn num(&self, key: &str, v: &str) -> Result<f64> {
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(format!("{key}: not a number: {v:?}")))
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        self.num(key, v)
    }

    fn opt_f64(&mut self, key: &str, target: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *target = self.num(key, v)?;
        }
        Ok(())
    }

    fn opt_vec3(&mut self, key: &str, target: &mut [f64; 3]) -> Result<()> {
        if let Some(v) = self.take(key) {
            let parts: Vec<&str> = v.split(',').collect();
            if parts.len() != 3 {
                return Err(self.err(format!("{key}: expected x,y,z")));
            }
            for (t, p) in target.iter_mut().zip(parts) {
                *t = self.num(key, p)?;
            }
        }
        Ok(())
    }

    fn u64(&mut self, key: &str) -> Result<u64> {
        let v = self.req(key)?;
        v.parse().map_err(|_| self.err(format!("{key}: not an integer: {v:?}")))
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(self.err(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    fn done(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(self.err(format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }
}

fn rect(f: &mut Fields) -> Result<Rect> {
    Ok(Rect { x_min: f.f64("x_min")?, x_max: f.f64("x_max")?, y_min: f.f64("y_min")?, y_max: f.f64("y_max")? })
}

impl Scenario {
    /// Parses scenario text. Relative terrain file paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut sc = Scenario::default();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "scenario v1")) => {}
            other => {
                let line = other.map_or(1, |(n, _)| n);
                return Err(ScenarioError::Parse { line, msg: "expected header `scenario v1`".into() });
            }
        }
        for (n, line) in lines {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let (kw, rest) = (tokens[0], &tokens[1..]);
            let perr = |msg: String| ScenarioError::Parse { line: n, msg };
            let (sub, rest) = match kw {
                "terrain" | "goal" => {
                    let s = *rest.first().ok_or_else(|| perr(format!("{kw} needs a kind")))?;
                    (s, &rest[1..])
                }
                _ => ("", rest),
            };
            let single = |rest: &[&str]| -> Result<String> {
                match rest {
                    [v] => Ok(v.to_string()),
                    _ => Err(perr(format!("{kw} takes one value"))),
                }
            };
            match kw {
                "seed" => {
                    sc.seed = single(rest)?.parse().map_err(|_| perr("seed: not an integer".into()))?;
                    continue;
                }
                "tick_rate" => {
                    sc.tick_rate = single(rest)?.parse().map_err(|_| perr("tick_rate: not a number".into()))?;
                    continue;
                }
                "dataset" => {
                    let v = single(rest)?;
                    sc.dataset = DatasetId::parse(&v).ok_or_else(|| perr(format!("unknown dataset {v:?}")))?;
                    continue;
                }
                _ => {}
            }
            let mut f = Fields::new(n, rest)?;
            match (kw, sub) {
                ("terrain", "flat") => sc.terrain = TerrainSpec::Builtin(ScenarioTerrain::Flat),
                ("terrain", "walled_room") => sc.terrain = TerrainSpec::Builtin(ScenarioTerrain::WalledRoom),
                ("terrain", "slope") => {
                    sc.terrain = TerrainSpec::Builtin(ScenarioTerrain::Slope { angle_deg: f.f64("angle")? })
                }
                ("terrain", "stair") => {
                    let rise = f.f64("rise")?;
                    let run = f.f64("run")?;
                    let count = f.u64("count")?;
                    let count = u32::try_from(count).map_err(|_| f.err("count too large".into()))?;
                    sc.terrain = TerrainSpec::Builtin(ScenarioTerrain::Stair { rise, run, count });
                }
                ("terrain", "file") => sc.terrain = TerrainSpec::File(base_dir.join(f.req("path")?)),
                ("terrain", other) => return Err(perr(format!("unknown terrain kind {other:?}"))),
                ("zone", _) => {
                    let r = rect(&mut f)?;
                    sc.zones.push(ClimbZone {
                        x_min: r.x_min,
                        x_max: r.x_max,
                        y_min: r.y_min,
                        y_max: r.y_max,
                        slope_deg: f.f64("slope")?,
                    });
                }
                ("start", _) => {
                    sc.start = [f.f64("x")?, f.f64("y")?, 0.0];
                    f.opt_f64("heading", &mut sc.start[2])?;
                }
                ("chassis", _) => {
                    let c = &mut sc.chassis;
                    for (key, slot) in [
                        ("length", &mut c.length),
                        ("width", &mut c.width),
                        ("height", &mut c.height),
                        ("mass_arm", &mut c.mass_arm),
                        ("mass_tracks", &mut c.mass_tracks),
                        ("mass_others", &mut c.mass_others),
                        ("flipper_max", &mut c.flipper_max_deg),
                        ("climb_max", &mut c.climb_max_deg),
                        ("payload_max", &mut c.payload_max),
                        ("com_height", &mut c.com_height),
                        ("front_fraction", &mut c.front_fraction),
                        ("hinge_x", &mut c.hinge_x),
                        ("v_max", &mut c.v_max),
                        ("flipper_rate_max", &mut c.flipper_rate_max),
                        ("contact_tolerance", &mut c.contact_tolerance),
                    ] {
                        f.opt_f64(key, slot)?;
                    }
                }
                ("arm", _) => {
                    f.opt_vec3("base", &mut sc.arm.base)?;
                    f.opt_vec3("reach", &mut sc.arm.reach)?;
                    f.opt_f64("gripper_mass", &mut sc.arm.gripper_mass)?;
                    f.opt_f64("rate", &mut sc.arm_rate)?;
                }
                ("joint", _) => {
                    let idx = f.u64("index")? as usize;
                    if !(1..=JOINTS).contains(&idx) {
                        return Err(perr(format!("joint index must be 1..={JOINTS}")));
                    }
                    let j = &mut sc.arm.joints[idx - 1];
                    for (key, slot) in [
                        ("a", &mut j.a),
                        ("twist", &mut j.twist_deg),
                        ("d", &mut j.d),
                        ("offset", &mut j.offset_deg),
                        ("min", &mut j.min_deg),
                        ("max", &mut j.max_deg),
                        ("mass", &mut j.mass),
                    ] {
                        f.opt_f64(key, slot)?;
                    }
                }
                ("environment", _) => {
                    let e = &mut sc.environment;
                    f.opt_f64("temperature", &mut e.ambient_temperature)?;
                    f.opt_f64("humidity", &mut e.ambient_humidity)?;
                    f.opt_f64("gas", &mut e.ambient_gas)?;
                    f.opt_f64("declination", &mut e.declination_deg)?;
                }
                ("source", _) => {
                    let kind = match f.req("kind")? {
                        "heat" => HazardKind::Heat,
                        "gas" => HazardKind::Gas,
                        k => return Err(perr(format!("unknown source kind {k:?}"))),
                    };
                    let mut z = 0.0;
                    let (x, y) = (f.f64("x")?, f.f64("y")?);
                    f.opt_f64("z", &mut z)?;
                    sc.environment.sources.push(HazardSource {
                        position: [x, y, z],
                        kind,
                        intensity: f.f64("intensity")?,
                        sigma: f.f64("sigma")?,
                    });
                }
                ("noise", _) => {
                    let mut n = SensorNoise::default();
                    f.opt_f64("temperature", &mut n.temperature)?;
                    f.opt_f64("humidity", &mut n.humidity)?;
                    f.opt_f64("gas", &mut n.gas)?;
                    f.opt_f64("ultrasonic", &mut n.ultrasonic)?;
                    sc.environment.noise = Some(n);
                }
                ("object", _) => {
                    let id = f.req("id")?.to_string();
                    let label = f.req("label")?.to_string();
                    let mut pos = [f.f64("x")?, f.f64("y")?, 0.0];
                    f.opt_f64("z", &mut pos[2])?;
                    let graspable = f.bool("graspable", false)?;
                    let mut mass = 0.0;
                    f.opt_f64("mass", &mut mass)?;
                    sc.objects.push(SceneObject { id, label, position: pos, graspable, mass });
                }
                ("goal", "reach") => sc.goals.push(Goal::Reach(rect(&mut f)?)),
                ("goal", "detect") => sc.goals.push(Goal::Detect(f.req("label")?.to_string())),
                ("goal", "grasp") => sc.goals.push(Goal::Grasp(f.req("id")?.to_string())),
                ("goal", "return") => {
                    let mut radius = 0.3;
                    f.opt_f64("radius", &mut radius)?;
                    sc.goals.push(Goal::Return { radius });
                }
                ("goal", other) => return Err(perr(format!("unknown goal kind {other:?}"))),
                ("detector", _) => f.opt_f64("range", &mut sc.detection_range)?,
                ("control", _) => {
                    if let Some(v) = f.take("cmd_timeout_ms") {
                        sc.cmd_timeout_ms = v.parse().map_err(|_| perr("cmd_timeout_ms: not an integer".into()))?;
                    }
                }
                (other, _) => return Err(perr(format!("unknown keyword {other:?}"))),
            }
            f.done()?;
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn build_terrain(&self) -> Result<TerrainGrid> {
        match &self.terrain {
            TerrainSpec::Builtin(kind) => kind.build().map_err(|e| ScenarioError::Invalid(e.to_string())),
            TerrainSpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
                TerrainGrid::from_text(&text).map_err(|e| ScenarioError::Invalid(format!("{}: {e}", path.display())))
            }
        }
    }

    /// Layout zone (if any) followed by the explicit ones.
    pub fn climb_zones(&self) -> Vec<ClimbZone> {
        let mut zones: Vec<ClimbZone> = match &self.terrain {
            TerrainSpec::Builtin(kind) => kind.climb_zone().into_iter().collect(),
            TerrainSpec::File(_) => Vec::new(),
        };
        zones.extend(self.zones.iter().copied());
        zones
    }

    /// Static checks; returns the built terrain on success.
    pub fn validate(&self) -> Result<TerrainGrid> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return bad(format!("tick_rate must be > 0, got {}", self.tick_rate));
        }
        if 1.0 / self.tick_rate > 0.1 {
            return bad("tick_rate must be at least 10 Hz".into());
        }
        if !(self.detection_range > 0.0) || !(self.arm_rate > 0.0) || self.cmd_timeout_ms == 0 {
            return bad("detector range, arm rate and command timeout must be > 0".into());
        }
        self.chassis.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.arm.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.environment.validate().map_err(ScenarioError::Invalid)?;
        let terrain = self.build_terrain()?;
        let start = ChassisState::new(self.start[0], self.start[1], self.start[2]);
        if let Err(e) = passive_conform(&start, &self.chassis, &terrain) {
            return bad(format!("start pose does not fit on the terrain: {e}"));
        }
        let mut ids = std::collections::HashSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return bad(format!("duplicate object id {:?}", o.id));
            }
            if !terrain.contains(o.position[0], o.position[1]) {
                return bad(format!("object {:?} lies outside the terrain", o.id));
            }
            if !(o.mass >= 0.0) {
                return bad(format!("object {:?} has negative mass", o.id));
            }
        }
        for g in &self.goals {
            if let Goal::Grasp(id) = g {
                match self.objects.iter().find(|o| &o.id == id) {
                    None => return bad(format!("goal references unknown object {id:?}")),
                    Some(o) if !o.graspable => return bad(format!("goal grasps non-graspable object {id:?}")),
                    _ => {}
                }
            }
        }
        Ok(terrain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
scenario v1
# stair rescue
seed 7
tick_rate 25
dataset D3
terrain stair rise=0.15 run=0.30 count=5
start x=0.6 y=1.5 heading=0
chassis v_max=0.4
arm base=0.1,0,0.2 rate=45
joint index=2 mass=1.0 max=110
environment temperature=30 gas=2
source kind=gas x=3 y=1.5 intensity=400 sigma=0.5
noise gas=1.5
object id=victim label=person x=3.6 y=1.5 z=0.05 graspable=true mass=0.5
goal detect label=person
goal grasp id=victim
goal return radius=0.5
detector range=2.5
control cmd_timeout_ms=300
";

    #[test]
    fn parses_every_block() {
        let sc = Scenario::parse(SAMPLE, Path::new(".")).unwrap();
        assert_eq!(sc.seed, 7);
        assert_eq!(sc.tick_rate, 25.0);
        assert_eq!(sc.dataset, DatasetId::D3);
        assert_eq!(sc.terrain, TerrainSpec::Builtin(ScenarioTerrain::Stair { rise: 0.15, run: 0.30, count: 5 }));
        assert_eq!(sc.chassis.v_max, 0.4);
        assert_eq!(sc.arm.base, [0.1, 0.0, 0.2]);
        assert_eq!(sc.arm.joints[1].max_deg, 110.0);
        assert_eq!(sc.arm_rate, 45.0);
        assert_eq!(sc.environment.sources.len(), 1);
        assert_eq!(sc.environment.noise.unwrap().gas, 1.5);
        assert_eq!(sc.goals.len(), 3);
        assert_eq!(sc.detection_range, 2.5);
        assert_eq!(sc.cmd_timeout_ms, 300);
        sc.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("scenario v2\n", 1),
            ("scenario v1\nterrain stair rise=0.1 run=0.3\n", 2),
            ("scenario v1\nstart x=1 y=2 bogus=3\n", 2),
            ("scenario v1\nwarp 9\n", 2),
            ("scenario v1\nobject id=a label=b x=1 y=oops\n", 2),
        ];
        for (text, line) in cases {
            match Scenario::parse(text, Path::new(".")) {
                Err(ScenarioError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn validation_errors() {
        let base = "scenario v1\nterrain flat\n";
        let bad = [
            "start x=0.05 y=2\n",
            "goal grasp id=ghost\n",
            "object id=a label=b x=2 y=2\ngoal grasp id=a\n",
            "tick_rate 0\n",
            "chassis climb_max=50\n",
        ];
        for extra in bad {
            let sc = Scenario::parse(&format!("{base}{extra}"), Path::new(".")).unwrap();
            assert!(matches!(sc.validate(), Err(ScenarioError::Invalid(_))), "{extra}");
        }
    }

    #[test]
    fn terrain_file_resolves_relative_to_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TerrainGrid::flat(0.05, [0.0, 0.0], 41, 41, 0.0).unwrap();
        std::fs::write(dir.path().join("g.terrain"), grid.to_text()).unwrap();
        let path = dir.path().join("s.scenario");
        std::fs::write(&path, "scenario v1\nterrain file path=g.terrain\nstart x=1 y=1\n").unwrap();
        let sc = Scenario::load(&path).unwrap();
        assert_eq!(sc.validate().unwrap(), grid);
    }
}
