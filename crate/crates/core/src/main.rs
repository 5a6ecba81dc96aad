use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use rescue_sim::chassis::{check_climbable, tip_over_angle, TipAxis};
use rescue_sim::detection::{evaluate, DetectionLog};
use rescue_sim::protocol::DEFAULT_TELEMETRY_HZ;
use rescue_sim::scenario::Scenario;
use rescue_sim::service::{serve, ServiceConfig};
use rescue_sim::sim::{replay, run_mission, CommandStream, MissionStatus, SimError, World};

const EXIT_MISSION_FAIL: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "sim", version, about = "Tracked rescue-robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mission, either live over WebSocket or from a recorded stream.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Serve operators on this address, e.g. 127.0.0.1:8080.
        #[arg(long, conflicts_with = "commands")]
        listen: Option<String>,
        /// Recorded command frames to play instead of listening.
        #[arg(long)]
        commands: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the tick log here.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the detector log here.
        #[arg(long)]
        odmlog: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TELEMETRY_HZ)]
        telemetry_hz: u32,
        #[arg(long)]
        cmd_timeout_ms: Option<u64>,
        /// Stop a live run after this many ticks.
        #[arg(long)]
        max_ticks: Option<u64>,
    },
    /// Re-run a tick log and check it reproduces byte for byte.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score detector logs.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        odmlog: Vec<PathBuf>,
    },
    /// Validate a scenario and summarise its limits.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
}

struct Failure(u8, String);

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ReplayMismatch { .. } => Failure(EXIT_MISSION_FAIL, e.to_string()),
            other => Failure(EXIT_INVALID, other.to_string()),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_INVALID, e.to_string())
}

fn load_scenario(path: &Path, seed: Option<u64>, timeout: Option<u64>) -> Result<Scenario, Failure> {
    let mut sc = Scenario::load(path).map_err(invalid)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(t) = timeout {
        sc.cmd_timeout_ms = t;
    }
    Ok(sc)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn status_code(status: MissionStatus) -> Result<(), Failure> {
    println!("mission: {status}");
    match status {
        MissionStatus::Success { .. } => Ok(()),
        other => Err(Failure(EXIT_MISSION_FAIL, format!("mission {other}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    scenario: &Path,
    listen: Option<String>,
    commands: Option<PathBuf>,
    seed: Option<u64>,
    record: Option<PathBuf>,
    odmlog: Option<PathBuf>,
    telemetry_hz: u32,
    cmd_timeout_ms: Option<u64>,
    max_ticks: Option<u64>,
) -> Result<(), Failure> {
    let sc = load_scenario(scenario, seed, cmd_timeout_ms)?;
    if let Some(path) = commands {
        let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let stream = CommandStream::parse(&text)?;
        let result = run_mission(&sc, &stream)?;
        if let Some(p) = record {
            write(&p, &result.log.to_text())?;
        }
        if let Some(p) = odmlog {
            write(&p, &result.detections.to_text())?;
        }
        return status_code(result.status);
    }
    let Some(addr) = listen else {
        return Err(invalid("run needs --listen <addr> or --commands <file>"));
    };
    let world = World::new(sc)?;
    let rt = tokio::runtime::Runtime::new().map_err(invalid)?;
    let mut outcome = rt.block_on(async {
        let config = ServiceConfig { telemetry_hz, tick_interval: None, max_ticks };
        let handle = serve(world, &addr, config).await.map_err(invalid)?;
        println!("listening on ws://{}", handle.addr);
        if max_ticks.is_some() {
            Ok::<_, Failure>(handle.finished().await)
        } else {
            let _ = tokio::signal::ctrl_c().await;
            info!("shutting down");
            Ok(handle.shutdown().await)
        }
    })?;
    if let Some(p) = record {
        write(&p, &outcome.log.to_text())?;
    }
    if let Some(p) = odmlog {
        write(&p, &outcome.world.detection_log().to_text())?;
    }
    outcome.world.end_of_stream();
    status_code(outcome.world.status)
}

fn check(path: &Path) -> Result<(), Failure> {
    let sc = load_scenario(path, None, None)?;
    let terrain = sc.validate().map_err(invalid)?;
    let c = &sc.chassis;
    let [x0, x1, y0, y1] = terrain.extent();
    println!("scenario ok: {}", path.display());
    println!("terrain: {}x{} nodes, x [{x0}, {x1}] y [{y0}, {y1}]", terrain.cols(), terrain.rows());
    println!("mass: {} kg, payload limit {} kg", c.total_mass(), c.payload_max);
    println!("tip-over: pitch {:.2} deg, roll {:.2} deg", tip_over_angle(c, TipAxis::Pitch), tip_over_angle(c, TipAxis::Roll));
    for z in sc.climb_zones() {
        let ok = check_climbable(z.slope_deg, c.flipper_max_deg, 0.0, c);
        println!(
            "climb zone x [{}, {}]: {:.2} deg, {}",
            z.x_min,
            z.x_max,
            z.slope_deg,
            if ok { "climbable" } else { "beyond climb limit" }
        );
    }
    println!("goals: {}", sc.goals.len());
    Ok(())
}

fn eval(paths: &[PathBuf]) -> Result<(), Failure> {
    let mut logs = BTreeMap::new();
    for p in paths {
        let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        let log = DetectionLog::from_text(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        logs.entry(log.dataset).or_insert_with(Vec::new).extend(log.records);
    }
    let report = evaluate(&logs).map_err(invalid)?;
    print!("{}", report.to_tsv());
    if let Ok(acc) = report.overall_accuracy_pct() {
        println!("overall accuracy: {acc:.2}%");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, listen, commands, seed, record, odmlog, telemetry_hz, cmd_timeout_ms, max_ticks } => {
            run(&scenario, listen, commands, seed, record, odmlog, telemetry_hz, cmd_timeout_ms, max_ticks)
        }
        Command::Replay { log, scenario, seed } => (|| {
            let sc = load_scenario(&scenario, seed, None)?;
            let text = std::fs::read_to_string(&log).map_err(|e| invalid(format!("{}: {e}", log.display())))?;
            let out = replay(&text, &sc)?;
            println!("replay ok: {} ticks identical", out.entries.len());
            Ok(())
        })(),
        Command::Eval { odmlog } => eval(&odmlog),
        Command::Check { scenario } => check(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            error!("{msg}");
            ExitCode::from(code)
        }
    }
}
