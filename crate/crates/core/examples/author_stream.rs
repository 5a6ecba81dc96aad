//! Expands a segment script into a recorded command stream.
//!
//! Each script line is `duration_ms ch1 ch2 ch3 ch4 ch5 ch6`. The channels are
//! re-sent every `PERIOD_MS` for the whole duration, the way a console keeps
//! the link alive.
//!
//!     cargo run --example author_stream -- script.segments > out.cmds

use rescue_sim::protocol::{encode_line, CommandMessage, Message};

const PERIOD_MS: u64 = 100;

fn main() {
    let path = std::env::args().nth(1).expect("usage: author_stream <segments>");
    let text = std::fs::read_to_string(&path).expect("readable script");
    let (mut t, mut seq) = (0u64, 0u64);
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse().unwrap_or_else(|_| panic!("line {}: bad number {v:?}", n + 1)))
            .collect();
        assert_eq!(nums.len(), 7, "line {}: expected duration and 6 channels", n + 1);
        let channels: [f64; 6] = nums[1..].try_into().unwrap();
        let end = t + nums[0] as u64;
        while t < end {
            seq += 1;
            let cmd = CommandMessage { seq, timestamp_ms: t, channels };
            print!("{}", encode_line(&Message::Command(cmd)).expect("channels within [-1, 1]"));
            t += PERIOD_MS;
        }
    }
}
