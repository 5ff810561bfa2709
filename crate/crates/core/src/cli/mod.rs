//! Configuration, commands, manifests and reports behind the binary.
//!
//! Each command writes its outputs under the run directory and finishes by
//! writing `<command>.manifest.json`, which lists every artifact with its
//! SHA-256. Outputs are write-once: a command refuses to touch a path that
//! already exists.
//!
//! Layout of a run directory:
//!
//! ```text
//! data/dataset.csv (+ .meta.json)          gen
//! model/{model.txt,loss_curve.csv,training.json}   train
//! sweep/{trials.csv,best.json,model.txt,loss_curve.csv}   sweep
//! eval/point_NN.csv (+ .meta.json), eval/summary.json   eval
//! conform/calibration.json, conform/point_NN.csv   conform
//! bootstrap/member_NNN.txt, bootstrap/{cdf,pdf}_NN.csv   bootstrap
//! fluctuate/{cdf,pdf}_NN.csv, fluctuate/ensemble.json   fluctuate
//! msnn/stage_N.txt, msnn/stack.json         msnn
//! report/{cdf,pdf}_NN.svg, report/point_NN.csv, report/index.html   report
//! ```

mod commands;
pub mod config;
pub mod manifest;
pub mod plot;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use commands::{emit_report, ReportInputs, Simulator};
pub use config::{parse_config, parse_config_str, Overrides, RunConfig};
pub use manifest::{Artifacts, RunManifest};

use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEPENDENCY: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Gen,
    Train,
    Sweep,
    Eval,
    Conform,
    Bootstrap,
    Fluctuate,
    Msnn,
    Report,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Gen,
        Command::Train,
        Command::Sweep,
        Command::Eval,
        Command::Conform,
        Command::Bootstrap,
        Command::Fluctuate,
        Command::Msnn,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Train => "train",
            Command::Sweep => "sweep",
            Command::Eval => "eval",
            Command::Conform => "conform",
            Command::Bootstrap => "bootstrap",
            Command::Fluctuate => "fluctuate",
            Command::Msnn => "msnn",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown command `{s}`")))
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Dependency(_) => EXIT_DEPENDENCY,
        e if e.is_numeric() => EXIT_NUMERIC,
        Error::Sweep(_) => EXIT_NUMERIC,
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Schema(_)
        | Error::Domain(_)
        | Error::UnsupportedActivation(_)
        | Error::Shape { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        EXIT_CONFIG => "config",
        EXIT_DEPENDENCY => "dependency",
        EXIT_NUMERIC => "numeric",
        _ => "io",
    }
}

/// One-line JSON description of a failure.
pub fn error_line(command: Option<Command>, e: &Error) -> String {
    let mut v = serde_json::json!({
        "error": error_kind(e),
        "exit": exit_code(e),
        "message": e.to_string(),
    });
    if let Some(c) = command {
        v["command"] = c.name().into();
    }
    if let Error::Dependency(p) = e {
        v["missing"] = p.display().to_string().into();
    }
    v.to_string()
}

/// Run one command against a validated configuration and write its manifest.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<RunManifest> {
    let manifest_path = cfg.out.join(manifest::manifest_name(command.name()));
    if manifest_path.exists() {
        return Err(Error::config(format!(
            "`{command}` already ran in {}; outputs are write-once, choose a fresh --out",
            cfg.out.display()
        )));
    }
    let start = Instant::now();
    let mut art = Artifacts::new(&cfg.out)?;
    let mut timings = BTreeMap::new();
    commands::dispatch(command, cfg, &mut art, &mut timings)?;
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());
    let m = RunManifest {
        tool: manifest::TOOL_NAME.to_string(),
        version: manifest::TOOL_VERSION.to_string(),
        command: command.name().to_string(),
        seed: cfg.seed,
        config: cfg.echo(),
        artifacts: art.entries()?,
        timings,
    };
    m.write_atomic(&manifest_path)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Dependency(PathBuf::from("m"))), EXIT_DEPENDENCY);
        assert_eq!(exit_code(&Error::Numeric { layer: 0, context: "x" }), EXIT_NUMERIC);
        let io = Error::Io(std::io::Error::other("disk"));
        assert_eq!(exit_code(&io), EXIT_FAILURE);
        let line = error_line(Some(Command::Eval), &Error::Dependency(PathBuf::from("model/model.txt")));
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["exit"], 3);
        assert_eq!(v["missing"], "model/model.txt");
    }
}
