//! `mvc-demos`: run a demo from a scenario file or line by line.
//!
//! Interactive lines are gestures (`key 5`, `edit A1 =()`, `commit`), plus
//! `tick N`, `triad N`, `view N` and `quit`. Every render command is echoed
//! as `<view> <command-json>`.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::Parser;

use super::scenario::Scenario;
use super::{list_demos, DemoDescriptor, DemoName, DemoOptions};
use crate::session::Session;
use crate::testkit::replay::{replay_session, ReplayError, Transcript};
use crate::vocab::Gesture;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EXPECTATION: i32 = 3;
pub const EXIT_WIRING: i32 = 4;

/// Scenarios shipped with the crate, so `--script pager_retry.scn` works
/// from any directory.
pub const BUNDLED: [(&str, &str); 5] = [
    ("masked_phone.scn", include_str!("../../scenarios/masked_phone.scn")),
    ("form_commit.scn", include_str!("../../scenarios/form_commit.scn")),
    (
        "sheet_invalid_formula.scn",
        include_str!("../../scenarios/sheet_invalid_formula.scn"),
    ),
    ("pager_retry.scn", include_str!("../../scenarios/pager_retry.scn")),
    ("refdata_both.scn", include_str!("../../scenarios/refdata_both.scn")),
];

#[derive(Debug, Parser)]
#[command(name = "mvc-demos", about = "Headless MVC pattern demos")]
pub struct Args {
    /// masked, form, sheet, pager or refdata
    #[arg(long)]
    pub demo: Option<String>,
    /// Scenario to replay instead of reading gestures from stdin.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Where to write the transcript.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Service latency; one millisecond is one virtual tick.
    #[arg(long = "latency-ms")]
    pub latency_ms: Option<u64>,
    #[arg(long = "fault-rate")]
    pub fault_rate: Option<f64>,
    #[arg(long)]
    pub list: bool,
}

/// Entry point for the binary. Reads stdin in interactive mode.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdin = io::stdin();
    let stdout = io::stdout();
    run_with(args, stdin.lock(), stdout.lock())
}

pub fn run_with<I, T>(args: I, input: impl BufRead, mut out: impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    if args.list {
        for (name, line) in list_demos() {
            let _ = writeln!(out, "{name:<8} {line}");
        }
        return EXIT_OK;
    }
    let Some(name) = args.demo.as_deref() else {
        eprintln!("--demo is required (try --list)");
        return EXIT_PARSE;
    };
    let Some(demo) = DemoName::parse(name) else {
        eprintln!("unknown demo {name:?} (try --list)");
        return EXIT_PARSE;
    };
    if let Some(rate) = args.fault_rate {
        if !(0.0..=1.0).contains(&rate) {
            eprintln!("--fault-rate must be within 0..1");
            return EXIT_PARSE;
        }
    }
    let opts = DemoOptions {
        seed: args.seed,
        latency: args.latency_ms,
        fault_rate: args.fault_rate,
    };
    let transcript = match &args.script {
        Some(path) => match scripted(demo, path, opts, &mut out) {
            Ok(t) => t,
            Err(code) => return code,
        },
        None => match interactive(demo, opts, input, &mut out) {
            Ok(t) => t,
            Err(code) => return code,
        },
    };
    if let Some(path) = &args.out {
        if let Err(e) = fs::write(path, &transcript.text) {
            eprintln!("cannot write {}: {e}", path.display());
            return EXIT_WIRING;
        }
    }
    EXIT_OK
}

/// A path on disk, or failing that, a bundled scenario by file name.
pub fn load_script(path: &Path) -> io::Result<String> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(text),
        Err(e) => {
            let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
            BUNDLED
                .iter()
                .find(|(name, _)| *name == file)
                .map(|(_, text)| text.to_string())
                .ok_or(e)
        }
    }
}

fn scripted(
    demo: DemoName,
    path: &Path,
    opts: DemoOptions,
    out: &mut impl Write,
) -> Result<Transcript, i32> {
    let text = load_script(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        EXIT_PARSE
    })?;
    let scenario = Scenario::parse(&text).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_PARSE
    })?;
    match replay_session(demo, &scenario, opts) {
        Ok(done) => {
            for r in done.session.rendered() {
                echo(out, &r.view.to_string(), &r.command);
            }
            let _ = writeln!(out, "# transcript sha256 {}", done.transcript.digest);
            Ok(done.transcript)
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Err(match e {
                ReplayError::Parse(_) | ReplayError::Target { .. } => EXIT_PARSE,
                ReplayError::Expectation { .. } => EXIT_EXPECTATION,
                ReplayError::Wiring(_) => EXIT_WIRING,
            })
        }
    }
}

fn echo(out: &mut impl Write, view: &str, command: &crate::vocab::RenderCommand) {
    let json = serde_json::to_value(command).expect("render serializes");
    let _ = writeln!(out, "{view} {json}");
}

fn interactive(
    demo: DemoName,
    opts: DemoOptions,
    input: impl BufRead,
    out: &mut impl Write,
) -> Result<Transcript, i32> {
    let descriptor = DemoDescriptor::get(demo);
    let (mut session, ids) = descriptor.launch(opts).map_err(|e| {
        eprintln!("{e}");
        EXIT_WIRING
    })?;
    let mut shown = 0;
    flush(&session, &mut shown, out);
    let mut triad = 0usize;
    let mut view = 0usize;
    for line in input.lines() {
        let Ok(line) = line else { break };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, rest) = line.split_once(' ').unwrap_or((line, ""));
        match word {
            "quit" | "exit" => break,
            "tick" => match rest.trim().parse::<u64>() {
                Ok(n) => {
                    session.tick(n);
                }
                Err(_) => {
                    let _ = writeln!(out, "? tick needs a number");
                }
            },
            "triad" => match rest.trim().parse::<usize>() {
                Ok(n) if (1..=ids.len()).contains(&n) => {
                    triad = n - 1;
                    view = 0;
                }
                _ => {
                    let _ = writeln!(out, "? triads are 1..={}", ids.len());
                }
            },
            "view" => match rest.trim().parse::<usize>() {
                Ok(n) if n < session.views(ids[triad]).len() => view = n,
                _ => {
                    let _ = writeln!(out, "? no such view");
                }
            },
            _ => match line.parse::<Gesture>() {
                Ok(g) => {
                    if let Err(e) = session.dispatch_from(ids[triad], view, g) {
                        let _ = writeln!(out, "? {e}");
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "? {e}");
                }
            },
        }
        flush(&session, &mut shown, out);
    }
    let _ = out.flush();
    Ok(Transcript::new(session.transcript()))
}

fn flush(session: &Session, shown: &mut usize, out: &mut impl Write) {
    for r in &session.rendered()[*shown..] {
        echo(out, &r.view.to_string(), &r.command);
    }
    *shown = session.rendered().len();
}
