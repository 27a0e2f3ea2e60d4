use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use rdtx_cli::{Reply, Session, SessionConfig};

/// Operator console for a simulated rolling-diaphragm hydrostatic transmission.
#[derive(Debug, Parser)]
#[command(name = "rdtx", version)]
struct Args {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for sensor noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read commands from this file instead of standard input.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Directory for event, experiment and report CSV files.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Pace the simulation against the wall clock.
    #[arg(long)]
    realtime: bool,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut session = Session::new(SessionConfig {
        config_path: args.config,
        log_directory: args.log_dir,
        random_seed: args.seed,
        realtime: args.realtime,
    })?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Some(path) = args.script {
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines() {
            let reply = session.handle(line);
            echo(&mut out, Some(line), &reply)?;
            if let Reply::Exit(_) = reply {
                break;
            }
        }
        return Ok(());
    }

    let interactive = io::stdin().is_terminal();
    if interactive {
        writeln!(out, "rdtx console; type `help` for commands")?;
    }
    for line in io::stdin().lock().lines() {
        let line = line?;
        let reply = session.handle(&line);
        echo(&mut out, None, &reply)?;
        if let Reply::Exit(_) = reply {
            break;
        }
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
    }
    Ok(())
}

fn echo(out: &mut impl Write, line: Option<&str>, reply: &Reply) -> io::Result<()> {
    if reply.text().is_empty() {
        return Ok(());
    }
    if let Some(line) = line {
        writeln!(out, "> {}", line.trim())?;
    }
    writeln!(out, "{}", reply.text())
}
