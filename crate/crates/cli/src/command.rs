use std::collections::BTreeMap;
use std::fmt;

use rdtx_core::controller::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Status,
    Pressurize,
    Phase,
    Operate,
    Hibernate,
    Bleed,
    Depressurize,
    RunExperiment,
    FitModel,
    Validate,
    Report,
    Sweep,
    Shutdown,
    Help,
    Quit,
}

const VERBS: &[(&str, Verb)] = &[
    ("status", Verb::Status),
    ("pressurize", Verb::Pressurize),
    ("phase", Verb::Phase),
    ("operate", Verb::Operate),
    ("hibernate", Verb::Hibernate),
    ("bleed", Verb::Bleed),
    ("depressurize", Verb::Depressurize),
    ("run", Verb::RunExperiment),
    ("fit", Verb::FitModel),
    ("validate", Verb::Validate),
    ("report", Verb::Report),
    ("sweep", Verb::Sweep),
    ("shutdown", Verb::Shutdown),
    ("help", Verb::Help),
    ("?", Verb::Help),
    ("quit", Verb::Quit),
    ("exit", Verb::Quit),
];

impl Verb {
    /// Controller command behind a procedure verb.
    pub fn controller_command(self) -> Option<Command> {
        match self {
            Verb::Pressurize => Some(Command::Pressurize),
            Verb::Phase => Some(Command::Phase),
            Verb::Operate => Some(Command::Operate),
            Verb::Hibernate => Some(Command::Hibernate),
            Verb::Bleed => Some(Command::Bleed),
            Verb::Depressurize => Some(Command::Depressurize),
            Verb::Shutdown => Some(Command::Shutdown),
            _ => None,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = VERBS
            .iter()
            .find(|(_, v)| v == self)
            .map(|(n, _)| *n)
            .unwrap_or("?");
        f.write_str(name)
    }
}

/// One parsed input line: a verb, positional words and `key=value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CliCommand {
    pub verb: Verb,
    pub positional: Vec<String>,
    pub options: BTreeMap<String, String>,
}

impl CliCommand {
    /// Positional argument `index`, or the option `key`.
    pub fn arg(&self, index: usize, key: &str) -> Option<&str> {
        self.options
            .get(key)
            .map(String::as_str)
            .or_else(|| self.positional.get(index).map(String::as_str))
    }

    pub fn number(&self, index: usize, key: &str) -> Result<Option<f64>, String> {
        self.arg(index, key)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| format!("`{s}` is not a number"))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Empty,
    Command(CliCommand),
    Unknown(String),
}

/// Splits a line into a command. `#` starts a comment.
pub fn parse_line(line: &str) -> ParseOutcome {
    let line = line.split('#').next().unwrap_or("").trim();
    let mut words = line.split_whitespace();
    let Some(first) = words.next() else {
        return ParseOutcome::Empty;
    };
    let lower = first.to_ascii_lowercase();
    let Some(&(_, verb)) = VERBS.iter().find(|(name, _)| *name == lower) else {
        return ParseOutcome::Unknown(first.to_string());
    };
    let mut positional = Vec::new();
    let mut options = BTreeMap::new();
    for w in words {
        match w.split_once('=') {
            Some((k, v)) => {
                options.insert(k.to_ascii_lowercase(), v.to_string());
            }
            None => positional.push(w.to_string()),
        }
    }
    ParseOutcome::Command(CliCommand {
        verb,
        positional,
        options,
    })
}

pub const HELP: &str = "\
commands:
  status                      mode, pressures, phase offset, last fit
  pressurize                  raise preload, phase, then operate
  phase                       re-run phasing while operating
  operate                     from hibernation: pressurize, phase, operate
  hibernate                   hold the line at 100 kPa
  bleed [cycles]              remove undissolved air, then hibernate
  depressurize                release all preload
  run <step|sine|hand|validation>
                              run an experiment and log it (needs operate)
  fit [log.csv]               fit J, B, K to the last step log or a file
  validate [log.csv]          score the last fit on the last other log or a file
  report                      write stiffness, fit and loop metrics
  sweep [min% max% points]    stiffness against undissolved air
  shutdown                    hibernate (if operating) and end the session
  help                        this text
  quit                        end the session";
