//! Operating-procedure state machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ControllerError, Result};

/// Low storage preload, kPa.
pub const HIBERNATION_PRELOAD: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Depressurized,
    Bleeding,
    Hibernating,
    Pressurizing,
    Phasing,
    Operating,
    Depressurizing,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Depressurized,
        Mode::Bleeding,
        Mode::Hibernating,
        Mode::Pressurizing,
        Mode::Phasing,
        Mode::Operating,
        Mode::Depressurizing,
    ];

    /// Transitory modes run a procedure and advance on their own.
    pub fn is_transitory(self) -> bool {
        matches!(
            self,
            Mode::Bleeding | Mode::Pressurizing | Mode::Phasing | Mode::Depressurizing
        )
    }

    /// Mode entered when the procedure of a transitory mode completes.
    pub fn on_completion(self) -> Option<Mode> {
        match self {
            Mode::Pressurizing => Some(Mode::Phasing),
            Mode::Phasing => Some(Mode::Operating),
            Mode::Bleeding => Some(Mode::Hibernating),
            Mode::Depressurizing => Some(Mode::Depressurized),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Depressurized => "Depressurized",
            Mode::Bleeding => "Bleeding",
            Mode::Hibernating => "Hibernating",
            Mode::Pressurizing => "Pressurizing",
            Mode::Phasing => "Phasing",
            Mode::Operating => "Operating",
            Mode::Depressurizing => "Depressurizing",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Command {
    Bleed,
    Hibernate,
    Pressurize,
    Phase,
    Operate,
    Depressurize,
    Shutdown,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Bleed,
        Command::Hibernate,
        Command::Pressurize,
        Command::Phase,
        Command::Operate,
        Command::Depressurize,
        Command::Shutdown,
    ];
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Bleed => "bleed",
            Command::Hibernate => "hibernate",
            Command::Pressurize => "pressurize",
            Command::Phase => "phase",
            Command::Operate => "operate",
            Command::Depressurize => "depressurize",
            Command::Shutdown => "shutdown",
        };
        f.write_str(s)
    }
}

impl FromStr for Command {
    type Err = ControllerError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| ControllerError::UnknownCommand(s.to_string()))
    }
}

/// Current mode together with the preload it calls for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationMode {
    pub mode: Mode,
    /// kPa
    pub target_preload: f64,
}

impl OperationMode {
    pub fn depressurized() -> Self {
        Self {
            mode: Mode::Depressurized,
            target_preload: 0.0,
        }
    }

    /// `mode` with the preload it implies. `operating_preload` applies to the
    /// pressurized modes.
    pub fn of(mode: Mode, operating_preload: f64) -> Self {
        let target_preload = match mode {
            Mode::Depressurized | Mode::Depressurizing => 0.0,
            Mode::Hibernating | Mode::Bleeding => HIBERNATION_PRELOAD,
            Mode::Pressurizing | Mode::Phasing | Mode::Operating => operating_preload,
        };
        Self {
            mode,
            target_preload,
        }
    }
}

/// Edge of the operating graph taken by `command` from `mode`, if any.
pub fn next_mode(mode: Mode, command: Command) -> Option<Mode> {
    use Command as C;
    use Mode as M;
    match (mode, command) {
        (M::Depressurized, C::Pressurize) => Some(M::Pressurizing),
        (M::Depressurized, C::Bleed) => Some(M::Bleeding),
        (M::Depressurized, C::Hibernate) => Some(M::Hibernating),
        (M::Depressurized, C::Shutdown) => Some(M::Depressurized),

        (M::Hibernating, C::Pressurize | C::Operate) => Some(M::Pressurizing),
        (M::Hibernating, C::Bleed) => Some(M::Bleeding),
        (M::Hibernating, C::Depressurize) => Some(M::Depressurizing),
        (M::Hibernating, C::Hibernate | C::Shutdown) => Some(M::Hibernating),

        (M::Operating, C::Phase) => Some(M::Phasing),
        (M::Operating, C::Hibernate | C::Shutdown) => Some(M::Hibernating),
        (M::Operating, C::Depressurize) => Some(M::Depressurizing),
        (M::Operating, C::Operate) => Some(M::Operating),

        _ => None,
    }
}

/// Applies `command` to `mode`.
pub fn transition(
    mode: &OperationMode,
    command: Command,
    operating_preload: f64,
) -> Result<OperationMode> {
    next_mode(mode.mode, command)
        .map(|m| OperationMode::of(m, operating_preload))
        .ok_or(ControllerError::IllegalTransition {
            from: mode.mode,
            command,
        })
}

/// Advances a transitory mode whose procedure has finished.
pub fn complete(mode: &OperationMode, operating_preload: f64) -> Option<OperationMode> {
    mode.mode
        .on_completion()
        .map(|m| OperationMode::of(m, operating_preload))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressurize_from_hibernation_ends_operating() {
        let m = OperationMode::of(Mode::Hibernating, 500.0);
        let m = transition(&m, Command::Pressurize, 500.0).unwrap();
        assert_eq!(m.mode, Mode::Pressurizing);
        let m = complete(&m, 500.0).unwrap();
        assert_eq!(m.mode, Mode::Phasing);
        let m = complete(&m, 500.0).unwrap();
        assert_eq!(m.mode, Mode::Operating);
        assert_eq!(m.target_preload, 500.0);
        assert!(complete(&m, 500.0).is_none());
    }

    #[test]
    fn operate_needs_pressure_first() {
        let err = transition(&OperationMode::depressurized(), Command::Operate, 500.0).unwrap_err();
        assert!(matches!(
            err,
            ControllerError::IllegalTransition {
                from: Mode::Depressurized,
                command: Command::Operate
            }
        ));
    }

    #[test]
    fn hibernate_sets_low_preload() {
        let m = OperationMode::of(Mode::Operating, 500.0);
        let m = transition(&m, Command::Hibernate, 500.0).unwrap();
        assert_eq!(m.mode, Mode::Hibernating);
        assert_eq!(m.target_preload, 100.0);
    }

    #[test]
    fn transitory_modes_reject_commands() {
        for mode in Mode::ALL.into_iter().filter(|m| m.is_transitory()) {
            for c in Command::ALL {
                assert!(next_mode(mode, c).is_none(), "{mode} {c}");
            }
        }
    }

    #[test]
    fn parse_commands() {
        assert_eq!(
            "Pressurize".parse::<Command>().unwrap(),
            Command::Pressurize
        );
        assert!("fly".parse::<Command>().is_err());
    }
}
