use std::fmt;

/// Exit codes are part of the interface.
pub mod code {
    pub const FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const DIMENSION: u8 = 3;
    pub const MAP: u8 = 4;
    pub const USAGE: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(code::PARSE, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn map(message: impl Into<String>) -> Self {
        Self::new(code::MAP, message)
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        Self::new(code::DIMENSION, message)
    }

    /// Re-labels a library error raised while assembling studies and maps.
    pub fn in_map_context(e: depthcd::Error) -> Self {
        match e {
            depthcd::Error::DimensionMismatch { .. } | depthcd::Error::InvalidArgument(_) => Self::map(e.to_string()),
            other => other.into(),
        }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<depthcd::Error> for CliError {
    fn from(e: depthcd::Error) -> Self {
        use depthcd::Error as E;
        let code = match &e {
            E::DimensionMismatch { .. } => code::DIMENSION,
            E::Format(_) | E::Csv(_) | E::Json(_) => code::PARSE,
            _ => code::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(code::FAILURE, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::parse(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses a named choice, suggesting the closest valid name on a typo.
pub fn parse_choice<T, E>(value: &str, choices: &[&str], what: &str) -> CliResult<T>
where
    T: std::str::FromStr<Err = E>,
{
    value.parse().map_err(|_| unknown_choice(value, choices, what))
}

pub fn unknown_choice(value: &str, choices: &[&str], what: &str) -> CliError {
    let best = choices
        .iter()
        .map(|c| (strsim::damerau_levenshtein(&value.to_ascii_lowercase(), c), *c))
        .min();
    let hint = match best {
        Some((d, c)) if d <= 3 => format!("; did you mean `{c}`?"),
        _ => String::new(),
    };
    CliError::usage(format!(
        "unknown {what} `{value}` (expected one of: {}){hint}",
        choices.join(", ")
    ))
}
