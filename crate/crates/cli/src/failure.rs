use std::fmt;

/// A command failure, split by the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, arguments or input files (exit 2).
    Input(String),
    /// A fit or analysis failed on valid input (exit 1).
    Analysis(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Analysis(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Analysis(m) => f.write_str(m),
        }
    }
}

impl From<microcavity::Error> for Failure {
    fn from(e: microcavity::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Analysis(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

