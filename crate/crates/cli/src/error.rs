use pqcartan::counting::CountingError;
use pqcartan::forms::FormError;
use pqcartan::freegroup::{RepError, ResourceCapError};
use pqcartan::numerics::NumericsError;
use serde::Serialize;
use serde_json::{json, Value};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exit {
    Config = 2,
    Certification = 3,
    ResourceCap = 4,
    Numerical = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Exit::Config, message)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn body(&self) -> Value {
        json!({
            "error": {
                "code": self.exit as i32,
                "kind": self.exit,
                "message": self.message,
                "detail": self.detail,
            }
        })
    }
}

impl From<ResourceCapError> for CliError {
    fn from(e: ResourceCapError) -> Self {
        CliError::new(Exit::ResourceCap, e.to_string())
            .with_detail(json!({ "needed": e.needed.to_string(), "cap": e.cap }))
    }
}

impl From<RepError> for CliError {
    fn from(e: RepError) -> Self {
        let exit = match e {
            RepError::Numerics(_) => Exit::Numerical,
            _ => Exit::Config,
        };
        CliError::new(exit, e.to_string())
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        CliError::new(Exit::Numerical, e.to_string())
    }
}

impl From<CountingError> for CliError {
    fn from(e: CountingError) -> Self {
        match e {
            CountingError::Cap(c) => c.into(),
            CountingError::EmptyWindow(..) | CountingError::NotPositive { .. } => {
                CliError::config(e.to_string())
            }
            CountingError::NotSingleOrbit(_) | CountingError::NoSignature => {
                CliError::new(Exit::Certification, e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::config(format!("csv: {e}"))
    }
}
