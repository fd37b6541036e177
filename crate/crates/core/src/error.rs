use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid system parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("invalid access policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),

    /// The primary queue cannot keep up: arrivals exceed the service rate.
    #[error("primary queue unstable: lambda_p = {lambda_p} exceeds mu_p = {mu_p}")]
    UnstableQueue { lambda_p: f64, mu_p: f64 },
}

/// A configuration document could not be turned into validated inputs.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render_config_error(.key, .line, .message))]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

fn render_config_error(key: &Option<String>, line: &Option<usize>, message: &str) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!("line {l}: key `{k}`: {message}"),
        (Some(k), None) => format!("key `{k}`: {message}"),
        (None, Some(l)) => format!("line {l}: {message}"),
        (None, None) => message.to_string(),
    }
}
