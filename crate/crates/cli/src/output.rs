use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Semantic(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Semantic(_) => 3,
        }
    }
}

impl From<telelab::Error> for CliError {
    fn from(e: telelab::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Envelope around every JSON result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommandResult {
    pub command: String,
    pub schema_version: u32,
    pub version: String,
    pub inputs: Value,
    pub outputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CommandResult {
    pub fn new(command: &str, inputs: Value, outputs: Value, seed: Option<u64>) -> Self {
        CommandResult {
            command: command.to_string(),
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            outputs,
            seed,
        }
    }
}

/// Writes `text` to `out`, or stdout when absent.
pub fn emit_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn emit(out: Option<&Path>, result: &CommandResult) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(result).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    emit_text(out, &text)
}
