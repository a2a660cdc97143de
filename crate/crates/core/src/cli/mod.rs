//! Scenario files, the suite runner and report types behind the `objev`
//! binary.

pub mod builtin;
pub mod report;
pub mod scenario;

pub use builtin::{builtin, generate_random_scenario, BUILTIN_NAMES};
pub use report::{run, sample, SampleReport, Status, SuiteReport, VerificationReport};
pub use scenario::{parse_scenario, Scenario, ScenarioError, ScenarioFile, Suite};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Loads a scenario from a builtin name or a file path.
pub fn load(source: &str) -> Result<ScenarioFile, ScenarioError> {
    if let Some(f) = builtin(source) {
        return Ok(f);
    }
    let text = std::fs::read_to_string(source).map_err(|e| ScenarioError {
        path: None,
        line: None,
        column: None,
        message: format!("cannot read `{source}`: {e}"),
    })?;
    parse_scenario(&text)
}
