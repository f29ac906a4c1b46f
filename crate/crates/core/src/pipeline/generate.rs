use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adapter::{run_command, AdapterError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Program and leading arguments; generation parameters are appended.
    pub command: Vec<String>,
    pub max_tokens: usize,
    pub temperature: f64,
    pub timeout_s: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            command: Vec::new(),
            max_tokens: 100,
            temperature: 0.7,
            timeout_s: 120.0,
        }
    }
}

impl GeneratorConfig {
    /// Full command line: the configured command followed by
    /// `--max-tokens N --temperature T`.
    pub fn command_line(&self) -> Vec<String> {
        let mut cmd = self.command.clone();
        cmd.extend([
            "--max-tokens".to_string(),
            self.max_tokens.to_string(),
            "--temperature".to_string(),
            self.temperature.to_string(),
        ]);
        cmd
    }
}

#[derive(Debug, Error)]
#[error("recipe generation failed: {source}")]
pub struct GenerationError {
    /// The prompt that was sent, kept for an offline retry.
    pub prompt: String,
    #[source]
    pub source: AdapterError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeText {
    pub name: String,
    pub steps: Vec<String>,
}

impl RecipeText {
    /// Name on the first line, then one numbered step per line.
    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.name);
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, step));
        }
        out
    }
}

fn numbered(line: &str) -> Option<&str> {
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    Some(rest.trim())
}

/// Splits generator output into a name (first non-empty line) and numbered
/// steps. Unnumbered lines after a step continue it. Output without any
/// numbered step keeps the whole raw text as its only step.
pub fn parse_recipe(raw: &str) -> RecipeText {
    let mut lines = raw.lines().map(str::trim).filter(|l| !l.is_empty());
    let name = lines.next().unwrap_or_default().to_string();
    let mut steps: Vec<String> = Vec::new();
    for line in lines {
        match (numbered(line), steps.last_mut()) {
            (Some(text), _) => steps.push(text.to_string()),
            (None, Some(prev)) => {
                prev.push(' ');
                prev.push_str(line);
            }
            (None, None) => {}
        }
    }
    if steps.is_empty() {
        steps.push(raw.trim().to_string());
    }
    RecipeText { name, steps }
}

/// Sends `prompt` to the generator on standard input and parses its reply.
pub fn generate_recipe(
    prompt: &str,
    config: &GeneratorConfig,
    cwd: Option<&Path>,
) -> Result<RecipeText, GenerationError> {
    let fail = |source| GenerationError {
        prompt: prompt.to_string(),
        source,
    };
    if config.command.is_empty() {
        return Err(fail(AdapterError::EmptyCommand));
    }
    let timeout = Duration::try_from_secs_f64(config.timeout_s).unwrap_or(Duration::MAX);
    let out = run_command(&config.command_line(), Some(prompt), cwd, timeout).map_err(fail)?;
    Ok(parse_recipe(&out.stdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> GeneratorConfig {
        GeneratorConfig {
            command: vec!["sh".into(), "-c".into(), script.into(), "gen".into()],
            ..Default::default()
        }
    }

    #[test]
    fn parses_fixture_reply() {
        let r = parse_recipe("Tomato Salad\n1. Chop tomato\n2. Serve\n");
        assert_eq!(r.name, "Tomato Salad");
        assert_eq!(r.steps, ["Chop tomato", "Serve"]);
        assert_eq!(r.render(), "Tomato Salad\n1. Chop tomato\n2. Serve\n");
    }

    #[test]
    fn continuation_and_malformed_output() {
        let r = parse_recipe("\n  Soup \n1) Boil water\n   until it bubbles\n2. Add salt");
        assert_eq!(r.name, "Soup");
        assert_eq!(r.steps, ["Boil water until it bubbles", "Add salt"]);
        let raw = parse_recipe("just some text\nwithout steps");
        assert_eq!(raw.name, "just some text");
        assert_eq!(raw.steps, ["just some text\nwithout steps"]);
        assert_eq!(numbered("12. x"), Some("x"));
        assert_eq!(numbered("1999 was a year"), None);
    }

    #[test]
    fn adapter_receives_prompt_and_parameters() {
        let reply =
            generate_recipe("PROMPT", &sh("read p; echo \"$p\"; echo \"1. $*\""), None).unwrap();
        assert_eq!(reply.name, "PROMPT");
        assert_eq!(reply.steps, ["--max-tokens 100 --temperature 0.7"]);
    }

    #[test]
    fn failing_adapter_keeps_prompt() {
        let err = generate_recipe("keep me", &sh("exit 1"), None).unwrap_err();
        assert_eq!(err.prompt, "keep me");
        assert!(matches!(err.source, AdapterError::Failed { .. }));
        let err = generate_recipe("p", &GeneratorConfig::default(), None).unwrap_err();
        assert!(matches!(err.source, AdapterError::EmptyCommand));
    }
}
