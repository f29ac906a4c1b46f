use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actions::ActionSettings;
use super::adapter::InputSource;
use super::generate::GeneratorConfig;
use super::stage::StageSpec;
use super::summary::DEFAULT_MAX_ITEMS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Pipeline inputs, adapters and thresholds. Relative paths are resolved
/// against the directory of the config file, and source commands run there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub detections: InputSource,
    pub keypoints: InputSource,
    #[serde(default)]
    pub transcript: Option<InputSource>,
    pub model: PathBuf,
    /// Class-name map JSON; the kitchen vocabulary when absent.
    #[serde(default)]
    pub classes: Option<PathBuf>,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub actions: ActionSettings,
    #[serde(default = "default_score_cutoff")]
    pub score_cutoff: f64,
    #[serde(default = "default_max_items")]
    pub max_items: usize,
    #[serde(default = "default_source_timeout")]
    pub source_timeout_s: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_score_cutoff() -> f64 {
    0.5
}

fn default_max_items() -> usize {
    DEFAULT_MAX_ITEMS
}

fn default_source_timeout() -> f64 {
    60.0
}

impl PipelineConfig {
    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let config: PipelineConfig = if is_toml {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let config = config.resolved(&base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolved(mut self, base: &Path) -> Self {
        self.detections = self.detections.resolved(base);
        self.keypoints = self.keypoints.resolved(base);
        self.transcript = self.transcript.map(|t| t.resolved(base));
        self.model = base.join(&self.model);
        self.classes = self.classes.map(|c| base.join(c));
        self.base_dir = base.to_path_buf();
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.generator.command.is_empty() {
            return bad("generator.command is empty".into());
        }
        let positive = |t: f64| t.is_finite() && t > 0.0;
        if !positive(self.generator.timeout_s) || !positive(self.source_timeout_s) {
            return bad("timeouts must be positive and finite".into());
        }
        if !(0.0..=1.0).contains(&self.score_cutoff) {
            return bad(format!("score_cutoff {} outside [0, 1]", self.score_cutoff));
        }
        let a = &self.actions;
        if !(0.0..=1.0).contains(&a.confidence_floor) {
            return bad(format!(
                "actions.confidence_floor {} outside [0, 1]",
                a.confidence_floor
            ));
        }
        if a.window == 0 || a.stride == 0 || a.landmarks == 0 {
            return bad("actions.window, stride and landmarks must be at least 1".into());
        }
        if !(a.motion_threshold.is_finite() && a.motion_threshold >= 0.0) {
            return bad("actions.motion_threshold must be non-negative".into());
        }
        if self.max_items == 0 {
            return bad("max_items must be at least 1".into());
        }
        Ok(())
    }

    /// Working directory for source and generator commands.
    pub fn working_dir(&self) -> Option<&Path> {
        (!self.base_dir.as_os_str().is_empty()).then_some(self.base_dir.as_path())
    }

    /// The declared stages in execution order.
    pub fn stage_specs(&self) -> Vec<StageSpec> {
        let spec = |name: &str, input: String, adapter: Option<String>, note: &str| StageSpec {
            name: name.into(),
            input,
            adapter,
            budget_note: note.into(),
        };
        let command = |s: &InputSource| match s {
            InputSource::Command { command } => Some(command.join(" ")),
            InputSource::File(_) => None,
        };
        vec![
            spec(
                "detection",
                self.detections.describe(),
                command(&self.detections),
                "all detection events of the run",
            ),
            spec(
                "actions",
                self.keypoints.describe(),
                command(&self.keypoints),
                "classifier weights and the keypoint stream",
            ),
            spec(
                "transcript",
                self.transcript
                    .as_ref()
                    .map_or("none".into(), InputSource::describe),
                self.transcript.as_ref().and_then(command),
                "transcript segments",
            ),
            spec(
                "fuse",
                "stage results".into(),
                None,
                "summary and prompt only",
            ),
            spec(
                "generate",
                "prompt".into(),
                Some(self.generator.command_line().join(" ")),
                "external process; nothing resident in-process",
            ),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON: &str = r#"{
        "detections": "dets.jsonl",
        "keypoints": {"command": ["sh", "-c", "cat kp.jsonl"]},
        "model": "model.json",
        "generator": {"command": ["./gen.sh"]}
    }"#;

    #[test]
    fn json_defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.json");
        std::fs::write(&path, JSON).unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(
            c.detections,
            InputSource::File(dir.path().join("dets.jsonl"))
        );
        assert!(matches!(c.keypoints, InputSource::Command { .. }));
        assert_eq!(c.model, dir.path().join("model.json"));
        assert_eq!(c.transcript, None);
        assert_eq!(c.generator.max_tokens, 100);
        assert_eq!(c.generator.temperature, 0.7);
        assert_eq!(c.actions.window, 30);
        assert_eq!(c.actions.stride, 15);
        assert_eq!(c.actions.confidence_floor, 0.5);
        assert_eq!(c.score_cutoff, 0.5);
        assert_eq!(c.max_items, 10);
        assert_eq!(c.working_dir(), Some(dir.path()));
        let names: Vec<_> = c.stage_specs().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["detection", "actions", "transcript", "fuse", "generate"]
        );
    }

    #[test]
    fn toml_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.toml");
        std::fs::write(
            &path,
            r#"
detections = "d.jsonl"
keypoints = "k.jsonl"
transcript = "t.jsonl"
model = "/abs/model.json"
score_cutoff = 0.6

[generator]
command = ["llm"]
timeout_s = 5.0

[actions]
stride = 10
"#,
        )
        .unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.model, PathBuf::from("/abs/model.json"));
        assert_eq!(
            c.transcript,
            Some(InputSource::File(dir.path().join("t.jsonl")))
        );
        assert_eq!(c.actions.stride, 10);
        assert_eq!(c.actions.window, 30);
        assert_eq!(c.score_cutoff, 0.6);
    }

    #[test]
    fn invalid_configs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        for text in [
            JSON.replace("[\"./gen.sh\"]", "[]"),
            JSON.replace("\"model\"", "\"score_cutoff\": 2.0, \"model\""),
            JSON.replace("\"model\"", "\"unknown\": 1, \"model\""),
            "{".to_string(),
        ] {
            std::fs::write(&path, text).unwrap();
            assert!(PipelineConfig::load(&path).is_err());
        }
        assert!(matches!(
            PipelineConfig::load(&dir.path().join("missing.json")),
            Err(ConfigError::Io { .. })
        ));
    }
}
