use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actions::ActionSpan;
use super::transcript::TranscriptSegment;
use crate::detection::{ClassMap, DetectionError, DetectionEvent};

pub const DEFAULT_MAX_ITEMS: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("nothing to prompt on: no objects, actions or speech")]
    EmptyEvidence,
}

/// Fused evidence from every modality.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineSummary {
    /// Class name to the number of distinct images it was detected in.
    pub objects: BTreeMap<String, usize>,
    pub actions: Vec<ActionSpan>,
    pub transcript: Vec<TranscriptSegment>,
}

/// Number of distinct images in which each class scores at least `score_cutoff`.
pub fn count_objects(
    detections: &[DetectionEvent],
    classes: &ClassMap,
    score_cutoff: f64,
) -> Result<BTreeMap<String, usize>, DetectionError> {
    let mut images: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for d in detections {
        if classes.get(d.class_id).is_none() {
            return Err(DetectionError::UnknownClass(d.class_id));
        }
        if d.score >= score_cutoff {
            images.entry(d.class_id).or_default().insert(&d.image_id);
        }
    }
    Ok(images
        .into_iter()
        .map(|(c, set)| (classes.name(c).to_string(), set.len()))
        .collect())
}

/// Renders the recipe prompt:
///
/// `Based on objects: <o1, o2>; actions: <a1, a2>; audio: '<speech>', predict a recipe.`
///
/// Objects are ordered by descending count then name, actions by first
/// appearance on the timeline without repeats, and both lists keep at most
/// `max_items` entries. A clause with nothing to list is left out.
pub fn assemble_prompt(summary: &PipelineSummary, max_items: usize) -> Result<String, PromptError> {
    let mut objects: Vec<(&String, &usize)> =
        summary.objects.iter().filter(|(_, &n)| n > 0).collect();
    objects.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let objects: Vec<&str> = objects
        .iter()
        .take(max_items)
        .map(|(name, _)| name.as_str())
        .collect();

    let mut actions: Vec<String> = Vec::new();
    for span in &summary.actions {
        let name = span.label.name().to_lowercase();
        if !actions.contains(&name) {
            actions.push(name);
        }
    }
    actions.truncate(max_items);

    let speech: Vec<&str> = summary
        .transcript
        .iter()
        .map(|s| s.text.trim())
        .filter(|t| !t.is_empty())
        .collect();

    let mut clauses = Vec::new();
    if !objects.is_empty() {
        clauses.push(format!("objects: {}", objects.join(", ")));
    }
    if !actions.is_empty() {
        clauses.push(format!("actions: {}", actions.join(", ")));
    }
    if !speech.is_empty() {
        clauses.push(format!("audio: '{}'", speech.join(" ")));
    }
    if clauses.is_empty() {
        return Err(PromptError::EmptyEvidence);
    }
    Ok(format!(
        "Based on {}, predict a recipe.",
        clauses.join("; ")
    ))
}
