use std::time::Instant;

use serde::Serialize;

use super::memory::{MemoryTracker, Tracked};
use super::{PipelineError, StageError};

/// Declared stage: what it reads and which adapter, if any, it drives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSpec {
    pub name: String,
    pub input: String,
    pub adapter: Option<String>,
    pub budget_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

/// Emitted once per stage after its working set has been released.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub index: usize,
    pub stage: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub peak_bytes: u64,
    pub live_bytes_after_release: u64,
}

/// Handle through which a running stage charges its buffers.
pub struct StageScope<'a> {
    name: &'a str,
    tracker: &'a MemoryTracker,
}

impl StageScope<'_> {
    pub fn name(&self) -> &str {
        self.name
    }

    pub fn track<T>(&self, value: T, bytes: u64) -> Tracked<T> {
        self.tracker.track(self.name, value, bytes)
    }

    pub fn track_vec<T>(&self, value: Vec<T>) -> Tracked<Vec<T>> {
        self.tracker.track_vec(self.name, value)
    }

    pub fn alloc_bytes(&self, len: usize) -> Tracked<Vec<u8>> {
        self.track_vec(vec![0u8; len])
    }
}

type ReleaseHook = Box<dyn FnMut(&StageRecord) + Send>;

/// Runs stages strictly one after another. A stage body receives a scope, and
/// everything it charged must be dropped by the time the body returns.
pub struct StageRunner {
    tracker: MemoryTracker,
    records: Vec<StageRecord>,
    hook: Option<ReleaseHook>,
}

impl StageRunner {
    pub fn new(tracker: MemoryTracker) -> Self {
        Self {
            tracker,
            records: Vec::new(),
            hook: None,
        }
    }

    /// Called with each stage's record right after its release.
    pub fn on_release(mut self, hook: impl FnMut(&StageRecord) + Send + 'static) -> Self {
        self.hook = Some(Box::new(hook));
        self
    }

    pub fn tracker(&self) -> &MemoryTracker {
        &self.tracker
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<StageRecord> {
        self.records
    }

    pub fn run_stage<T>(
        &mut self,
        name: &str,
        body: impl FnOnce(&StageScope<'_>) -> Result<T, StageError>,
    ) -> Result<T, PipelineError> {
        if let Some(previous) = self.records.last() {
            let held = self.tracker.live_bytes(&previous.stage);
            if held > 0 {
                return Err(PipelineError::Unreleased {
                    stage: previous.stage.clone(),
                    bytes: held,
                });
            }
        }
        log::info!("stage `{name}` starting");
        let started = Instant::now();
        let result = body(&StageScope {
            name,
            tracker: &self.tracker,
        });
        let held = self.tracker.live_bytes(name);
        let record = StageRecord {
            index: self.records.len(),
            stage: name.to_string(),
            status: if result.is_ok() && held == 0 {
                StageStatus::Ok
            } else {
                StageStatus::Failed
            },
            seconds: started.elapsed().as_secs_f64(),
            peak_bytes: self.tracker.owner_peak(name),
            live_bytes_after_release: held,
        };
        log::info!(
            "stage `{name}` released: peak {} bytes, {:.3} s",
            record.peak_bytes,
            record.seconds
        );
        if let Some(hook) = self.hook.as_mut() {
            hook(&record);
        }
        self.records.push(record);
        match result {
            Err(source) => Err(PipelineError::Stage {
                stage: name.to_string(),
                source,
            }),
            Ok(_) if held > 0 => Err(PipelineError::Unreleased {
                stage: name.to_string(),
                bytes: held,
            }),
            Ok(value) => Ok(value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    fn recording_runner() -> (StageRunner, Arc<Mutex<Vec<String>>>) {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let sink = seen.clone();
        let runner = StageRunner::new(MemoryTracker::new())
            .on_release(move |r| sink.lock().unwrap().push(r.stage.clone()));
        (runner, seen)
    }

    #[test]
    fn hooks_fire_in_order() {
        let (mut runner, seen) = recording_runner();
        for name in ["one", "two", "three"] {
            runner
                .run_stage(name, |scope| {
                    let buf = scope.alloc_bytes(1024);
                    Ok(buf.len())
                })
                .unwrap();
        }
        assert_eq!(*seen.lock().unwrap(), ["one", "two", "three"]);
        assert!(runner.records().iter().all(|r| r.peak_bytes == 1024));
        assert_eq!(runner.tracker().peak(), 1024);
    }

    #[test]
    fn failure_still_releases_and_names_stage() {
        let (mut runner, seen) = recording_runner();
        runner.run_stage("one", |_| Ok(())).unwrap();
        let err = runner
            .run_stage::<()>("two", |scope| {
                let _buf = scope.alloc_bytes(64);
                Err(StageError::Message("adapter exited with status 1".into()))
            })
            .unwrap_err();
        assert!(err.to_string().contains("`two`"), "{err}");
        assert_eq!(*seen.lock().unwrap(), ["one", "two"]);
        assert_eq!(runner.records()[1].status, StageStatus::Failed);
        assert_eq!(runner.tracker().total_live(), 0);
    }

    #[test]
    fn escaping_buffer_is_reported() {
        let (mut runner, _) = recording_runner();
        let result = runner.run_stage("leaky", |scope| Ok(scope.alloc_bytes(10)));
        assert!(matches!(
            result,
            Err(PipelineError::Unreleased { ref stage, bytes: 10 }) if stage == "leaky"
        ));
    }
}
