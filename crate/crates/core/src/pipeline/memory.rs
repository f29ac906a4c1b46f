//! Byte accounting for stage working sets.
//!
//! Large buffers are wrapped in [`Tracked`], which charges its byte count to an
//! owner tag on creation and refunds it on drop. The tracker records total live
//! bytes and their high-water mark, globally and per owner.

use std::collections::BTreeMap;
use std::ops::{Deref, DerefMut};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::Serialize;

#[derive(Debug, Default)]
struct Ledger {
    live: BTreeMap<String, u64>,
    owner_peak: BTreeMap<String, u64>,
    total_live: u64,
    total_peak: u64,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryTracker {
    inner: Arc<Mutex<Ledger>>,
}

/// Snapshot of the tracker's high-water marks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    pub peak_bytes: u64,
    pub live_bytes: u64,
    pub owner_peaks: BTreeMap<String, u64>,
}

impl MemoryTracker {
    pub fn new() -> Self {
        Self::default()
    }

    fn ledger(&self) -> MutexGuard<'_, Ledger> {
        self.inner
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn charge(&self, owner: &str, bytes: u64) {
        let mut l = self.ledger();
        let live = l.live.entry(owner.to_string()).or_default();
        *live += bytes;
        let live = *live;
        let peak = l.owner_peak.entry(owner.to_string()).or_default();
        *peak = (*peak).max(live);
        l.total_live += bytes;
        l.total_peak = l.total_peak.max(l.total_live);
    }

    fn refund(&self, owner: &str, bytes: u64) {
        let mut l = self.ledger();
        if let Some(live) = l.live.get_mut(owner) {
            *live -= bytes;
        }
        l.total_live -= bytes;
    }

    /// Wraps `value` and charges `bytes` to `owner` until the wrapper drops.
    pub fn track<T>(&self, owner: &str, value: T, bytes: u64) -> Tracked<T> {
        self.charge(owner, bytes);
        Tracked {
            value,
            bytes,
            owner: owner.to_string(),
            tracker: self.clone(),
        }
    }

    /// Tracks a vector by its allocated capacity.
    pub fn track_vec<T>(&self, owner: &str, value: Vec<T>) -> Tracked<Vec<T>> {
        let bytes = (value.capacity() * std::mem::size_of::<T>()) as u64;
        self.track(owner, value, bytes)
    }

    pub fn live_bytes(&self, owner: &str) -> u64 {
        self.ledger().live.get(owner).copied().unwrap_or(0)
    }

    pub fn total_live(&self) -> u64 {
        self.ledger().total_live
    }

    pub fn peak(&self) -> u64 {
        self.ledger().total_peak
    }

    pub fn owner_peak(&self, owner: &str) -> u64 {
        self.ledger().owner_peak.get(owner).copied().unwrap_or(0)
    }

    pub fn report(&self) -> MemoryReport {
        let l = self.ledger();
        MemoryReport {
            peak_bytes: l.total_peak,
            live_bytes: l.total_live,
            owner_peaks: l.owner_peak.clone(),
        }
    }
}

/// A value whose byte footprint is charged to a tracker while it lives.
#[derive(Debug)]
pub struct Tracked<T> {
    value: T,
    bytes: u64,
    owner: String,
    tracker: MemoryTracker,
}

impl<T> Tracked<T> {
    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }
}

impl<T> Deref for Tracked<T> {
    type Target = T;

    fn deref(&self) -> &T {
        &self.value
    }
}

impl<T> DerefMut for Tracked<T> {
    fn deref_mut(&mut self) -> &mut T {
        &mut self.value
    }
}

impl<T> Drop for Tracked<T> {
    fn drop(&mut self) {
        self.tracker.refund(&self.owner, self.bytes);
    }
}
