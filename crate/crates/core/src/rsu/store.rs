//! Store-and-forward buffer: DENs are held while valid and replayed on a
//! period so vehicles arriving later still receive them.

use thiserror::Error;

use crate::messages::{DenMessage, MessageId, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredMessage {
    pub den: DenMessage,
    pub stored_at: Timestamp,
    pub last_broadcast: Timestamp,
    pub rebroadcast_period: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("message already expired")]
    Expired,
    #[error("message already held")]
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stored {
    New,
    /// Replaced an older seq from the same source and event.
    Superseded(MessageId),
}

#[derive(Debug, Clone, Default)]
pub struct MessageStore {
    entries: Vec<StoredMessage>,
    period: u64,
}

impl MessageStore {
    pub fn new(rebroadcast_period: u64) -> Self {
        MessageStore { entries: Vec::new(), period: rebroadcast_period }
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Applies a new rebroadcast period to the store and every held entry.
    pub fn set_period(&mut self, period: u64) {
        self.period = period;
        for e in &mut self.entries {
            e.rebroadcast_period = period;
        }
    }

    pub fn entries(&self) -> &[StoredMessage] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn store(&mut self, den: &DenMessage, now: Timestamp) -> Result<Stored, StoreError> {
        self.evict_expired(now);
        if den.is_expired(now) {
            return Err(StoreError::Expired);
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.den.message_id() == den.message_id()) {
            e.stored_at = now;
            return Err(StoreError::Duplicate);
        }
        if self.entries.iter().any(|e| den.is_superseded_by(&e.den)) {
            return Err(StoreError::Duplicate);
        }
        let entry =
            StoredMessage { den: den.clone(), stored_at: now, last_broadcast: now, rebroadcast_period: self.period };
        if let Some(e) = self.entries.iter_mut().find(|e| e.den.is_superseded_by(den)) {
            let old = e.den.message_id();
            *e = entry;
            return Ok(Stored::Superseded(old));
        }
        self.entries.push(entry);
        Ok(Stored::New)
    }

    pub fn mark_broadcast(&mut self, id: MessageId, now: Timestamp) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.den.message_id() == id) {
            e.last_broadcast = now;
        }
    }

    pub fn evict_expired(&mut self, now: Timestamp) {
        self.entries.retain(|e| !e.den.is_expired(now));
    }

    /// Every held DEN whose last broadcast is at least one period old.
    /// Returned entries count as broadcast at `now`.
    pub fn replay_due(&mut self, now: Timestamp) -> Vec<DenMessage> {
        self.replay_due_where(now, |_| true)
    }

    /// Like [`replay_due`](Self::replay_due) but skips (without marking)
    /// entries rejected by `allow`.
    pub fn replay_due_where(&mut self, now: Timestamp, allow: impl Fn(&DenMessage) -> bool) -> Vec<DenMessage> {
        self.evict_expired(now);
        let mut out = Vec::new();
        for e in &mut self.entries {
            if now.saturating_sub(e.last_broadcast) >= e.rebroadcast_period && allow(&e.den) {
                e.last_broadcast = now;
                out.push(e.den.clone());
            }
        }
        out
    }
}

/// Load-driven rebroadcast period: doubles above the high-water mark,
/// halves below the low-water mark, never below the configured floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivePeriod {
    pub floor: u64,
    pub ceiling: u64,
    pub current: u64,
}

impl AdaptivePeriod {
    pub const HIGH_WATER: f64 = 0.8;
    pub const LOW_WATER: f64 = 0.4;

    pub fn new(floor: u64, ceiling: u64) -> Self {
        AdaptivePeriod { floor, ceiling: ceiling.max(floor), current: floor }
    }

    pub fn adapt(&mut self, load_fraction: f64) -> u64 {
        if load_fraction > Self::HIGH_WATER {
            self.current = (self.current * 2).min(self.ceiling);
        } else if load_fraction < Self::LOW_WATER {
            self.current = (self.current / 2).max(self.floor);
        }
        self.current
    }
}
