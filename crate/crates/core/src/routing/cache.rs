use std::collections::BTreeMap;

use super::ant::AntId;
use crate::geom::NodeId;
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheRecord {
    pub previous: Option<NodeId>,
    pub forward: Option<NodeId>,
    pub ant: AntId,
    pub expires: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accept,
    LoopDetected,
}

/// Per-node record of ants that passed through, keyed by ant id.
#[derive(Debug, Clone, Default)]
pub struct AntCache {
    timeout: SimTime,
    records: BTreeMap<AntId, CacheRecord>,
}

impl AntCache {
    pub fn new(timeout: SimTime) -> Self {
        Self {
            timeout,
            records: BTreeMap::new(),
        }
    }

    pub fn timeout(&self) -> SimTime {
        self.timeout
    }

    /// Register a forward ant arriving from `previous`. A live record for the
    /// same id means the ant has looped.
    pub fn record_ant(&mut self, ant: AntId, previous: Option<NodeId>, now: SimTime) -> Admission {
        if let Some(r) = self.records.get(&ant) {
            if r.expires > now {
                return Admission::LoopDetected;
            }
        }
        self.records.insert(
            ant,
            CacheRecord {
                previous,
                forward: None,
                ant,
                expires: now + self.timeout,
            },
        );
        Admission::Accept
    }

    pub fn set_forward(&mut self, ant: AntId, forward: NodeId) {
        if let Some(r) = self.records.get_mut(&ant) {
            r.forward = Some(forward);
        }
    }

    /// Unexpired record for `ant`.
    pub fn lookup(&self, ant: AntId, now: SimTime) -> Option<&CacheRecord> {
        self.records.get(&ant).filter(|r| r.expires > now)
    }

    pub fn remove(&mut self, ant: AntId) -> Option<CacheRecord> {
        self.records.remove(&ant)
    }

    /// Drop every expired record.
    pub fn purge(&mut self, now: SimTime) -> usize {
        let before = self.records.len();
        self.records.retain(|_, r| r.expires > now);
        before - self.records.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
