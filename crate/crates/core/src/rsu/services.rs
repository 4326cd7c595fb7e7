//! Demand-driven infotainment services. A service with no live
//! registration is paused and its content is not put on the air.

use std::collections::BTreeMap;

use crate::messages::{ServiceId, ServiceRequest, StationId, Timestamp};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServiceRegistry {
    registrations: BTreeMap<ServiceId, BTreeMap<StationId, Timestamp>>,
}

impl ServiceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, req: &ServiceRequest, now: Timestamp) {
        self.evict_expired(now);
        self.registrations.entry(req.service()).or_default().insert(req.requester(), now + req.ttl());
    }

    /// Registrations stay live up to and including their expiry instant.
    pub fn evict_expired(&mut self, now: Timestamp) {
        for regs in self.registrations.values_mut() {
            regs.retain(|_, exp| *exp >= now);
        }
        self.registrations.retain(|_, regs| !regs.is_empty());
    }

    pub fn is_active(&mut self, service: ServiceId, now: Timestamp) -> bool {
        self.evict_expired(now);
        self.registrations.contains_key(&service)
    }

    pub fn is_paused(&mut self, service: ServiceId, now: Timestamp) -> bool {
        !self.is_active(service, now)
    }

    pub fn active_services(&self) -> impl Iterator<Item = ServiceId> + '_ {
        self.registrations.keys().copied()
    }

    pub fn registrations(&self, service: ServiceId) -> Option<&BTreeMap<StationId, Timestamp>> {
        self.registrations.get(&service)
    }
}
