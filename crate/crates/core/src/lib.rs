//! Deterministic discrete-event simulator of vehicle-to-infrastructure
//! communication: vehicles and roadside units exchanging CAM/DEN messages,
//! with store-and-forward, gateway translation, approach aggregation, the
//! standalone construction-site measurement loop and a local dynamic map.

pub mod engine;
pub mod geo;
pub mod messages;
pub mod reception;
pub mod rsu;
pub mod scenario;
pub mod vehicle;
