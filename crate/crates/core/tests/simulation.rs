use std::collections::BTreeMap;
use std::path::PathBuf;

use c2i_core::engine::{ChannelKind, Engine, Observer, RadioModel};
use c2i_core::messages::{Message, StationId, Timestamp};
use c2i_core::scenario::{self, ScenarioConfig};

/// Records every breach of the engine-level invariants it can see.
struct Audit {
    radio: RadioModel,
    last_now: Timestamp,
    displayed: BTreeMap<StationId, usize>,
    cams: BTreeMap<StationId, u64>,
    problems: Vec<String>,
}

impl Audit {
    fn new(cfg: &ScenarioConfig) -> Self {
        Audit {
            radio: cfg.radio.clone(),
            last_now: 0,
            displayed: BTreeMap::new(),
            cams: BTreeMap::new(),
            problems: Vec::new(),
        }
    }
}

impl Observer for Audit {
    fn on_broadcast(&mut self, engine: &Engine, sender: StationId, msg: &Message, recipients: &[StationId]) {
        if let Message::Cam(_) = msg {
            *self.cams.entry(sender).or_default() += 1;
        }
        let from = engine.position_of(sender).expect("sender exists");
        for r in recipients {
            let to = engine.position_of(*r).expect("recipient exists");
            if *r == sender || !self.radio.reachable(&from, &to) {
                self.problems.push(format!("t={}: {} -> {} not reachable", engine.now(), sender.0, r.0));
            }
        }
    }

    fn after_event(&mut self, engine: &Engine) {
        let now = engine.now();
        if now < self.last_now {
            self.problems.push(format!("clock went from {} back to {now}", self.last_now));
        }
        self.last_now = now;
        for v in engine.vehicles() {
            let seen = self.displayed.entry(v.id).or_default();
            for (_, d) in &v.display_log()[*seen..] {
                match v.verdict(d.message_id()) {
                    Some(verdict) if verdict.accepted => {}
                    other => {
                        self.problems.push(format!("vehicle {} displayed {:?} with {other:?}", v.id.0, d.message_id()))
                    }
                }
            }
            *seen = v.display_log().len();
        }
    }
}

fn audited(name: &str) -> (ScenarioConfig, Audit, c2i_core::engine::MetricsReport) {
    let cfg = scenario::builtin(name).unwrap();
    let mut audit = Audit::new(&cfg);
    let report = scenario::build(&cfg).unwrap().run_observed(&mut audit).unwrap();
    (cfg, audit, report)
}

#[test]
fn builtins_respect_engine_invariants() {
    for name in scenario::builtin_names() {
        let (cfg, audit, report) = audited(name);
        assert!(audit.problems.is_empty(), "{name}: {:?}", &audit.problems[..audit.problems.len().min(5)]);
        for s in &report.samples {
            assert_eq!(s.offered_bytes, s.delivered_bytes + s.dropped_bytes, "{name} {s:?}");
            assert_eq!(s.offered_msgs, s.delivered_msgs + s.dropped_msgs, "{name} {s:?}");
            let budget = match s.channel {
                ChannelKind::Safety => cfg.channels.safety,
                ChannelKind::Infotainment => cfg.channels.infotainment,
            };
            assert!(s.delivered_bytes <= budget, "{name}: window ending {} over budget", s.t_ms);
        }
        for totals in report.channels.values() {
            assert!(totals.conserved());
        }
    }
}

#[test]
fn stationary_vehicle_keeps_its_cam_cadence() {
    let (cfg, audit, _) = audited("fig1_divided_highway");
    let expected = cfg.t_end / cfg.periods.cam;
    let sent = audit.cams[&StationId(1)];
    assert!(sent == expected || sent == expected + 1, "{sent} CAMs, expected {expected} or one more");
}

#[test]
fn seed_changes_cam_phases_but_not_outcomes() {
    let mut cfg = scenario::builtin("fig1_divided_highway").unwrap();
    let a = scenario::build(&cfg).unwrap().run().unwrap();
    cfg.seed += 1;
    let b = scenario::build(&cfg).unwrap().run().unwrap();
    let shown = |m: &c2i_core::engine::MetricsReport| {
        m.displays.iter().filter(|(_, e)| !e.is_empty()).map(|(v, _)| *v).collect::<Vec<_>>()
    };
    assert_eq!(shown(&a), shown(&b));
}

#[test]
fn until_truncates_the_run() {
    let cfg = scenario::builtin("sparse_store_forward").unwrap();
    let report = scenario::build(&cfg).unwrap().truncate(60_000).run().unwrap();
    assert_eq!(report.t_end, 60_000);
    assert!(report.samples.iter().all(|s| s.t_ms <= 60_000));
    assert!(report.displays.values().all(|e| e.is_empty()), "followers are not on the road yet");
}

#[test]
fn config_round_trips_through_canonical_text() {
    for name in scenario::builtin_names() {
        let cfg = scenario::builtin(name).unwrap();
        let text = String::from_utf8(cfg.to_canonical()).unwrap();
        assert_eq!(scenario::parse(&text).unwrap(), cfg, "{name}");
    }
}

#[test]
fn construction_site_converges() {
    let (cfg, _, report) = audited("construction_site");
    let window = cfg.site.as_ref().unwrap().window as u32;
    let inflow = report.sites.iter().find(|s| s.rsu == StationId(100)).unwrap();
    assert_eq!(inflow.sample_count, window);
    assert_ne!(inflow.expected_transit_time, cfg.site.as_ref().unwrap().prior_transit_time);
    assert_eq!(report.measurement_loss, 0);
}

/// Summaries of the built-in scenarios are pinned; set C2I_UPDATE_GOLDENS=1
/// to rewrite them after an intended behavior change.
#[test]
fn summaries_match_goldens() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/golden");
    let update = std::env::var_os("C2I_UPDATE_GOLDENS").is_some();
    for name in scenario::builtin_names() {
        let cfg = scenario::builtin(name).unwrap();
        let mut got = scenario::build(&cfg).unwrap().run().unwrap().to_canonical();
        got.push(b'\n');
        let path = dir.join(format!("{name}.summary.json"));
        if update {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &got).unwrap();
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(want == got, "{name}: summary differs from {}", path.display());
    }
}
