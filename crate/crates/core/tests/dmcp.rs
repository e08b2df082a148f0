use std::collections::BTreeMap;

use vtd::bus::{DataStore, Filter, InProcessConference};
use vtd::dmcp::{ConfigurationSet, DmcpClient, LifecycleState, ModuleDescriptor, PulseOutcome, Supercomponent};
use vtd::messages::type_id;

fn cfg(text: &str) -> ConfigurationSet {
    text.parse().unwrap()
}

fn pairs(set: &ConfigurationSet) -> BTreeMap<String, String> {
    set.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn map(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
    entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn module_and_global_filtering() {
    let master = cfg("global.freq=100\nplanner.speedlimit=12.5\nperception.range=40\n");
    assert_eq!(
        pairs(&master.filter_for("planner", 0)),
        map(&[("global.freq", "100"), ("planner.speedlimit", "12.5")])
    );
    assert_eq!(
        pairs(&master.filter_for("perception", 0)),
        map(&[("global.freq", "100"), ("perception.range", "40")])
    );
    assert_eq!(pairs(&master.filter_for("unknown", 0)), map(&[("global.freq", "100")]));
}

#[test]
fn instance_override() {
    let master = cfg("planner.v=1\nplanner:2.v=7\nplanner:3.w=9\n");
    assert_eq!(pairs(&master.filter_for("planner", 2)), map(&[("planner.v", "7")]));
    assert_eq!(pairs(&master.filter_for("planner", 1)), map(&[("planner.v", "1")]));
    assert_eq!(pairs(&master.filter_for("planner", 3)), map(&[("planner.v", "1"), ("planner.w", "9")]));
}

#[test]
fn prefix_must_end_at_a_segment() {
    let master = cfg("plan.a=1\nplanner.b=2\n");
    assert_eq!(pairs(&master.filter_for("plan", 0)), map(&[("plan.a", "1")]));
}

#[test]
fn config_syntax_errors() {
    assert!("a.b=1\na.b=2\n".parse::<ConfigurationSet>().is_err());
    assert!("Upper.case=1\n".parse::<ConfigurationSet>().is_err());
    assert!("novalue\n".parse::<ConfigurationSet>().is_err());
    assert!("# comment\n\n a.b = x y \n".parse::<ConfigurationSet>().unwrap().get("a.b") == Some("x y"));
}

fn running(sc: &mut Supercomponent, d: &ModuleDescriptor, pulses_s: &[f64]) {
    sc.discover(d, 0);
    for &t in pulses_s {
        assert_eq!(
            sc.pulse(d, LifecycleState::Running, (t * 1e6) as i64),
            PulseOutcome::Accepted(LifecycleState::Running)
        );
    }
}

#[test]
fn three_missed_pulses_mark_unresponsive() {
    let mut sc = Supercomponent::new(cfg("global.dmcp.pulseinterval=1\nglobal.dmcp.timeoutpulses=3\n")).unwrap();
    let d = ModuleDescriptor::new("planner", 0, "1");
    running(&mut sc, &d, &[0.0, 1.0, 2.0]);
    assert!(sc.check(4_999_999).is_empty());
    assert_eq!(sc.state("planner", 0), Some(LifecycleState::Running));
    assert_eq!(sc.check(5_000_000), vec![d.clone()]);
    assert_eq!(sc.state("planner", 0), Some(LifecycleState::Unresponsive));
    // A single check reports the transition once.
    assert!(sc.check(5_100_000).is_empty());

    sc.pulse(&d, LifecycleState::Running, 6_000_000);
    assert_eq!(sc.state("planner", 0), Some(LifecycleState::Running));
}

#[test]
fn terminated_components_stay_terminated() {
    let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
    let d = ModuleDescriptor::new("planner", 0, "1");
    running(&mut sc, &d, &[0.0]);
    sc.pulse(&d, LifecycleState::Terminated, 500_000);
    assert!(sc.check(60_000_000).is_empty());
    assert_eq!(sc.state("planner", 0), Some(LifecycleState::Terminated));
}

#[test]
fn pulses_from_unknown_components_are_ignored() {
    let mut sc = Supercomponent::new(ConfigurationSet::new()).unwrap();
    let d = ModuleDescriptor::new("ghost", 1, "1");
    assert_eq!(sc.pulse(&d, LifecycleState::Running, 0), PulseOutcome::UnknownDescriptor);
    assert_eq!(sc.state("ghost", 1), None);
}

#[test]
fn discovery_round_trip_on_the_bus() {
    let master = cfg("global.freq=100\nplanner.v=1\nplanner:2.v=7\nperception.range=40\n");
    let mut sc = Supercomponent::new(master).unwrap();
    let conf = InProcessConference::new();
    let sc_tx = conf.sender("supercomponent");
    let sc_inbox = std::sync::Arc::new(DataStore::fifo());
    conf.add_listener(Filter::types([type_id::DISCOVER, type_id::PULSE]).unwrap(), sc_inbox.clone())
        .unwrap();

    let client = DmcpClient::new(ModuleDescriptor::new("planner", 2, "1"));
    let tx = conf.sender("planner:2");
    let inbox = std::sync::Arc::new(DataStore::fifo());
    tx.add_listener(Filter::only(type_id::CONFIG_RESPONSE), inbox.clone()).unwrap();

    tx.send(client.discover_message(0));
    conf.deliver();
    for c in sc_inbox.drain() {
        if let Some(reply) = sc.handle(&c, 0) {
            sc_tx.send(reply);
        }
    }
    conf.deliver();
    let got: Vec<ConfigurationSet> = inbox.drain().iter().filter_map(|c| client.accept(c)).collect();
    assert_eq!(got.len(), 1);
    assert_eq!(pairs(&got[0]), map(&[("global.freq", "100"), ("planner.v", "7")]));
    assert_eq!(sc.state("planner", 2), Some(LifecycleState::Configured));

    // Another instance's reply is not ours.
    let other = DmcpClient::new(ModuleDescriptor::new("planner", 3, "1"));
    tx.send(other.discover_message(0));
    conf.deliver();
    for c in sc_inbox.drain() {
        sc_tx.send(sc.handle(&c, 0).unwrap());
    }
    conf.deliver();
    assert!(inbox.drain().iter().all(|c| client.accept(c).is_none()));
}
