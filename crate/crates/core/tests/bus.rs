use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vtd::bus::{
    BusError, Conference, ConferenceId, DataStore, Filter, InProcessConference, StoreKind, UdpConference, UdpOptions,
};
use vtd::serialization::{Container, PayloadWriter};

fn tagged(type_id: u32, seq: u64) -> Container {
    Container::new(type_id, seq as i64, seq.to_le_bytes().to_vec())
}

#[test]
fn fan_out_reaches_each_listener_once() {
    let conf = InProcessConference::new();
    let stores: Vec<Arc<DataStore>> = (0..3).map(|_| Arc::new(DataStore::fifo())).collect();
    for s in &stores {
        conf.add_listener(Filter::All, Arc::clone(s)).unwrap();
    }
    let tx = conf.sender("a");
    tx.send(tagged(100, 1));
    assert!(stores.iter().all(|s| s.is_empty()));
    assert_eq!(conf.deliver(), 1);
    for s in &stores {
        assert_eq!(s.drain(), vec![tagged(100, 1)]);
    }
    assert_eq!(conf.deliver(), 0);
}

#[test]
fn send_without_listeners_is_dropped() {
    let conf = InProcessConference::new();
    conf.sender("a").send(tagged(100, 0));
    assert_eq!(conf.deliver(), 1);
    assert_eq!(conf.pending(), 0);
}

#[test]
fn fifo_preserves_send_order() {
    let conf = InProcessConference::new();
    let store = Arc::new(DataStore::fifo());
    conf.add_listener(Filter::All, Arc::clone(&store)).unwrap();
    let tx = conf.sender("a");
    for i in 0..100 {
        tx.send(tagged(100, i));
    }
    conf.deliver();
    let seqs: Vec<u64> = store
        .drain()
        .iter()
        .map(|c| u64::from_le_bytes(c.payload[..8].try_into().unwrap()))
        .collect();
    assert_eq!(seqs, (0..100).collect::<Vec<_>>());
}

#[test]
fn filters_and_store_kinds() {
    let conf = InProcessConference::new();
    let only42 = Arc::new(DataStore::fifo());
    let kv = Arc::new(DataStore::key_value());
    let lifo = Arc::new(DataStore::lifo());
    conf.add_listener(Filter::only(42), Arc::clone(&only42)).unwrap();
    conf.add_listener(Filter::All, Arc::clone(&kv)).unwrap();
    conf.add_listener(Filter::All, Arc::clone(&lifo)).unwrap();
    let tx = conf.sender("a");
    tx.send(tagged(42, 1));
    tx.send(tagged(7, 2));
    tx.send(tagged(42, 3));
    conf.deliver();
    assert_eq!(only42.drain(), vec![tagged(42, 1), tagged(42, 3)]);
    assert_eq!(kv.len(), 2);
    assert_eq!(kv.get(42), Some(tagged(42, 3)));
    assert_eq!(kv.get(7), Some(tagged(7, 2)));
    assert_eq!(lifo.take(), Some(tagged(42, 3)));
}

#[test]
fn listener_registration_errors() {
    let conf = InProcessConference::new();
    let store = Arc::new(DataStore::fifo());
    conf.add_listener(Filter::All, Arc::clone(&store)).unwrap();
    assert!(matches!(
        conf.add_listener(Filter::All, Arc::clone(&store)),
        Err(BusError::DuplicateListener)
    ));
    assert!(matches!(Filter::types([]), Err(BusError::EmptyFilter)));
    assert!(ConferenceId::new(0).is_err());
    assert!(ConferenceId::new(255).is_err());
}

#[test]
fn delivery_is_ordered_by_sender_registration() {
    let conf = InProcessConference::new();
    let store = Arc::new(DataStore::fifo());
    conf.add_listener(Filter::All, Arc::clone(&store)).unwrap();
    let a = conf.sender("a");
    let b = conf.sender("b");
    b.send(tagged(100, 10));
    a.send(tagged(100, 20));
    b.send(tagged(100, 11));
    conf.deliver();
    let order: Vec<i64> = store.drain().iter().map(|c| c.sent_timestamp).collect();
    assert_eq!(order, [20, 10, 11]);
}

/// Reference behaviour of each store kind, kept deliberately naive.
enum Model {
    Fifo(VecDeque<Container>),
    Lifo(Vec<Container>),
    Kv(Vec<Container>),
}

impl Model {
    fn push(&mut self, c: Container, cap: Option<usize>) {
        match self {
            Model::Fifo(q) => {
                if cap.is_some_and(|k| q.len() >= k) {
                    q.pop_front();
                }
                q.push_back(c);
            }
            Model::Lifo(v) => {
                if cap.is_some_and(|k| v.len() >= k) {
                    v.remove(0);
                }
                v.push(c);
            }
            Model::Kv(v) => {
                // Oldest update first; replacing an entry moves it to the back.
                if let Some(i) = v.iter().position(|e| e.data_type_id == c.data_type_id) {
                    v.remove(i);
                } else if cap.is_some_and(|k| v.len() >= k) {
                    v.remove(0);
                }
                v.push(c);
            }
        }
    }

    fn take(&mut self) -> Option<Container> {
        match self {
            Model::Fifo(q) => q.pop_front(),
            Model::Lifo(v) => v.pop(),
            Model::Kv(v) => (!v.is_empty()).then(|| v.remove(0)),
        }
    }

    fn len(&self) -> usize {
        match self {
            Model::Fifo(q) => q.len(),
            Model::Lifo(v) | Model::Kv(v) => v.len(),
        }
    }
}

#[test]
fn stores_match_model_under_random_traffic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in [StoreKind::Fifo, StoreKind::Lifo, StoreKind::KeyValue] {
        for cap in [None, Some(5), Some(64)] {
            let store = DataStore::new(kind, cap);
            let mut model = match kind {
                StoreKind::Fifo => Model::Fifo(VecDeque::new()),
                StoreKind::Lifo => Model::Lifo(Vec::new()),
                StoreKind::KeyValue => Model::Kv(Vec::new()),
            };
            let mut latest: BTreeMap<u32, Container> = BTreeMap::new();
            for seq in 0..10_000u64 {
                if rng.random_bool(0.6) {
                    let c = tagged(rng.random_range(100..120), seq);
                    latest.insert(c.data_type_id, c.clone());
                    store.push(c.clone());
                    model.push(c, cap);
                } else {
                    assert_eq!(store.take(), model.take());
                }
                assert_eq!(store.len(), model.len());
                if kind == StoreKind::KeyValue {
                    let id = rng.random_range(100..120);
                    if let Some(c) = store.get(id) {
                        assert_eq!(Some(&c), latest.get(&id));
                    }
                }
            }
        }
    }
}

#[test]
fn store_hands_over_between_threads() {
    let store = Arc::new(DataStore::fifo());
    let producer = {
        let store = Arc::clone(&store);
        std::thread::spawn(move || {
            for i in 0..1000 {
                store.push(tagged(100, i));
            }
        })
    };
    let mut got = Vec::new();
    while got.len() < 1000 {
        let c = store.wait_take(Duration::from_secs(5)).expect("producer stalled");
        got.push(c.sent_timestamp);
    }
    producer.join().unwrap();
    assert_eq!(got, (0..1000).collect::<Vec<_>>());
}

#[test]
fn udp_loopback_fan_out() {
    let id = ConferenceId::new(201).unwrap();
    let conf = match UdpConference::join(id, UdpOptions { loopback: true }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("multicast unavailable, skipping: {e}");
            return;
        }
    };
    let stores: Vec<Arc<DataStore>> = (0..3).map(|_| Arc::new(DataStore::fifo())).collect();
    for s in &stores {
        conf.add_listener(Filter::only(150), Arc::clone(s)).unwrap();
    }
    let mut w = PayloadWriter::new();
    w.put_str("greeting", "hello");
    let c = Container::new(150, 99, w.finish());
    // Undecodable datagrams are dropped without stopping the receiver.
    let mut junk = Container::new(150, 0, Vec::new()).encode();
    junk.extend_from_slice(b"hello");
    if let Err(e) = conf.send_frame(&junk) {
        eprintln!("multicast send failed, skipping: {e}");
        return;
    }
    conf.send(&c).unwrap();
    conf.send(&Container::new(151, 0, Vec::new())).unwrap();
    for s in &stores {
        let got = s.wait_take(Duration::from_secs(2));
        if got.is_none() && conf.datagrams_received() == 0 {
            eprintln!("no multicast loopback in this environment, skipping");
            return;
        }
        assert_eq!(got, Some(c.clone()));
    }
    let deadline = Instant::now() + Duration::from_millis(200);
    while Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(20));
    }
    assert!(stores.iter().all(|s| s.is_empty()));
    assert!(matches!(
        conf.send(&Container::new(150, 0, vec![0; 70_000])),
        Err(BusError::Oversized { .. })
    ));
}
