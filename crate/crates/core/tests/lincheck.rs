use prooflist::lincheck::{check, find_flicker, replay_witness, ArraySpec};
use prooflist::ops::{Call, Ret};
use prooflist::scenario::{linearizability_verdict, run_seed, Scenario};
use prooflist::sim::{Event, EventKind, History, LpMarker};
use prooflist::{ProcessId, Value};

fn history(events: Vec<(u32, EventKind)>) -> History {
    History {
        events: events
            .into_iter()
            .enumerate()
            .map(|(i, (p, kind))| Event { event_id: i as u64, process: ProcessId(p), object: "s".into(), kind })
            .collect(),
    }
}

fn respond(op: &str, ret: Ret) -> EventKind {
    EventKind::Respond { op: op.into(), ret }
}

fn update_then_scan(view: Vec<Option<&str>>) -> History {
    history(vec![
        (1, EventKind::Invoke(Call::Update("a".into()))),
        (1, respond("update", Ret::Ack)),
        (2, EventKind::Invoke(Call::Scan)),
        (2, respond("scan", Ret::View(view.into_iter().map(|v| v.map(Value::from)).collect()))),
    ])
}

#[test]
fn scan_must_see_an_update_that_completed_before_it() {
    let spec = ArraySpec { width: 2 };
    let good = update_then_scan(vec![Some("a"), None]);
    let v = check(&spec, &good.operations("s"), 20).unwrap();
    assert!(v.linearizable && replay_witness(&spec, &good.operations("s"), &v.witness));

    let stale = update_then_scan(vec![None, None]);
    let v = check(&spec, &stale.operations("s"), 20).unwrap();
    assert!(!v.linearizable);
    let violation = v.violation.unwrap();
    assert_eq!(violation.longest_prefix, vec![0]);
    assert_eq!(violation.unplaced, vec![1]);
}

#[test]
fn a_crashed_update_may_or_may_not_take_effect() {
    let spec = ArraySpec { width: 2 };
    for seen in [Some("a"), None] {
        let h = history(vec![
            (1, EventKind::Invoke(Call::Update("a".into()))),
            (1, EventKind::Crash),
            (2, EventKind::Invoke(Call::Scan)),
            (2, respond("scan", Ret::View(vec![seen.map(Value::from), None]))),
        ]);
        assert!(check(&spec, &h.operations("s"), 20).unwrap().linearizable, "{seen:?}");
    }
}

#[test]
fn histories_survive_a_jsonl_round_trip() {
    let h = update_then_scan(vec![Some("a"), None]);
    assert_eq!(History::from_jsonl(&h.to_jsonl()).unwrap(), h);

    for name in ["denylist-smoke", "anon-at-race", "evote-same-token", "consensus-anon-at"] {
        let text = std::fs::read_to_string(format!("{}/../../scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let sc = Scenario::from_toml(&text).unwrap();
        let r = run_seed(&sc, 3);
        let parsed = History::from_jsonl(&r.history.to_jsonl()).unwrap();
        assert_eq!(parsed, r.history, "{name}");
        assert!(parsed.is_well_formed());
        if let Some(verdict) = linearizability_verdict(&sc, &parsed) {
            assert!(verdict.unwrap().linearizable, "{name}");
        }
    }
}

#[test]
fn malformed_history_lines_are_rejected() {
    assert!(History::from_jsonl(r#"{"event_id":0,"process":1}"#).is_err());
    assert!(History::from_jsonl(r#"{"event_id":0,"process":1,"kind":"respond","object":"s"}"#).is_err());
    assert!(History::from_jsonl(r#"{"event_id":0,"process":1,"kind":"invoke","object":"s","op":"scan","extra":1}"#).is_err());
}

#[test]
fn flicker_is_an_invalid_marker_followed_by_a_valid_one() {
    let marker = |valid| EventKind::Lp(LpMarker { value: "x".into(), valid, owner: ProcessId(2) });
    let h = history(vec![(2, marker(true)), (3, marker(false))]);
    assert!(find_flicker(&h, "s").is_none());
    let h = history(vec![(3, marker(false)), (2, marker(true))]);
    let f = find_flicker(&h, "s").unwrap();
    assert_eq!(f.value, Value::from("x"));
    assert!(f.invalid_at < f.valid_at);
}
