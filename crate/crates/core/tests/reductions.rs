use std::collections::BTreeSet;
use std::rc::Rc;

use prooflist::ops::Ret;
use prooflist::reductions::{propose_via_evote, uncommit, AnonAtConsensus, AtomicEVote, SharedToken};
use prooflist::apps::{pour, Token, Wallet};
use prooflist::scenario::{run_seed, RunStatus, Scenario, OBJECT};
use prooflist::sim::{RandomScheduler, Sim, SimOptions};
use prooflist::{ProcessId, Value};

fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(format!("{}/../../scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
    Scenario::from_toml(&text).unwrap()
}

fn decisions(sc: &Scenario, seed: u64) -> BTreeSet<Value> {
    let r = run_seed(sc, seed);
    assert_eq!(r.status, RunStatus::Pass, "{} seed {seed}: {:#?}", sc.name, r.checks);
    r.history
        .operations(OBJECT)
        .into_iter()
        .filter_map(|o| match o.ret {
            Some(Ret::Decided(v)) => Some(v),
            _ => None,
        })
        .collect()
}

#[test]
fn every_reduction_agrees_on_a_proposed_value() {
    for name in ["consensus-denylist", "consensus-anon-at", "consensus-evote"] {
        let sc = load(name);
        let proposed: BTreeSet<Value> = ["a", "b", "c"].into_iter().map(Value::from).collect();
        let mut seen = BTreeSet::new();
        for seed in 0..200 {
            let d = decisions(&sc, seed);
            assert_eq!(d.len(), 1, "{name} seed {seed}: {d:?}");
            assert!(d.is_subset(&proposed));
            seen.extend(d);
        }
        assert!(seen.len() > 1, "{name}: the same value always won");
    }
}

#[test]
fn without_crashes_everyone_decides() {
    for name in ["consensus-denylist", "consensus-anon-at", "consensus-evote"] {
        let mut sc = load(name);
        for p in &mut sc.processes {
            p.crash_after = None;
        }
        for seed in 0..100 {
            let r = run_seed(&sc, seed);
            let decided = r.history.operations(OBJECT).iter().filter(|o| matches!(o.ret, Some(Ret::Decided(_)))).count();
            assert_eq!(decided, 3, "{name} seed {seed}");
        }
    }
}

#[test]
fn uncommit_matches_only_the_seed_that_poured() {
    let source = Wallet::from_secret("w", Value::from("sk"));
    let shared = SharedToken {
        token: Token::mint(Value::from("serial"), source.pk.clone()),
        source,
        recipient: Value::from("sink"),
    };
    let seeds: Vec<Value> = (1..=4).map(|p| AnonAtConsensus::seed_for(ProcessId(p))).collect();
    for used in &seeds {
        let (tx, _) = pour(&shared.token, &shared.recipient, &shared.source.sk, used).unwrap();
        let hits: Vec<&Value> = seeds.iter().filter(|s| uncommit(s, &shared, &tx.binding)).collect();
        assert_eq!(hits, vec![used]);
    }
}

#[test]
fn atomic_evote_counts_the_first_ballot() {
    for seed in 0..50 {
        let evote = Rc::new(AtomicEVote::default());
        let decided = Rc::new(std::cell::RefCell::new(Vec::new()));
        let mut sim = Sim::new(SimOptions::default());
        for p in 1..=3u32 {
            let (evote, decided) = (evote.clone(), decided.clone());
            sim.spawn(ProcessId(p), move |ctx| async move {
                let v = propose_via_evote(&ctx, "c", &evote, Value::from(format!("v{p}"))).await?;
                decided.borrow_mut().push(v);
                Ok(())
            });
        }
        let out = sim.run(&mut RandomScheduler::new(seed)).unwrap();
        let decided = decided.borrow();
        assert_eq!(decided.len(), 3);
        assert!(decided.iter().all(|d| *d == decided[0]));
        assert_eq!(out.consensus_cells, 0);
    }
}
