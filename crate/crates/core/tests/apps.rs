use prooflist::crypto::{
    blind_commit, blind_sign_roundtrip, verify_signature, BlindSigKeys, BlindingNonce, Issuer, ProofBlob,
};
use prooflist::ops::{Call, Ret};
use prooflist::scenario::{run_for_tally, run_seed, Program, RunStatus, Scenario, OpSpec, OBJECT};
use prooflist::sim::{RandomScheduler, ScriptedScheduler};
use prooflist::{ProcessId, Value};

fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(format!("{}/../../scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
    Scenario::from_toml(&text).unwrap()
}

fn transfer(to: &str) -> OpSpec {
    OpSpec::Transfer { token: "t".into(), to: to.into() }
}

fn vote(token: &str, choice: &str) -> OpSpec {
    OpSpec::Vote { token: token.into(), choice: choice.into() }
}

fn rets(sc: &Scenario, seed: u64) -> Vec<(ProcessId, Option<Ret>)> {
    let r = run_seed(sc, seed);
    assert_eq!(r.status, RunStatus::Pass, "seed {seed}: {:#?}", r.checks);
    r.history.operations(OBJECT).into_iter().map(|o| (o.process, o.ret)).collect()
}

#[test]
fn racing_spends_of_one_token_create_at_most_one_child() {
    let sc = load("anon-at-race");
    for seed in 0..300 {
        let winners = rets(&sc, seed).into_iter().filter(|(_, r)| matches!(r, Some(Ret::Token(_)))).count();
        assert!(winners <= 1, "seed {seed}");
    }
}

#[test]
fn a_token_cannot_be_spent_again_after_a_completed_transfer() {
    let mut sc = load("anon-at-race");
    sc.processes = vec![
        Program { id: 1, ops: vec![transfer("w1"), OpSpec::Barrier], crash_after: None },
        Program { id: 2, ops: vec![OpSpec::Barrier, transfer("w2")], crash_after: None },
    ];
    for seed in 0..200 {
        let r = rets(&sc, seed);
        assert!(matches!(r[0], (ProcessId(1), Some(Ret::Token(_)))), "seed {seed}: {r:?}");
        assert_eq!(r[1], (ProcessId(2), Some(Ret::Bool(false))), "seed {seed}");
    }
}

#[test]
fn only_processes_mapped_to_the_wallet_can_spend_from_it() {
    let mut sc = load("anon-at-race");
    sc.anon_at.as_mut().unwrap().wallets.insert("w0".into(), vec![1]);
    sc.processes.truncate(2);
    for seed in 0..50 {
        let r = rets(&sc, seed);
        assert!(matches!(r.iter().find(|(p, _)| *p == ProcessId(1)).unwrap().1, Some(Ret::Token(_))));
        assert_eq!(r.iter().find(|(p, _)| *p == ProcessId(2)).unwrap().1, Some(Ret::Bool(false)));
    }
}

#[test]
fn mock_zk_records_carry_commitments_only() {
    let sc = load("anon-at-race");
    let r = run_seed(&sc, 7);
    let mut proofs = 0;
    for object in r.history.objects() {
        for op in r.history.operations(&object) {
            let Some(Ret::Records(records)) = &op.ret else { continue };
            for rec in records {
                proofs += 1;
                assert!(matches!(rec.proof, ProofBlob::MockZk { .. }), "{:?}", rec.proof);
            }
        }
    }
    assert!(proofs > 0);
}

#[test]
fn one_ballot_is_counted_once_and_forged_ballots_never() {
    let sc = load("evote-same-token");
    for seed in 0..300 {
        let (report, tally) = run_for_tally(&sc, &mut RandomScheduler::new(seed));
        assert_eq!(report.status, RunStatus::Pass, "seed {seed}: {:#?}", report.checks);
        let tally = tally.unwrap();
        assert!(tally.len() <= 1, "seed {seed}: {tally:?}");
        assert!(tally.iter().all(|e| e.token == Value::from("b1") && e.choice == Value::from("yes")));
        let forged = report
            .history
            .operations(OBJECT)
            .into_iter()
            .find(|o| matches!(&o.call, Call::Vote { token, .. } if *token == Value::from("forged")))
            .unwrap();
        assert_eq!(forged.ret, Some(Ret::Bool(false)));
    }
}

#[test]
fn conflicting_choices_in_lockstep_count_nothing() {
    let mut sc = load("evote-same-token");
    sc.processes = vec![
        Program { id: 1, ops: vec![vote("b1", "yes")], crash_after: None },
        Program { id: 2, ops: vec![vote("b1", "no")], crash_after: None },
    ];
    let script: Vec<ProcessId> = (0..400).map(|i| ProcessId(1 + i % 2)).collect();
    let (report, tally) = run_for_tally(&sc, &mut ScriptedScheduler::new(script, RandomScheduler::new(0)));
    assert_eq!(report.status, RunStatus::Pass, "{:#?}", report.checks);
    assert_eq!(tally.unwrap(), vec![]);
    for op in report.history.operations(OBJECT) {
        assert_eq!(op.ret, Some(Ret::Bool(false)));
    }
}

#[test]
fn issuer_only_sees_blinded_messages() {
    let issuer = Issuer::new(BlindSigKeys::setup(b"issuer"));
    let m = Value::from("ballot-7");
    let nonces = [BlindingNonce("n1".into()), BlindingNonce("n2".into())];
    for nonce in &nonces {
        let (msg, sig) = blind_sign_roundtrip(&m, &issuer, nonce);
        assert_eq!(msg, m);
        assert!(verify_signature(&sig, &m, &issuer.public()));
        assert!(!verify_signature(&sig, &Value::from("ballot-8"), &issuer.public()));
    }
    let log = issuer.call_log();
    assert_eq!(log, nonces.iter().map(|n| blind_commit(&m, n)).collect::<Vec<_>>());
    assert_ne!(log[0], log[1], "two issuances of one message look unrelated");
    let logged = serde_json::to_string(&log).unwrap();
    for secret in [m.to_string(), "n1".into(), "n2".into()] {
        assert!(!logged.contains(&secret));
    }
}
