use std::collections::BTreeSet;

use juggernaut_core::crypto::{Crypto, Domain, KeyRegistry, Provenance, Statement};
use juggernaut_core::harness::{
    execute, run_scenario, Action, InputSpec, ProtocolKind, ScenarioConfig, Script, StrategyKind, Verdict,
};
use juggernaut_core::{PartyId, Setting, Value};
use proptest::prelude::*;

const DOMAINS: [Domain; 8] = [
    Domain::GcAuthInit,
    Domain::InnerEcho,
    Domain::InnerVote,
    Domain::SyncFinish,
    Domain::GcSabEcho,
    Domain::GcSabVote,
    Domain::Decide,
    Domain::DsChain,
];

fn statement() -> impl Strategy<Value = Statement> {
    (0..DOMAINS.len(), 0u16..4, 0u32..6).prop_map(|(d, slot, v)| Statement::with_slot(DOMAINS[d], slot, Value(v)))
}

fn setting() -> impl Strategy<Value = Setting> {
    prop_oneof![Just(Setting::Authenticated), Just(Setting::Sabotaged)]
}

/// `(n, t_s, t_i)` satisfying the model's resilience bounds.
fn sizes() -> impl Strategy<Value = (usize, usize, usize)> {
    (4usize..=7, 1usize..=3, 0usize..=2)
        .prop_filter("resilience", |&(n, t_s, t_i)| 2 * t_i + t_s < n && t_i <= t_s && 2 * t_s < n)
}

fn action(n: usize) -> impl Strategy<Value = Action> {
    let mut all = vec![Action::Honest];
    all.extend(Action::space(n, true));
    proptest::sample::select(all)
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (
        0..ProtocolKind::ALL.len(),
        sizes(),
        setting(),
        0..StrategyKind::ALL.len(),
        any::<u64>(),
        1u32..4,
        0u32..2,
        proptest::collection::vec(action(7), 3),
    )
        .prop_map(|(p, (n, t_s, t_i), setting, s, seed, k, skew, acts)| {
            let protocol = ProtocolKind::ALL[p];
            let mut cfg = ScenarioConfig::new(protocol, n, t_s, t_i, setting);
            cfg.seed = seed;
            cfg.inputs = InputSpec::Random(k);
            cfg.adversary.strategy = StrategyKind::ALL[s];
            if cfg.adversary.strategy == StrategyKind::Script {
                let mut script = Script::new(vec![0, 2, 5]);
                // Masks beyond the party count are harmless: unused bits.
                script.actions.insert(PartyId(n as u16 - 1), acts);
                cfg.adversary.script = Some(script);
            }
            if protocol.allows_skew() {
                cfg.start.skew = skew as _;
            }
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn too_few_signers_never_certify(stmt in statement(), k in 1usize..5, signers in proptest::collection::btree_set(0u16..5, 0..5), setting in setting()) {
        let c = Crypto::new(setting, KeyRegistry::setup(5, 11));
        let signed: Vec<_> = signers.iter().map(|&i| (PartyId(i), stmt, c.sign(PartyId(i), &stmt).unwrap())).collect();
        match c.aggregate(&signed, k) {
            Ok(cert) => {
                prop_assert!(signers.len() >= k);
                prop_assert!(c.verify_cert(&cert, &stmt, k));
            }
            Err(_) => prop_assert!(signers.len() < k),
        }
        // A genuine-looking certificate padded with fake contributors fails.
        let forged_bits = juggernaut_core::crypto::Certificate {
            statement: stmt,
            threshold: k,
            contributors: signers.iter().take(k.saturating_sub(1)).map(|&i| PartyId(i)).collect(),
            digest: 0,
            provenance: Provenance::Genuine,
        };
        prop_assert!(!c.verify_cert(&forged_bits, &stmt, k));
    }

    #[test]
    fn forged_material_verifies_only_when_sabotaged(stmt in statement(), k in 1usize..5, signer in 0u16..5) {
        let sab = Crypto::new(Setting::Sabotaged, KeyRegistry::setup(5, 3));
        let auth = Crypto::new(Setting::Authenticated, KeyRegistry::setup(5, 3));
        prop_assert!(auth.forge(&stmt, k).is_err());
        prop_assert!(auth.forge_signature(PartyId(signer), &stmt).is_err());
        let cert = sab.forge(&stmt, k).unwrap();
        let tok = sab.forge_signature(PartyId(signer), &stmt).unwrap();
        prop_assert!(sab.verify_cert(&cert, &stmt, k));
        prop_assert!(sab.verify(PartyId(signer), &stmt, &tok));
        prop_assert!(!auth.verify_cert(&cert, &stmt, k));
        prop_assert!(!auth.verify(PartyId(signer), &stmt, &tok));
    }

    #[test]
    fn certificates_do_not_transfer_between_statements(a in statement(), b in statement(), setting in setting()) {
        prop_assume!(a != b);
        let c = Crypto::new(setting, KeyRegistry::setup(4, 5));
        let signed: Vec<_> = (0..3).map(|i| (PartyId(i), a, c.sign(PartyId(i), &a).unwrap())).collect();
        let cert = c.aggregate(&signed, 3).unwrap();
        prop_assert!(!c.verify_cert(&cert, &b, 3));
        prop_assert!(!c.verify_cert(&c.tamper(&cert, b), &b, 3));
        prop_assert!(!c.verify(PartyId(0), &b, &signed[0].2));
    }

    #[test]
    fn config_text_round_trips(cfg in scenario()) {
        prop_assume!(cfg.validate().is_ok());
        let back = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn script_text_round_trips(acts in proptest::collection::vec(action(5), 1..5), party in 0u16..5) {
        let mut script = Script::new((0..acts.len() as u64).map(|i| 3 * i).collect());
        script.actions.insert(PartyId(party), acts);
        prop_assert_eq!(script.to_string().parse::<Script>().unwrap(), script);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_deterministic(cfg in scenario()) {
        prop_assume!(cfg.validate().is_ok());
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }

    /// No oracle ever fails inside its contract, whatever the protocol,
    /// sizes, setting, adversary and inputs.
    #[test]
    fn oracles_hold_in_contract(cfg in scenario()) {
        prop_assume!(cfg.validate().is_ok());
        let out = run_scenario(&cfg).unwrap();
        let failed: Vec<_> = out.failures().map(|r| format!("{}: {}", r.name, r.detail)).collect();
        prop_assert!(failed.is_empty(), "{}\n{}", cfg.to_text(), failed.join("\n"));
    }

    #[test]
    fn authenticated_runs_accept_no_forgeries(mut cfg in scenario()) {
        cfg.setting = Setting::Authenticated;
        prop_assume!(cfg.validate().is_ok());
        let t = execute(&cfg).unwrap();
        prop_assert_eq!(t.forged_accepted, 0);
    }

    #[test]
    fn honest_set_shrinks_only_by_corruption(cfg in scenario()) {
        prop_assume!(cfg.validate().is_ok());
        let t = execute(&cfg).unwrap();
        let corrupted: BTreeSet<PartyId> = t.corruptions.iter().map(|c| c.1).collect();
        prop_assert!(corrupted.len() <= cfg.budget());
        prop_assert_eq!(t.forever_honest.len() + corrupted.len(), cfg.n);
        prop_assert!(t.honest_events().all(|e| !corrupted.contains(&e.party)));
    }
}

#[test]
fn out_of_contract_is_never_reported_as_pass() {
    // Stalling boxes promise nothing; their oracles must say so.
    let mut cfg = ScenarioConfig::new(ProtocolKind::BaAuth, 4, 1, 1, Setting::Authenticated);
    cfg.constants.ba_auth = juggernaut_core::boxes::BoxKind::StallingDolevStrong;
    let out = run_scenario(&cfg).unwrap();
    assert!(out.reports.iter().all(|r| r.verdict == Verdict::OutOfContract));
}
