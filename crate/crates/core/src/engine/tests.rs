use super::*;
use crate::types::Value;

#[derive(Clone, Debug, Serialize)]
struct Ping(Value);

impl Payload for Ping {
    fn tag(&self) -> Tag {
        Tag::Sync
    }

    fn byte_size(&self, _lambda: usize) -> usize {
        5
    }
}

/// Multicasts once in `send_round`, logs every delivery, stops at round 6.
struct Pinger {
    send_round: Round,
    seen: Vec<(Round, PartyId, Value)>,
    round: Round,
}

impl Party for Pinger {
    type Msg = Ping;

    fn on_round(&mut self, cx: &mut Cx<'_, Ping>, inbox: &[(PartyId, Ping)]) {
        self.round = cx.round;
        for (from, Ping(v)) in inbox {
            self.seen.push((cx.round, *from, *v));
        }
        if cx.round == self.send_round {
            cx.multicast(Ping(Value(cx.me.0 as u32)));
        }
    }

    fn is_done(&self) -> bool {
        self.round >= 6
    }
}

fn cfg(setting: Setting) -> EngineConfig {
    EngineConfig { params: Params::new(4, 1, 1), setting, seed: 9, max_rounds: 50, record: true }
}

fn pinger(send_round: Round) -> impl Fn(PartyId) -> Pinger {
    move |_| Pinger { send_round, seen: Vec::new(), round: 0 }
}

/// Corrupts a fixed set and injects scripted envelopes in one round.
struct Script {
    corrupt: BTreeSet<PartyId>,
    at: Round,
    injections: Vec<Injection<Ping>>,
    saw_honest: usize,
}

impl Adversary<Pinger> for Script {
    fn name(&self) -> String {
        "script".into()
    }

    fn corrupt_set(&mut self, _round: Round) -> BTreeSet<PartyId> {
        self.corrupt.clone()
    }

    fn act(&mut self, view: &AdversaryView<'_, Ping>) -> Vec<Injection<Ping>> {
        if view.round == self.at {
            self.saw_honest = view.honest_sent.len();
            std::mem::take(&mut self.injections)
        } else {
            Vec::new()
        }
    }
}

#[test]
fn delivery_happens_exactly_one_round_later() {
    let mut world = World::new(cfg(Setting::Authenticated), pinger(3)).unwrap();
    for _ in 0..5 {
        world.step(&mut NoAdversary).unwrap();
    }
    for p in PartyId::all(4) {
        let seen = &world.party(p).unwrap().seen;
        assert_eq!(seen.len(), 4);
        assert!(seen.iter().all(|(r, _, _)| *r == 4));
    }
}

#[test]
fn empty_round_only_advances_clock() {
    let mut world = World::new(cfg(Setting::Authenticated), pinger(99)).unwrap();
    world.step(&mut NoAdversary).unwrap();
    assert_eq!(world.round(), 1);
    assert_eq!(world.transcript().bytes_total_honest, 0);
    assert!(world.transcript().rounds[0].envelopes.is_empty());
}

#[test]
fn multicast_bytes_count_every_copy() {
    let t = run(cfg(Setting::Authenticated), pinger(0), &mut NoAdversary).unwrap();
    assert_eq!(t.bytes_total_honest, 4 * 4 * 5);
    assert_eq!(t.bytes(Tag::Sync), 80);
    assert_eq!(t.messages(Tag::Sync), 16);
}

#[test]
fn transcripts_are_deterministic() {
    let a = run(cfg(Setting::Sabotaged), pinger(1), &mut NoAdversary).unwrap();
    let b = run(cfg(Setting::Sabotaged), pinger(1), &mut NoAdversary).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.digest.is_some());
}

#[test]
fn injection_claiming_honest_sender_is_dropped() {
    let mut adv = Script {
        corrupt: BTreeSet::from([PartyId(3)]),
        at: 1,
        injections: vec![
            Injection { sender: PartyId(0), recipient: PartyId(1), msg: Ping(Value(77)) },
            Injection { sender: PartyId(3), recipient: PartyId(1), msg: Ping(Value(78)) },
        ],
        saw_honest: 0,
    };
    let mut world = World::new(cfg(Setting::Authenticated), pinger(1)).unwrap();
    for _ in 0..3 {
        world.step(&mut adv).unwrap();
    }
    // Rushing: the three honest multicasts of round 1 were visible.
    assert_eq!(adv.saw_honest, 12);
    assert_eq!(world.transcript().rejected_injections, 1);
    let seen = &world.party(PartyId(1)).unwrap().seen;
    assert!(!seen.iter().any(|(_, _, v)| *v == Value(77)));
    assert!(seen.contains(&(2, PartyId(3), Value(78))));
}

#[test]
fn corruption_over_budget_fails_the_run() {
    let mut adv = Script {
        corrupt: BTreeSet::from([PartyId(2), PartyId(3)]),
        at: 0,
        injections: Vec::new(),
        saw_honest: 0,
    };
    let err = run(cfg(Setting::Sabotaged), pinger(0), &mut adv).unwrap_err();
    assert!(matches!(err, Error::Budget { count: 2, budget: 1, .. }));
}

#[test]
fn uncorrupting_is_rejected() {
    struct Flip;
    impl Adversary<Pinger> for Flip {
        fn name(&self) -> String {
            "flip".into()
        }
        fn corrupt_set(&mut self, round: Round) -> BTreeSet<PartyId> {
            if round == 0 {
                BTreeSet::from([PartyId(1)])
            } else {
                BTreeSet::new()
            }
        }
        fn act(&mut self, _view: &AdversaryView<'_, Ping>) -> Vec<Injection<Ping>> {
            Vec::new()
        }
    }
    let err = run(cfg(Setting::Authenticated), pinger(0), &mut Flip).unwrap_err();
    assert!(matches!(err, Error::Uncorrupt { party: PartyId(1), round: 1 }));
}

#[test]
fn invalid_resilience_is_rejected() {
    let mut c = cfg(Setting::Authenticated);
    c.params = Params::new(4, 2, 1);
    assert!(matches!(World::new(c, pinger(0)), Err(Error::Resilience(_))));
}

#[test]
fn round_cap_is_flagged() {
    let mut c = cfg(Setting::Authenticated);
    c.max_rounds = 3;
    let t = run(c, pinger(0), &mut NoAdversary).unwrap();
    assert!(t.hit_cap);
    assert_eq!(t.rounds_run, 3);
}
