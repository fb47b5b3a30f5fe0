//! The compiler: graded consensus with signatures, authenticated agreement,
//! synchronizer, graded consensus without signatures, a decide round, and the
//! information-theoretic agreement as the last resort.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::boxes::{Board, BoxKind, BoxMachine, BoxMsg};
use crate::crypto::{Domain, SignatureToken, Statement};
use crate::engine::{Cx, EventKind, Party, Payload, Rule};
use crate::gc_star::{GcAuthMsg, GcAuthStar, GcOutput, GcSabMsg, GcSabStar};
use crate::protocol::{Machine, Slot};
use crate::sync::{Completion, Sync, SyncMsg};
use crate::types::{Params, PartyId, Round, Tag, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum JugMsg {
    GcAuth(GcAuthMsg),
    BaAuth(BoxMsg),
    Sync(SyncMsg),
    GcSab(GcSabMsg),
    Decide { value: Value, sig: SignatureToken },
    BaSab(BoxMsg),
}

impl Payload for JugMsg {
    fn tag(&self) -> Tag {
        match self {
            JugMsg::GcAuth(m) => m.tag(),
            JugMsg::BaAuth(_) => Tag::BaAuth,
            JugMsg::Sync(m) => m.tag(),
            JugMsg::GcSab(m) => m.tag(),
            JugMsg::Decide { .. } => Tag::Decide,
            JugMsg::BaSab(_) => Tag::BaSab,
        }
    }

    fn byte_size(&self, lambda: usize) -> usize {
        match self {
            JugMsg::GcAuth(m) => m.byte_size(lambda),
            JugMsg::BaAuth(m) | JugMsg::BaSab(m) => m.byte_size(lambda),
            JugMsg::Sync(m) => m.byte_size(lambda),
            JugMsg::GcSab(m) => m.byte_size(lambda),
            JugMsg::Decide { .. } => 1 + 4 + lambda,
        }
    }
}

pub(crate) fn decide_stmt(v: Value) -> Statement {
    Statement::new(Domain::Decide, v)
}

/// Which agreement boxes fill the two slots, and the inner budget of the
/// second graded consensus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JugConfig {
    pub ba_auth: BoxKind,
    pub ba_sab: BoxKind,
    pub t_inner_sab: Round,
}

impl Default for JugConfig {
    fn default() -> Self {
        JugConfig {
            ba_auth: BoxKind::DolevStrong,
            ba_sab: BoxKind::PhaseKing,
            t_inner_sab: GcSabStar::DEFAULT_INNER_ROUNDS,
        }
    }
}

/// Round constants of one instance. All are global rounds except the
/// durations `t_*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub t_1: Round,
    pub t_auth: Round,
    pub t_2: Round,
    pub t_sab: Round,
    /// `T_1 + T_Auth + T_2 + 1`: the round the last-resort agreement starts.
    pub t_max: Round,
    /// Round by which a party enters step 4 even without synchronizing.
    pub step4_deadline: Round,
}

impl Timing {
    pub fn new(params: &Params, cfg: &JugConfig) -> Self {
        let t_1 = GcAuthStar::ROUNDS;
        let t_auth = cfg.ba_auth.rounds(params.t_s);
        let t_2 = GcSabStar::rounds(cfg.t_inner_sab);
        let t_sab = cfg.ba_sab.rounds(params.t_i);
        Timing {
            t_1,
            t_auth,
            t_2,
            t_sab,
            t_max: t_1 + t_auth + t_2 + 1,
            step4_deadline: t_1 + t_auth + 1,
        }
    }

    /// Last round in which an honest party may still be undecided in an
    /// in-contract run.
    pub fn last_decision(&self) -> Round {
        self.t_max + self.t_sab
    }
}

/// Per-party state.
#[derive(Debug)]
pub struct Juggernaut {
    input: Value,
    cfg: JugConfig,
    timing: Timing,
    boards: (Board, Board),
    gc_auth: Slot<GcAuthStar>,
    v1: Option<GcOutput>,
    ba_auth: Slot<BoxMachine>,
    v2: Option<Value>,
    sync: Sync,
    synced: Option<Completion>,
    gc_sab: Slot<GcSabStar>,
    v3: Option<Value>,
    v4: Option<GcOutput>,
    output_1: bool,
    output_2: bool,
    decides: BTreeMap<PartyId, Value>,
    ba_sab: Slot<BoxMachine>,
    v_sab: Option<Value>,
    decided: Option<(Value, Rule, Round)>,
}

impl Juggernaut {
    /// `boards` back the ideal boxes, if those are configured; one per slot,
    /// shared by all parties of a run.
    pub fn new(params: &Params, input: Value, cfg: JugConfig, boards: (Board, Board)) -> Self {
        Juggernaut {
            input,
            cfg,
            timing: Timing::new(params, &cfg),
            boards,
            gc_auth: Slot::default(),
            v1: None,
            ba_auth: Slot::default(),
            v2: None,
            sync: Sync::new(),
            synced: None,
            gc_sab: Slot::default(),
            v3: None,
            v4: None,
            output_1: false,
            output_2: false,
            decides: BTreeMap::new(),
            ba_sab: Slot::default(),
            v_sab: None,
            decided: None,
        }
    }

    pub fn timing(&self) -> Timing {
        self.timing
    }

    pub fn decision(&self) -> Option<(Value, Rule, Round)> {
        self.decided
    }

    pub fn gc_sab_start(&self) -> Option<Round> {
        self.gc_sab.get().map(GcSabStar::start_round)
    }

    fn run_sub<M: Machine>(
        slot: &mut Slot<M>,
        cx: &mut Cx<'_, JugMsg>,
        inbox: &[(PartyId, M::Msg)],
        start: Option<M>,
        wrap: impl Fn(M::Msg) -> JugMsg,
    ) {
        let mut sub = cx.child();
        match start {
            Some(m) => slot.start(m, &mut sub, inbox),
            None => slot.step(&mut sub, inbox),
        }
        cx.absorb(sub, wrap);
    }

    fn decide(&mut self, cx: &mut Cx<'_, JugMsg>, value: Value, rule: Rule) {
        self.decided = Some((value, rule, cx.round));
        cx.emit(EventKind::Decided { value, rule });
    }

    fn check_decision(&mut self, cx: &mut Cx<'_, JugMsg>) {
        let n = cx.params.n;
        let count = |v: Value| self.decides.values().filter(|w| **w == v).count();
        if self.output_1 {
            if let Some(out) = self.v4 {
                if count(out.value) >= n - cx.params.t_s {
                    return self.decide(cx, out.value, Rule::C1);
                }
            }
        }
        if self.output_2 {
            let weak = n - cx.params.t_s - cx.params.t_i;
            let mut tally: BTreeMap<Value, usize> = BTreeMap::new();
            for v in self.decides.values() {
                *tally.entry(*v).or_default() += 1;
            }
            if let Some((v, _)) = tally.iter().find(|(_, c)| **c >= weak) {
                return self.decide(cx, *v, Rule::C2);
            }
            let v = self.v_sab.unwrap_or(Value::BOTTOM);
            self.decide(cx, v, Rule::C3);
        }
    }
}

impl Party for Juggernaut {
    type Msg = JugMsg;

    fn on_round(&mut self, cx: &mut Cx<'_, JugMsg>, inbox: &[(PartyId, JugMsg)]) {
        let r = cx.round;
        let tm = self.timing;
        let mut gc_auth_in = Vec::new();
        let mut ba_auth_in = Vec::new();
        let mut sync_in = Vec::new();
        let mut gc_sab_in = Vec::new();
        let mut ba_sab_in = Vec::new();
        for (from, msg) in inbox {
            match msg {
                JugMsg::GcAuth(m) => gc_auth_in.push((*from, m.clone())),
                JugMsg::BaAuth(m) => ba_auth_in.push((*from, m.clone())),
                JugMsg::Sync(m) => sync_in.push((*from, m.clone())),
                JugMsg::GcSab(m) => gc_sab_in.push((*from, m.clone())),
                JugMsg::BaSab(m) => ba_sab_in.push((*from, m.clone())),
                JugMsg::Decide { value, sig } => {
                    if self.decides.contains_key(from) {
                        cx.note_duplicate();
                    } else if cx.crypto.verify(*from, &decide_stmt(*value), sig) {
                        self.decides.insert(*from, *value);
                    }
                }
            }
        }

        // Step 1.
        let start = (r == 0).then(|| {
            cx.emit(EventKind::Started { tag: Tag::GcAuthStar, input: self.input });
            GcAuthStar::new(0, self.input)
        });
        Self::run_sub(&mut self.gc_auth, cx, &gc_auth_in, start, JugMsg::GcAuth);
        if self.v1.is_none() {
            self.v1 = self.gc_auth.output();
        }

        // Synchronizer messages are handled before the agreement box so that a
        // completion aborts a box that has not output yet.
        let mut sub = cx.child();
        if let Some(done) = self.sync.on_messages(&mut sub, &sync_in) {
            self.synced = Some(done);
            if self.v2.is_none() && self.ba_auth.is_started() {
                self.ba_auth.abort();
            }
        }
        cx.absorb(sub, JugMsg::Sync);

        // Steps 2 and 3.
        if self.synced.is_none() || self.v2.is_some() {
            if r == tm.t_1 {
                let v1 = self.v1.expect("first graded consensus outputs in T_1 rounds").value;
                cx.emit(EventKind::Started { tag: Tag::BaAuth, input: v1 });
                let board = self.boards.0.clone();
                let m = BoxMachine::new(Tag::BaAuth, self.cfg.ba_auth, r, v1, cx.params.t_s, &board);
                Self::run_sub(&mut self.ba_auth, cx, &ba_auth_in, Some(m), JugMsg::BaAuth);
            } else if r > tm.t_1 && self.ba_auth.is_started() && self.v2.is_none() {
                Self::run_sub(&mut self.ba_auth, cx, &ba_auth_in, None, JugMsg::BaAuth);
            }
            if self.v2.is_none() {
                if let Some(out) = self.ba_auth.output() {
                    let v2 = out.unwrap_or(Value::BOTTOM);
                    self.v2 = Some(v2);
                    if !v2.is_bottom() {
                        let mut sub = cx.child();
                        self.sync.start(v2, &mut sub);
                        cx.absorb(sub, JugMsg::Sync);
                    }
                }
            }
        }

        // Step 4.
        if self.v3.is_none() && r >= tm.t_1 && (self.synced.is_some() || r >= tm.step4_deadline) {
            let v1 = self.v1.expect("first graded consensus done");
            let v3 = match (v1.grade, self.synced) {
                (1, _) => v1.value,
                (_, Some(c)) => c.value,
                _ => v1.value,
            };
            self.v3 = Some(v3);
            cx.emit(EventKind::Started { tag: Tag::GcSabStar, input: v3 });
            let m = GcSabStar::new(r, v3, tm.t_2);
            Self::run_sub(&mut self.gc_sab, cx, &gc_sab_in, Some(m), JugMsg::GcSab);
        } else {
            Self::run_sub(&mut self.gc_sab, cx, &gc_sab_in, None, JugMsg::GcSab);
        }

        // Steps 5 to 7.
        if self.v4.is_none() {
            if let Some(out) = self.gc_sab.output() {
                self.v4 = Some(out);
                if r < tm.t_max {
                    self.output_1 = true;
                }
                if out.grade == 1 {
                    let sig = cx.crypto.sign(cx.me, &decide_stmt(out.value)).expect("registered");
                    cx.multicast(JugMsg::Decide { value: out.value, sig });
                }
            }
        }

        // Steps 8 and 9.
        if r > tm.t_max && self.ba_sab.is_started() && !self.output_2 {
            Self::run_sub(&mut self.ba_sab, cx, &ba_sab_in, None, JugMsg::BaSab);
            if let Some(out) = self.ba_sab.output() {
                self.v_sab = out;
                self.output_2 = true;
            }
        }

        self.check_decision(cx);

        if self.decided.is_none() && r == tm.t_max {
            self.output_1 = false;
            let v4 = self.v4.map_or(self.input, |o| o.value);
            cx.emit(EventKind::Started { tag: Tag::BaSab, input: v4 });
            let board = self.boards.1.clone();
            let m = BoxMachine::new(Tag::BaSab, self.cfg.ba_sab, r, v4, cx.params.t_i, &board);
            Self::run_sub(&mut self.ba_sab, cx, &ba_sab_in, Some(m), JugMsg::BaSab);
        }
    }

    fn is_done(&self) -> bool {
        self.decided.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::new_board;
    use crate::engine::{run, EngineConfig, NoAdversary};
    use crate::types::Setting;

    fn all_honest(n: usize, t_s: usize, t_i: usize, setting: Setting, inputs: &[u32]) -> crate::Transcript {
        let params = Params::new(n, t_s, t_i);
        let cfg = JugConfig::default();
        let boards = (new_board(), new_board());
        let inputs = inputs.to_vec();
        let ecfg = EngineConfig { params, setting, seed: 1, max_rounds: 200, record: false };
        run(ecfg, |p| Juggernaut::new(&params, Value(inputs[p.index()]), cfg, boards.clone()), &mut NoAdversary)
            .unwrap()
    }

    #[test]
    fn unanimous_all_honest_decides_by_c1() {
        for setting in [Setting::Authenticated, Setting::Sabotaged] {
            let t = all_honest(4, 1, 1, setting, &[3, 3, 3, 3]);
            assert!(!t.hit_cap);
            assert_eq!(t.decisions.len(), 4);
            for d in t.decisions.values() {
                assert_eq!((d.value, d.rule), (Value(3), Rule::C1));
            }
            assert_eq!(t.bytes(Tag::BaSab), 0);
        }
    }

    #[test]
    fn mixed_inputs_agree() {
        let t = all_honest(5, 2, 1, Setting::Authenticated, &[0, 1, 0, 1, 2]);
        let vals: Vec<Value> = t.decisions.values().map(|d| d.value).collect();
        assert_eq!(vals.len(), 5);
        assert!(vals.windows(2).all(|w| w[0] == w[1]));
        assert!(t.decisions.values().all(|d| d.rule == Rule::C1));
    }

    #[test]
    fn timing_constants() {
        let tm = Timing::new(&Params::new(4, 1, 1), &JugConfig::default());
        assert_eq!(tm.t_1, 7);
        assert_eq!(tm.t_auth, 3);
        assert_eq!(tm.t_max, tm.t_1 + tm.t_auth + tm.t_2 + 1);
        assert_eq!(tm.t_sab, 6);
        assert_eq!(tm.t_2, 6 + 18);
    }
}
