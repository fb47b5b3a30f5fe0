//! Property oracles: pure functions of a scenario and its transcript.
//!
//! Every oracle states the setting and corruption budget under which its
//! property is promised and reports `OutOfContract` outside of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug};

use serde::{Deserialize, Serialize};

use super::config::{ProtocolKind, ScenarioConfig};
use super::scenario::{self, SYNC_HORIZON};
use crate::boxes::BoxKind;
use crate::engine::{Event, EventKind, Rule};
use crate::gadgets::Tok;
use crate::gc_star::{GcAuthStar, GcSabStar};
use crate::types::{PartyId, Round, Setting, Tag, Value};
use crate::Transcript;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    OutOfContract,
}

impl Verdict {
    pub fn letter(self) -> char {
        match self {
            Verdict::Pass => 'P',
            Verdict::Fail => 'F',
            Verdict::OutOfContract => 'O',
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::OutOfContract => "out-of-contract",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub verdict: Verdict,
    /// Why it failed: the offending records.
    pub detail: String,
    /// Scenario text that reproduces the failure.
    pub witness: Option<String>,
}

pub const GC_AUTH_PROPERTIES: [&str; 4] = ["gc.validity", "gc.consistency", "gc.termination", "gc_auth.cert_uniqueness"];
pub const GC_SAB_PROPERTIES: [&str; 4] = ["gc.validity", "gc.consistency", "gc.termination", "gc_sab.vote_uniqueness"];
pub const SYNC_PROPERTIES: [&str; 4] =
    ["sync.liveness", "sync.justification", "sync.totality_auth", "sync.totality_sab"];
pub const MV_PROPERTIES: [&str; 5] =
    ["mv.validity1", "mv.validity2", "mv.inclusion", "mv.liveness", "mv.validity_with_liveness"];
pub const GC3_PROPERTIES: [&str; 4] =
    ["gc3.graded_validity", "gc3.graded_consistency", "gc3.liveness", "gc3.intrusion_tolerance"];
pub const BA_PROPERTIES: [&str; 3] = ["ba.agreement", "ba.validity", "ba.termination"];
pub const JUG_PROPERTIES: [&str; 7] = [
    "jug.agreement",
    "jug.validity",
    "jug.termination",
    "jug.c1_only",
    "jug.halt_bound",
    "jug.early_halt",
    "jug.round_arithmetic",
];

/// Oracle names evaluated for `protocol`, in report order.
pub fn properties(protocol: ProtocolKind) -> &'static [&'static str] {
    match protocol {
        ProtocolKind::Juggernaut => &JUG_PROPERTIES,
        ProtocolKind::GcAuthStar => &GC_AUTH_PROPERTIES,
        ProtocolKind::GcSabStar => &GC_SAB_PROPERTIES,
        ProtocolKind::Sync => &SYNC_PROPERTIES,
        ProtocolKind::Mv => &MV_PROPERTIES,
        ProtocolKind::Gc3 => &GC3_PROPERTIES,
        ProtocolKind::BaAuth | ProtocolKind::BaSab => &BA_PROPERTIES,
    }
}

/// Runs every oracle registered for the scenario's protocol.
pub fn evaluate(cfg: &ScenarioConfig, t: &Transcript) -> Vec<PropertyReport> {
    let v = View::new(cfg, t);
    match cfg.protocol {
        ProtocolKind::Juggernaut => juggernaut(&v),
        ProtocolKind::GcAuthStar => gc_auth_star(&v),
        ProtocolKind::GcSabStar => gc_sab_star(&v),
        ProtocolKind::Sync => sync(&v),
        ProtocolKind::Mv => mv(&v),
        ProtocolKind::Gc3 => gc3(&v),
        ProtocolKind::BaAuth => ba(&v, Tag::BaAuth, cfg.constants.ba_auth, cfg.t_s),
        ProtocolKind::BaSab => ba(&v, Tag::BaSab, cfg.constants.ba_sab, cfg.t_i),
    }
}

fn check(name: &str, contract: bool, f: impl FnOnce() -> Result<(), String>) -> PropertyReport {
    let (verdict, detail) = if !contract {
        (Verdict::OutOfContract, String::new())
    } else {
        match f() {
            Ok(()) => (Verdict::Pass, String::new()),
            Err(e) => (Verdict::Fail, e),
        }
    };
    PropertyReport { name: name.to_string(), verdict, detail, witness: None }
}

type PerParty<T> = BTreeMap<PartyId, (Round, T)>;

struct View<'a> {
    cfg: &'a ScenarioConfig,
    t: &'a Transcript,
    honest: Vec<bool>,
    inputs: Vec<Value>,
    corrupt: usize,
}

impl<'a> View<'a> {
    fn new(cfg: &'a ScenarioConfig, t: &'a Transcript) -> Self {
        let n = t.params.n;
        View {
            cfg,
            t,
            honest: PartyId::all(n).map(|p| t.is_forever_honest(p)).collect(),
            inputs: cfg.inputs().unwrap_or_default(),
            corrupt: t.max_corrupt(),
        }
    }

    fn hon(&self) -> impl Iterator<Item = PartyId> + '_ {
        PartyId::all(self.honest.len()).filter(|p| self.honest[p.index()])
    }

    fn events(&self) -> impl Iterator<Item = &'a Event> + '_ {
        self.t.events.iter().filter(|e| self.honest[e.party.index()])
    }

    /// First matching event of every honest party.
    fn first<T>(&self, f: impl Fn(&EventKind) -> Option<T>) -> PerParty<T> {
        let mut out = BTreeMap::new();
        for e in self.events() {
            if out.contains_key(&e.party) {
                continue;
            }
            if let Some(x) = f(&e.kind) {
                out.insert(e.party, (e.round, x));
            }
        }
        out
    }

    /// Every matching event of honest parties.
    fn all<T>(&self, f: impl Fn(&EventKind) -> Option<T>) -> Vec<(PartyId, Round, T)> {
        self.events().filter_map(|e| f(&e.kind).map(|x| (e.party, e.round, x))).collect()
    }

    fn honest_inputs(&self) -> BTreeSet<Value> {
        self.hon().filter_map(|p| self.inputs.get(p.index()).copied()).collect()
    }

    fn unanimous(&self) -> Option<Value> {
        let set = self.honest_inputs();
        (set.len() == 1).then(|| *set.iter().next().expect("one value"))
    }

    fn in_budget(&self) -> bool {
        self.corrupt <= self.cfg.budget()
    }

    fn auth(&self, t: usize) -> bool {
        self.cfg.setting == Setting::Authenticated && self.corrupt <= t
    }

    fn sab(&self, t: usize) -> bool {
        self.cfg.setting == Setting::Sabotaged && self.corrupt <= t
    }

    /// Constraint the information-theoretic gadgets are analysed under.
    fn gadget_ok(&self) -> bool {
        self.cfg.t_i + 2 * self.cfg.t_s < self.cfg.n
    }

    fn missing<T>(&self, outs: &PerParty<T>) -> Vec<PartyId> {
        self.hon().filter(|p| !outs.contains_key(p)).collect()
    }
}

fn fail_if<T: Debug>(bad: Vec<T>, what: &str) -> Result<(), String> {
    if bad.is_empty() {
        Ok(())
    } else {
        Err(format!("{what}: {bad:?}"))
    }
}

// ---- two-grade graded consensus -------------------------------------------

fn graded(v: &View<'_>, tag: Tag) -> PerParty<(Value, u8)> {
    v.first(|k| match k {
        EventKind::Graded { tag: t, value, grade, .. } if *t == tag => Some((*value, *grade)),
        _ => None,
    })
}

/// Validity, consistency and termination of the two-grade definition.
/// `bound(p)` is the last round by which `p` must output.
/// A deadline hit counts against termination only when `inner_live`.
fn gc_def(
    v: &View<'_>,
    tag: Tag,
    full: bool,
    vt: bool,
    inner_live: bool,
    exact: bool,
    bound: impl Fn(PartyId) -> Round,
) -> Vec<PropertyReport> {
    let outs = graded(v, tag);
    let validity = check("gc.validity", vt, || {
        let Some(u) = v.unanimous() else { return Ok(()) };
        let bad: Vec<_> = v.hon().filter(|p| outs.get(p).map(|o| o.1) != Some((u, 1))).map(|p| (p, outs.get(&p))).collect();
        fail_if(bad, &format!("unanimous input {u} but outputs differ from ({u}, 1)"))
    });
    let consistency = check("gc.consistency", full, || {
        let Some((p, (_, (w, _)))) = outs.iter().find(|(_, (_, (_, g)))| *g == 1) else { return Ok(()) };
        let bad: Vec<_> = outs.iter().filter(|(_, (_, (x, _)))| x != w).map(|(q, o)| (*q, o.1)).collect();
        fail_if(bad, &format!("{p} output ({w}, 1) but"))
    });
    let deadline_hits = v.all(|k| matches!(k, EventKind::Deadline { tag: t } if *t == tag).then_some(()));
    let termination = check("gc.termination", vt, || {
        fail_if(v.missing(&outs), "no output")?;
        if inner_live {
            fail_if(deadline_hits.iter().map(|(p, r, _)| (*p, *r)).collect(), "inner protocol missed its deadline")?;
        }
        let bad: Vec<_> = outs
            .iter()
            .filter(|(p, (r, _))| if exact { *r != bound(**p) } else { *r > bound(**p) })
            .map(|(p, (r, _))| (*p, *r, bound(*p)))
            .collect();
        fail_if(bad, "(party, output round, bound)")
    });
    vec![validity, consistency, termination]
}

fn gc_auth_star(v: &View<'_>) -> Vec<PropertyReport> {
    let full = v.auth(v.cfg.t_s);
    let mut out = gc_def(v, Tag::GcAuthStar, full, v.in_budget(), true, true, |_| GcAuthStar::ROUNDS - 1);
    out.push(check("gc_auth.cert_uniqueness", full, || {
        let certs = v.all(|k| match k {
            EventKind::CertFormed { tag: Tag::GcAuthStar, value } => Some(*value),
            _ => None,
        });
        let values: BTreeSet<Value> = certs.iter().map(|c| c.2).collect();
        if values.len() > 1 {
            return Err(format!("certificates on different values: {certs:?}"));
        }
        Ok(())
    }));
    out
}

fn gc_sab_star(v: &View<'_>) -> Vec<PropertyReport> {
    let full = v.sab(v.cfg.t_i) && v.gadget_ok();
    let t2 = scenario::t_2(v.cfg);
    // Past t_i corruptions the inner gadget may stall; the wrapper then
    // outputs at its deadline, which is still within T_2.
    let inner_live = v.corrupt <= v.cfg.t_i && v.gadget_ok();
    let mut out = gc_def(v, Tag::GcSabStar, full, v.in_budget(), inner_live, false, |p| v.cfg.start_of(p) + t2 - 1);
    out.push(check("gc_sab.vote_uniqueness", v.in_budget(), || {
        let votes = v.all(|k| match k {
            EventKind::Voted { value } => Some(*value),
            _ => None,
        });
        let values: BTreeSet<Value> = votes.iter().map(|x| x.2).collect();
        if values.len() > 1 {
            return Err(format!("honest votes for different values: {votes:?}"));
        }
        Ok(())
    }));
    out
}

// ---- synchronizer ----------------------------------------------------------

fn sync(v: &View<'_>) -> Vec<PropertyReport> {
    let started = v.first(|k| match k {
        EventKind::SyncStarted { value } => Some(*value),
        _ => None,
    });
    let completed = v.first(|k| match k {
        EventKind::SyncCompleted { value, .. } => Some(*value),
        _ => None,
    });
    let auth = v.auth(v.cfg.t_s);

    let liveness = check("sync.liveness", auth, || {
        let starts: BTreeSet<(Round, Value)> = started.values().copied().collect();
        let (Some(&(rho, val)), true) = (starts.iter().next(), starts.len() == 1 && v.missing(&started).is_empty())
        else {
            return Ok(());
        };
        let bad: Vec<_> = v
            .hon()
            .filter(|p| !matches!(completed.get(p), Some((r, w)) if *r <= rho + 1 && *w == val))
            .map(|p| (p, completed.get(&p)))
            .collect();
        fail_if(bad, &format!("all started with {val} in round {rho}; not completed with it by {}", rho + 1))
    });

    let justification = check("sync.justification", auth, || {
        let bad: Vec<_> = completed
            .iter()
            .filter(|(_, (r, w))| !started.values().any(|(rs, ws)| ws == w && rs < r))
            .map(|(p, c)| (*p, *c))
            .collect();
        fail_if(bad, "completed with a value no honest party started with earlier")
    });

    let totality = |name: &str, contract: bool| {
        check(name, contract, || {
            let Some(rho) = completed.values().map(|(r, _)| *r).min() else { return Ok(()) };
            if rho + 1 > SYNC_HORIZON {
                return Ok(());
            }
            let bad: Vec<_> = v
                .hon()
                .filter(|p| !matches!(completed.get(p), Some((r, _)) if *r <= rho + 1))
                .map(|p| (p, completed.get(&p)))
                .collect();
            fail_if(bad, &format!("first completion in round {rho}; not completed by {}", rho + 1))
        })
    };
    vec![
        liveness,
        justification,
        totality("sync.totality_auth", auth),
        totality("sync.totality_sab", v.sab(v.cfg.t_i)),
    ]
}

// ---- multivalued broadcast -------------------------------------------------

fn mv(v: &View<'_>) -> Vec<PropertyReport> {
    let outs = v.first(|k| match k {
        EventKind::MvOutput { instance: 0, set } => Some(set.clone()),
        _ => None,
    });
    let s_ok = v.corrupt <= v.cfg.t_s && v.gadget_ok();
    let a_ok = v.corrupt <= v.cfg.t_i && v.gadget_ok();
    let inputs = v.honest_inputs();
    let unanimous = v.unanimous();

    let validity1 = check("mv.validity1", s_ok, || {
        let bad: Vec<_> = outs
            .iter()
            .filter(|(_, (_, s))| s.iter().any(|t| t.value().is_some_and(|w| !inputs.contains(&w))))
            .map(|(p, (_, s))| (*p, s.clone()))
            .collect();
        fail_if(bad, &format!("output holds a value outside the honest inputs {inputs:?}"))
    });
    let validity2 = check("mv.validity2", s_ok, || {
        if unanimous.is_none() {
            return Ok(());
        }
        let bad: Vec<_> =
            outs.iter().filter(|(_, (_, s))| s.contains(&Tok::BotMv)).map(|(p, (_, s))| (*p, s.clone())).collect();
        fail_if(bad, "unanimous input but an output contains the default")
    });
    let inclusion = check("mv.inclusion", a_ok, || {
        for (p, (_, s)) in &outs {
            if let [w] = s.as_slice() {
                let bad: Vec<_> =
                    outs.iter().filter(|(_, (_, s2))| !s2.contains(w)).map(|(q, (_, s2))| (*q, s2.clone())).collect();
                fail_if(bad, &format!("{p} output {{{w:?}}} but"))?;
            }
        }
        Ok(())
    });
    let liveness = check("mv.liveness", a_ok, || {
        fail_if(v.missing(&outs), "no output")?;
        let bad: Vec<_> = outs
            .iter()
            .filter(|(_, (_, s))| s.is_empty() || s.iter().any(|t| !t.is_val() && *t != Tok::BotMv))
            .map(|(p, (_, s))| (*p, s.clone()))
            .collect();
        fail_if(bad, "output outside V and the default")
    });
    let with_liveness = check("mv.validity_with_liveness", s_ok, || {
        let Some(u) = unanimous else { return Ok(()) };
        let bad: Vec<_> = v
            .hon()
            .filter(|p| outs.get(p).map(|o| o.1.as_slice()) != Some(&[Tok::Val(u)][..]))
            .map(|p| (p, outs.get(&p).map(|o| o.1.clone())))
            .collect();
        fail_if(bad, &format!("unanimous input {u} but output is not {{{u}}}"))
    });
    vec![validity1, validity2, inclusion, liveness, with_liveness]
}

// ---- three-grade graded consensus -----------------------------------------

fn gc3(v: &View<'_>) -> Vec<PropertyReport> {
    let outs = v.first(|k| match k {
        EventKind::Gc3Output { value, grade } => Some((*value, *grade)),
        _ => None,
    });
    let s_ok = v.corrupt <= v.cfg.t_s && v.gadget_ok();
    let a_ok = v.corrupt <= v.cfg.t_i && v.gadget_ok();
    let inputs = v.honest_inputs();

    let validity = check("gc3.graded_validity", s_ok, || {
        let Some(u) = v.unanimous() else { return Ok(()) };
        let bad: Vec<_> = v
            .hon()
            .filter(|p| outs.get(p).map(|o| o.1) != Some((Tok::Val(u), 2)))
            .map(|p| (p, outs.get(&p)))
            .collect();
        fail_if(bad, &format!("unanimous input {u} but output is not ({u}, 2)"))
    });
    let consistency = check("gc3.graded_consistency", a_ok, || {
        let grades: Vec<u8> = outs.values().map(|o| o.1 .1).collect();
        if let (Some(lo), Some(hi)) = (grades.iter().min(), grades.iter().max()) {
            if hi - lo > 1 {
                return Err(format!("grades differ by more than one: {outs:?}"));
            }
        }
        let strong: BTreeSet<Tok> = outs.values().filter(|o| o.1 .1 >= 1).map(|o| o.1 .0).collect();
        if strong.len() > 1 {
            return Err(format!("different values with grade at least one: {outs:?}"));
        }
        Ok(())
    });
    let liveness = check("gc3.liveness", a_ok, || {
        fail_if(v.missing(&outs), "no output")?;
        let bad: Vec<_> = outs
            .iter()
            .filter(|(_, (_, (t, g)))| !matches!((t, g), (Tok::Val(_), 1..=2) | (Tok::Bot, 0)))
            .map(|(p, o)| (*p, o.1))
            .collect();
        fail_if(bad, "output is neither (v, >=1) nor (bottom, 0)")
    });
    let intrusion = check("gc3.intrusion_tolerance", s_ok, || {
        let bad: Vec<_> = outs
            .iter()
            .filter(|(_, (_, (t, g)))| *g >= 1 && t.value().is_none_or(|w| !inputs.contains(&w)))
            .map(|(p, o)| (*p, o.1))
            .collect();
        fail_if(bad, &format!("grade >= 1 on a value outside the honest inputs {inputs:?}"))
    });
    vec![validity, consistency, liveness, intrusion]
}

// ---- agreement boxes -------------------------------------------------------

/// Whether a box of `kind` promises agreement against `corrupt` parties.
pub fn box_in_contract(kind: BoxKind, setting: Setting, corrupt: usize, t: usize, n: usize) -> bool {
    match kind {
        BoxKind::DolevStrong => setting == Setting::Authenticated && corrupt <= t,
        BoxKind::PhaseKing => corrupt <= t && n > 3 * t,
        BoxKind::Oracle => true,
        BoxKind::StallingDolevStrong | BoxKind::StallingPhaseKing => false,
    }
}

fn ba(v: &View<'_>, tag: Tag, kind: BoxKind, t: usize) -> Vec<PropertyReport> {
    let outs = v.first(|k| match k {
        EventKind::BoxOutput { tag: x, value } if *x == tag => Some(*value),
        _ => None,
    });
    let contract = v.in_budget() && box_in_contract(kind, v.cfg.setting, v.corrupt, t, v.cfg.n);
    let agreement = check("ba.agreement", contract, || {
        let values: BTreeSet<Value> = outs.values().filter_map(|o| o.1).collect();
        if values.len() > 1 {
            return Err(format!("different outputs: {outs:?}"));
        }
        Ok(())
    });
    let validity = check("ba.validity", contract, || {
        let Some(u) = v.unanimous() else { return Ok(()) };
        let bad: Vec<_> = v.hon().filter(|p| outs.get(p).map(|o| o.1) != Some(Some(u))).map(|p| (p, outs.get(&p))).collect();
        fail_if(bad, &format!("unanimous input {u} but"))
    });
    let termination = check("ba.termination", contract, || {
        let bound = kind.rounds(t);
        let bad: Vec<_> = v
            .hon()
            .filter(|p| !matches!(outs.get(p), Some((r, Some(_))) if *r <= bound))
            .map(|p| (p, outs.get(&p)))
            .collect();
        fail_if(bad, &format!("no output by round {bound}"))
    });
    vec![agreement, validity, termination]
}

// ---- the compiler ----------------------------------------------------------

fn juggernaut(v: &View<'_>) -> Vec<PropertyReport> {
    let cfg = v.cfg;
    let tm = scenario::timing(cfg);
    let auth = cfg.setting == Setting::Authenticated;
    let boxes_ok = if auth {
        box_in_contract(cfg.constants.ba_auth, cfg.setting, v.corrupt, cfg.t_s, cfg.n)
    } else {
        box_in_contract(cfg.constants.ba_sab, cfg.setting, v.corrupt, cfg.t_i, cfg.n)
    };
    let e2e = v.in_budget() && boxes_ok;
    let decisions: BTreeMap<PartyId, _> =
        v.t.decisions.iter().filter(|(p, _)| v.honest[p.index()]).map(|(p, d)| (*p, *d)).collect();

    let agreement = check("jug.agreement", e2e, || {
        let values: BTreeSet<Value> = decisions.values().map(|d| d.value).collect();
        if values.len() > 1 {
            return Err(format!("different decisions: {decisions:?}"));
        }
        Ok(())
    });
    let validity = check("jug.validity", e2e, || {
        let Some(u) = v.unanimous() else { return Ok(()) };
        let bad: Vec<_> = decisions.iter().filter(|(_, d)| d.value != u).map(|(p, d)| (*p, *d)).collect();
        fail_if(bad, &format!("unanimous input {u} but decided"))
    });
    let termination = check("jug.termination", e2e, || {
        let bad: Vec<PartyId> = v.hon().filter(|p| !decisions.contains_key(p)).collect();
        if v.t.hit_cap {
            return Err(format!("round cap {} hit; undecided: {bad:?}", v.t.rounds_run));
        }
        fail_if(bad, "undecided")
    });
    let c1_only = check("jug.c1_only", e2e && auth, || {
        let bad: Vec<_> = decisions.iter().filter(|(_, d)| d.rule != Rule::C1).map(|(p, d)| (*p, *d)).collect();
        fail_if(bad, "decided by a rule other than C1")?;
        match v.t.bytes(Tag::BaSab) {
            0 => Ok(()),
            b => Err(format!("{b} bytes tagged ba_sab")),
        }
    });
    let halt_bound = check("jug.halt_bound", e2e, || {
        let bound = tm.t_max + tm.t_sab + 1;
        let bad: Vec<_> = decisions.iter().filter(|(_, d)| d.round > bound).map(|(p, d)| (*p, d.round)).collect();
        fail_if(bad, &format!("decided after round {bound}"))
    });
    let early_halt = check("jug.early_halt", e2e && auth, || {
        let box_out = v.first(|k| matches!(k, EventKind::BoxOutput { tag: Tag::BaAuth, .. }).then_some(()));
        let synced = v.first(|k| matches!(k, EventKind::SyncCompleted { .. }).then_some(()));
        let exit = |p: PartyId| {
            let e = [box_out.get(&p).map(|x| x.0), synced.get(&p).map(|x| x.0)].into_iter().flatten().min();
            e.unwrap_or(tm.t_1 + tm.t_auth).max(tm.t_1)
        };
        let r = v.hon().map(exit).max().unwrap_or(0);
        let bound = r + tm.t_2 + 3;
        let bad: Vec<_> = decisions.iter().filter(|(_, d)| d.round > bound).map(|(p, d)| (*p, d.round)).collect();
        fail_if(bad, &format!("all exited BA_Auth by {r}; decided after {bound}"))
    });
    let arithmetic = check("jug.round_arithmetic", e2e, || round_arithmetic(v, &tm));
    vec![agreement, validity, termination, c1_only, halt_bound, early_halt, arithmetic]
}

fn round_arithmetic(v: &View<'_>, tm: &crate::juggernaut::Timing) -> Result<(), String> {
    if tm.t_1 != 3 + 4 || tm.t_max != tm.t_1 + tm.t_auth + tm.t_2 + 1 {
        return Err(format!("constants inconsistent: {tm:?}"));
    }
    let gc1 = graded(v, Tag::GcAuthStar);
    let bad: Vec<_> = gc1.iter().filter(|(_, (r, _))| r + 1 != tm.t_1).map(|(p, (r, _))| (*p, *r)).collect();
    fail_if(bad, &format!("first graded consensus must output in round {}", tm.t_1 - 1))?;

    let started = |tag: Tag| {
        v.all(move |k| match k {
            EventKind::Started { tag: t, .. } if *t == tag => Some(()),
            _ => None,
        })
    };
    let bad: Vec<_> = started(Tag::BaAuth).into_iter().filter(|x| x.1 != tm.t_1).map(|x| (x.0, x.1)).collect();
    fail_if(bad, &format!("BA_Auth must start in round {}", tm.t_1))?;
    let bad: Vec<_> = started(Tag::BaSab).into_iter().filter(|x| x.1 != tm.t_max).map(|x| (x.0, x.1)).collect();
    fail_if(bad, &format!("BA_Sab must start in round {}", tm.t_max))?;

    let sab_start: BTreeMap<PartyId, Round> = started(Tag::GcSabStar).into_iter().map(|x| (x.0, x.1)).collect();
    if let (Some(lo), Some(hi)) = (sab_start.values().min(), sab_start.values().max()) {
        if hi - lo > 1 || *lo < tm.t_1 || *hi > tm.step4_deadline {
            return Err(format!("second graded consensus starts out of range: {sab_start:?}"));
        }
    }
    // Each wrapper round spans two engine rounds: certificate in local round
    // 2, vote in 4, lock in 6.
    let phases = v.all(|k| match k {
        EventKind::CertFormed { tag: Tag::GcSabStar, .. } => Some(2),
        EventKind::Voted { .. } => Some(4),
        EventKind::Locked { tag: Tag::GcSabStar, .. } => Some(GcSabStar::INNER_START),
        _ => None,
    });
    let bad: Vec<_> = phases
        .into_iter()
        .filter(|(p, r, local)| sab_start.get(p).map(|s| s + local) != Some(*r))
        .map(|(p, r, local)| (p, r, local, sab_start.get(&p).copied()))
        .collect();
    fail_if(bad, "(party, round, expected local round, start)")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{InputSpec, StrategyKind};
    use crate::harness::scenario::run_scenario;
    use crate::Decision;

    fn verdict(reports: &[PropertyReport], name: &str) -> Verdict {
        reports.iter().find(|r| r.name == name).expect("oracle present").verdict
    }

    fn honest_run(protocol: ProtocolKind, inputs: Vec<u32>) -> (ScenarioConfig, Transcript) {
        let mut cfg = ScenarioConfig::new(protocol, 4, 1, 1, Setting::Authenticated);
        cfg.inputs = InputSpec::List(inputs.into_iter().map(Value).collect());
        let out = run_scenario(&cfg).unwrap();
        assert!(out.passed(), "{:?}", out.reports);
        (cfg, out.transcript)
    }

    #[test]
    fn agreement_oracle_catches_split_decision() {
        let (cfg, mut t) = honest_run(ProtocolKind::Juggernaut, vec![2, 2, 2, 2]);
        t.decisions.insert(PartyId(1), Decision { value: Value(5), rule: Rule::C1, round: 20 });
        let reports = evaluate(&cfg, &t);
        let r = reports.iter().find(|r| r.name == "jug.agreement").unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.detail.contains("p0") && r.detail.contains("p1"), "{}", r.detail);
        assert_eq!(verdict(&reports, "jug.validity"), Verdict::Fail);
    }

    #[test]
    fn c1_oracle_catches_ba_sab_bytes_and_late_rules() {
        let (cfg, mut t) = honest_run(ProtocolKind::Juggernaut, vec![1, 1, 0, 1]);
        t.bytes_by_tag.insert(Tag::BaSab, 8);
        assert_eq!(verdict(&evaluate(&cfg, &t), "jug.c1_only"), Verdict::Fail);
        let (_, mut t) = honest_run(ProtocolKind::Juggernaut, vec![1, 1, 0, 1]);
        t.decisions.get_mut(&PartyId(2)).unwrap().rule = Rule::C3;
        assert_eq!(verdict(&evaluate(&cfg, &t), "jug.c1_only"), Verdict::Fail);
    }

    #[test]
    fn termination_oracles_catch_missing_and_late_decisions() {
        let (cfg, mut t) = honest_run(ProtocolKind::Juggernaut, vec![0, 0, 0, 0]);
        t.decisions.remove(&PartyId(3));
        assert_eq!(verdict(&evaluate(&cfg, &t), "jug.termination"), Verdict::Fail);
        let (_, mut t) = honest_run(ProtocolKind::Juggernaut, vec![0, 0, 0, 0]);
        t.decisions.get_mut(&PartyId(0)).unwrap().round = 500;
        let reports = evaluate(&cfg, &t);
        assert_eq!(verdict(&reports, "jug.halt_bound"), Verdict::Fail);
        assert_eq!(verdict(&reports, "jug.early_halt"), Verdict::Fail);
    }

    #[test]
    fn round_arithmetic_oracle_catches_shifted_start() {
        let (cfg, mut t) = honest_run(ProtocolKind::Juggernaut, vec![0, 1, 0, 1]);
        for e in &mut t.events {
            if let EventKind::Started { tag: Tag::BaAuth, .. } = e.kind {
                e.round += 1;
            }
        }
        assert_eq!(verdict(&evaluate(&cfg, &t), "jug.round_arithmetic"), Verdict::Fail);
    }

    #[test]
    fn totality_oracle_catches_two_round_gap() {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Sync, 4, 1, 1, Setting::Authenticated);
        cfg.inputs = InputSpec::Unanimous(Value(4));
        let out = run_scenario(&cfg).unwrap();
        assert!(out.passed());
        let mut t = out.transcript;
        let e = t
            .events
            .iter_mut()
            .find(|e| e.party == PartyId(2) && matches!(e.kind, EventKind::SyncCompleted { .. }))
            .unwrap();
        e.round += 2;
        let reports = evaluate(&cfg, &t);
        assert_eq!(verdict(&reports, "sync.totality_auth"), Verdict::Fail);
        assert_eq!(verdict(&reports, "sync.liveness"), Verdict::Fail);
        assert_eq!(verdict(&reports, "sync.totality_sab"), Verdict::OutOfContract);
    }

    #[test]
    fn justification_oracle_catches_unstarted_value() {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Sync, 4, 1, 1, Setting::Authenticated);
        cfg.inputs = InputSpec::Unanimous(Value(4));
        let mut t = run_scenario(&cfg).unwrap().transcript;
        for e in &mut t.events {
            if let EventKind::SyncCompleted { value, .. } = &mut e.kind {
                *value = Value(9);
            }
        }
        assert_eq!(verdict(&evaluate(&cfg, &t), "sync.justification"), Verdict::Fail);
    }

    #[test]
    fn intrusion_oracle_catches_foreign_value() {
        let (cfg, mut t) = honest_run(ProtocolKind::Gc3, vec![0, 0, 1, 1]);
        for e in &mut t.events {
            if let EventKind::Gc3Output { value, grade } = &mut e.kind {
                *value = Tok::Val(Value(7));
                *grade = 1;
            }
        }
        let reports = evaluate(&cfg, &t);
        assert_eq!(verdict(&reports, "gc3.intrusion_tolerance"), Verdict::Fail);
        assert_eq!(verdict(&reports, "gc3.graded_consistency"), Verdict::Pass);
    }

    #[test]
    fn gc3_consistency_oracle_catches_grade_gap() {
        let (cfg, mut t) = honest_run(ProtocolKind::Gc3, vec![3, 3, 3, 3]);
        let e = t.events.iter_mut().find(|e| matches!(e.kind, EventKind::Gc3Output { .. })).unwrap();
        e.kind = EventKind::Gc3Output { value: Tok::Bot, grade: 0 };
        let reports = evaluate(&cfg, &t);
        assert_eq!(verdict(&reports, "gc3.graded_consistency"), Verdict::Fail);
        assert_eq!(verdict(&reports, "gc3.graded_validity"), Verdict::Fail);
    }

    #[test]
    fn mv_oracles_catch_foreign_value_and_broken_inclusion() {
        let (cfg, mut t) = honest_run(ProtocolKind::Mv, vec![5, 5, 5, 5]);
        let mut first = true;
        for e in &mut t.events {
            if let EventKind::MvOutput { set, .. } = &mut e.kind {
                if first {
                    first = false;
                } else {
                    *set = vec![Tok::Val(Value(8)), Tok::BotMv];
                }
            }
        }
        let reports = evaluate(&cfg, &t);
        for name in ["mv.validity1", "mv.validity2", "mv.inclusion", "mv.validity_with_liveness"] {
            assert_eq!(verdict(&reports, name), Verdict::Fail, "{name}");
        }
        assert_eq!(verdict(&reports, "mv.liveness"), Verdict::Pass);
    }

    #[test]
    fn gc_oracles_catch_split_grade_one_and_late_output() {
        let (cfg, mut t) = honest_run(ProtocolKind::GcAuthStar, vec![1, 1, 1, 1]);
        let e = t.events.iter_mut().find(|e| matches!(e.kind, EventKind::Graded { .. })).unwrap();
        e.kind = EventKind::Graded { tag: Tag::GcAuthStar, value: Value(0), grade: 1, locked_at: None };
        e.round += 1;
        let reports = evaluate(&cfg, &t);
        for name in ["gc.validity", "gc.consistency", "gc.termination"] {
            assert_eq!(verdict(&reports, name), Verdict::Fail, "{name}");
        }
    }

    #[test]
    fn over_budget_runs_are_out_of_contract() {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Juggernaut, 5, 2, 1, Setting::Authenticated);
        cfg.inputs = InputSpec::Unanimous(Value(1));
        cfg.adversary.strategy = StrategyKind::Equivocate;
        let out = run_scenario(&cfg).unwrap();
        // Two corruptions: in contract with signatures...
        assert_eq!(verdict(&out.reports, "jug.agreement"), Verdict::Pass);
        // ...but the same transcript judged as sabotaged is over budget.
        let mut sab = cfg.clone();
        sab.setting = Setting::Sabotaged;
        assert_eq!(verdict(&evaluate(&sab, &out.transcript), "jug.agreement"), Verdict::OutOfContract);
    }
}
