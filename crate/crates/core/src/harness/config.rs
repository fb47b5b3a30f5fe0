//! Scenario configuration and its text format.
//!
//! ```text
//! # comment
//! [scenario]
//! protocol = juggernaut      # juggernaut | gc_auth_star | gc_sab_star | sync | mv | gc3 | ba_auth | ba_sab
//! n = 4
//! t_s = 1
//! t_i = 1
//! setting = sabotaged        # authenticated | sabotaged
//! seed = 7
//! inputs = 0,0,1,1           # or unanimous:V, or random:K (values 0..K drawn from the seed)
//! record = true
//!
//! [adversary]
//! strategy = equivocate      # none | silent | crash | equivocate | forger | random | adaptive | script
//! corrupt = 3                # default: the highest `budget` ids
//! crash_round = 4
//! every = 3                  # adaptive: rounds between corruptions
//! values = 0,1               # the two values pushed around
//! script = 0/2/4;3:a/e5/fb   # phase starts, then per-party actions per phase
//!
//! [start]
//! skew = 1                   # 0 or 1
//! late = 1,3                 # parties starting one round late (default: odd ids)
//! never = 2                  # sync only: parties that never start
//!
//! [constants]
//! lambda = 32
//! t_inner_sab = 18
//! ba_auth = dolev_strong
//! ba_sab = phase_king
//! max_rounds = 400
//! ```
//!
//! Sections may come in any order; keys outside a section, unknown sections
//! and unknown keys are errors.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::script::Script;
use crate::boxes::BoxKind;
use crate::error::{Error, Result};
use crate::gc_star::GcSabStar;
use crate::types::{Params, PartyId, Round, Setting, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Juggernaut,
    GcAuthStar,
    GcSabStar,
    Sync,
    Mv,
    Gc3,
    BaAuth,
    BaSab,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 8] = [
        ProtocolKind::Juggernaut,
        ProtocolKind::GcAuthStar,
        ProtocolKind::GcSabStar,
        ProtocolKind::Sync,
        ProtocolKind::Mv,
        ProtocolKind::Gc3,
        ProtocolKind::BaAuth,
        ProtocolKind::BaSab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Juggernaut => "juggernaut",
            ProtocolKind::GcAuthStar => "gc_auth_star",
            ProtocolKind::GcSabStar => "gc_sab_star",
            ProtocolKind::Sync => "sync",
            ProtocolKind::Mv => "mv",
            ProtocolKind::Gc3 => "gc3",
            ProtocolKind::BaAuth => "ba_auth",
            ProtocolKind::BaSab => "ba_sab",
        }
    }

    /// Protocols whose honest parties may start one round apart.
    pub fn allows_skew(self) -> bool {
        matches!(self, ProtocolKind::GcSabStar | ProtocolKind::Sync | ProtocolKind::Mv | ProtocolKind::Gc3)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown protocol `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    List(Vec<Value>),
    Unanimous(Value),
    /// Uniform in `0..k`, drawn from the scenario seed.
    Random(u32),
}

impl InputSpec {
    pub fn resolve(&self, n: usize, seed: u64) -> Result<Vec<Value>> {
        match self {
            InputSpec::List(v) if v.len() == n => Ok(v.clone()),
            InputSpec::List(v) => Err(Error::Config(format!("inputs: expected {n} values, got {}", v.len()))),
            InputSpec::Unanimous(v) => Ok(vec![*v; n]),
            InputSpec::Random(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a2b_3c4d);
                Ok((0..n).map(|_| Value(rng.gen_range(0..(*k).max(1)))).collect())
            }
        }
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::List(v) => f.write_str(&join(v.iter().map(|x| x.0))),
            InputSpec::Unanimous(v) => write!(f, "unanimous:{}", v.0),
            InputSpec::Random(k) => write!(f, "random:{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    None,
    Silent,
    Crash,
    Equivocate,
    Forger,
    Random,
    Adaptive,
    Script,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::None,
        StrategyKind::Silent,
        StrategyKind::Crash,
        StrategyKind::Equivocate,
        StrategyKind::Forger,
        StrategyKind::Random,
        StrategyKind::Adaptive,
        StrategyKind::Script,
    ];

    /// The scripted strategy library used by sweeps.
    pub const LIBRARY: [StrategyKind; 6] = [
        StrategyKind::Silent,
        StrategyKind::Crash,
        StrategyKind::Equivocate,
        StrategyKind::Forger,
        StrategyKind::Random,
        StrategyKind::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::Silent => "silent",
            StrategyKind::Crash => "crash",
            StrategyKind::Equivocate => "equivocate",
            StrategyKind::Forger => "forger",
            StrategyKind::Random => "random",
            StrategyKind::Adaptive => "adaptive",
            StrategyKind::Script => "script",
        }
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub strategy: StrategyKind,
    /// `None` means the highest `budget` ids.
    pub corrupt: Option<Vec<PartyId>>,
    pub crash_round: Round,
    pub every: Round,
    pub values: (Value, Value),
    pub script: Option<Script>,
}

impl Default for AdversarySpec {
    fn default() -> Self {
        AdversarySpec {
            strategy: StrategyKind::None,
            corrupt: None,
            crash_round: 3,
            every: 3,
            values: (Value(0), Value(1)),
            script: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartSpec {
    pub skew: Round,
    /// `None` means odd ids when `skew = 1`.
    pub late: Option<Vec<PartyId>>,
    pub never: Vec<PartyId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub lambda: usize,
    pub t_inner_sab: Round,
    pub ba_auth: BoxKind,
    pub ba_sab: BoxKind,
    /// `None` means the protocol's default cap.
    pub max_rounds: Option<Round>,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            lambda: 32,
            t_inner_sab: GcSabStar::DEFAULT_INNER_ROUNDS,
            ba_auth: BoxKind::DolevStrong,
            ba_sab: BoxKind::PhaseKing,
            max_rounds: None,
        }
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub t_s: usize,
    pub t_i: usize,
    pub setting: Setting,
    pub seed: u64,
    pub inputs: InputSpec,
    pub record: bool,
    pub adversary: AdversarySpec,
    pub start: StartSpec,
    pub constants: Constants,
}

impl ScenarioConfig {
    pub fn new(protocol: ProtocolKind, n: usize, t_s: usize, t_i: usize, setting: Setting) -> Self {
        ScenarioConfig {
            protocol,
            n,
            t_s,
            t_i,
            setting,
            seed: 0,
            inputs: InputSpec::Unanimous(Value(0)),
            record: false,
            adversary: AdversarySpec::default(),
            start: StartSpec::default(),
            constants: Constants::default(),
        }
    }

    pub fn params(&self) -> Params {
        Params { n: self.n, t_s: self.t_s, t_i: self.t_i, lambda: self.constants.lambda }
    }

    pub fn budget(&self) -> usize {
        self.params().budget(self.setting)
    }

    pub fn inputs(&self) -> Result<Vec<Value>> {
        self.inputs.resolve(self.n, self.seed)
    }

    /// Parties the adversary controls at some point of the run.
    pub fn corrupt(&self) -> Vec<PartyId> {
        if self.adversary.strategy == StrategyKind::None {
            return Vec::new();
        }
        match &self.adversary.corrupt {
            Some(c) => c.clone(),
            None => {
                let b = self.budget();
                PartyId::all(self.n).skip(self.n - b).collect()
            }
        }
    }

    /// Start round of `p`.
    pub fn start_of(&self, p: PartyId) -> Round {
        if self.start.skew == 0 {
            return 0;
        }
        let late = match &self.start.late {
            Some(l) => l.contains(&p),
            None => p.0 % 2 == 1,
        };
        if late {
            self.start.skew
        } else {
            0
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        self.inputs()?;
        if self.start.skew > 1 {
            return Err(Error::Config(format!("skew must be 0 or 1, got {}", self.start.skew)));
        }
        if self.start.skew > 0 && !self.protocol.allows_skew() {
            return Err(Error::Config(format!("protocol {} does not allow start skew", self.protocol)));
        }
        if !self.start.never.is_empty() && self.protocol != ProtocolKind::Sync {
            return Err(Error::Config("`never` only applies to sync".into()));
        }
        let ids = self
            .adversary
            .corrupt
            .iter()
            .flatten()
            .chain(self.start.late.iter().flatten())
            .chain(self.start.never.iter());
        for p in ids {
            if p.index() >= self.n {
                return Err(Error::Config(format!("party {} out of range for n = {}", p.0, self.n)));
            }
        }
        if self.corrupt().len() > self.budget() {
            return Err(Error::Config(format!(
                "{} corrupt parties exceed the {} budget of {}",
                self.corrupt().len(),
                self.setting,
                self.budget()
            )));
        }
        if self.adversary.strategy == StrategyKind::Script && self.adversary.script.is_none() {
            return Err(Error::Config("strategy = script needs a `script` key".into()));
        }
        if self.constants.t_inner_sab == 0 {
            return Err(Error::Config("t_inner_sab must be positive".into()));
        }
        Ok(())
    }

    /// Parses the text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::new(ProtocolKind::Juggernaut, 0, 0, 0, Setting::Authenticated);
        let mut section: Option<String> = None;
        let mut seen_n = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Config(format!("line {}: {msg}", i + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["scenario", "adversary", "start", "constants"].contains(&name) {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.as_deref().ok_or_else(|| at(format!("key `{key}` outside a section")))?;
            cfg.set(sec, key, value).map_err(|e| at(e.to_string()))?;
            seen_n |= sec == "scenario" && key == "n";
        }
        if !seen_n {
            return Err(Error::Config("missing `n` in [scenario]".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key; also used for command-line overrides.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} `{value}`"));
        let num = |what: &str| value.parse::<u64>().map_err(|_| bad(what));
        match (section, key) {
            ("scenario", "protocol") => self.protocol = value.parse()?,
            ("scenario", "n") => self.n = num("n")? as usize,
            ("scenario", "t_s") => self.t_s = num("t_s")? as usize,
            ("scenario", "t_i") => self.t_i = num("t_i")? as usize,
            ("scenario", "setting") => {
                self.setting = match value {
                    "authenticated" => Setting::Authenticated,
                    "sabotaged" => Setting::Sabotaged,
                    _ => return Err(bad("setting")),
                }
            }
            ("scenario", "seed") => self.seed = num("seed")?,
            ("scenario", "inputs") => self.inputs = parse_inputs(value)?,
            ("scenario", "record") => self.record = value.parse().map_err(|_| bad("record"))?,
            ("adversary", "strategy") => self.adversary.strategy = value.parse()?,
            ("adversary", "corrupt") => self.adversary.corrupt = Some(parse_ids(value)?),
            ("adversary", "crash_round") => self.adversary.crash_round = num("crash_round")?,
            ("adversary", "every") => self.adversary.every = num("every")?.max(1),
            ("adversary", "values") => {
                let v = parse_values(value)?;
                if v.len() != 2 {
                    return Err(bad("values (need two)"));
                }
                self.adversary.values = (v[0], v[1]);
            }
            ("adversary", "script") => self.adversary.script = Some(value.parse()?),
            ("start", "skew") => self.start.skew = num("skew")?,
            ("start", "late") => self.start.late = Some(parse_ids(value)?),
            ("start", "never") => self.start.never = parse_ids(value)?,
            ("constants", "lambda") => self.constants.lambda = num("lambda")? as usize,
            ("constants", "t_inner_sab") => self.constants.t_inner_sab = num("t_inner_sab")?,
            ("constants", "ba_auth") => self.constants.ba_auth = value.parse()?,
            ("constants", "ba_sab") => self.constants.ba_sab = value.parse()?,
            ("constants", "max_rounds") => self.constants.max_rounds = Some(num("max_rounds")?),
            _ => return Err(Error::Config(format!("unknown key `{key}` in [{section}]"))),
        }
        Ok(())
    }

    /// Renders the text format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "protocol = {}", self.protocol);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "t_s = {}", self.t_s);
        let _ = writeln!(s, "t_i = {}", self.t_i);
        let _ = writeln!(s, "setting = {}", self.setting);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "inputs = {}", self.inputs);
        let _ = writeln!(s, "record = {}", self.record);
        let a = &self.adversary;
        let _ = writeln!(s, "\n[adversary]");
        let _ = writeln!(s, "strategy = {}", a.strategy.name());
        if let Some(c) = &a.corrupt {
            let _ = writeln!(s, "corrupt = {}", join(c.iter().map(|p| p.0)));
        }
        let _ = writeln!(s, "crash_round = {}", a.crash_round);
        let _ = writeln!(s, "every = {}", a.every);
        let _ = writeln!(s, "values = {},{}", a.values.0 .0, a.values.1 .0);
        if let Some(script) = &a.script {
            let _ = writeln!(s, "script = {script}");
        }
        let _ = writeln!(s, "\n[start]");
        let _ = writeln!(s, "skew = {}", self.start.skew);
        if let Some(l) = &self.start.late {
            let _ = writeln!(s, "late = {}", join(l.iter().map(|p| p.0)));
        }
        if !self.start.never.is_empty() {
            let _ = writeln!(s, "never = {}", join(self.start.never.iter().map(|p| p.0)));
        }
        let c = &self.constants;
        let _ = writeln!(s, "\n[constants]");
        let _ = writeln!(s, "lambda = {}", c.lambda);
        let _ = writeln!(s, "t_inner_sab = {}", c.t_inner_sab);
        let _ = writeln!(s, "ba_auth = {}", c.ba_auth);
        let _ = writeln!(s, "ba_sab = {}", c.ba_sab);
        if let Some(m) = c.max_rounds {
            let _ = writeln!(s, "max_rounds = {m}");
        }
        s
    }

    /// One-line identifier for reports.
    pub fn label(&self) -> String {
        format!(
            "{} n={} t_s={} t_i={} {} adv={} seed={}",
            self.protocol,
            self.n,
            self.t_s,
            self.t_i,
            self.setting,
            self.adversary.strategy.name(),
            self.seed
        )
    }
}

fn join<T: fmt::Display>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T>(value: &str, what: &str, f: impl Fn(u64) -> T) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|x| x.trim().parse::<u64>().map(&f).map_err(|_| Error::Config(format!("invalid {what} `{x}`"))))
        .collect()
}

fn parse_ids(value: &str) -> Result<Vec<PartyId>> {
    parse_list(value, "party id", |x| PartyId(x as u16))
}

fn parse_values(value: &str) -> Result<Vec<Value>> {
    parse_list(value, "value", |x| Value(x as u32))
}

fn parse_inputs(value: &str) -> Result<InputSpec> {
    if let Some(v) = value.strip_prefix("unanimous:") {
        let v = v.trim().parse().map_err(|_| Error::Config(format!("invalid value `{v}`")))?;
        return Ok(InputSpec::Unanimous(Value(v)));
    }
    if let Some(k) = value.strip_prefix("random:") {
        let k = k.trim().parse().map_err(|_| Error::Config(format!("invalid range `{k}`")))?;
        return Ok(InputSpec::Random(k));
    }
    Ok(InputSpec::List(parse_values(value)?))
}
