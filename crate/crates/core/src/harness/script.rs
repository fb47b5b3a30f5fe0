//! Scripted adversary programs: one action per corrupt party per phase.
//!
//! Text form: phase start rounds separated by `/`, then one `id:actions`
//! block per party, all separated by `;`. For example
//! `0/1/3;3:a/e5/fb` makes party 3 push `a` in round 0, equivocate with mask
//! 5 in rounds 1 and 2, and push `b` with forgeries from round 3 on.
//!
//! Action tokens: `h` honest, `-` silent, `a`/`b` push a value to everyone,
//! `e<mask>` send `b` to the other parties whose bit is set in `mask` and `a`
//! to the rest, and an `f` prefix on any of the three to add forgeries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{PartyId, Round};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Run the honest code unchanged.
    Honest,
    Silence,
    /// Rewrite every outgoing message: recipients (other than the sender, in
    /// id order) whose bit is set get value `b`, the rest get value `a`.
    Send { mask: u32, forge: bool },
}

impl Action {
    pub const PUSH_A: Action = Action::Send { mask: 0, forge: false };
    pub const PUSH_B: Action = Action::Send { mask: u32::MAX, forge: false };
    pub const FORGE_A: Action = Action::Send { mask: 0, forge: true };
    pub const FORGE_B: Action = Action::Send { mask: u32::MAX, forge: true };

    /// The bounded per-phase action space for one corrupt party among `n`:
    /// silence, push `a`, push `b`, every proper two-block split of the other
    /// `n - 1` parties, and (with `forge`) all of the pushes and splits again
    /// with forgeries.
    pub fn space(n: usize, forge: bool) -> Vec<Action> {
        let others = n as u32 - 1;
        let mut masks = vec![0, u32::MAX];
        masks.extend(1..(1u32 << others) - 1);
        let mut out = vec![Action::Silence];
        out.extend(masks.iter().map(|&mask| Action::Send { mask, forge: false }));
        if forge {
            out.extend(masks.iter().map(|&mask| Action::Send { mask, forge: true }));
        }
        out
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Honest => f.write_str("h"),
            Action::Silence => f.write_str("-"),
            Action::Send { mask, forge } => {
                if *forge {
                    f.write_str("f")?;
                }
                match *mask {
                    0 => f.write_str("a"),
                    u32::MAX => f.write_str("b"),
                    m => write!(f, "e{m}"),
                }
            }
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid action `{s}`"));
        let (forge, rest) = match s.strip_prefix('f') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let mask = match rest {
            "h" if !forge => return Ok(Action::Honest),
            "-" if !forge => return Ok(Action::Silence),
            "a" => 0,
            "b" => u32::MAX,
            _ => rest.strip_prefix('e').and_then(|m| m.parse().ok()).ok_or_else(bad)?,
        };
        Ok(Action::Send { mask, forge })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    /// Ascending phase start rounds; the first is 0.
    pub phases: Vec<Round>,
    pub actions: BTreeMap<PartyId, Vec<Action>>,
}

impl Script {
    pub fn new(phases: Vec<Round>) -> Self {
        Script { phases, actions: BTreeMap::new() }
    }

    pub fn phase_of(&self, round: Round) -> usize {
        self.phases.iter().rposition(|s| *s <= round).unwrap_or(0)
    }

    /// Action of `party` in `round`; parties without a script act honestly.
    pub fn action(&self, party: PartyId, round: Round) -> Action {
        let i = self.phase_of(round);
        self.actions.get(&party).and_then(|a| a.get(i)).copied().unwrap_or(Action::Honest)
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phases: Vec<String> = self.phases.iter().map(|r| r.to_string()).collect();
        f.write_str(&phases.join("/"))?;
        for (p, acts) in &self.actions {
            let acts: Vec<String> = acts.iter().map(|a| a.to_string()).collect();
            write!(f, ";{}:{}", p.0, acts.join("/"))?;
        }
        Ok(())
    }
}

impl FromStr for Script {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';');
        let head = parts.next().unwrap_or("").trim();
        let phases: Vec<Round> = head
            .split('/')
            .map(|r| r.trim().parse().map_err(|_| Error::Config(format!("invalid phase start `{r}`"))))
            .collect::<Result<_>>()?;
        if phases.first() != Some(&0) || phases.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("phase starts must begin at 0 and ascend: `{head}`")));
        }
        let mut script = Script::new(phases);
        for block in parts {
            let (id, acts) = block
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("expected `id:actions`, got `{block}`")))?;
            let id: u16 = id.trim().parse().map_err(|_| Error::Config(format!("invalid party id `{id}`")))?;
            let acts: Vec<Action> = acts.split('/').map(|a| a.trim().parse()).collect::<Result<_>>()?;
            if acts.len() != script.phases.len() {
                return Err(Error::Config(format!(
                    "party {id}: {} actions for {} phases",
                    acts.len(),
                    script.phases.len()
                )));
            }
            script.actions.insert(PartyId(id), acts);
        }
        Ok(script)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let s: Script = "0/1/3;3:a/e5/fb;2:h/-/fe3".parse().unwrap();
        assert_eq!(s.action(PartyId(3), 0), Action::PUSH_A);
        assert_eq!(s.action(PartyId(3), 2), Action::Send { mask: 5, forge: false });
        assert_eq!(s.action(PartyId(3), 40), Action::FORGE_B);
        assert_eq!(s.action(PartyId(0), 1), Action::Honest);
        assert_eq!(s.to_string().parse::<Script>().unwrap(), s);
        assert!("1/2;3:a/a".parse::<Script>().is_err());
        assert!("0/1;3:a".parse::<Script>().is_err());
        assert!("0;3:fh".parse::<Script>().is_err());
    }

    #[test]
    fn action_space_sizes() {
        assert_eq!(Action::space(4, false).len(), 9);
        assert_eq!(Action::space(4, true).len(), 17);
        assert_eq!(Action::space(5, false).len(), 17);
        assert_eq!(Action::space(5, true).len(), 33);
    }
}
