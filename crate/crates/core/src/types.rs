//! Identifiers and small value types shared by every protocol.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Global round index. One round is one network delay.
pub type Round = u64;

/// Index of a party, `0..n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyId(pub u16);

impl PartyId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// All parties of an `n`-party system in ascending order.
    pub fn all(n: usize) -> impl Iterator<Item = PartyId> {
        (0..n as u16).map(PartyId)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A proposal value. The total order on `Value` is the tie-break order used
/// everywhere a protocol has to pick one of several candidates.
///
/// `Value::BOTTOM` is the distinguished default output and sorts last.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Value(pub u32);

impl Value {
    pub const BOTTOM: Value = Value(u32::MAX);

    pub fn is_bottom(self) -> bool {
        self == Value::BOTTOM
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            f.write_str("⊥")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Which world the adversary picked at round 0. Hidden from honest parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Computationally bounded adversary, trusted PKI, up to `t_s` corruptions.
    Authenticated,
    /// Unbounded adversary holding every setup secret, up to `t_i` corruptions.
    Sabotaged,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Authenticated => "authenticated",
            Setting::Sabotaged => "sabotaged",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Subprotocol tag used to partition byte accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    GcAuthStar,
    GcAuthInner,
    BaAuth,
    Sync,
    GcSabStar,
    GcSabInner,
    Decide,
    BaSab,
}

impl Tag {
    pub const ALL: [Tag; 8] = [
        Tag::GcAuthStar,
        Tag::GcAuthInner,
        Tag::BaAuth,
        Tag::Sync,
        Tag::GcSabStar,
        Tag::GcSabInner,
        Tag::Decide,
        Tag::BaSab,
    ];

    /// Stable name used in metrics files.
    pub fn name(self) -> &'static str {
        match self {
            Tag::GcAuthStar => "gc_auth_star",
            Tag::GcAuthInner => "gc_auth_inner",
            Tag::BaAuth => "ba_auth",
            Tag::Sync => "sync",
            Tag::GcSabStar => "gc_sab_star",
            Tag::GcSabInner => "gc_sab_inner",
            Tag::Decide => "decide",
            Tag::BaSab => "ba_sab",
        }
    }

    /// Tags that make up the compiler's own overhead: the two graded-consensus
    /// wrappers (without their inner protocols), the synchronizer and the
    /// decide round.
    pub fn is_overhead(self) -> bool {
        matches!(self, Tag::GcAuthStar | Tag::Sync | Tag::GcSabStar | Tag::Decide)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resilience parameters and the byte cost of a signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub t_s: usize,
    pub t_i: usize,
    /// Bytes charged for every signature or certificate on the wire.
    pub lambda: usize,
}

impl Params {
    pub fn new(n: usize, t_s: usize, t_i: usize) -> Self {
        Params { n, t_s, t_i, lambda: 32 }
    }

    /// Checks `2 t_i + t_s < n` and `t_i <= t_s < n/2`.
    pub fn validate(&self) -> Result<(), crate::Error> {
        if self.n == 0 {
            return Err(crate::Error::Resilience("n must be positive".into()));
        }
        if self.t_i > self.t_s {
            return Err(crate::Error::Resilience(format!(
                "t_i <= t_s violated: t_i = {} > t_s = {}",
                self.t_i, self.t_s
            )));
        }
        if 2 * self.t_s >= self.n {
            return Err(crate::Error::Resilience(format!(
                "t_s < n/2 violated: 2*t_s = {} >= n = {}",
                2 * self.t_s,
                self.n
            )));
        }
        if 2 * self.t_i + self.t_s >= self.n {
            return Err(crate::Error::Resilience(format!(
                "2*t_i + t_s < n violated: 2*{} + {} = {} >= n = {}",
                self.t_i,
                self.t_s,
                2 * self.t_i + self.t_s,
                self.n
            )));
        }
        Ok(())
    }

    pub fn budget(&self, setting: Setting) -> usize {
        match setting {
            Setting::Authenticated => self.t_s,
            Setting::Sabotaged => self.t_i,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resilience_examples() {
        assert!(Params::new(4, 1, 1).validate().is_ok());
        let err = Params::new(4, 2, 1).validate().unwrap_err().to_string();
        assert!(err.contains("t_s < n/2"), "{err}");
        let err = Params::new(5, 1, 2).validate().unwrap_err().to_string();
        assert!(err.contains("t_i <= t_s"), "{err}");
        let err = Params::new(6, 2, 2).validate().unwrap_err().to_string();
        assert!(err.contains("2*t_i + t_s < n"), "{err}");
        assert!(Params::new(5, 2, 1).validate().is_ok());
    }

    #[test]
    fn bottom_sorts_last() {
        assert!(Value(0) < Value(7));
        assert!(Value(7) < Value::BOTTOM);
    }
}
