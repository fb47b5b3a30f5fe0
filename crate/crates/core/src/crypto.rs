//! Idealized PKI, signatures and threshold certificates.
//!
//! Signatures and certificates are keyed digests over a [`Statement`]. A token
//! or certificate also carries a provenance flag the honest code never looks
//! at; verification consults it only to model the two settings: in the
//! authenticated setting forged material never verifies, in the sabotaged
//! setting it is indistinguishable from genuine material.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CryptoError;
use crate::types::{PartyId, Setting, Value};

/// Message kinds that are signed or certified. Domain separation between
/// subprotocols comes from this tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    GcAuthInit,
    InnerEcho,
    InnerVote,
    SyncFinish,
    GcSabEcho,
    GcSabVote,
    Decide,
    DsChain,
}

/// The thing being signed: a message kind, an instance slot and a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub domain: Domain,
    pub slot: u16,
    pub value: Value,
}

impl Statement {
    pub fn new(domain: Domain, value: Value) -> Self {
        Statement { domain, slot: 0, value }
    }

    pub fn with_slot(domain: Domain, slot: u16, value: Value) -> Self {
        Statement { domain, slot, value }
    }

    /// Same kind and slot, different value.
    pub fn retarget(self, value: Value) -> Self {
        Statement { value, ..self }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.domain as u8);
        out.extend_from_slice(&self.slot.to_le_bytes());
        out.extend_from_slice(&self.value.0.to_le_bytes());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Genuine,
    Forged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignatureToken {
    pub signer: PartyId,
    pub digest: u64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    pub statement: Statement,
    pub threshold: usize,
    /// Empty for forged certificates.
    pub contributors: BTreeSet<PartyId>,
    pub digest: u64,
    pub provenance: Provenance,
}

/// Per-party secrets and the threshold master secret, fixed at setup.
#[derive(Clone, Debug)]
pub struct KeyRegistry {
    party_secrets: Vec<u64>,
    master: u64,
}

impl KeyRegistry {
    /// Trusted setup for `n` parties. Secrets are derived from `seed`.
    pub fn setup(n: usize, seed: u64) -> Self {
        let derive = |i: u64| keyed(seed, &i.to_le_bytes());
        KeyRegistry {
            party_secrets: (0..n as u64).map(derive).collect(),
            master: derive(u64::MAX),
        }
    }

    pub fn n(&self) -> usize {
        self.party_secrets.len()
    }

    fn secret(&self, party: PartyId) -> Result<u64, CryptoError> {
        self.party_secrets
            .get(party.index())
            .copied()
            .ok_or(CryptoError::Unregistered(party))
    }

    fn cert_digest(&self, statement: &Statement, threshold: usize) -> u64 {
        let mut buf = Vec::with_capacity(16);
        statement.encode(&mut buf);
        buf.extend_from_slice(&(threshold as u64).to_le_bytes());
        keyed(self.master, &buf)
    }
}

fn keyed(secret: u64, data: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(secret.to_le_bytes());
    h.update(data);
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}

fn sig_digest(secret: u64, statement: &Statement) -> u64 {
    let mut buf = Vec::with_capacity(8);
    statement.encode(&mut buf);
    keyed(secret, &buf)
}

/// Counters the harness reads after a run.
#[derive(Debug, Default)]
pub struct CryptoStats {
    pub signs: AtomicU64,
    pub forged_accepted: AtomicU64,
    pub forged_rejected: AtomicU64,
    pub invalid_rejected: AtomicU64,
}

/// Crypto oracle for one run.
#[derive(Debug)]
pub struct Crypto {
    setting: Setting,
    registry: KeyRegistry,
    stats: CryptoStats,
}

impl Crypto {
    pub fn new(setting: Setting, registry: KeyRegistry) -> Self {
        Crypto { setting, registry, stats: CryptoStats::default() }
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn stats(&self) -> &CryptoStats {
        &self.stats
    }

    pub fn sign(&self, signer: PartyId, statement: &Statement) -> Result<SignatureToken, CryptoError> {
        let secret = self.registry.secret(signer)?;
        self.stats.signs.fetch_add(1, Ordering::Relaxed);
        Ok(SignatureToken {
            signer,
            digest: sig_digest(secret, statement),
            provenance: Provenance::Genuine,
        })
    }

    pub fn verify(&self, signer: PartyId, statement: &Statement, token: &SignatureToken) -> bool {
        let Ok(secret) = self.registry.secret(signer) else {
            return false;
        };
        if token.signer != signer || token.digest != sig_digest(secret, statement) {
            self.reject(token.provenance);
            return false;
        }
        self.admit(token.provenance)
    }

    /// Combines signatures on one statement into a certificate of threshold `k`.
    /// Each entry is a claimed signer, the statement it signed, and the token.
    /// Invalid tokens are skipped; repeated signers count once.
    pub fn aggregate(
        &self,
        signed: &[(PartyId, Statement, SignatureToken)],
        k: usize,
    ) -> Result<Certificate, CryptoError> {
        let Some((_, statement, _)) = signed.first() else {
            return Err(CryptoError::TooFewSignatures { need: k, got: 0 });
        };
        if signed.iter().any(|(_, s, _)| s != statement) {
            return Err(CryptoError::MixedMessages);
        }
        let mut contributors = BTreeSet::new();
        let mut forged = false;
        for (signer, _, tok) in signed {
            if self.verify(*signer, statement, tok) {
                forged |= tok.provenance == Provenance::Forged;
                contributors.insert(*signer);
            }
        }
        if contributors.len() < k {
            return Err(CryptoError::TooFewSignatures { need: k, got: contributors.len() });
        }
        Ok(Certificate {
            statement: *statement,
            threshold: k,
            contributors,
            digest: self.registry.cert_digest(statement, k),
            provenance: if forged { Provenance::Forged } else { Provenance::Genuine },
        })
    }

    /// True iff `cert` is a well-formed certificate on `expected` with
    /// threshold at least `k` and the current setting admits its provenance.
    pub fn verify_cert(&self, cert: &Certificate, expected: &Statement, k: usize) -> bool {
        let well_formed = cert.statement == *expected
            && cert.threshold >= k
            && cert.digest == self.registry.cert_digest(&cert.statement, cert.threshold);
        if !well_formed {
            self.reject(cert.provenance);
            return false;
        }
        match cert.provenance {
            Provenance::Genuine if cert.contributors.len() < cert.threshold => {
                self.stats.invalid_rejected.fetch_add(1, Ordering::Relaxed);
                false
            }
            p => self.admit(p),
        }
    }

    /// Counts a rejection; forged material counts as a rejected forgery
    /// whatever the reason.
    fn reject(&self, provenance: Provenance) {
        let counter = match provenance {
            Provenance::Genuine => &self.stats.invalid_rejected,
            Provenance::Forged => &self.stats.forged_rejected,
        };
        counter.fetch_add(1, Ordering::Relaxed);
    }

    fn admit(&self, provenance: Provenance) -> bool {
        match (provenance, self.setting) {
            (Provenance::Genuine, _) => true,
            (Provenance::Forged, Setting::Sabotaged) => {
                self.stats.forged_accepted.fetch_add(1, Ordering::Relaxed);
                true
            }
            (Provenance::Forged, Setting::Authenticated) => {
                self.stats.forged_rejected.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }

    /// Adversary-only: mints a certificate without signatures.
    pub fn forge(&self, statement: &Statement, k: usize) -> Result<Certificate, CryptoError> {
        if self.setting != Setting::Sabotaged {
            return Err(CryptoError::ForgeryUnavailable);
        }
        Ok(Certificate {
            statement: *statement,
            threshold: k,
            contributors: BTreeSet::new(),
            digest: self.registry.cert_digest(statement, k),
            provenance: Provenance::Forged,
        })
    }

    /// Adversary-only: signs on behalf of a party whose key it does not own.
    pub fn forge_signature(&self, signer: PartyId, statement: &Statement) -> Result<SignatureToken, CryptoError> {
        if self.setting != Setting::Sabotaged {
            return Err(CryptoError::ForgeryUnavailable);
        }
        let secret = self.registry.secret(signer)?;
        Ok(SignatureToken {
            signer,
            digest: sig_digest(secret, statement),
            provenance: Provenance::Forged,
        })
    }

    /// A certificate whose statement was edited after aggregation. Never
    /// verifies; this is what a bounded adversary gets when it tries to reuse
    /// a certificate for a different value.
    pub fn tamper(&self, cert: &Certificate, statement: Statement) -> Certificate {
        Certificate { statement, ..cert.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crypto(setting: Setting) -> Crypto {
        Crypto::new(setting, KeyRegistry::setup(4, 7))
    }

    fn init(v: u32) -> Statement {
        Statement::new(Domain::GcAuthInit, Value(v))
    }

    #[test]
    fn sign_verify() {
        let c = crypto(Setting::Authenticated);
        let m = init(1);
        let tok = c.sign(PartyId(1), &m).unwrap();
        assert!(c.verify(PartyId(1), &m, &tok));
        assert!(!c.verify(PartyId(2), &m, &tok));
        assert!(!c.verify(PartyId(1), &init(2), &tok));
        assert_eq!(c.sign(PartyId(9), &m), Err(CryptoError::Unregistered(PartyId(9))));
    }

    #[test]
    fn aggregate_threshold() {
        let c = crypto(Setting::Authenticated);
        let m = init(3);
        let toks: Vec<_> = (0..3).map(|i| (PartyId(i), m, c.sign(PartyId(i), &m).unwrap())).collect();
        let cert = c.aggregate(&toks, 3).unwrap();
        assert_eq!(cert.provenance, Provenance::Genuine);
        assert!(c.verify_cert(&cert, &m, 3));
        assert!(!c.verify_cert(&cert, &m, 4));
        assert!(!c.verify_cert(&cert, &init(4), 3));

        assert_eq!(
            c.aggregate(&toks[..2], 3).unwrap_err(),
            CryptoError::TooFewSignatures { need: 3, got: 2 }
        );

        let mut mixed = toks[..2].to_vec();
        mixed.push((PartyId(2), init(4), c.sign(PartyId(2), &init(4)).unwrap()));
        assert_eq!(c.aggregate(&mixed, 3).unwrap_err(), CryptoError::MixedMessages);
    }

    #[test]
    fn duplicate_signers_do_not_count_twice() {
        let c = crypto(Setting::Authenticated);
        let m = init(0);
        let t = c.sign(PartyId(0), &m).unwrap();
        let toks = vec![(PartyId(0), m, t), (PartyId(0), m, t), (PartyId(0), m, t)];
        assert!(c.aggregate(&toks, 2).is_err());
    }

    #[test]
    fn forgery_depends_on_setting() {
        let auth = crypto(Setting::Authenticated);
        assert_eq!(auth.forge(&init(1), 3).unwrap_err(), CryptoError::ForgeryUnavailable);

        let sab = crypto(Setting::Sabotaged);
        let forged = sab.forge(&init(1), 3).unwrap();
        assert!(sab.verify_cert(&forged, &init(1), 3));
        assert_eq!(sab.stats().forged_accepted.load(Ordering::Relaxed), 1);

        // The same forged bits presented in an authenticated run are rejected.
        assert!(!auth.verify_cert(&forged, &init(1), 3));
        assert_eq!(auth.stats().forged_accepted.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn tampered_certificates_never_verify() {
        for setting in [Setting::Authenticated, Setting::Sabotaged] {
            let c = crypto(setting);
            let m = init(0);
            let toks: Vec<_> = (0..3).map(|i| (PartyId(i), m, c.sign(PartyId(i), &m).unwrap())).collect();
            let cert = c.aggregate(&toks, 3).unwrap();
            let bad = c.tamper(&cert, init(1));
            assert!(!c.verify_cert(&bad, &init(1), 3));
        }
    }
}
