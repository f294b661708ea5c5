//! Stand-ins for the cryptographic black boxes: deterministic commitments,
//! set-(non-)membership proofs in explicit and mock zero-knowledge form, and a
//! blind-signature stub for e-voting.
//!
//! Nothing here is meant to resist a real adversary. The point is to keep the
//! call-order and determinism properties the concurrent algorithms rely on:
//! equal values commit to equal digests, a mock-ZK proof exposes only a
//! commitment and a set digest, and an issuer only ever signs commitments.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::value::Value;

/// Domain tag used for the helping commitment of the DenyList queue.
pub const HELPING_TAG: &[u8] = b"prooflist/helping";
/// Domain tag used for the value commitment embedded in mock-ZK proofs.
pub const PROOF_TAG: &[u8] = b"prooflist/proof";

// Key of the verification oracle standing in for a real ZK verifier.
const ORACLE_KEY: &[u8] = b"prooflist/mock-zk-oracle/v1";

/// A 256-bit SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..", &self.to_hex()[..12])
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }
}

/// Hashes length-prefixed parts under a domain label.
pub fn hash_parts(domain: &str, parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update((domain.len() as u64).to_be_bytes());
    h.update(domain.as_bytes());
    for part in parts {
        h.update((part.len() as u64).to_be_bytes());
        h.update(part);
    }
    Digest(h.finalize().into())
}

/// Deterministic binding commitment to a value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment(pub Digest);

/// Commits to `v` under the domain-separation `tag`.
pub fn commit(v: &Value, tag: &[u8]) -> Commitment {
    Commitment(hash_parts("commit", &[tag, v.as_bytes()]))
}

/// Digest of a whole set; sets are iterated in sorted order so the digest is canonical.
pub fn set_digest(set: &BTreeSet<Value>) -> Digest {
    let mut h = Sha256::new();
    h.update(b"set");
    h.update((set.len() as u64).to_be_bytes());
    for v in set {
        h.update((v.len() as u64).to_be_bytes());
        h.update(v.as_bytes());
    }
    Digest(h.finalize().into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProofMode {
    #[default]
    Explicit,
    MockZk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statement {
    Membership,
    NonMembership,
}

impl Statement {
    fn label(self) -> &'static [u8] {
        match self {
            Statement::Membership => b"member",
            Statement::NonMembership => b"non-member",
        }
    }

    /// Whether the statement holds for `v` against `set`.
    pub fn holds(self, v: &Value, set: &BTreeSet<Value>) -> bool {
        match self {
            Statement::Membership => set.contains(v),
            Statement::NonMembership => !set.contains(v),
        }
    }
}

/// A proof that a value does (or does not) belong to a set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProofBlob {
    /// The statement spelled out: re-verified by scanning the set.
    Explicit {
        statement: Statement,
        value: Value,
        set: BTreeSet<Value>,
    },
    /// Only a commitment to the value and a digest of the set are visible.
    MockZk {
        statement: Statement,
        commitment: Commitment,
        set_digest: Digest,
        tag: Digest,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("statement is false: {value} {statement:?} does not hold for the given set")]
    StatementFalse { value: Value, statement: Statement },
}

fn oracle_tag(statement: Statement, commitment: &Commitment, digest: &Digest) -> Digest {
    hash_parts(
        "oracle",
        &[ORACLE_KEY, statement.label(), &commitment.0 .0, &digest.0],
    )
}

fn prove(
    statement: Statement,
    v: &Value,
    set: &BTreeSet<Value>,
    mode: ProofMode,
) -> Result<ProofBlob, CryptoError> {
    if !statement.holds(v, set) {
        return Err(CryptoError::StatementFalse {
            value: v.clone(),
            statement,
        });
    }
    Ok(match mode {
        ProofMode::Explicit => ProofBlob::Explicit {
            statement,
            value: v.clone(),
            set: set.clone(),
        },
        ProofMode::MockZk => {
            let commitment = commit(v, PROOF_TAG);
            let digest = set_digest(set);
            ProofBlob::MockZk {
                statement,
                commitment,
                set_digest: digest,
                tag: oracle_tag(statement, &commitment, &digest),
            }
        }
    })
}

pub fn prove_membership(
    v: &Value,
    set: &BTreeSet<Value>,
    mode: ProofMode,
) -> Result<ProofBlob, CryptoError> {
    prove(Statement::Membership, v, set, mode)
}

pub fn prove_nonmembership(
    v: &Value,
    set: &BTreeSet<Value>,
    mode: ProofMode,
) -> Result<ProofBlob, CryptoError> {
    prove(Statement::NonMembership, v, set, mode)
}

/// Checks a proof against the set it claims to apply to.
pub fn verify(blob: &ProofBlob, set: &BTreeSet<Value>) -> bool {
    match blob {
        ProofBlob::Explicit {
            statement,
            value,
            set: claimed,
        } => claimed == set && statement.holds(value, set),
        ProofBlob::MockZk {
            statement,
            commitment,
            set_digest: digest,
            tag,
        } => *digest == set_digest(set) && *tag == oracle_tag(*statement, commitment, digest),
    }
}

impl ProofBlob {
    pub fn statement(&self) -> Statement {
        match self {
            ProofBlob::Explicit { statement, .. } | ProofBlob::MockZk { statement, .. } => {
                *statement
            }
        }
    }

    /// Whether this proof is about `v`. Only someone who already knows `v` can
    /// answer this for a mock-ZK proof.
    pub fn concerns(&self, v: &Value) -> bool {
        match self {
            ProofBlob::Explicit { value, .. } => value == v,
            ProofBlob::MockZk { commitment, .. } => *commitment == commit(v, PROOF_TAG),
        }
    }
}

// ---------------------------------------------------------------------------
// Blind signatures
// ---------------------------------------------------------------------------

/// Issuer verification key. In this stub it doubles as the MAC key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IssuerPublic(pub Digest);

#[derive(Clone, Debug)]
pub struct BlindSigKeys {
    secret: Digest,
    pub public: IssuerPublic,
}

impl BlindSigKeys {
    /// Derives a key pair from a seed.
    pub fn setup(seed: &[u8]) -> Self {
        let secret = hash_parts("issuer-secret", &[seed]);
        let public = IssuerPublic(hash_parts("issuer-public", &[&secret.0]));
        BlindSigKeys { secret, public }
    }

    pub fn secret(&self) -> &Digest {
        &self.secret
    }
}

/// What the issuer sees: a hiding commitment to the message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlindedMessage(pub Digest);

/// The user's opening for a [`BlindedMessage`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlindingNonce(pub Value);

/// Signature over a blinded message, as returned by the issuer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlindSignature(pub Digest);

/// Unblinded signature: valid on the original message.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub mac: Digest,
    pub blinding: Value,
}

pub fn blind_commit(m: &Value, nonce: &BlindingNonce) -> BlindedMessage {
    BlindedMessage(hash_parts("blind", &[nonce.0.as_bytes(), m.as_bytes()]))
}

fn mac(public: &IssuerPublic, blinded: &BlindedMessage) -> Digest {
    hash_parts("sign", &[&public.0 .0, &blinded.0 .0])
}

/// Signing authority with a log of every input it was asked to sign.
#[derive(Debug)]
pub struct Issuer {
    keys: BlindSigKeys,
    log: RefCell<Vec<BlindedMessage>>,
}

impl Issuer {
    pub fn new(keys: BlindSigKeys) -> Self {
        Issuer {
            keys,
            log: RefCell::new(Vec::new()),
        }
    }

    pub fn public(&self) -> IssuerPublic {
        self.keys.public
    }

    pub fn sign(&self, blinded: &BlindedMessage) -> BlindSignature {
        self.log.borrow_mut().push(*blinded);
        BlindSignature(mac(&self.keys.public, blinded))
    }

    /// Every input passed to [`Issuer::sign`], in call order.
    pub fn call_log(&self) -> Vec<BlindedMessage> {
        self.log.borrow().clone()
    }
}

pub fn uncommit(sig: BlindSignature, nonce: &BlindingNonce) -> Signature {
    Signature {
        mac: sig.0,
        blinding: nonce.0.clone(),
    }
}

pub fn verify_signature(sig: &Signature, m: &Value, public: &IssuerPublic) -> bool {
    let blinded = blind_commit(m, &BlindingNonce(sig.blinding.clone()));
    sig.mac == mac(public, &blinded)
}

/// Commit, sign, uncommit: the full issuance flow for message `m`.
pub fn blind_sign_roundtrip(m: &Value, issuer: &Issuer, nonce: &BlindingNonce) -> (Value, Signature) {
    let blinded = blind_commit(m, nonce);
    let sig = issuer.sign(&blinded);
    (m.clone(), uncommit(sig, nonce))
}
