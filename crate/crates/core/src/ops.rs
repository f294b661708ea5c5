//! Operation calls and responses as they appear in recorded histories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::crypto::ProofBlob;
use crate::model::{ProofRecord, SequentialOp, SequentialResponse};
use crate::value::{ProcessId, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum Call {
    Append(Value),
    Prove(Value),
    Read,
    Update(Value),
    Scan,
    Propose(Value),
    /// Transfer of the token with this public id.
    Transfer(Value),
    Vote { token: Value, choice: Value },
    VoteCount,
}

impl Call {
    pub fn name(&self) -> &'static str {
        match self {
            Call::Append(_) => "append",
            Call::Prove(_) => "prove",
            Call::Read => "read",
            Call::Update(_) => "update",
            Call::Scan => "scan",
            Call::Propose(_) => "propose",
            Call::Transfer(_) => "transfer",
            Call::Vote { .. } => "vote",
            Call::VoteCount => "vote_count",
        }
    }

    pub fn as_sequential(&self) -> Option<SequentialOp> {
        match self {
            Call::Append(v) => Some(SequentialOp::Append(v.clone())),
            Call::Prove(v) => Some(SequentialOp::Prove(v.clone())),
            Call::Read => Some(SequentialOp::Read),
            _ => None,
        }
    }
}

/// One counted vote: the token, its ballot, and the servers whose proofs backed it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TallyEntry {
    pub token: Value,
    pub choice: Value,
    pub voters: BTreeSet<ProcessId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Ret {
    Bool(bool),
    Proved {
        set: BTreeSet<Value>,
        proof: ProofBlob,
    },
    Records(Vec<ProofRecord>),
    Ack,
    View(Vec<Option<Value>>),
    Decided(Value),
    Token(Value),
    Tally(Vec<TallyEntry>),
}

impl Ret {
    pub fn is_false(&self) -> bool {
        matches!(self, Ret::Bool(false))
    }
}

impl From<SequentialResponse> for Ret {
    fn from(r: SequentialResponse) -> Self {
        match r {
            SequentialResponse::True => Ret::Bool(true),
            SequentialResponse::False => Ret::Bool(false),
            SequentialResponse::Proved { set, proof } => Ret::Proved { set, proof },
            SequentialResponse::Records(r) => Ret::Records(r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_wire_format() {
        let j = serde_json::to_value(Call::Append(Value::from("x"))).unwrap();
        assert_eq!(j, serde_json::json!({"op": "append", "args": "78"}));
        let j = serde_json::to_value(Call::Read).unwrap();
        assert_eq!(j, serde_json::json!({"op": "read"}));
        let back: Call = serde_json::from_value(j).unwrap();
        assert_eq!(back, Call::Read);
    }

    #[test]
    fn ret_roundtrip() {
        let r = Ret::View(vec![None, Some(Value::from("a"))]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<Ret>(&s).unwrap(), r);
    }
}
