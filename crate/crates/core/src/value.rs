//! Opaque values and process identifiers shared by every object in the crate.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identifier of a process. Ids start at 1 and are totally ordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub u32);

impl ProcessId {
    /// Zero-based slot index of this process in an `N`-wide array.
    pub fn slot(self) -> usize {
        debug_assert!(self.0 >= 1, "process ids start at 1");
        (self.0 - 1) as usize
    }

    pub fn from_slot(slot: usize) -> Self {
        ProcessId(slot as u32 + 1)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// An element of the value universe: an opaque byte string compared byte-wise.
///
/// Serialized as lowercase hex so histories stay plain JSON.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Value(Vec<u8>);

impl Value {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Value(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.as_bytes().to_vec())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(s.into_bytes())
    }
}

impl From<Vec<u8>> for Value {
    fn from(b: Vec<u8>) -> Self {
        Value(b)
    }
}

impl From<&[u8]> for Value {
    fn from(b: &[u8]) -> Self {
        Value(b.to_vec())
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let printable = !self.0.is_empty()
            && self.0.iter().all(|b| b.is_ascii_graphic() || *b == b' ');
        if printable {
            write!(f, "{:?}", String::from_utf8_lossy(&self.0))
        } else {
            write!(f, "0x{}", self.to_hex())
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map(Value).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_serializes_as_hex() {
        let v = Value::from("x");
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"78\"");
        let back: Value = serde_json::from_str("\"78\"").unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn display_prefers_text() {
        assert_eq!(Value::from("tok").to_string(), "\"tok\"");
        assert_eq!(Value::new(vec![0u8, 1]).to_string(), "0x0001");
    }

    #[test]
    fn slot_mapping() {
        assert_eq!(ProcessId(1).slot(), 0);
        assert_eq!(ProcessId::from_slot(2), ProcessId(3));
    }
}
