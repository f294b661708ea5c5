//! Linear scan for flickering: once some PROVE(v) has taken effect as
//! invalid, no later PROVE(v) may take effect as valid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{EventKind, History};
use crate::value::{ProcessId, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flicker {
    pub value: Value,
    /// Event id and owner of the first invalid linearization point.
    pub invalid_at: (u64, ProcessId),
    /// Event id and owner of the valid one that followed it.
    pub valid_at: (u64, ProcessId),
}

/// First flicker among `object`'s linearization-point markers, if any.
pub fn find_flicker(history: &History, object: &str) -> Option<Flicker> {
    let mut first_invalid: BTreeMap<&Value, (u64, ProcessId)> = BTreeMap::new();
    for e in history.events.iter().filter(|e| e.object == object) {
        let EventKind::Lp(m) = &e.kind else { continue };
        if !m.valid {
            first_invalid.entry(&m.value).or_insert((e.event_id, m.owner));
        } else if let Some(&invalid_at) = first_invalid.get(&m.value) {
            return Some(Flicker {
                value: m.value.clone(),
                invalid_at,
                valid_at: (e.event_id, m.owner),
            });
        }
    }
    None
}

/// True iff, per value, the markers on `object` read valid* invalid*.
pub fn scan_anti_flickering(history: &History, object: &str) -> bool {
    find_flicker(history, object).is_none()
}
