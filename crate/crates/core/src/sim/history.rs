//! Recorded histories and their JSON Lines form.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ops::{Call, Ret};
use crate::value::{ProcessId, Value};

/// Instrumentation emitted where a construction linearizes a verifier PROVE.
/// Only the anti-flickering scanner reads these.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LpMarker {
    pub value: Value,
    pub valid: bool,
    /// Process whose PROVE is being linearized (may differ from the event's process when helping).
    pub owner: ProcessId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Invoke(Call),
    Respond { op: String, ret: Ret },
    Lp(LpMarker),
    Crash,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub event_id: u64,
    pub process: ProcessId,
    pub object: String,
    pub kind: EventKind,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Invoke,
    Respond,
    Lp,
    Crash,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    event_id: u64,
    process: ProcessId,
    kind: RawKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    args: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ret: Option<Ret>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marker: Option<LpMarker>,
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {msg}")]
    Shape { line: usize, msg: String },
}

impl Event {
    fn to_raw(&self) -> RawEvent {
        let mut raw = RawEvent {
            event_id: self.event_id,
            process: self.process,
            kind: RawKind::Crash,
            object: self.object.clone(),
            op: None,
            args: None,
            ret: None,
            marker: None,
        };
        match &self.kind {
            EventKind::Invoke(call) => {
                raw.kind = RawKind::Invoke;
                let mut j = serde_json::to_value(call).expect("calls serialize");
                let obj = j.as_object_mut().expect("calls serialize as objects");
                raw.op = obj.remove("op").and_then(|o| o.as_str().map(str::to_owned));
                raw.args = obj.remove("args");
            }
            EventKind::Respond { op, ret } => {
                raw.kind = RawKind::Respond;
                raw.op = Some(op.clone());
                raw.ret = Some(ret.clone());
            }
            EventKind::Lp(m) => {
                raw.kind = RawKind::Lp;
                raw.op = Some("prove".into());
                raw.marker = Some(m.clone());
            }
            EventKind::Crash => {}
        }
        raw
    }

    fn from_raw(raw: RawEvent, line: usize) -> Result<Self, HistoryError> {
        let shape = |msg: &str| HistoryError::Shape { line, msg: msg.into() };
        let kind = match raw.kind {
            RawKind::Invoke => {
                let op = raw.op.ok_or_else(|| shape("invoke without op"))?;
                let mut j = serde_json::Map::new();
                j.insert("op".into(), op.into());
                if let Some(args) = raw.args {
                    j.insert("args".into(), args);
                }
                let call = serde_json::from_value(j.into())
                    .map_err(|source| HistoryError::Json { line, source })?;
                EventKind::Invoke(call)
            }
            RawKind::Respond => EventKind::Respond {
                op: raw.op.ok_or_else(|| shape("respond without op"))?,
                ret: raw.ret.ok_or_else(|| shape("respond without ret"))?,
            },
            RawKind::Lp => EventKind::Lp(raw.marker.ok_or_else(|| shape("lp without marker"))?),
            RawKind::Crash => EventKind::Crash,
        };
        Ok(Event {
            event_id: raw.event_id,
            process: raw.process,
            object: raw.object,
            kind,
        })
    }
}

/// One operation instance extracted from a history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub id: usize,
    pub process: ProcessId,
    pub call: Call,
    pub ret: Option<Ret>,
    pub invoked_at: u64,
    pub responded_at: Option<u64>,
}

impl Operation {
    pub fn is_pending(&self) -> bool {
        self.ret.is_none()
    }

    /// Real-time order: `self` responded before `other` was invoked.
    pub fn precedes(&self, other: &Operation) -> bool {
        matches!(self.responded_at, Some(r) if r < other.invoked_at)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    pub events: Vec<Event>,
}

impl History {
    pub fn crashed(&self) -> BTreeSet<ProcessId> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Crash)
            .map(|e| e.process)
            .collect()
    }

    /// Operations on `object`, in invocation order. A process may have
    /// operations open on several objects at once (nested objects), but at
    /// most one per object.
    pub fn operations(&self, object: &str) -> Vec<Operation> {
        let mut ops: Vec<Operation> = Vec::new();
        let mut open: HashMap<ProcessId, usize> = HashMap::new();
        for e in self.events.iter().filter(|e| e.object == object) {
            match &e.kind {
                EventKind::Invoke(call) => {
                    open.insert(e.process, ops.len());
                    ops.push(Operation {
                        id: ops.len(),
                        process: e.process,
                        call: call.clone(),
                        ret: None,
                        invoked_at: e.event_id,
                        responded_at: None,
                    });
                }
                EventKind::Respond { ret, .. } => {
                    if let Some(i) = open.remove(&e.process) {
                        ops[i].ret = Some(ret.clone());
                        ops[i].responded_at = Some(e.event_id);
                    }
                }
                _ => {}
            }
        }
        ops
    }

    /// Names of all objects that appear in invoke events.
    pub fn objects(&self) -> BTreeSet<String> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Invoke(_)))
            .map(|e| e.object.clone())
            .collect()
    }

    /// Every invocation precedes its response, and no process has two
    /// invocations open on the same object.
    pub fn is_well_formed(&self) -> bool {
        let mut open: BTreeSet<(ProcessId, &str)> = BTreeSet::new();
        let mut last = None;
        for e in &self.events {
            if last.is_some_and(|l| e.event_id <= l) {
                return false;
            }
            last = Some(e.event_id);
            match &e.kind {
                EventKind::Invoke(_) if !open.insert((e.process, e.object.as_str())) => return false,
                EventKind::Respond { .. } if !open.remove(&(e.process, e.object.as_str())) => return false,
                _ => {}
            }
        }
        true
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(&e.to_raw()).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, HistoryError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawEvent = serde_json::from_str(line)
                .map_err(|source| HistoryError::Json { line: i + 1, source })?;
            events.push(Event::from_raw(raw, i + 1)?);
        }
        Ok(History { events })
    }

    /// Restricts the history to one object (crash events are kept).
    pub fn project(&self, object: &str) -> History {
        History {
            events: self
                .events
                .iter()
                .filter(|e| e.object == object || e.kind == EventKind::Crash)
                .cloned()
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: u64, p: u32, kind: EventKind) -> Event {
        Event {
            event_id: id,
            process: ProcessId(p),
            object: "al".into(),
            kind,
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let h = History {
            events: vec![
                ev(0, 1, EventKind::Invoke(Call::Append(Value::from("x")))),
                ev(1, 1, EventKind::Respond { op: "append".into(), ret: Ret::Bool(true) }),
                ev(2, 2, EventKind::Invoke(Call::Read)),
                Event { event_id: 3, process: ProcessId(2), object: String::new(), kind: EventKind::Crash },
            ],
        };
        let text = h.to_jsonl();
        assert!(text.starts_with(r#"{"event_id":0,"process":1,"kind":"invoke","object":"al","op":"append","args":"78"}"#));
        assert_eq!(History::from_jsonl(&text).unwrap(), h);
        assert_eq!(h.crashed(), [ProcessId(2)].into());
        let ops = h.operations("al");
        assert_eq!(ops.len(), 2);
        assert!(ops[1].is_pending());
        assert!(ops[0].precedes(&ops[1]));
        assert!(h.is_well_formed());
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = History::from_jsonl("{\"event_id\":0}\n").unwrap_err();
        assert!(err.to_string().starts_with("line 1"));
    }
}
