use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

/// Summary printed on success. Bounds are exact rationals rendered as
/// strings and are recomputed from the files written, not from intermediate
/// state.
#[derive(Serialize, Debug)]
pub struct RunReport {
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, Value>,
    pub outputs: BTreeMap<&'static str, String>,
    pub bounds: BTreeMap<&'static str, String>,
    pub result: Value,
    pub wall_time_us: u64,
}

impl RunReport {
    pub fn new(command: &'static str) -> RunReport {
        RunReport {
            command,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            bounds: BTreeMap::new(),
            result: Value::Null,
            wall_time_us: 0,
        }
    }

    pub fn input(mut self, key: &'static str, v: impl Serialize) -> Self {
        self.inputs.insert(key, json!(v));
        self
    }

    pub fn finish(mut self, started: Instant) -> Self {
        self.wall_time_us = started.elapsed().as_micros() as u64;
        self
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Exit 2: the input is well formed but violates a precondition.
    Domain(Value),
    /// Exit 1: unreadable or malformed input.
    Input(String),
}

impl From<dse::Error> for Failure {
    fn from(e: dse::Error) -> Failure {
        match e {
            dse::Error::Parse(msg) => Failure::Input(msg),
            other => Failure::Domain(domain_error(&other, Value::Null)),
        }
    }
}

pub fn domain_error(e: &dse::Error, context: Value) -> Value {
    let mut body = serde_json::to_value(e).expect("errors serialize");
    body["message"] = json!(e.to_string());
    let mut out = json!({ "error": body });
    if !context.is_null() {
        out["context"] = context;
    }
    out
}

pub type CmdResult = Result<RunReport, Failure>;
