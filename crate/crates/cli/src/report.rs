use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Number, Value};

use crate::files::Input;

/// Significant digits kept for every real number in a report.
pub const REPORT_DIGITS: usize = 12;

/// Machine-readable summary printed to stdout by every command.
///
/// Numbers are rounded to [`REPORT_DIGITS`] significant digits, so reruns with the same seed and
/// inputs print identical fields; `timing_s` is the only field that varies.
pub struct Report {
    command: &'static str,
    args: Vec<String>,
    seed: Option<u64>,
    inputs: Vec<Input>,
    results: Map<String, Value>,
    outputs: Map<String, Value>,
    start: Instant,
}

impl Report {
    pub fn new(command: &'static str, args: Vec<String>, seed: Option<u64>) -> Self {
        Self {
            command,
            args,
            seed,
            inputs: Vec::new(),
            results: Map::new(),
            outputs: Map::new(),
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, input: Input) {
        self.inputs.push(input);
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), round_value(value.into()));
    }

    /// Records an artifact: its path when written to disk, otherwise the artifact itself.
    pub fn output(&mut self, role: &str, path: Option<&Path>, artifact: Value) {
        let v = match path {
            Some(p) => json!({ "path": p.display().to_string() }),
            None => artifact,
        };
        self.outputs.insert(role.to_string(), v);
    }

    pub fn to_value(&self) -> Value {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|i| json!({ "role": i.role, "path": i.path.display().to_string(), "sha256": i.sha256 }))
            .collect();
        let elapsed = self.start.elapsed().as_secs_f64();
        json!({
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "inputs": inputs,
            "results": self.results,
            "outputs": self.outputs,
            "timing_s": (elapsed * 1e3).round() / 1e3,
        })
    }

    pub fn print(&self) {
        let text = serde_json::to_string_pretty(&self.to_value()).expect("report serialises");
        // a closed pipe (e.g. `| head`) is not an error worth a panic
        let _ = writeln!(std::io::stdout().lock(), "{text}");
    }
}

/// Rounds to [`REPORT_DIGITS`] significant digits; non-finite values become `null`.
pub fn round_sig(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{:.*e}", REPORT_DIGITS - 1, x).parse().expect("formatted float parses");
    Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => round_sig(n.as_f64().expect("f64 number")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}
