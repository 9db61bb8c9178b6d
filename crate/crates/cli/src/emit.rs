//! Deterministic file emission: CSV with a header row, comma delimiter,
//! and LF line endings; JSON pretty-printed with sorted keys. Identical
//! inputs produce byte-identical files, so outputs diff cleanly in
//! regression tests.

use std::io;
use std::path::Path;

use serde_json::Value;

/// Scientific notation with 13 significant digits, comfortably above the
/// 12 the output contract requires.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text)
}

/// Serialization goes through `serde_json::Value`, whose map is ordered by
/// key, so every object in the file comes out sorted.
pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    text.push('\n');
    std::fs::write(path, text)
}

/// Manifest block embedded in every summary JSON: enough to reproduce the
/// run (the echoed config is itself a valid config document) and to locate
/// its artifacts. Paths are relative to the manifest's own directory so
/// the same run in a different output directory stays byte-identical.
pub fn manifest(command: &str, config: Value, derived: Value, outputs: &[String]) -> Value {
    serde_json::json!({
        "code_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "derived": derived,
        "outputs": outputs,
    })
}
