use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

/// Run metadata embedded in every output. The worker count and output paths
/// are deliberately absent: they never change the numbers.
pub fn provenance(command: &str, config: &impl Serialize) -> Value {
    json!({
        "command": command,
        "config": config_value(config),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn config_value(config: &impl Serialize) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// One pretty-printed JSON object: `result` fields plus a `provenance` entry.
pub fn write_json(path: Option<&Path>, result: Value, provenance: Value) -> io::Result<()> {
    let mut obj = match result {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("provenance".into(), provenance);
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
    writeln!(out)?;
    out.flush()
}

/// CSV with `# key: value` metadata lines ahead of the header row.
pub fn write_csv(
    path: Option<&Path>,
    provenance: &Value,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut out = sink(path)?;
    if let Value::Object(m) = provenance {
        for (k, v) in m {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(out, "# {k}: {text}")?;
        }
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
    }
    out.flush()
}
