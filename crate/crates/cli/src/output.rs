//! CSV and JSON writers. Every document carries the tool version, the command
//! and its fully resolved configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::CliError;

pub struct Meta {
    value: Value,
}

impl Meta {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Self {
        Self {
            value: json!({
                "tool": "unceval",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "config": config,
            }),
        }
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("write failed: {e}"))
}

/// Comment lines with the metadata, then a header row and `rows`.
pub fn write_csv<R: Serialize>(path: Option<&Path>, meta: &Meta, notes: &[String], rows: &[R]) -> Result<(), CliError> {
    let mut w = open(path)?;
    writeln!(w, "# {} {} {}", meta.value["tool"].as_str().unwrap(), meta.value["version"].as_str().unwrap(), meta.value["command"].as_str().unwrap())
        .map_err(io_err)?;
    writeln!(w, "# config: {}", meta.value["config"]).map_err(io_err)?;
    for n in notes {
        writeln!(w, "# {n}").map_err(io_err)?;
    }
    {
        let mut out = csv::Writer::from_writer(&mut w);
        for r in rows {
            out.serialize(r).map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `payload` (a JSON object) with a `meta` entry added.
pub fn write_json<P: Serialize>(path: Option<&Path>, meta: &Meta, payload: &P) -> Result<(), CliError> {
    let mut value = serde_json::to_value(payload).map_err(io_err)?;
    match &mut value {
        Value::Object(map) => {
            map.insert("meta".into(), meta.value.clone());
        }
        other => {
            value = json!({ "meta": meta.value, "data": other.take() });
        }
    }
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, &value).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn format_or(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}
