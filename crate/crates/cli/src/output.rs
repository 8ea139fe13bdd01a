use std::io::Write;

use anyhow::Context;
use serde::Serialize;

use crate::Common;

/// Writes `bytes` to `--out`, or to standard output.
pub fn emit(common: &Common, bytes: &[u8]) -> anyhow::Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).context("writing to stdout")
        }
    }
}

/// CSV with a header row, even when there are no records.
pub fn csv<T: Serialize>(header: &[&str], rows: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing CSV buffer")
}

pub fn json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
