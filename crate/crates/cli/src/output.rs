use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{Cli, Format};

/// Everything needed to rerun a command, written at the top of every output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Cli,
    pub seed: u64,
    pub version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: &Cli) -> Self {
        let mut params = params.clone();
        params.out = None;
        params.from_manifest = None;
        RunManifest {
            subcommand: subcommand.to_string(),
            seed: params.seed,
            params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    /// Reads the manifest back from a CSV or JSON output file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let value: Value = if text.trim_start().starts_with('{') {
            let doc: Value = serde_json::from_str(&text)?;
            doc.get("manifest").cloned().context("no manifest in JSON output")?
        } else {
            let line = text.lines().find_map(|l| l.strip_prefix("# manifest: ")).context("no manifest line in CSV output")?;
            serde_json::from_str(line)?
        };
        Ok(serde_json::from_value(value)?)
    }
}

/// Writes rows as CSV with comment lines on top, or as one JSON document.
pub fn emit<T: Serialize>(cli: &Cli, manifest: &RunManifest, notes: &[(&str, Value)], rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    match cli.format {
        Format::Csv => {
            writeln!(buf, "# manifest: {}", serde_json::to_string(manifest)?)?;
            for (k, v) in notes {
                writeln!(buf, "# {k}: {v}")?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut doc = json!({ "manifest": manifest });
            for (k, v) in notes {
                doc[*k] = v.clone();
            }
            doc["rows"] = serde_json::to_value(rows)?;
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    match &cli.out {
        Some(p) => std::fs::write(p, buf).with_context(|| format!("cannot write {}", p.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// Inclusive integer range `a:b:step`, a list `a,b,c` or one value.
pub fn int_range(text: &str) -> Result<Vec<u32>> {
    let v: Vec<u32> = match text.split(':').collect::<Vec<_>>()[..] {
        [a, b, s] => {
            let (a, b, s): (u32, u32, u32) = (a.trim().parse()?, b.trim().parse()?, s.trim().parse()?);
            if s == 0 {
                bail!("range step must be positive");
            }
            (a..=b).step_by(s as usize).collect()
        }
        [_] => text.split(',').map(|x| x.trim().parse()).collect::<std::result::Result<_, _>>()?,
        _ => bail!("cannot read {text:?} as a range"),
    };
    if v.is_empty() {
        bail!("range {text:?} is empty");
    }
    Ok(v)
}

/// Inclusive float grid `a:b:step`, snapped to 1e-9 so decimal steps stay
/// exact.
pub fn float_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text.split(':').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
    let [a, b, s] = parts[..] else { bail!("grid must look like start:stop:step") };
    if !(s > 0.0) || b < a {
        bail!("grid {text:?} is empty");
    }
    let n = ((b - a) / s + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((a + i as f64 * s) * 1e9).round() / 1e9).collect())
}
