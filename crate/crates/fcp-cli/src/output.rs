//! CSV emission with reproducibility headers.
//!
//! Every file starts with `#` comment lines recording the tool version, the
//! full resolved experiment configuration, and the seed — everything needed
//! to regenerate the file, and nothing execution-dependent (thread counts
//! and timings are deliberately excluded so reruns are byte-identical).
//! Floats are written with 17 significant digits, which round-trips `f64`
//! exactly.

use crate::Failure;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// 17-significant-digit scientific notation: lossless for `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Opens `path` and writes the metadata preamble; returns the writer ready
/// for CSV rows.
pub fn create_output(
    path: &Path,
    resolved_config: &[(&str, String)],
    seed: u64,
) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| {
                Failure::Invalid(format!("cannot create output directory {}: {e}", dir.display()))
            })?;
        }
    }
    let file = File::create(path)
        .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let config_line = resolved_config
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    write!(
        w,
        "# fcp {}\n# config: {config_line}\n# seed={seed}\n",
        env!("CARGO_PKG_VERSION")
    )
    .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(w)
}

/// Writes one CSV line (no quoting is ever needed: fields are numbers and
/// variant names).
pub fn write_row(w: &mut impl Write, path: &Path, fields: &[String]) -> Result<(), Failure> {
    writeln!(w, "{}", fields.join(","))
        .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
}
