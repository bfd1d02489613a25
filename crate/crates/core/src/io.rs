//! Plain-text CSV helpers shared by the library and the experiment harness.
//!
//! Every file written here starts with a header row naming its columns.
//! Floats are rendered with Rust's shortest round-trip formatting, which is
//! deterministic across runs of the same build.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{Channel, JointPmf, Pmf};

/// Render a float deterministically (shortest round-trip form).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Write rows with a header; every row must match the header width.
pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    if let Some(dir) = path.as_ref().parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Write a numeric matrix with a generated `c0,c1,...` header.
pub fn write_matrix<P: AsRef<Path>>(path: P, matrix: &[Vec<f64>]) -> Result<()> {
    let cols = matrix.first().map_or(0, |r| r.len());
    let header: Vec<String> = (0..cols).map(|i| format!("c{i}")).collect();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = matrix
        .iter()
        .map(|r| r.iter().map(|v| fmt_f64(*v)).collect())
        .collect();
    write_csv(path, &header_refs, &rows)
}

/// Read a numeric matrix, skipping a leading header row if its first field
/// does not parse as a number.
pub fn read_matrix<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(&path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields[0].parse::<f64>().is_err() {
            continue; // header
        }
        let mut row = Vec::with_capacity(fields.len());
        for f in fields {
            row.push(f.parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "{}:{}: `{f}` is not a number",
                    path.as_ref().display(),
                    lineno + 1
                ))
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data rows",
            path.as_ref().display()
        )));
    }
    Ok(rows)
}

/// Load a single-row CSV as a validated distribution.
pub fn read_pmf<P: AsRef<Path>>(path: P) -> Result<Pmf> {
    let rows = read_matrix(path)?;
    if rows.len() != 1 {
        return Err(Error::Parse(format!(
            "expected one row for a pmf, got {}",
            rows.len()
        )));
    }
    Pmf::new(rows.into_iter().next().unwrap())
}

/// Load a matrix CSV as a validated joint distribution.
pub fn read_joint<P: AsRef<Path>>(path: P) -> Result<JointPmf> {
    JointPmf::new(read_matrix(path)?)
}

/// Load a matrix CSV as a validated row-stochastic channel.
pub fn read_channel<P: AsRef<Path>>(path: P) -> Result<Channel> {
    Channel::new(read_matrix(path)?)
}

/// 64-bit FNV-1a over a byte stream; used for output manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_with_header() {
        let dir = std::env::temp_dir().join("infogame_io_test");
        let path = dir.join("m.csv");
        let m = vec![vec![0.25, 0.75], vec![1.5e-9, 2.0]];
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("c0,c1\n"));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn pmf_load_applies_validation() {
        let dir = std::env::temp_dir().join("infogame_io_test2");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.csv");
        fs::write(&path, "p0,p1\n0.6,0.6\n").unwrap();
        assert!(read_pmf(&path).is_err());
        fs::write(&path, "p0,p1\n0.4,0.6\n").unwrap();
        assert_eq!(read_pmf(&path).unwrap().probs(), &[0.4, 0.6]);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
