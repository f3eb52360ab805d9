//! File formats: points, data vectors, Matrix Market, metrics sidecars and
//! Cholesky factors. All binary formats are little-endian.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster_tree::PointCloud;
use crate::kernels::KernelConfig;
use crate::sparse::{CholeskyFactor, LowerCsc, Permutation, SparseSym};
use crate::{Error, Result};

pub const POINTS_MAGIC: &[u8; 8] = b"SMPLPTS1";
pub const VECTOR_MAGIC: &[u8; 8] = b"SMPLVEC1";
pub const FACTOR_MAGIC: &[u8; 8] = b"SMPLCHOL";
pub const FACTOR_VERSION: u32 = 1;

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| with_path(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| with_path(path, e))?))
}

fn u32_at(bytes: &[u8], at: usize) -> Option<u32> {
    Some(u32::from_le_bytes(bytes.get(at..at + 4)?.try_into().ok()?))
}

fn f64s(bytes: &[u8], count: usize, what: &str) -> Result<Vec<f64>> {
    if bytes.len() != count * 8 {
        return Err(Error::Parse(format!(
            "{what}: expected {} payload bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Numeric rows of a CSV file; a first row that does not parse as numbers
/// is treated as a header.
fn parse_csv(bytes: &[u8], what: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{what}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!("{what}: row {}: {e}", line + 1)));
            }
        }
    }
    Ok(rows)
}

/// Reads points from CSV (one point per row) or the binary point format.
pub fn read_points(path: &Path) -> Result<PointCloud> {
    let bytes = read_all(path)?;
    let what = path.display().to_string();
    if bytes.starts_with(POINTS_MAGIC) {
        let d = u32_at(&bytes, 8).ok_or_else(|| Error::Parse(format!("{what}: truncated header")))? as usize;
        let n = u32_at(&bytes, 12).ok_or_else(|| Error::Parse(format!("{what}: truncated header")))? as usize;
        let coords = f64s(&bytes[16..], n * d, &what)?;
        return PointCloud::new(d, coords);
    }
    let rows = parse_csv(&bytes, &what)?;
    let d = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Parse(format!(
            "{what}: row {} has {} columns, expected {d}",
            i + 1,
            r.len()
        )));
    }
    PointCloud::new(d, rows.concat())
}

pub fn write_points_binary(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(POINTS_MAGIC)?;
    w.write_all(&(cloud.dim() as u32).to_le_bytes())?;
    w.write_all(&(cloud.len() as u32).to_le_bytes())?;
    for v in cloud.coords() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = create(path)?;
    for i in 0..cloud.len() {
        let row: Vec<String> = cloud.point(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a vector from a one-column CSV file or the binary vector format.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let bytes = read_all(path)?;
    let what = path.display().to_string();
    if bytes.starts_with(VECTOR_MAGIC) {
        let n = u32_at(&bytes, 8).ok_or_else(|| Error::Parse(format!("{what}: truncated header")))? as usize;
        return f64s(&bytes[12..], n, &what);
    }
    let rows = parse_csv(&bytes, &what)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() == 1 {
                Ok(r[0])
            } else {
                Err(Error::Parse(format!("{what}: row {} has {} columns, expected 1", i + 1, r.len())))
            }
        })
        .collect()
}

/// Writes binary when the extension is `.bin`, CSV otherwise. Values are
/// printed in shortest round-trip form.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    if path.extension().is_some_and(|e| e == "bin") {
        w.write_all(VECTOR_MAGIC)?;
        w.write_all(&(v.len() as u32).to_le_bytes())?;
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    } else {
        for x in v {
            writeln!(w, "{x:?}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_kernel_config(path: &Path) -> Result<KernelConfig> {
    let bytes = read_all(path)?;
    let cfg: KernelConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Matrix Market coordinate file with both triangles written out.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SparseSym) -> Result<()> {
    let n = a.size();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{n} {n} {}", a.nnz())?;
    // Column-major over the full matrix: upper part of column j comes from
    // row j of the lower triangle.
    let mut upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for j in 0..n {
        let (rows, vals) = a.column(j);
        for (&i, &v) in rows.iter().zip(vals).skip(1) {
            upper[i].push((j, v));
        }
    }
    for j in 0..n {
        for &(i, v) in &upper[j] {
            writeln!(w, "{} {} {v:e}", i + 1, j + 1)?;
        }
        let (rows, vals) = a.column(j);
        for (&i, &v) in rows.iter().zip(vals) {
            writeln!(w, "{} {} {v:e}", i + 1, j + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_file(path: &Path, a: &SparseSym) -> Result<()> {
    write_matrix_market(create(path)?, a)
}

/// Reads a real coordinate Matrix Market file (`general` or `symmetric`)
/// into symmetric storage using its lower triangle.
pub fn read_matrix_market<R: Read>(r: R) -> Result<SparseSym> {
    let mut lines = BufReader::new(r).lines();
    let banner = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported Matrix Market banner: {banner}")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field type {}", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };
    let mut size: Option<(usize, usize)> = None;
    let mut t = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("malformed Matrix Market line: {line}"));
        if size.is_none() {
            if parts.len() != 3 {
                return Err(bad());
            }
            let m: usize = parts[0].parse().map_err(|_| bad())?;
            let n: usize = parts[1].parse().map_err(|_| bad())?;
            if m != n {
                return Err(Error::DimensionMismatch { expected: m, found: n });
            }
            size = Some((n, parts[2].parse().map_err(|_| bad())?));
            continue;
        }
        if parts.len() != 3 {
            return Err(bad());
        }
        let i: usize = parts[0].parse().map_err(|_| bad())?;
        let j: usize = parts[1].parse().map_err(|_| bad())?;
        let v: f64 = parts[2].parse().map_err(|_| bad())?;
        if i == 0 || j == 0 {
            return Err(bad());
        }
        if i >= j {
            t.push((i - 1, j - 1, v));
        } else if symmetric {
            return Err(Error::Parse(format!("upper-triangle entry ({i}, {j}) in a symmetric file")));
        }
    }
    let (n, _) = size.ok_or_else(|| Error::Parse("missing Matrix Market size line".into()))?;
    SparseSym::from_lower_triplets(n, t)
}

/// Metrics written next to a compressed matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub schema: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    /// `None` stands for an infinite cut-off parameter.
    pub eta: Option<f64>,
    pub p: usize,
    pub q: usize,
    pub epsilon: f64,
    pub anz: f64,
    pub assembly_seconds: f64,
    pub peak_block_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relative_frobenius_error: Option<f64>,
}

fn write_u64s<W: Write>(w: &mut W, v: impl IntoIterator<Item = usize>) -> Result<()> {
    for x in v {
        w.write_all(&(x as u64).to_le_bytes())?;
    }
    Ok(())
}

/// Binary factor file: magic, version, `n`, `nnz`, column pointers, row
/// indices, values, permutation (`new -> old`), ridge.
pub fn write_factor<W: Write>(mut w: W, f: &CholeskyFactor) -> Result<()> {
    w.write_all(FACTOR_MAGIC)?;
    w.write_all(&FACTOR_VERSION.to_le_bytes())?;
    write_u64s(&mut w, [f.l.n, f.l.nnz()])?;
    write_u64s(&mut w, f.l.col_ptr.iter().copied())?;
    write_u64s(&mut w, f.l.row_idx.iter().copied())?;
    for v in &f.l.values {
        w.write_all(&v.to_le_bytes())?;
    }
    write_u64s(&mut w, f.perm.forward_map().iter().copied())?;
    w.write_all(&f.rho.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_factor<R: Read>(mut r: R) -> Result<CholeskyFactor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let trunc = || Error::Parse("truncated factor file".into());
    if !bytes.starts_with(FACTOR_MAGIC) {
        return Err(Error::Parse("not a factor file".into()));
    }
    let version = u32_at(&bytes, 8).ok_or_else(trunc)?;
    if version != FACTOR_VERSION {
        return Err(Error::Parse(format!("unsupported factor version {version}")));
    }
    let mut at = 12;
    let mut next8 = |bytes: &[u8]| -> Result<[u8; 8]> {
        let s = bytes.get(at..at + 8).ok_or_else(trunc)?;
        at += 8;
        Ok(s.try_into().expect("8 bytes"))
    };
    let n = u64::from_le_bytes(next8(&bytes)?) as usize;
    let nnz = u64::from_le_bytes(next8(&bytes)?) as usize;
    let mut read_idx = |count: usize| -> Result<Vec<usize>> {
        (0..count).map(|_| Ok(u64::from_le_bytes(next8(&bytes)?) as usize)).collect()
    };
    let col_ptr = read_idx(n + 1)?;
    let row_idx = read_idx(nnz)?;
    let values: Vec<f64> = (0..nnz)
        .map(|_| Ok(f64::from_le_bytes(next8(&bytes)?)))
        .collect::<Result<_>>()?;
    let perm: Vec<usize> = (0..n)
        .map(|_| Ok(u64::from_le_bytes(next8(&bytes)?) as usize))
        .collect::<Result<_>>()?;
    let rho = f64::from_le_bytes(next8(&bytes)?);
    if col_ptr[n] != nnz || row_idx.iter().any(|&i| i >= n) || col_ptr.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parse("inconsistent factor structure".into()));
    }
    Ok(CholeskyFactor {
        l: LowerCsc {
            n,
            col_ptr,
            row_idx,
            values,
        },
        perm: Permutation::new(perm)?,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn points_csv_with_header_and_binary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pts.csv");
        std::fs::write(&p, "x,y\n0.5, 1\n-2,3e-1\n").unwrap();
        let c = read_points(&p).unwrap();
        assert_eq!((c.dim(), c.len()), (2, 2));
        assert_eq!(c.coords(), &[0.5, 1.0, -2.0, 0.3]);
        let b = dir.path().join("pts.bin");
        write_points_binary(&b, &c).unwrap();
        assert_eq!(read_points(&b).unwrap(), c);
        let p2 = dir.path().join("again.csv");
        write_points_csv(&p2, &c).unwrap();
        assert_eq!(read_points(&p2).unwrap(), c);

        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(matches!(read_points(&p), Err(Error::Parse(_))));
        std::fs::write(&p, "1,2\n3,x\n").unwrap();
        assert!(matches!(read_points(&p), Err(Error::Parse(_))));
        std::fs::write(&p, "").unwrap();
        assert!(read_points(&p).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_points(Path::new("/nonexistent/points.csv")).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
        assert!(e.to_string().contains("/nonexistent/points.csv"));
    }

    #[test]
    fn vectors_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = vec![1.0, -0.1, 1e-300, std::f64::consts::PI];
        for name in ["v.csv", "v.bin"] {
            let p = dir.path().join(name);
            write_vector(&p, &v).unwrap();
            assert_eq!(read_vector(&p).unwrap(), v);
        }
        let p = dir.path().join("h.csv");
        std::fs::write(&p, "value\n1\n2\n").unwrap();
        assert_eq!(read_vector(&p).unwrap(), vec![1.0, 2.0]);
        let p = dir.path().join("short.bin");
        std::fs::write(&p, [&VECTOR_MAGIC[..], &3u32.to_le_bytes(), &[0u8; 8]].concat()).unwrap();
        assert!(matches!(read_vector(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn matrix_market_round_trip() {
        let dense = DMatrix::from_row_slice(3, 3, &[4.0, 1.5, 0.0, 1.5, 5.0, -2.25, 0.0, -2.25, 6.0]);
        let a = SparseSym::from_dense(&dense, 1e-300).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n3 3 7\n"));
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), a);
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2.0\n2 1 0.5\n";
        let b = read_matrix_market(sym.as_bytes()).unwrap();
        assert_eq!(b.get(0, 1), 0.5);
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
    }

    #[test]
    fn factor_round_trip() {
        let dense = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.0, 0.5, 0.0, 2.0]);
        let a = SparseSym::from_dense(&dense, 0.0).unwrap();
        let f = CholeskyFactor::factorize(&a, Permutation::new(vec![2, 0, 1]).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_factor(&mut buf, &f).unwrap();
        assert_eq!(&buf[..8], FACTOR_MAGIC);
        assert_eq!(read_factor(&buf[..]).unwrap(), f);
        assert!(read_factor(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn sidecar_json() {
        let s = MatrixSidecar {
            schema: 1,
            n: 4,
            d: 2,
            eta: None,
            p: 3,
            q: 2,
            epsilon: 0.0,
            anz: 4.0,
            assembly_seconds: 0.1,
            peak_block_bytes: 64,
            rho: None,
            relative_frobenius_error: None,
        };
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["N"], 4);
        assert!(j["eta"].is_null());
        assert!(j.get("rho").is_none());
    }
}
