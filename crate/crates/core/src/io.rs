//! Field files: CSV (`x1,…,xn,re,im`, row-major) and the little-endian
//! binary `PAXF` format, plus atomic file replacement.
//!
//! PAXF version 1 layout, all integers u64 and floats f64 unless noted:
//!
//! ```text
//! "PAXF"  u32 version  n
//! per axis: nodes-per-panel  rule-code  α_i  R_i  break-count  breaks...
//! value-kind (0 real, 1 complex)  values (re or re,im per point)
//! ```

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{PaxError, Result};
use crate::grid::{Alpha, AxisRule, AxisSpec, Field, TensorGrid};

const MAGIC: &[u8; 4] = b"PAXF";
const VERSION: u32 = 1;
/// Relative tolerance when matching CSV coordinates against a grid.
const COORD_TOL: f64 = 1e-12;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| PaxError::Io(e.error))?;
    Ok(())
}

pub fn encode_paxf(f: &Field) -> Vec<u8> {
    let g = f.grid();
    let complex = f.values().iter().any(|v| v.im != 0.0);
    let mut out = Vec::with_capacity(32 + g.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u64).to_le_bytes());
    for axis in g.axes() {
        let spec = axis.spec();
        out.extend_from_slice(&(spec.nodes as u64).to_le_bytes());
        out.extend_from_slice(&spec.rule.code().to_le_bytes());
        out.extend_from_slice(&spec.order.to_le_bytes());
        out.extend_from_slice(&spec.radius.to_le_bytes());
        out.extend_from_slice(&(spec.breaks.len() as u64).to_le_bytes());
        for b in &spec.breaks {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out.extend_from_slice(&u64::from(complex).to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| PaxError::Format(format!("truncated PAXF data at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, what: &str, max: u64) -> Result<usize> {
        let v = self.u64()?;
        if v > max {
            return Err(PaxError::Format(format!("{what} {v} is implausibly large")));
        }
        Ok(v as usize)
    }
}

pub fn decode_paxf(bytes: &[u8]) -> Result<Field> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(PaxError::Format("not a PAXF file".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(PaxError::Format(format!("unsupported PAXF version {version}")));
    }
    let n = c.count("dimension", 16)?;
    if n == 0 {
        return Err(PaxError::Format("PAXF dimension is zero".into()));
    }
    let mut specs = Vec::with_capacity(n);
    for _ in 0..n {
        let nodes = c.count("node count", 1 << 24)?;
        let code = c.u64()?;
        let rule = AxisRule::from_code(code).ok_or_else(|| PaxError::Format(format!("unknown rule code {code}")))?;
        let order = c.f64()?;
        let radius = c.f64()?;
        let nb = c.count("break count", 1 << 16)?;
        let breaks = (0..nb).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        specs.push(AxisSpec { order, radius, nodes, rule, breaks });
    }
    let complex = match c.u64()? {
        0 => false,
        1 => true,
        k => return Err(PaxError::Format(format!("bad value kind {k}"))),
    };
    let alpha = Alpha::new(specs.iter().map(|s| s.order).collect()).map_err(|e| PaxError::Format(e.to_string()))?;
    let grid = TensorGrid::from_specs(alpha, specs).map_err(|e| PaxError::Format(e.to_string()))?;
    let per = if complex { 16 } else { 8 };
    if bytes.len() - c.pos != grid.len() * per {
        return Err(PaxError::Format(format!(
            "PAXF payload holds {} bytes, grid needs {}",
            bytes.len() - c.pos,
            grid.len() * per
        )));
    }
    let values = (0..grid.len())
        .map(|_| Ok(Complex64::new(c.f64()?, if complex { c.f64()? } else { 0.0 })))
        .collect::<Result<Vec<_>>>()?;
    Field::new(Arc::new(grid), values)
}

pub fn encode_csv(f: &Field) -> Result<Vec<u8>> {
    let g = f.grid();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=g.dim()).map(|i| format!("x{i}")).collect();
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(g.dim() + 2);
    for (x, v) in g.points().zip(f.values()) {
        row.clear();
        row.extend(x.iter().map(|c| c.to_string()));
        row.push(v.re.to_string());
        row.push(v.im.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| PaxError::Format(e.to_string()))
}

fn csv_err(e: csv::Error) -> PaxError {
    PaxError::Format(format!("csv: {e}"))
}

/// Reads CSV values laid out on `grid`; coordinates must match its nodes.
pub fn decode_csv(text: &[u8], grid: &Arc<TensorGrid>) -> Result<Field> {
    let mut r = csv::Reader::from_reader(text);
    let n = grid.dim();
    let header = r.headers().map_err(csv_err)?;
    let expected: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(["re".into(), "im".into()]).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(PaxError::Format(format!("csv header must be {}", expected.join(","))));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut point = vec![0.0; n];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if i >= grid.len() {
            return Err(PaxError::GridMismatch(format!("csv has more than {} rows", grid.len())));
        }
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PaxError::Format(format!("row {}: {e}", i + 1)))?;
        grid.point_into(i, &mut point);
        for (k, (&got, &want)) in nums.iter().zip(&point).enumerate() {
            if (got - want).abs() > COORD_TOL * want.abs().max(1.0) {
                return Err(PaxError::GridMismatch(format!(
                    "row {} coordinate x{} is {got}, grid node is {want}",
                    i + 1,
                    k + 1
                )));
            }
        }
        values.push(Complex64::new(nums[n], nums[n + 1]));
    }
    if values.len() != grid.len() {
        return Err(PaxError::GridMismatch(format!(
            "csv has {} rows, grid has {} points",
            values.len(),
            grid.len()
        )));
    }
    Field::new(grid.clone(), values)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a field; CSV files need the grid they were sampled on.
pub fn read_field(path: &Path, grid: Option<&Arc<TensorGrid>>) -> Result<Field> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if is_csv(path) {
        let g = grid.ok_or_else(|| PaxError::Config("csv input needs a [grid] section".into()))?;
        decode_csv(&bytes, g)
    } else {
        decode_paxf(&bytes)
    }
}

/// Writes a field, choosing the format from the extension (`.csv` or PAXF).
pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    let bytes = if is_csv(path) { encode_csv(f)? } else { encode_paxf(f) };
    write_atomic(path, &bytes)
}
