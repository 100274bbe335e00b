//! Snapshot encodings: text CSV, little-endian raw doubles, and 16-bit PGM.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::stepper::SimState;

pub const RAW_MAGIC: [u8; 4] = *b"NLKM";
pub const RAW_HEADER_LEN: usize = 32;
/// Gray level used when a field is constant and min–max scaling is undefined.
pub const PGM_DEGENERATE_LEVEL: u16 = 32768;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Pgm,
    Raw,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Pgm => "pgm",
            OutputFormat::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "pgm" => Some(OutputFormat::Pgm),
            "raw" => Some(OutputFormat::Raw),
            _ => None,
        }
    }
}

/// The two state variables, used for file naming and headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldName {
    Biomass,
    Water,
}

impl FieldName {
    pub fn tag(self) -> &'static str {
        match self {
            FieldName::Biomass => "n",
            FieldName::Water => "w",
        }
    }
}

/// `<tag>_<step:06>.<ext>`, e.g. `n_000042.csv`.
pub fn snapshot_file_name(field: FieldName, step_index: u64, fmt: OutputFormat) -> String {
    format!("{}_{:06}.{}", field.tag(), step_index, fmt.extension())
}

/// Min–max normalization bounds used for one PGM image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmRange {
    pub min: f64,
    pub max: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFiles {
    pub step_index: u64,
    pub files: Vec<PathBuf>,
    pub pgm_n: Option<PgmRange>,
    pub pgm_w: Option<PgmRange>,
}

/// Writes both fields of `state` in every requested format into `dir`.
pub fn write_snapshot(
    dir: &Path,
    state: &SimState,
    fmts: &[OutputFormat],
) -> Result<SnapshotFiles> {
    let mut out = SnapshotFiles {
        step_index: state.step_index,
        files: Vec::new(),
        pgm_n: None,
        pgm_w: None,
    };
    for &fmt in fmts {
        for (name, field) in [(FieldName::Biomass, &state.n), (FieldName::Water, &state.w)] {
            let path = dir.join(snapshot_file_name(name, state.step_index, fmt));
            match fmt {
                OutputFormat::Csv => write_csv(&path, field, state.t, name)?,
                OutputFormat::Raw => write_raw(&path, field, state.t)?,
                OutputFormat::Pgm => {
                    let range = write_pgm(&path, field)?;
                    match name {
                        FieldName::Biomass => out.pgm_n = Some(range),
                        FieldName::Water => out.pgm_w = Some(range),
                    }
                }
            }
            out.files.push(path);
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn csv_header(grid: &GridSpec, t: f64, field: FieldName) -> String {
    format!(
        "# t={} nx={} ny={} hx={} hy={} field={}",
        t,
        grid.nx(),
        grid.ny(),
        grid.hx(),
        grid.hy(),
        field.tag()
    )
}

/// Header line, then `ny` rows of `nx` values with 17 significant digits; row `j` holds `y_j`.
pub fn write_csv(path: &Path, field: &Field, t: f64, name: FieldName) -> Result<()> {
    let g = field.grid();
    let mut f = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(f, "{}", csv_header(g, t, name)).map_err(io)?;
    for row in field.values().chunks_exact(g.nx()) {
        let mut first = true;
        for v in row {
            if !first {
                f.write_all(b",").map_err(io)?;
            }
            first = false;
            write!(f, "{v:.16e}").map_err(io)?;
        }
        f.write_all(b"\n").map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Parsed CSV snapshot: header metadata plus values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSnapshot {
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub field: String,
    pub values: Vec<f64>,
}

pub fn read_csv(path: &Path) -> Result<CsvSnapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let body = header
        .strip_prefix("# ")
        .ok_or_else(|| format_err(path, "missing '# ' header"))?;
    let mut t = None;
    let (mut nx, mut ny, mut hx, mut hy, mut field) = (None, None, None, None, None);
    for item in body.split_whitespace() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("bad header item {item:?}")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format_err(path, format!("bad number in header: {v:?}")))
        };
        let count = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format_err(path, format!("bad count in header: {v:?}")))
        };
        match k {
            "t" => t = Some(num(v)?),
            "nx" => nx = Some(count(v)?),
            "ny" => ny = Some(count(v)?),
            "hx" => hx = Some(num(v)?),
            "hy" => hy = Some(num(v)?),
            "field" => field = Some(v.to_string()),
            _ => return Err(format_err(path, format!("unknown header key {k:?}"))),
        }
    }
    let missing = |k: &str| format_err(path, format!("header lacks {k}"));
    let (nx, ny) = (
        nx.ok_or_else(|| missing("nx"))?,
        ny.ok_or_else(|| missing("ny"))?,
    );
    let mut values = Vec::with_capacity(nx * ny);
    for (j, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let before = values.len();
        for cell in line.split(',') {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err(path, format!("row {j}: bad value {cell:?}")))?,
            );
        }
        if values.len() - before != nx {
            return Err(format_err(
                path,
                format!(
                    "row {j} has {} values, expected {nx}",
                    values.len() - before
                ),
            ));
        }
    }
    if values.len() != nx * ny {
        return Err(format_err(
            path,
            format!("expected {ny} rows, got {}", values.len() / nx.max(1)),
        ));
    }
    Ok(CsvSnapshot {
        t: t.ok_or_else(|| missing("t"))?,
        nx,
        ny,
        hx: hx.ok_or_else(|| missing("hx"))?,
        hy: hy.ok_or_else(|| missing("hy"))?,
        field: field.ok_or_else(|| missing("field"))?,
        values,
    })
}

/// Header layout: magic, `u32 nx`, `u32 ny`, 4 zero bytes, `f64 t`, 8 reserved zero bytes.
pub fn encode_raw(field: &Field, t: f64) -> Vec<u8> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(RAW_HEADER_LEN + 8 * g.len());
    buf.extend_from_slice(&RAW_MAGIC);
    buf.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    buf.extend_from_slice(&[0; 4]);
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&[0; 8]);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn write_raw(path: &Path, field: &Field, t: f64) -> Result<()> {
    std::fs::write(path, encode_raw(field, t)).map_err(|e| Error::io(path, e))
}

/// Decoded raw snapshot. The format stores cell counts but not extents.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSnapshot {
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

impl RawSnapshot {
    /// Attaches the values to `grid`, which must have matching cell counts.
    pub fn into_field(
        self,
        grid: GridSpec,
    ) -> std::result::Result<Field, crate::error::SetupError> {
        if grid.nx() != self.nx || grid.ny() != self.ny {
            return Err(crate::error::SetupError::GridMismatch);
        }
        Field::new(grid, self.values)
    }
}

pub fn decode_raw(path: &Path, bytes: &[u8]) -> Result<RawSnapshot> {
    if bytes.len() < RAW_HEADER_LEN || bytes[..4] != RAW_MAGIC {
        return Err(format_err(path, "not an NLKM raw snapshot"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (nx, ny) = (u32_at(4), u32_at(8));
    let t = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let payload = &bytes[RAW_HEADER_LEN..];
    if payload.len() != 8 * nx * ny {
        return Err(format_err(
            path,
            format!(
                "payload has {} bytes, header implies {}",
                payload.len(),
                8 * nx * ny
            ),
        ));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawSnapshot { nx, ny, t, values })
}

pub fn read_raw(path: &Path) -> Result<RawSnapshot> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_raw(path, &bytes)
}

/// Binary P5 image, maxval 65535, big-endian samples. The first image row is
/// the highest `y`, so the picture has the usual orientation.
pub fn encode_pgm(field: &Field) -> (Vec<u8>, PgmRange) {
    let g = field.grid();
    let (min, max) = (field.min(), field.max());
    let degenerate = !(max > min);
    let header = format!("P5\n{} {}\n65535\n", g.nx(), g.ny());
    let mut buf = Vec::with_capacity(header.len() + 2 * g.len());
    buf.extend_from_slice(header.as_bytes());
    for row in field.values().chunks_exact(g.nx()).rev() {
        for &v in row {
            let level = if degenerate {
                PGM_DEGENERATE_LEVEL
            } else {
                ((v - min) / (max - min) * 65535.0)
                    .round()
                    .clamp(0.0, 65535.0) as u16
            };
            buf.extend_from_slice(&level.to_be_bytes());
        }
    }
    (
        buf,
        PgmRange {
            min,
            max,
            degenerate,
        },
    )
}

pub fn write_pgm(path: &Path, field: &Field) -> Result<PgmRange> {
    let (bytes, range) = encode_pgm(field);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(range)
}
