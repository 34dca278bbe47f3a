//! Terrain document formats.
//!
//! Two input formats are supported:
//!
//! * **Text grid** — one row per line, heights in centimetres separated by
//!   commas.  An optional header comment `# cell_size=<cm>` makes the
//!   document self-describing; other `#` lines are ignored.
//! * **PGM** (portable graymap, `P2` ASCII or `P5` binary) — pixel
//!   intensity times `z_scale` gives the height in centimetres.  16-bit
//!   big-endian payloads are accepted for `P5`.
//!
//! [`save_text`] writes the canonical text form (header plus shortest
//! round-trip float formatting), so `load → save → load` reproduces the
//! field exactly and saving is idempotent byte-for-byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::heightfield::HeightField;

/// Loads a terrain document, sniffing the format from its first bytes
/// (`P2`/`P5` magic → PGM, anything else → text grid).
///
/// `cell_size` applies when a text document carries no header; `z_scale`
/// converts image intensities to centimetres.
pub fn load_height_field(path: &Path, cell_size: f64, z_scale: f64) -> Result<HeightField, Error> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(&bytes, cell_size, z_scale)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::Format(format!("text grid is not valid UTF-8: {e}")))?;
        parse_text(&text, cell_size, z_scale)
    }
}

/// Saves the canonical text form of a field.
pub fn save_text(field: &HeightField, path: &Path) -> Result<(), Error> {
    std::fs::write(path, to_text(field))?;
    Ok(())
}

/// Parses the comma-separated text grid format.
pub fn parse_text(text: &str, default_cell_size: f64, z_scale: f64) -> Result<HeightField, Error> {
    let mut cell_size = default_cell_size;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("cell_size=") {
                cell_size = v.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad cell_size {v:?}: {e}"),
                })?;
            }
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("bad height {tok:?}: {e}"),
            })?;
            row.push(v * z_scale);
        }
        rows.push(row);
    }
    let height = rows.len();
    if height == 0 {
        return Err(Error::Format("text grid contains no rows".into()));
    }
    let width = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::Format(format!(
            "ragged grid: row 1 has {width} entries but row {} has {}",
            i + 1,
            row.len()
        )));
    }
    HeightField::new(width, height, cell_size, rows.concat())
}

/// Renders the canonical text form: a `cell_size` header followed by
/// comma-separated rows.
pub fn to_text(field: &HeightField) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# cell_size={}", field.cell_size());
    for y in 0..field.height() {
        for x in 0..field.width() {
            if x > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", field.z(x, y));
        }
        out.push('\n');
    }
    out
}

/// Parses a `P2` (ASCII) or `P5` (binary) portable graymap.
pub fn parse_pgm(bytes: &[u8], cell_size: f64, z_scale: f64) -> Result<HeightField, Error> {
    let magic = bytes.get(..2).ok_or_else(|| Error::Format("truncated PGM header".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(Error::Format("not a P2/P5 PGM document".into())),
    };

    // Header tokens (width, height, maxval) separated by whitespace, with
    // `#` comments running to end of line.
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        *slot = next_pgm_token(bytes, &mut pos)?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::Format("PGM image has zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }

    let n = width * height;
    let mut z = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        pos += 1;
        let wide = maxval > 255;
        let bytes_per = if wide { 2 } else { 1 };
        let payload = bytes
            .get(pos..pos + n * bytes_per)
            .ok_or_else(|| Error::Format("truncated P5 payload".into()))?;
        for i in 0..n {
            let v = if wide {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as f64
            } else {
                payload[i] as f64
            };
            z.push(v * z_scale);
        }
    } else {
        for _ in 0..n {
            let v = next_pgm_token(bytes, &mut pos)?;
            z.push(v as f64 * z_scale);
        }
    }
    HeightField::new(width, height, cell_size, z)
}

/// Reads the next unsigned integer token, skipping whitespace and comments.
fn next_pgm_token(bytes: &[u8], pos: &mut usize) -> Result<usize, Error> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while !matches!(bytes.get(*pos), None | Some(b'\n')) {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_digit() => {
                let start = *pos;
                while matches!(bytes.get(*pos), Some(d) if d.is_ascii_digit()) {
                    *pos += 1;
                }
                let tok = std::str::from_utf8(&bytes[start..*pos]).unwrap();
                return tok.parse().map_err(|e| Error::Format(format!("bad PGM value {tok:?}: {e}")));
            }
            Some(b) => {
                return Err(Error::Format(format!("unexpected byte {b:#04x} in PGM header")))
            }
            None => return Err(Error::Format("truncated PGM document".into())),
        }
    }
}
