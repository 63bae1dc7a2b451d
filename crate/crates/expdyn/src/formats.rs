//! CSV, PGM and PPM encodings. Every image and field file puts pixel
//! `(0, 0)` at the lower-left corner of the window: rows are written
//! bottom-up, each row left to right.

use std::fs;
use std::io::Write;
use std::path::Path;

use expdyn_core::dynamics::Orbit;
use expdyn_core::invariant::ExitField;
use expdyn_core::rays::Ray;
use expdyn_core::ComplexValue;

use crate::error::{AppError, AppResult};

/// Round-trip formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for row in rows {
            w.write_record(&row).expect("in-memory write");
        }
        w.flush().expect("in-memory flush");
    }
    buf
}

/// `t,re,im,depth,residual`, one line per sample.
pub fn ray_csv(ray: &Ray) -> Vec<u8> {
    csv_bytes(
        &["t", "re", "im", "depth", "residual"],
        ray.samples.iter().map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.point.re),
                fmt_f64(s.point.im),
                s.depth.to_string(),
                fmt_f64(s.residual),
            ]
        }),
    )
}

/// `n,re,im,log_modulus`; components are empty once they leave the
/// native range.
pub fn orbit_csv(orbit: &Orbit) -> Vec<u8> {
    csv_bytes(
        &["n", "re", "im", "log_modulus"],
        orbit.points.iter().enumerate().map(|(n, p)| {
            let (re, im) = match p.native {
                Some(z) => (fmt_f64(z.re), fmt_f64(z.im)),
                None => (String::new(), String::new()),
            };
            let lm = p.log_modulus();
            let lm = match lm.to_f64() {
                Some(v) => fmt_f64(v),
                None => format!("exp^{}({})", lm.level(), fmt_f64(lm.mantissa())),
            };
            vec![n.to_string(), re, im, lm]
        }),
    )
}

/// Which of the two membership readings to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reading {
    #[default]
    Optimistic,
    Conservative,
}

fn depths(field: &ExitField, reading: Reading) -> &[u32] {
    match reading {
        Reading::Optimistic => &field.optimistic,
        Reading::Conservative => &field.conservative,
    }
}

/// `ix,iy,re,im,exit_depth` in row-major order from the bottom row.
pub fn field_csv(field: &ExitField, reading: Reading) -> Vec<u8> {
    let d = depths(field, reading);
    csv_bytes(
        &["ix", "iy", "re", "im", "exit_depth"],
        (0..field.ny).flat_map(|iy| {
            (0..field.nx).map(move |ix| {
                let z = field.point(ix, iy);
                vec![
                    ix.to_string(),
                    iy.to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                    d[iy * field.nx + ix].to_string(),
                ]
            })
        }),
    )
}

/// Binary 16-bit PGM of the exit depths, clamped to `65535`.
pub fn field_pgm16(field: &ExitField, reading: Reading) -> Vec<u8> {
    let d = depths(field, reading);
    let mut out = format!("P5\n{} {}\n65535\n", field.nx, field.ny).into_bytes();
    out.reserve(d.len() * 2);
    for v in d {
        out.extend_from_slice(&(u16::try_from(*v).unwrap_or(u16::MAX)).to_be_bytes());
    }
    out
}

/// Colour ramps for [`render_field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Palette {
    Gray,
    /// Black through red and yellow to white.
    Fire,
    /// Dark blue through cyan to white.
    Ice,
}

impl std::str::FromStr for Palette {
    type Err = AppError;
    fn from_str(s: &str) -> AppResult<Self> {
        match s {
            "gray" | "grey" => Ok(Palette::Gray),
            "fire" => Ok(Palette::Fire),
            "ice" => Ok(Palette::Ice),
            _ => Err(AppError::Parse(format!("unknown palette {s:?}"))),
        }
    }
}

impl Palette {
    /// Colour at `u ∈ [0, 1]`.
    pub fn color(self, u: f64) -> [u8; 3] {
        let u = u.clamp(0.0, 1.0);
        let ch = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
        match self {
            Palette::Gray => [ch(u); 3],
            Palette::Fire => [ch(3.0 * u), ch(3.0 * u - 1.0), ch(3.0 * u - 2.0)],
            Palette::Ice => [ch(2.0 * u - 1.0), ch(1.5 * u - 0.25), ch(0.3 + 0.7 * u)],
        }
    }
}

/// P5 for [`Palette::Gray`], P6 otherwise. Depth `d` maps to
/// `d/(N+1)` on the ramp, so survivors take its maximum.
pub fn render_bytes(field: &ExitField, reading: Reading, palette: Palette) -> Vec<u8> {
    let d = depths(field, reading);
    let top = field.survivor_value() as f64;
    let gray = palette == Palette::Gray;
    let magic = if gray { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", field.nx, field.ny).into_bytes();
    for v in d {
        let c = palette.color(*v as f64 / top);
        if gray {
            out.push(c[0]);
        } else {
            out.extend_from_slice(&c);
        }
    }
    out
}

pub fn render_field(field: &ExitField, reading: Reading, palette: Palette, path: &Path) -> AppResult<()> {
    if field.optimistic.is_empty() {
        return Err(AppError::Parse("empty field".into()));
    }
    write_file(path, &render_bytes(field, reading, palette))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let mut f = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    f.write_all(bytes).map_err(|e| AppError::io(path, e))
}

/// Reads points from a CSV file. Columns named `re` and `im` are used when
/// a header names them; otherwise the first two columns, with a
/// non-numeric first line taken as a header.
pub fn read_points(path: &Path) -> AppResult<Vec<ComplexValue>> {
    let wrap = |source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(wrap)?;
    let mut cols = (0, 1);
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(wrap)?;
        let field = |i: usize| record.get(i).and_then(|v| v.parse::<f64>().ok());
        match (field(cols.0), field(cols.1)) {
            (Some(re), Some(im)) => out.push(ComplexValue::new(re, im)),
            _ if line == 0 => {
                let find = |name: &str| record.iter().position(|h| h == name);
                if let (Some(a), Some(b)) = (find("re"), find("im")) {
                    cols = (a, b);
                }
            }
            _ => {
                return Err(AppError::Parse(format!(
                    "{}: line {} is not a point",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use expdyn_core::invariant::Window;

    fn tiny_field() -> ExitField {
        ExitField {
            window: Window::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            nx: 2,
            ny: 2,
            depth: 3,
            optimistic: vec![1, 2, 3, 4],
            conservative: vec![1, 2, 3, 4],
        }
    }

    #[test]
    fn gray_render_is_p5_with_one_byte_per_pixel() {
        let bytes = render_bytes(&tiny_field(), Reading::Optimistic, Palette::Gray);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[64, 128, 191, 255]);
    }

    #[test]
    fn colour_render_is_p6() {
        let bytes = render_bytes(&tiny_field(), Reading::Optimistic, Palette::Fire);
        assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(bytes.len(), b"P6\n2 2\n255\n".len() + 12);
        assert_eq!(&bytes[bytes.len() - 3..], &[255, 255, 255]);
    }

    #[test]
    fn pgm16_is_big_endian() {
        let bytes = field_pgm16(&tiny_field(), Reading::Optimistic);
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[header.len()..], &[0, 1, 0, 2, 0, 3, 0, 4]);
    }

    #[test]
    fn field_csv_starts_at_lower_left() {
        let text = String::from_utf8(field_csv(&tiny_field(), Reading::Optimistic)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ix,iy,re,im,exit_depth");
        assert!(lines[1].starts_with("0,0,0.0000000000000000e0,0.0000000000000000e0,1"));
        assert!(lines[2].starts_with("1,0,1.0000000000000000e0"));
        assert_eq!(lines.len(), 5);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5426413577735265, 1e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn points_read_with_or_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "x,im,re\n9,2,1\n9,4,3\n").unwrap();
        assert_eq!(
            read_points(&a).unwrap(),
            vec![ComplexValue::new(1.0, 2.0), ComplexValue::new(3.0, 4.0)]
        );
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "1,2\n3,4\n").unwrap();
        assert_eq!(read_points(&b).unwrap().len(), 2);
        let c = dir.path().join("c.csv");
        std::fs::write(&c, "1,2\nfoo,4\n").unwrap();
        assert!(read_points(&c).is_err());
    }
}
