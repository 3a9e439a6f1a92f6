//! Binary image/frame formats and display exports.
//!
//! - `PWIMG v1 <n_z> <n_x>\n` followed by `n_z·n_x` little-endian `f32`.
//! - `PWRF v1 <r> <L> <theta_microradians>\n` followed by `r·L` little-endian
//!   `f32`, sample-major.
//! - 8-bit binary PGM (`P5`) of a log-compressed image.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Image, Result, RfFrame};

fn write_f32s(w: &mut impl Write, data: &[f64]) -> std::io::Result<()> {
    for &v in data {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize, kind: &'static str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|e| Error::Format {
        kind,
        reason: format!("payload too short: {e}"),
    })?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format {
            kind,
            reason: format!("{} trailing bytes", rest.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Reads the one-line text header and returns its whitespace-separated fields
/// after checking the magic and version.
pub(crate) fn read_header(
    r: &mut impl BufRead,
    magic: &str,
    kind: &'static str,
) -> Result<Vec<String>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let line = line.strip_suffix('\n').ok_or_else(|| Error::Format {
        kind,
        reason: "missing header line".into(),
    })?;
    let mut fields = line.split(' ');
    if fields.next() != Some(magic) || fields.next() != Some("v1") {
        return Err(Error::Format {
            kind,
            reason: format!("bad magic in header {line:?}"),
        });
    }
    Ok(fields.map(str::to_owned).collect())
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    fields: &[String],
    i: usize,
    kind: &'static str,
) -> Result<T> {
    fields
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format {
            kind,
            reason: format!("header field {i} missing or unparsable"),
        })
}

pub fn write_image(w: &mut impl Write, img: &Image) -> Result<()> {
    writeln!(w, "PWIMG v1 {} {}", img.n_z(), img.n_x())?;
    write_f32s(w, img.data())?;
    Ok(())
}

pub fn read_image(r: &mut impl BufRead) -> Result<Image> {
    const KIND: &str = "PWIMG";
    let fields = read_header(r, KIND, KIND)?;
    if fields.len() != 2 {
        return Err(Error::Format {
            kind: KIND,
            reason: "expected 2 header fields".into(),
        });
    }
    let n_z: usize = parse_field(&fields, 0, KIND)?;
    let n_x: usize = parse_field(&fields, 1, KIND)?;
    let data = read_f32s(r, n_z * n_x, KIND)?;
    Image::from_vec(n_z, n_x, data)
}

pub fn write_frame(w: &mut impl Write, frame: &RfFrame) -> Result<()> {
    let micro = (frame.steering_angle() * 1e6).round() as i64;
    writeln!(
        w,
        "PWRF v1 {} {} {}",
        frame.n_samples(),
        frame.n_elements(),
        micro
    )?;
    write_f32s(w, frame.data())?;
    Ok(())
}

pub fn read_frame(r: &mut impl BufRead) -> Result<RfFrame> {
    const KIND: &str = "PWRF";
    let fields = read_header(r, KIND, KIND)?;
    if fields.len() != 3 {
        return Err(Error::Format {
            kind: KIND,
            reason: "expected 3 header fields".into(),
        });
    }
    let n_samples: usize = parse_field(&fields, 0, KIND)?;
    let n_elements: usize = parse_field(&fields, 1, KIND)?;
    let micro: i64 = parse_field(&fields, 2, KIND)?;
    let data = read_f32s(r, n_samples * n_elements, KIND)?;
    RfFrame::from_vec(n_samples, n_elements, micro as f64 * 1e-6, data)
}

/// Writes a log-compressed image (values in `[-dynamic_range_db, 0]`) as an
/// 8-bit binary PGM, mapping `-DR → 0` and `0 dB → 255`.
pub fn write_pgm(w: &mut impl Write, db: &Image, dynamic_range_db: f64) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", db.n_x(), db.n_z())?;
    let bytes: Vec<u8> = db
        .data()
        .iter()
        .map(|&v| {
            let t = ((v + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
            (t * 255.0).round() as u8
        })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_image(&mut w, img)?;
    w.flush()?;
    Ok(())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    read_image(&mut BufReader::new(File::open(path)?))
}

pub fn save_frame(path: impl AsRef<Path>, frame: &RfFrame) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_frame(&mut w, frame)?;
    w.flush()?;
    Ok(())
}

pub fn load_frame(path: impl AsRef<Path>) -> Result<RfFrame> {
    read_frame(&mut BufReader::new(File::open(path)?))
}

pub fn save_pgm(path: impl AsRef<Path>, db: &Image, dynamic_range_db: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(&mut w, db, dynamic_range_db)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn image_header_is_exact() {
        let img = Image::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();
        assert!(buf.starts_with(b"PWIMG v1 2 3\n"));
        assert_eq!(buf.len(), 13 + 6 * 4);
        assert_eq!(&buf[13..17], &1.0f32.to_le_bytes());
    }

    #[test]
    fn frame_header_is_exact() {
        let frame = RfFrame::from_vec(2, 2, -0.279253, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_frame(&mut buf, &frame).unwrap();
        assert!(buf.starts_with(b"PWRF v1 2 2 -279253\n"));
        let back = read_frame(&mut &buf[..]).unwrap();
        assert_eq!(back.data(), frame.data());
        assert!((back.steering_angle() + 0.279253).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_image(&mut &b"PWRF v1 1 1\n\0\0\0\0"[..]).is_err());
        assert!(read_image(&mut &b"PWIMG v1 2 2\n\0\0\0\0"[..]).is_err());
        assert!(read_image(&mut &b"PWIMG v1 1 1\n\0\0\0\0\0"[..]).is_err());
        assert!(read_frame(&mut &b"PWRF v1 1\n"[..]).is_err());
    }

    #[test]
    fn pgm_maps_range_to_bytes() {
        let db = Image::from_vec(1, 3, vec![-60.0, -30.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &db, 60.0).unwrap();
        assert!(buf.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(&buf[buf.len() - 3..], &[0, 128, 255]);
    }

    proptest! {
        #[test]
        fn image_round_trip_is_f32_exact(
            n_z in 1usize..6,
            n_x in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::stream(seed, crate::rng::Stage::Phantom);
            let data: Vec<f64> = crate::rng::gaussian_vec(&mut rng, n_z * n_x)
                .into_iter()
                .map(|v| v as f32 as f64)
                .collect();
            let img = Image::from_vec(n_z, n_x, data).unwrap();
            let mut buf = Vec::new();
            write_image(&mut buf, &img).unwrap();
            prop_assert_eq!(read_image(&mut &buf[..]).unwrap(), img);
        }
    }
}
