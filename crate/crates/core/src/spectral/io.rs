//! Flat binary coefficient records and CSV dumps.
//!
//! Record layout, little-endian: `u32` domain kind code, `u64` mode count,
//! then one `f64` per coefficient.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::SpectralField;
use crate::domains::EigenBasis;
use crate::{Error, Result};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn write_record<W: Write>(field: &SpectralField, out: &mut W) -> Result<()> {
    out.write_all(&field.basis().domain().kind_code().to_le_bytes())?;
    out.write_all(&(field.coeffs().len() as u64).to_le_bytes())?;
    for c in field.coeffs() {
        out.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one record written for `basis`; the header must match it.
pub fn read_record<R: Read>(basis: &Arc<EigenBasis>, input: &mut R) -> Result<SpectralField> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let kind = u32::from_le_bytes(b4);
    if kind != basis.domain().kind_code() {
        return Err(Error::Format(format!(
            "record is for domain kind {kind}, basis is {}",
            basis.domain().kind_code()
        )));
    }
    input.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    if n != basis.len() {
        return Err(Error::SizeMismatch {
            expected: basis.len(),
            got: n,
        });
    }
    let mut coeffs = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut b8)?;
        coeffs.push(f64::from_le_bytes(b8));
    }
    SpectralField::new(basis.clone(), coeffs)
}

/// Fails unless `input` is exhausted.
pub fn expect_eof<R: Read>(input: &mut R) -> Result<()> {
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format(
            "trailing bytes after coefficient record".into(),
        ));
    }
    Ok(())
}

pub fn write_record_file(field: &SpectralField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_record(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_record_file(basis: &Arc<EigenBasis>, path: &Path) -> Result<SpectralField> {
    let mut r = BufReader::new(File::open(path)?);
    let f = read_record(basis, &mut r)?;
    expect_eof(&mut r)?;
    Ok(f)
}

/// One row per mode: `schema_version,index,eigenvalue,coefficient`.
pub fn write_csv<W: Write>(field: &SpectralField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["schema_version", "index", "eigenvalue", "coefficient"])?;
    for (mode, c) in field.basis().modes().iter().zip(field.coeffs()) {
        w.write_record([
            CSV_SCHEMA_VERSION.to_string(),
            mode.index.to_string(),
            format!("{:e}", mode.eigenvalue),
            format!("{:e}", c),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;

    #[test]
    fn record_layout_and_header_checks() {
        let b = EigenBasis::build(Domain::Disk { radius: 1.0 }, 3).unwrap();
        let f = SpectralField::new(b.clone(), vec![1.5, -0.0, f64::MIN_POSITIVE]).unwrap();
        let mut buf = Vec::new();
        write_record(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 3 * 8);
        assert_eq!(&buf[..4], &1u32.to_le_bytes());
        assert_eq!(&buf[4..12], &3u64.to_le_bytes());
        assert_eq!(
            read_record(&b, &mut buf.as_slice()).unwrap().coeffs(),
            f.coeffs()
        );

        let other = EigenBasis::build(Domain::BallRadial { radius: 1.0 }, 3).unwrap();
        assert!(read_record(&other, &mut buf.as_slice()).is_err());
        let mut long = buf.clone();
        long.push(0);
        let mut r = long.as_slice();
        read_record(&b, &mut r).unwrap();
        assert!(expect_eof(&mut r).is_err());
        assert!(read_record(&b, &mut &buf[..20]).is_err());
    }

    #[test]
    fn csv_has_versioned_header() {
        let b = EigenBasis::build(Domain::Interval { length: 1.0 }, 2).unwrap();
        let mut out = Vec::new();
        write_csv(&SpectralField::mode(&b, 1), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "schema_version,index,eigenvalue,coefficient");
        assert!(lines[2].starts_with("1,1,"));
    }
}
