//! CSV formats for PSDs, channels and generic column tables.
//!
//! * PSD: header `frequency_hz,psd`, one row per bin center, ascending.
//! * Channel: header `frequency_hz,signal_psd,noise_psd`.
//!
//! Values are written in shortest round-trip scientific notation so files
//! reload bit-exactly.

use std::io::{Read, Write};

use crate::{ChannelSpec, Error, FrequencyGrid, Psd, Real, Result};

pub const PSD_HEADER: [&str; 2] = ["frequency_hz", "psd"];
pub const CHANNEL_HEADER: [&str; 3] = ["frequency_hz", "signal_psd", "noise_psd"];

/// Formats a scalar the way every CSV writer in this crate does.
pub fn fmt_value<T: Real>(x: T) -> String {
    format!("{x:e}")
}

/// Writes equal-length columns under `header`.
pub fn write_columns<T: Real, W: Write>(
    writer: W,
    header: &[&str],
    columns: &[&[T]],
) -> Result<()> {
    if header.len() != columns.len() {
        return Err(Error::LengthMismatch {
            expected: header.len(),
            got: columns.len(),
        });
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: bad.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_value(c[r])))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV whose first column is `frequency_hz`, returning the
/// frequencies and the requested value columns.
pub fn read_columns<T: Real, R: Read>(reader: R, wanted: &[&str]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = r.headers()?.clone();
    if header.get(0) != Some("frequency_hz") {
        return Err(Error::Parse("first column must be `frequency_hz`".into()));
    }
    let idx: Vec<usize> = wanted
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::Parse(format!("missing column `{name}`")))
        })
        .collect::<Result<_>>()?;
    let parse = |s: &str, line: usize| -> Result<T> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{s}` on line {line}")))?;
        T::from_f64(v).ok_or_else(|| Error::Parse(format!("value `{s}` out of range")))
    };
    let mut freqs = Vec::new();
    let mut cols = vec![Vec::new(); wanted.len()];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        freqs.push(parse(&rec[0], line)?);
        for (col, &j) in cols.iter_mut().zip(&idx) {
            let field = rec
                .get(j)
                .ok_or_else(|| Error::Parse(format!("short row on line {line}")))?;
            col.push(parse(field, line)?);
        }
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parse(
            "frequencies must be strictly increasing".into(),
        ));
    }
    Ok((freqs, cols))
}

pub fn write_psd<T: Real, W: Write>(writer: W, psd: &Psd<T>) -> Result<()> {
    let f: Vec<T> = psd.grid().centers().collect();
    write_columns(writer, &PSD_HEADER, &[&f, psd.values()])
}

/// Reads a PSD from the `psd` column.
pub fn read_psd<T: Real, R: Read>(reader: R) -> Result<Psd<T>> {
    read_psd_column(reader, "psd")
}

/// Reads a PSD from any named value column of a `frequency_hz`-keyed CSV
/// (e.g. `sq_opt` of a shaping table).
pub fn read_psd_column<T: Real, R: Read>(reader: R, column: &str) -> Result<Psd<T>> {
    let (f, mut cols) = read_columns(reader, &[column])?;
    let grid = FrequencyGrid::from_centers(&f)?;
    Psd::new(grid, cols.remove(0))
}

pub fn write_channel<T: Real, W: Write>(writer: W, ch: &ChannelSpec<T>) -> Result<()> {
    let f: Vec<T> = ch.grid().centers().collect();
    write_columns(
        writer,
        &CHANNEL_HEADER,
        &[&f, ch.signal().values(), ch.noise().values()],
    )
}

pub fn read_channel<T: Real, R: Read>(reader: R) -> Result<ChannelSpec<T>> {
    let (f, mut cols) = read_columns(reader, &CHANNEL_HEADER[1..])?;
    let grid = FrequencyGrid::from_centers(&f)?;
    let noise = Psd::new(grid, cols.pop().expect("two columns"))?;
    let signal = Psd::new(grid, cols.pop().expect("two columns"))?;
    ChannelSpec::new(signal, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{wireline_channel, WirelineParams};

    #[test]
    fn channel_round_trip_is_exact() {
        let g = FrequencyGrid::new(0.0, 3.0e6, 33).unwrap();
        let ch = wireline_channel(&g, &WirelineParams::default()).unwrap();
        let mut buf = Vec::new();
        write_channel(&mut buf, &ch).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frequency_hz,signal_psd,noise_psd\n"));
        let back: ChannelSpec<f64> = read_channel(buf.as_slice()).unwrap();
        assert_eq!(back.signal().values(), ch.signal().values());
        assert_eq!(back.noise().values(), ch.noise().values());
        assert!(back.grid().same_as(ch.grid()));
    }

    #[test]
    fn psd_header_and_schema_errors() {
        let g = FrequencyGrid::new(0.0, 1.0, 4).unwrap();
        let p = Psd::from_fn(&g, |f| f * f);
        let mut buf = Vec::new();
        write_psd(&mut buf, &p).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("frequency_hz,psd\n"));
        let back: Psd<f64> = read_psd(buf.as_slice()).unwrap();
        assert_eq!(back.values(), p.values());

        let bad = "freq,psd\n0.5,1\n1.5,2\n";
        assert!(read_psd::<f64, _>(bad.as_bytes()).is_err());
        let neg = "frequency_hz,psd\n0.5,1\n1.5,-2\n";
        assert!(read_psd::<f64, _>(neg.as_bytes()).is_err());
        let unsorted = "frequency_hz,psd\n1.5,1\n0.5,2\n";
        assert!(read_psd::<f64, _>(unsorted.as_bytes()).is_err());
    }
}
