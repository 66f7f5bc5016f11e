//! Flat `key=value` text files: summaries written by the library and config
//! files read by the CLI. Blank lines and `#` comments are ignored.

use std::io::Write;

use crate::{Error, Result};

pub fn write<W: Write>(mut writer: W, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(writer, "{k}={v}")?;
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                return None;
            }
            Some(match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    Ok((k.trim().to_string(), v.trim().to_string()))
                }
                _ => Err(Error::Parse(format!("line {}: expected key=value", i + 1))),
            })
        })
        .collect()
}
