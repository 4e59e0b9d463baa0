//! Helpers for the line-oriented model formats.

use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct LineReader<'a> {
    lines: std::str::Lines<'a>,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines(),
        }
    }

    pub(crate) fn next_line(&mut self, section: &str) -> Result<&'a str> {
        self.lines
            .next()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .ok_or_else(|| Error::corrupt(section, "unexpected end of file"))
    }

    /// Reads a `key<TAB>value` line and returns the value.
    pub(crate) fn value(&mut self, section: &str, key: &str) -> Result<&'a str> {
        let line = self.next_line(section)?;
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(Error::corrupt(section, format!("expected `{key}`, found `{line}`"))),
        }
    }

    pub(crate) fn parsed<T: FromStr>(&mut self, section: &str, key: &str) -> Result<T> {
        let v = self.value(section, key)?;
        v.parse()
            .map_err(|_| Error::corrupt(section, format!("bad value for `{key}`: `{v}`")))
    }

    pub(crate) fn expect(&mut self, section: &str, want: &str) -> Result<()> {
        let line = self.next_line(section)?;
        if line == want {
            Ok(())
        } else {
            Err(Error::corrupt(section, format!("expected `{want}`, found `{line}`")))
        }
    }
}

pub(crate) fn field<T: FromStr>(section: &str, line: &str, col: Option<&str>) -> Result<T> {
    col.and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::corrupt(section, format!("bad line `{line}`")))
}

pub(crate) fn parse_bool(section: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::corrupt(section, format!("expected true/false, found `{v}`"))),
    }
}
