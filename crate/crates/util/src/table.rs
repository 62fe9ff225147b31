//! Columnar text tables.
//!
//! ```text
//! # format = imbench-maps
//! # version = 1
//! # speed = 149.2
//! d,q,tau
//! 0.81,-8.1,-3.25
//! ```
//!
//! Header lines are `# key = value`, then one CSV line of column names, then
//! numeric rows. Floats are written with Rust's shortest round-trip repr, so
//! parsing a written table gives back bit-identical values (NaN included).

use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing header key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("expected format `{expected}`, found `{found}`")]
    WrongFormat { expected: String, found: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    /// Column-major data; every column has the same length.
    pub data: Vec<Vec<f64>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| t.trim().parse::<f64>()).collect()
}

impl Table {
    pub fn new(format: &str, version: u32) -> Self {
        let mut t = Table::default();
        t.set("format", format);
        t.set("version", version);
        t
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string();
        debug_assert!(!key.contains('=') && !v.contains('\n'));
        if let Some(slot) = self.meta.iter_mut().find(|(k, _)| k == key) {
            slot.1 = v;
        } else {
            self.meta.push((key.to_string(), v));
        }
    }

    pub fn set_f64(&mut self, key: &str, v: f64) {
        self.set(key, fmt_f64(v));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, TableError> {
        self.get(key).ok_or_else(|| TableError::MissingKey(key.to_string()))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, TableError> {
        let v = self.require(key)?;
        v.parse().map_err(|_| TableError::BadValue { key: key.into(), value: v.into() })
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<f64>, TableError> {
        let v = self.require(key)?;
        parse_list(v).map_err(|_| TableError::BadValue { key: key.into(), value: v.into() })
    }

    pub fn expect_format(&self, format: &str) -> Result<(), TableError> {
        let found = self.require("format")?;
        if found != format {
            return Err(TableError::WrongFormat { expected: format.into(), found: found.into() });
        }
        Ok(())
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) {
        debug_assert!(self.data.first().map_or(true, |c| c.len() == values.len()));
        self.columns.push(name.to_string());
        self.data.push(values);
    }

    pub fn column(&self, name: &str) -> Result<&[f64], TableError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn to_text(&self) -> String {
        let n = self.n_rows();
        let mut s = String::with_capacity(64 + n * self.columns.len() * 12);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in 0..n {
            for (c, col) in self.data.iter().enumerate() {
                if c > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{:?}", col[r]);
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Table, TableError> {
        let mut t = Table::default();
        let mut lines = text.lines().enumerate();
        let mut header = None;
        for (ln, line) in lines.by_ref() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.split_once('=').ok_or_else(|| TableError::Parse {
                    line: ln + 1,
                    msg: "header line without `=`".into(),
                })?;
                t.meta.push((k.trim().to_string(), v.trim().to_string()));
            } else if !line.trim().is_empty() {
                header = Some(line);
                break;
            }
        }
        let Some(header) = header else {
            return Ok(t);
        };
        t.columns = header.split(',').map(|c| c.trim().to_string()).collect();
        t.data = vec![Vec::new(); t.columns.len()];
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut count = 0;
            for (c, tok) in line.split(',').enumerate() {
                let v: f64 = tok.trim().parse().map_err(|_| TableError::Parse {
                    line: ln + 1,
                    msg: format!("not a number: `{tok}`"),
                })?;
                if c >= t.columns.len() {
                    return Err(TableError::Parse { line: ln + 1, msg: "too many fields".into() });
                }
                t.data[c].push(v);
                count += 1;
            }
            if count != t.columns.len() {
                return Err(TableError::Parse { line: ln + 1, msg: "too few fields".into() });
            }
        }
        Ok(t)
    }
}
