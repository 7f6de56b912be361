//! Piecewise-constant request-rate traces.
//!
//! File format: one `offset_seconds,rate_rps` pair per line, `#` starts a
//! comment line, LF or CRLF line endings.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RateTrace {
    /// (offset in seconds, requests per second), offsets strictly increasing from 0.
    pub bins: Vec<(f64, f64)>,
    pub scale_factor: f64,
    /// Wrap around when the run outlives the trace; otherwise the last rate holds.
    pub looped: bool,
}

impl RateTrace {
    pub fn parse(text: &str) -> Result<Self> {
        let mut bins: Vec<(f64, f64)> = Vec::new();
        for (i, raw) in text.split('\n').enumerate() {
            let line_no = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::TraceParse {
                line: line_no,
                message,
            };
            let mut parts = line.split(',');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad(format!(
                    "expected \"offset_seconds,rate_rps\", got {line:?}"
                )));
            };
            let offset: f64 = a
                .trim()
                .parse()
                .map_err(|_| bad(format!("offset {:?} is not a number", a.trim())))?;
            let rate: f64 = b
                .trim()
                .parse()
                .map_err(|_| bad(format!("rate {:?} is not a number", b.trim())))?;
            if !offset.is_finite() || !rate.is_finite() {
                return Err(bad("values must be finite".into()));
            }
            if rate < 0.0 {
                return Err(bad(format!("negative rate {rate}")));
            }
            match bins.last() {
                None if offset != 0.0 => {
                    return Err(bad(format!("first offset must be 0, got {offset}")));
                }
                Some(&(prev, _)) if offset <= prev => {
                    return Err(bad(format!(
                        "offsets must be strictly increasing ({offset} after {prev})"
                    )));
                }
                _ => {}
            }
            bins.push((offset, rate));
        }
        if bins.is_empty() {
            return Err(Error::EmptyTrace);
        }
        Ok(Self {
            bins,
            scale_factor: 1.0,
            looped: false,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Length of one pass over the trace; the last bin is as wide as the one before it.
    pub fn span_s(&self) -> f64 {
        let n = self.bins.len();
        let last = self.bins[n - 1].0;
        let width = if n >= 2 {
            last - self.bins[n - 2].0
        } else {
            1.0
        };
        last + width
    }

    pub fn peak_rps(&self) -> f64 {
        self.bins.iter().map(|b| b.1).fold(0.0, f64::max) * self.scale_factor
    }

    /// Scaled rate at `offset_s` seconds into the trace.
    pub fn rate_at(&self, offset_s: f64) -> f64 {
        let mut t = offset_s.max(0.0);
        if self.looped {
            t %= self.span_s();
        }
        let i = self.bins.partition_point(|&(o, _)| o <= t);
        let rate = if i == 0 {
            self.bins[0].1
        } else {
            self.bins[i - 1].1
        };
        rate * self.scale_factor
    }
}
