//! Tab-separated request files.
//!
//! ```text
//! # distribution=normal seed=7
//! id	start	length	temporal	cpu	availability	price
//! R1	0	3	price	20,20,20	99,99,99	10,10,10
//! ```
//!
//! Lines starting with `#` are comments; a `key=value` comment before the
//! header carries generation metadata. `temporal` is a comma list of
//! attribute names or `-`. Each attribute column holds the comma-separated
//! series, one value per time unit.
#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::Write as _;
use std::path::Path;

use super::{Request, RequestSet, WorkloadMeta};
use crate::error::{Error, Result};

const FIXED: [&str; 4] = ["id", "start", "length", "temporal"];

impl RequestSet {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if let Some(m) = &self.meta {
            let _ = writeln!(out, "# distribution={} seed={}", m.distribution, m.seed);
        }
        out.push_str(&FIXED.join("\t"));
        for a in &self.attributes {
            out.push('\t');
            out.push_str(a);
        }
        out.push('\n');
        for r in &self.requests {
            let temporal: Vec<&str> = self
                .attributes
                .iter()
                .zip(&r.temporal)
                .filter(|(_, t)| **t)
                .map(|(a, _)| a.as_str())
                .collect();
            let temporal = if temporal.is_empty() {
                "-".to_string()
            } else {
                temporal.join(",")
            };
            let _ = write!(out, "{}\t{}\t{}\t{}", r.id, r.start, r.length, temporal);
            for s in &r.series {
                out.push('\t');
                let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                out.push_str(&parts.join(","));
            }
            out.push('\n');
        }
        out
    }

    /// Request lines and header without generation metadata.
    pub fn body_tsv(&self) -> String {
        RequestSet {
            meta: None,
            ..self.clone()
        }
        .to_tsv()
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let fail = |line: usize, message: String| Error::RequestFormat { line, message };
        let mut meta = None;
        let mut attributes: Option<Vec<String>> = None;
        let mut requests = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if attributes.is_none() {
                    meta = meta.or(parse_meta(comment));
                }
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let Some(attrs) = &attributes else {
                if cols.len() <= FIXED.len() || cols[..FIXED.len()] != FIXED {
                    return Err(fail(
                        line,
                        format!(
                            "expected header `{}` followed by attribute names",
                            FIXED.join(" ")
                        ),
                    ));
                }
                attributes = Some(cols[FIXED.len()..].iter().map(|s| s.to_string()).collect());
                continue;
            };
            if cols.len() != FIXED.len() + attrs.len() {
                return Err(fail(
                    line,
                    format!(
                        "expected {} columns, found {}",
                        FIXED.len() + attrs.len(),
                        cols.len()
                    ),
                ));
            }
            let start = cols[1]
                .parse::<u32>()
                .map_err(|_| fail(line, format!("invalid start `{}`", cols[1])))?;
            let length = cols[2]
                .parse::<u32>()
                .map_err(|_| fail(line, format!("invalid length `{}`", cols[2])))?;
            let mut temporal = vec![false; attrs.len()];
            if cols[3] != "-" {
                for name in cols[3].split(',') {
                    let k = attrs.iter().position(|a| a == name.trim()).ok_or_else(|| {
                        fail(line, format!("unknown temporal attribute `{name}`"))
                    })?;
                    temporal[k] = true;
                }
            }
            let series = cols[FIXED.len()..]
                .iter()
                .map(|c| {
                    c.split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| fail(line, format!("invalid value `{v}`")))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            requests.push(Request {
                id: cols[0].to_string(),
                start,
                length,
                series,
                temporal,
            });
        }
        let attributes = attributes.ok_or_else(|| fail(0, "missing header line".into()))?;
        let set = RequestSet::new(attributes, requests)?;
        Ok(match meta {
            Some(m) => set.with_meta(m),
            None => set,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn parse_meta(comment: &str) -> Option<WorkloadMeta> {
    let mut distribution = None;
    let mut seed = None;
    for field in comment.split_whitespace() {
        match field.split_once('=') {
            Some(("distribution", v)) => distribution = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse().ok(),
            _ => {}
        }
    }
    Some(WorkloadMeta {
        distribution: distribution?,
        seed: seed?,
    })
}
