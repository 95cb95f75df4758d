//! Rendering of command results as text tables, CSV or JSON.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use iaas_core::compose::{Composition, CompositionProblem};
use iaas_core::{Error, RequestSet};
use serde::Serialize;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

pub fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf-8")
}

/// CSV text as records keyed by header, for JSON output.
pub fn csv_records(text: &str) -> Vec<serde_json::Map<String, serde_json::Value>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .expect("generated csv has a header")
        .clone();
    reader
        .records()
        .map(|r| {
            let r = r.expect("generated csv parses");
            header
                .iter()
                .zip(r.iter())
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
                .collect()
        })
        .collect()
}

/// Aligned plain-text table of CSV text.
pub fn csv_as_table(text: &str) -> String {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let rows: Vec<Vec<String>> = reader
        .records()
        .map(|r| {
            r.expect("generated csv parses")
                .iter()
                .map(String::from)
                .collect()
        })
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(v, &w)| format!("{v:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

pub fn requests_csv(set: &RequestSet) -> String {
    let mut header = vec!["id", "start", "length"];
    header.extend(set.attributes().iter().map(String::as_str));
    let rows: Vec<Vec<String>> = set
        .requests()
        .iter()
        .map(|r| {
            let mut row = vec![r.id.clone(), r.start.to_string(), r.length.to_string()];
            for a in 0..set.attributes().len() {
                row.push(r.total(a).to_string());
            }
            row
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn rank(format: Format, ids: &[&str], locals: &[Option<u32>], total: Option<u64>) -> String {
    let cell = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                selection: &'a [&'a str],
                local_ranks: &'a [Option<u32>],
                global_rank: Option<u64>,
            }
            json(&Out {
                selection: ids,
                local_ranks: locals,
                global_rank: total,
            })
        }
        Format::Csv => {
            let mut header = vec!["selection".to_string(), "global_rank".to_string()];
            header.extend((0..locals.len()).map(|k| format!("interval_{k}")));
            let mut row = vec![ids.join(" "), cell(total.map(|t| t.to_string()))];
            row.extend(locals.iter().map(|l| cell(l.map(|r| r.to_string()))));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_text(&header, &[row])
        }
        Format::Text => {
            let mut out = format!("selection\t{}\n", ids.join(","));
            for (k, l) in locals.iter().enumerate() {
                let _ = writeln!(out, "interval {k}\t{}", cell(l.map(|r| r.to_string())));
            }
            let _ = writeln!(
                out,
                "global rank\t{}",
                total.map_or("infeasible".into(), |t| t.to_string())
            );
            out
        }
    }
}

#[derive(Serialize)]
pub struct StepReport {
    pub order: usize,
    pub interval: usize,
    pub configuration: Vec<String>,
    pub accepted: Vec<String>,
    pub reward: f64,
}

#[derive(Serialize)]
pub struct CompositionReport {
    pub composer: String,
    pub requests: usize,
    pub accepted: Vec<String>,
    pub rank: u64,
    pub episodes: usize,
    pub visited: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    pub trace: Vec<StepReport>,
}

impl CompositionReport {
    pub fn new(
        composer: &str,
        problem: &CompositionProblem<'_>,
        c: &Composition,
        wall_ms: Option<f64>,
    ) -> Self {
        let ids = problem.ids();
        let trace = c
            .trace
            .iter()
            .map(|t| StepReport {
                order: t.order,
                interval: t.interval,
                configuration: problem
                    .actions(t.interval)
                    .members(t.action)
                    .map(|r| ids[r].clone())
                    .collect(),
                accepted: t.accepted.iter().map(|&r| ids[r].clone()).collect(),
                reward: t.reward,
            })
            .collect();
        Self {
            composer: composer.to_string(),
            requests: problem.len(),
            accepted: c.accepted_ids.clone(),
            rank: c.rank,
            episodes: c.episodes,
            visited: c.visited,
            wall_ms,
            trace,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json(self),
            Format::Csv => {
                let mut header = vec![
                    "composer", "requests", "accepted", "rank", "episodes", "visited",
                ];
                let mut row = vec![
                    self.composer.clone(),
                    self.requests.to_string(),
                    self.accepted.join(" "),
                    self.rank.to_string(),
                    self.episodes.to_string(),
                    self.visited.to_string(),
                ];
                if let Some(w) = self.wall_ms {
                    header.push("wall_ms");
                    row.push(format!("{w:.3}"));
                }
                csv_text(&header, &[row])
            }
            Format::Text => {
                let mut out = String::new();
                let _ = writeln!(out, "composer\t{}", self.composer);
                let _ = writeln!(out, "accepted\t{}", self.accepted.join(","));
                let _ = writeln!(out, "rank\t{}", self.rank);
                if self.episodes > 0 {
                    let _ = writeln!(out, "episodes\t{}", self.episodes);
                    let _ = writeln!(out, "visited\t{}", self.visited);
                }
                if let Some(w) = self.wall_ms {
                    let _ = writeln!(out, "wall_ms\t{w:.3}");
                }
                for t in &self.trace {
                    let _ = writeln!(
                        out,
                        "step {}\tinterval {}\t[{}]\treward {}",
                        t.order,
                        t.interval,
                        t.configuration.join(","),
                        t.reward
                    );
                }
                out
            }
        }
    }
}
