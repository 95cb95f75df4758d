//! TempCP-nets and their declarative model document.
//!
//! A model document is a sequence of bracketed blocks. Global blocks declare
//! the attribute schema and decision variables; each `[interval NAME]` block
//! opens an interval whose `[levels]`, `[ranges]` and `[cpt]` blocks follow it.
//!
//! ```text
//! [attributes]
//! availability = max
//! cpu = sum
//! price = sum
//!
//! [decision]
//! N
//!
//! [interval year1]
//! span = 0 12
//! [levels]
//! availability = A2 A1          # ascending value order
//! cpu = C1 C2
//! price = P1 P2 P3
//! [ranges]
//! availability = 0 99 100       # one more boundary than levels
//! cpu = 0 50 100
//! price = 0 500 1000 4000
//! [cpt]
//! availability: A1 > A2
//! cpu | availability=A1: C1 > C2
//! cpu | availability=A2: C2 > C1
//! price | cpu=*, N=T: P1 ~ P2 > P3
//! price | cpu=*, N=F: P1 > P2 > P3
//! ```
//!
//! Ranges are half-open `[lo, hi)` except the last, which is closed. `levels`
//! and `ranges` lines may be omitted in later intervals to inherit the
//! previous interval's scale; CPTs are never inherited. `*` in a condition
//! expands to every value of that parent; decision values are `T` or `F`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cpnet::{CpNet, Cpt, Parent};
use super::semantic::{AttributeScale, SemanticTable};
use crate::error::ModelError;

/// How concurrent request segments combine within one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationRule {
    Sum,
    Max,
}

impl AggregationRule {
    /// Conventional rule for well-known attribute names.
    pub fn for_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cpu" | "c" | "memory" | "m" | "network_bandwidth" | "bandwidth" | "nb"
            | "response_time" | "rt" | "price" | "p" => Some(AggregationRule::Sum),
            "availability" | "a" | "throughput" | "tp" => Some(AggregationRule::Max),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationRule::Sum => "sum",
            AggregationRule::Max => "max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub rule: AggregationRule,
}

/// One interval of the composition horizon with its CP-net and semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub name: String,
    pub start: u32,
    pub end: u32,
    pub net: CpNet,
    pub table: SemanticTable,
}

impl Interval {
    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// The provider's long-term qualitative model: a CP-net and semantic table
/// per contiguous interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TempCpNet {
    attributes: Vec<AttributeDecl>,
    decisions: Vec<String>,
    intervals: Vec<Interval>,
}

impl TempCpNet {
    /// Assembles a model from parts, checking contiguity and schema agreement.
    pub fn new(
        attributes: Vec<AttributeDecl>,
        decisions: Vec<String>,
        intervals: Vec<Interval>,
    ) -> Result<Self, String> {
        if attributes.is_empty() {
            return Err("at least one attribute is required".into());
        }
        if intervals.is_empty() {
            return Err("at least one interval is required".into());
        }
        let names: Vec<String> = attributes.iter().map(|a| a.name.clone()).collect();
        for (k, iv) in intervals.iter().enumerate() {
            if iv.end <= iv.start {
                return Err(format!("interval `{}` has an empty span", iv.name));
            }
            if k > 0 && intervals[k - 1].end != iv.start {
                return Err(format!(
                    "interval `{}` is not contiguous with its predecessor",
                    iv.name
                ));
            }
            if iv.net.attributes() != names.as_slice()
                || iv.table.attribute_names() != names.as_slice()
            {
                return Err(format!(
                    "interval `{}` disagrees with the attribute schema",
                    iv.name
                ));
            }
            if iv.net.decisions() != decisions.as_slice() {
                return Err(format!(
                    "interval `{}` disagrees with the decision variables",
                    iv.name
                ));
            }
            if iv.net.radices() != iv.table.radices().as_slice() {
                return Err(format!(
                    "interval `{}`: CP-net and semantic table level counts differ",
                    iv.name
                ));
            }
            for (scale, a) in iv.table.scales().iter().zip(&attributes) {
                if scale.lower() > 0.0 {
                    return Err(format!(
                        "interval `{}`: lowest range of `{}` must start at or below 0",
                        iv.name, a.name
                    ));
                }
            }
        }
        Ok(Self {
            attributes,
            decisions,
            intervals,
        })
    }

    pub fn attributes(&self) -> &[AttributeDecl] {
        &self.attributes
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn rules(&self) -> Vec<AggregationRule> {
        self.attributes.iter().map(|a| a.rule).collect()
    }

    pub fn decisions(&self) -> &[String] {
        &self.decisions
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Horizon `[start, end)` covered by the intervals.
    pub fn horizon(&self) -> (u32, u32) {
        (
            self.intervals[0].start,
            self.intervals[self.intervals.len() - 1].end,
        )
    }

    /// Parses and validates a model document.
    pub fn parse(document: &str) -> Result<Self, ModelError> {
        Parser::default().run(document)
    }

    /// Canonical document form; `parse(to_document())` reproduces the model.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str("[attributes]\n");
        for a in &self.attributes {
            let _ = writeln!(out, "{} = {}", a.name, a.rule.as_str());
        }
        if !self.decisions.is_empty() {
            out.push_str("\n[decision]\n");
            for d in &self.decisions {
                let _ = writeln!(out, "{d}");
            }
        }
        for iv in &self.intervals {
            let _ = writeln!(
                out,
                "\n[interval {}]\nspan = {} {}",
                iv.name, iv.start, iv.end
            );
            out.push_str("[levels]\n");
            for (a, scale) in self.attributes.iter().zip(iv.table.scales()) {
                let _ = writeln!(out, "{} = {}", a.name, scale.levels().join(" "));
            }
            out.push_str("[ranges]\n");
            for (a, scale) in self.attributes.iter().zip(iv.table.scales()) {
                let bounds: Vec<String> = scale.bounds().iter().map(|b| format!("{b:?}")).collect();
                let _ = writeln!(out, "{} = {}", a.name, bounds.join(" "));
            }
            out.push_str("[cpt]\n");
            for (x, cpt) in iv.net.cpts().iter().enumerate() {
                write_cpt(&mut out, self, iv, x, cpt);
            }
        }
        out
    }
}

fn write_cpt(out: &mut String, model: &TempCpNet, iv: &Interval, x: usize, cpt: &Cpt) {
    let scale = iv.table.scale(x);
    let name = &model.attributes[x].name;
    for (r, row) in cpt.rows().iter().enumerate() {
        // decode the parent instantiation of row r
        let mut values = vec![0usize; cpt.parents().len()];
        let mut rest = r;
        for (slot, &radix) in values.iter_mut().zip(cpt.parent_radices()).rev() {
            *slot = rest % radix;
            rest /= radix;
        }
        let conds: Vec<String> = cpt
            .parents()
            .iter()
            .zip(&values)
            .map(|(p, &v)| match *p {
                Parent::Attribute(a) => {
                    format!(
                        "{}={}",
                        model.attributes[a].name,
                        iv.table.scale(a).levels()[v]
                    )
                }
                Parent::Decision(d) => {
                    format!("{}={}", model.decisions[d], if v == 1 { "T" } else { "F" })
                }
            })
            .collect();
        let max_tier = row.iter().copied().max().unwrap_or(0);
        let tiers: Vec<String> = (0..=max_tier)
            .filter_map(|t| {
                let members: Vec<&str> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &rt)| rt == t)
                    .map(|(l, _)| scale.levels()[l].as_str())
                    .collect();
                (!members.is_empty()).then(|| members.join(" ~ "))
            })
            .collect();
        if conds.is_empty() {
            let _ = writeln!(out, "{name}: {}", tiers.join(" > "));
        } else {
            let _ = writeln!(out, "{name} | {}: {}", conds.join(", "), tiers.join(" > "));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Preamble,
    Attributes,
    Decision,
    Interval,
    Levels,
    Ranges,
    Cpt,
}

impl Block {
    fn name(self) -> &'static str {
        match self {
            Block::Preamble => "preamble",
            Block::Attributes => "attributes",
            Block::Decision => "decision",
            Block::Interval => "interval",
            Block::Levels => "levels",
            Block::Ranges => "ranges",
            Block::Cpt => "cpt",
        }
    }
}

#[derive(Debug, Default)]
struct RawInterval {
    name: String,
    header_line: usize,
    span: Option<(u32, u32)>,
    levels: HashMap<String, (usize, Vec<String>)>,
    ranges: HashMap<String, (usize, Vec<f64>)>,
    cpt_header: Option<usize>,
    cpt_lines: Vec<(usize, String)>,
}

#[derive(Debug, Default)]
struct Parser {
    attributes: Vec<(usize, AttributeDecl)>,
    decisions: Vec<(usize, String)>,
    intervals: Vec<RawInterval>,
}

fn err(line: usize, block: Block, msg: impl Into<String>) -> ModelError {
    ModelError::new(line, block.name(), msg)
}

fn key_value(line: usize, block: Block, text: &str) -> Result<(String, String), ModelError> {
    let (k, v) = text.split_once('=').ok_or_else(|| {
        err(
            line,
            block,
            format!("expected `name = value`, found `{text}`"),
        )
    })?;
    let k = k.trim();
    if k.is_empty() {
        return Err(err(line, block, "missing name before `=`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

impl Parser {
    fn run(mut self, document: &str) -> Result<TempCpNet, ModelError> {
        let mut block = Block::Preamble;
        for (i, raw) in document.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(header) = text.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, block, "unterminated block header"))?
                    .trim();
                block = self.open_block(line, header)?;
                continue;
            }
            match block {
                Block::Preamble => {
                    return Err(err(line, block, "content outside any block"));
                }
                Block::Attributes => {
                    let (name, rule) = match text.split_once('=') {
                        Some(_) => key_value(line, block, text)?,
                        None => (text.to_string(), String::new()),
                    };
                    let rule = match rule.as_str() {
                        "sum" => AggregationRule::Sum,
                        "max" => AggregationRule::Max,
                        "" => AggregationRule::for_name(&name).ok_or_else(|| {
                            err(
                                line,
                                block,
                                format!("attribute `{name}` needs an explicit rule (sum or max)"),
                            )
                        })?,
                        other => {
                            return Err(err(
                                line,
                                block,
                                format!("unknown aggregation rule `{other}`"),
                            ))
                        }
                    };
                    if self.attributes.iter().any(|(_, a)| a.name == name) {
                        return Err(err(
                            line,
                            block,
                            format!("attribute `{name}` declared twice"),
                        ));
                    }
                    self.attributes.push((line, AttributeDecl { name, rule }));
                }
                Block::Decision => {
                    for name in text.split_whitespace() {
                        if self.decisions.iter().any(|(_, d)| d == name) {
                            return Err(err(
                                line,
                                block,
                                format!("decision `{name}` declared twice"),
                            ));
                        }
                        self.decisions.push((line, name.to_string()));
                    }
                }
                Block::Interval => {
                    let (k, v) = key_value(line, block, text)?;
                    if k != "span" {
                        return Err(err(line, block, format!("unknown interval key `{k}`")));
                    }
                    let parts: Vec<&str> = v.split_whitespace().collect();
                    let parsed: Vec<u32> = parts
                        .iter()
                        .map(|p| p.parse::<u32>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| {
                            err(
                                line,
                                block,
                                format!("span must be two integers, found `{v}`"),
                            )
                        })?;
                    if parsed.len() != 2 || parsed[1] <= parsed[0] {
                        return Err(err(
                            line,
                            block,
                            format!("span must be `start end` with end > start, found `{v}`"),
                        ));
                    }
                    self.current(line, block)?.span = Some((parsed[0], parsed[1]));
                }
                Block::Levels => {
                    let (k, v) = key_value(line, block, text)?;
                    let levels: Vec<String> = v.split_whitespace().map(str::to_string).collect();
                    if levels.is_empty() {
                        return Err(err(line, block, format!("attribute `{k}` lists no levels")));
                    }
                    self.current(line, block)?.levels.insert(k, (line, levels));
                }
                Block::Ranges => {
                    let (k, v) = key_value(line, block, text)?;
                    let bounds: Vec<f64> = v
                        .split_whitespace()
                        .map(|p| p.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| {
                            err(line, block, format!("ranges of `{k}` must be numbers"))
                        })?;
                    self.current(line, block)?.ranges.insert(k, (line, bounds));
                }
                Block::Cpt => {
                    self.current(line, block)?
                        .cpt_lines
                        .push((line, text.to_string()));
                }
            }
        }
        self.finish()
    }

    fn current(&mut self, line: usize, block: Block) -> Result<&mut RawInterval, ModelError> {
        self.intervals
            .last_mut()
            .ok_or_else(|| err(line, block, "block must follow an [interval] header"))
    }

    fn open_block(&mut self, line: usize, header: &str) -> Result<Block, ModelError> {
        let mut words = header.split_whitespace();
        let kind = words.next().unwrap_or("");
        let block = match kind {
            "attributes" => Block::Attributes,
            "decision" => Block::Decision,
            "interval" => {
                let name = words
                    .next()
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("I{}", self.intervals.len() + 1));
                self.intervals.push(RawInterval {
                    name,
                    header_line: line,
                    ..Default::default()
                });
                Block::Interval
            }
            "levels" => Block::Levels,
            "ranges" => Block::Ranges,
            "cpt" => Block::Cpt,
            other => {
                return Err(err(
                    line,
                    Block::Preamble,
                    format!("unknown block `[{other}]`"),
                ))
            }
        };
        if matches!(block, Block::Levels | Block::Ranges | Block::Cpt) {
            let iv = self.current(line, block)?;
            if block == Block::Cpt {
                iv.cpt_header = Some(line);
            }
        }
        Ok(block)
    }

    fn finish(self) -> Result<TempCpNet, ModelError> {
        if self.attributes.is_empty() {
            return Err(err(0, Block::Attributes, "no attributes declared"));
        }
        if self.intervals.is_empty() {
            return Err(err(0, Block::Interval, "no intervals declared"));
        }
        let attributes: Vec<AttributeDecl> =
            self.attributes.iter().map(|(_, a)| a.clone()).collect();
        let names: Vec<String> = attributes.iter().map(|a| a.name.clone()).collect();
        let decisions: Vec<String> = self.decisions.iter().map(|(_, d)| d.clone()).collect();
        for (line, d) in &self.decisions {
            if names.contains(d) {
                return Err(err(
                    *line,
                    Block::Decision,
                    format!("`{d}` is both an attribute and a decision"),
                ));
            }
        }

        let mut intervals = Vec::with_capacity(self.intervals.len());
        let mut prev_scales: Option<Vec<AttributeScale>> = None;
        let mut prev_end: Option<u32> = None;
        for raw in &self.intervals {
            let (start, end) = raw.span.ok_or_else(|| {
                err(
                    raw.header_line,
                    Block::Interval,
                    format!("interval `{}` has no span", raw.name),
                )
            })?;
            if let Some(pe) = prev_end {
                if pe != start {
                    return Err(err(
                        raw.header_line,
                        Block::Interval,
                        format!("interval `{}` starts at {start} but the previous interval ends at {pe}", raw.name),
                    ));
                }
            }
            prev_end = Some(end);

            for (k, (line, _)) in &raw.levels {
                if !names.contains(k) {
                    return Err(err(
                        *line,
                        Block::Levels,
                        format!("unknown attribute `{k}`"),
                    ));
                }
            }
            for (k, (line, _)) in &raw.ranges {
                if !names.contains(k) {
                    return Err(err(
                        *line,
                        Block::Ranges,
                        format!("unknown attribute `{k}`"),
                    ));
                }
            }
            let mut scales = Vec::with_capacity(names.len());
            for (x, name) in names.iter().enumerate() {
                let inherited = prev_scales.as_ref().map(|s| &s[x]);
                let levels = match (raw.levels.get(name), inherited) {
                    (Some((_, l)), _) => l.clone(),
                    (None, Some(s)) => s.levels().to_vec(),
                    (None, None) => {
                        return Err(err(
                            raw.header_line,
                            Block::Levels,
                            format!("no levels for attribute `{name}`"),
                        ))
                    }
                };
                let (line, bounds) = match (raw.ranges.get(name), inherited) {
                    (Some((line, b)), _) => (*line, b.clone()),
                    (None, Some(s)) => (raw.header_line, s.bounds().to_vec()),
                    (None, None) => {
                        return Err(err(
                            raw.header_line,
                            Block::Ranges,
                            format!("no ranges for attribute `{name}`"),
                        ))
                    }
                };
                let scale = AttributeScale::new(levels, bounds)
                    .map_err(|m| err(line, Block::Ranges, format!("attribute `{name}`: {m}")))?;
                if scale.lower() > 0.0 {
                    return Err(err(
                        line,
                        Block::Ranges,
                        format!("attribute `{name}`: lowest range must start at or below 0"),
                    ));
                }
                scales.push(scale);
            }
            let table = SemanticTable::new(names.clone(), scales.clone());
            let net = build_net(raw, &names, &decisions, &scales)?;
            intervals.push(Interval {
                name: raw.name.clone(),
                start,
                end,
                net,
                table,
            });
            prev_scales = Some(scales);
        }
        TempCpNet::new(attributes, decisions, intervals).map_err(|m| err(0, Block::Interval, m))
    }
}

struct RawRow {
    line: usize,
    conds: Vec<(String, String)>,
    tiers: Vec<u8>,
}

fn build_net(
    raw: &RawInterval,
    names: &[String],
    decisions: &[String],
    scales: &[AttributeScale],
) -> Result<CpNet, ModelError> {
    let cpt_line = raw.cpt_header.unwrap_or(raw.header_line);
    let mut rows_by_attr: Vec<Vec<RawRow>> = (0..names.len()).map(|_| Vec::new()).collect();
    for (line, text) in &raw.cpt_lines {
        let line = *line;
        let (head, order) = text.split_once(':').ok_or_else(|| {
            err(
                line,
                Block::Cpt,
                "expected `attribute [| conditions]: order`",
            )
        })?;
        let (attr, conds) = match head.split_once('|') {
            Some((a, c)) => (a.trim(), c.trim()),
            None => (head.trim(), ""),
        };
        let x = match names.iter().position(|n| n == attr) {
            Some(x) => x,
            None if decisions.iter().any(|d| d == attr) => {
                return Err(err(
                    line,
                    Block::Cpt,
                    format!("decision variable `{attr}` cannot have a CPT"),
                ))
            }
            None => return Err(err(line, Block::Cpt, format!("unknown attribute `{attr}`"))),
        };
        let mut parsed_conds = Vec::new();
        if !conds.is_empty() {
            for c in conds.split(',') {
                let (k, v) = c.split_once('=').ok_or_else(|| {
                    err(
                        line,
                        Block::Cpt,
                        format!("condition `{}` must be `parent=value`", c.trim()),
                    )
                })?;
                parsed_conds.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let tiers = parse_order(line, &names[x], order, &scales[x])?;
        rows_by_attr[x].push(RawRow {
            line,
            conds: parsed_conds,
            tiers,
        });
    }

    let mut cpts = Vec::with_capacity(names.len());
    for (x, rows) in rows_by_attr.iter().enumerate() {
        if rows.is_empty() {
            return Err(err(
                cpt_line,
                Block::Cpt,
                format!("no CPT for attribute `{}`", names[x]),
            ));
        }
        // Parent set and order come from the first row.
        let mut parents = Vec::new();
        let mut radices = Vec::new();
        for (k, _) in &rows[0].conds {
            let p = resolve_parent(rows[0].line, k, names, decisions)?;
            if p == Parent::Attribute(x) {
                return Err(err(
                    rows[0].line,
                    Block::Cpt,
                    format!("`{}` cannot condition on itself", names[x]),
                ));
            }
            if parents.contains(&p) {
                return Err(err(
                    rows[0].line,
                    Block::Cpt,
                    format!("parent `{k}` repeated"),
                ));
            }
            radices.push(match p {
                Parent::Attribute(a) => scales[a].level_count(),
                Parent::Decision(_) => 2,
            });
            parents.push(p);
        }
        let total: usize = radices.iter().product();
        let mut filled: Vec<Option<(usize, Vec<u8>)>> = vec![None; total];
        for row in rows {
            if row.conds.len() != parents.len() {
                return Err(err(
                    row.line,
                    Block::Cpt,
                    format!("rows of `{}` must condition on the same parents", names[x]),
                ));
            }
            // candidate values per parent, in parent order
            let mut choices: Vec<Vec<usize>> = vec![Vec::new(); parents.len()];
            for (k, v) in &row.conds {
                let p = resolve_parent(row.line, k, names, decisions)?;
                let slot = parents.iter().position(|q| *q == p).ok_or_else(|| {
                    err(
                        row.line,
                        Block::Cpt,
                        format!("rows of `{}` must condition on the same parents", names[x]),
                    )
                })?;
                choices[slot] = parse_parent_value(row.line, k, v, p, scales)?;
            }
            for combo in cartesian(&choices) {
                let idx = combo
                    .iter()
                    .zip(&radices)
                    .fold(0, |acc, (&v, &r)| acc * r + v);
                if let Some((first, _)) = &filled[idx] {
                    return Err(err(
                        row.line,
                        Block::Cpt,
                        format!("CPT of `{}` defines the same parent instantiation twice (first at line {first})", names[x]),
                    ));
                }
                filled[idx] = Some((row.line, row.tiers.clone()));
            }
        }
        let mut table = Vec::with_capacity(total);
        for (idx, slot) in filled.into_iter().enumerate() {
            match slot {
                Some((_, tiers)) => table.push(tiers),
                None => {
                    let desc =
                        describe_instantiation(idx, &parents, &radices, names, decisions, scales);
                    return Err(err(
                        rows[0].line,
                        Block::Cpt,
                        format!("CPT of `{}` has no row for {desc}", names[x]),
                    ));
                }
            }
        }
        cpts.push(Cpt::new(parents, radices, table).map_err(|m| err(rows[0].line, Block::Cpt, m))?);
    }
    CpNet::new(
        names.to_vec(),
        scales.iter().map(AttributeScale::level_count).collect(),
        decisions.to_vec(),
        cpts,
    )
    .map_err(|m| err(cpt_line, Block::Cpt, m))
}

fn resolve_parent(
    line: usize,
    key: &str,
    names: &[String],
    decisions: &[String],
) -> Result<Parent, ModelError> {
    if let Some(a) = names.iter().position(|n| n == key) {
        Ok(Parent::Attribute(a))
    } else if let Some(d) = decisions.iter().position(|n| n == key) {
        Ok(Parent::Decision(d))
    } else {
        Err(err(line, Block::Cpt, format!("unknown parent `{key}`")))
    }
}

fn parse_parent_value(
    line: usize,
    key: &str,
    value: &str,
    parent: Parent,
    scales: &[AttributeScale],
) -> Result<Vec<usize>, ModelError> {
    match parent {
        Parent::Attribute(a) => {
            if value == "*" {
                return Ok((0..scales[a].level_count()).collect());
            }
            scales[a]
                .level_index(value)
                .map(|l| vec![l])
                .ok_or_else(|| {
                    err(
                        line,
                        Block::Cpt,
                        format!("`{value}` is not a level of `{key}`"),
                    )
                })
        }
        Parent::Decision(_) => match value {
            "*" => Ok(vec![0, 1]),
            "T" | "true" => Ok(vec![1]),
            "F" | "false" => Ok(vec![0]),
            other => Err(err(
                line,
                Block::Cpt,
                format!("decision `{key}` takes T or F, found `{other}`"),
            )),
        },
    }
}

fn parse_order(
    line: usize,
    attr: &str,
    order: &str,
    scale: &AttributeScale,
) -> Result<Vec<u8>, ModelError> {
    let mut tiers: Vec<Option<u8>> = vec![None; scale.level_count()];
    for (t, group) in order.split('>').enumerate() {
        for member in group.split('~') {
            let member = member.trim();
            if member.is_empty() {
                return Err(err(
                    line,
                    Block::Cpt,
                    format!("empty level in order for `{attr}`"),
                ));
            }
            let l = scale.level_index(member).ok_or_else(|| {
                err(
                    line,
                    Block::Cpt,
                    format!("`{member}` is not a level of `{attr}`"),
                )
            })?;
            if tiers[l].is_some() {
                return Err(err(
                    line,
                    Block::Cpt,
                    format!("level `{member}` of `{attr}` appears twice"),
                ));
            }
            tiers[l] = Some(t as u8);
        }
    }
    tiers
        .iter()
        .enumerate()
        .map(|(l, t)| {
            t.ok_or_else(|| {
                err(
                    line,
                    Block::Cpt,
                    format!("CPT row of `{attr}` omits level `{}`", scale.levels()[l]),
                )
            })
        })
        .collect()
}

fn cartesian(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    choices.iter().fold(vec![Vec::new()], |acc, options| {
        acc.into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect()
    })
}

fn describe_instantiation(
    mut idx: usize,
    parents: &[Parent],
    radices: &[usize],
    names: &[String],
    decisions: &[String],
    scales: &[AttributeScale],
) -> String {
    let mut values = vec![0; parents.len()];
    for (slot, &r) in values.iter_mut().zip(radices).rev() {
        *slot = idx % r;
        idx /= r;
    }
    let parts: Vec<String> = parents
        .iter()
        .zip(values)
        .map(|(p, v)| match *p {
            Parent::Attribute(a) => format!("{}={}", names[a], scales[a].levels()[v]),
            Parent::Decision(d) => format!("{}={}", decisions[d], if v == 1 { "T" } else { "F" }),
        })
        .collect();
    parts.join(", ")
}
