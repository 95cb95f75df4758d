//! Long-term requests: time-series representation, segmentation onto model
//! intervals, aggregation rules, overlap ratios and synthetic workloads.

mod io;
mod workload;

pub use workload::{generate_workload, AttributeRange, Distribution, LengthBucket, WorkloadSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::{AggregationRule, TempCpNet};

/// One consumer request: a value series per attribute over its span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    /// First time unit of the span.
    pub start: u32,
    /// Number of time units; the span is `[start, start + length)`.
    pub length: u32,
    /// One series per attribute of the owning set, each `length` long.
    pub series: Vec<Vec<f64>>,
    /// Attributes whose values are divisible over time (prorated when segmented).
    pub temporal: Vec<bool>,
}

impl Request {
    /// Request whose series repeat one value per attribute over the span.
    pub fn constant(
        id: impl Into<String>,
        start: u32,
        length: u32,
        values: &[f64],
        temporal: &[bool],
    ) -> Self {
        Self {
            id: id.into(),
            start,
            length,
            series: values.iter().map(|&v| vec![v; length as usize]).collect(),
            temporal: temporal.to_vec(),
        }
    }

    pub fn end(&self) -> u32 {
        self.start + self.length
    }

    /// Whole-span total of an attribute series.
    pub fn total(&self, attribute: usize) -> f64 {
        self.series[attribute].iter().sum()
    }

    fn validate(&self, attributes: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidRequest {
            id: self.id.clone(),
            reason,
        };
        if self.length == 0 {
            return Err(bad("zero-length span".into()));
        }
        if self.series.len() != attributes || self.temporal.len() != attributes {
            return Err(bad(format!("expected {attributes} attribute series")));
        }
        for s in &self.series {
            if s.len() != self.length as usize {
                return Err(bad(format!(
                    "series length {} differs from span length {}",
                    s.len(),
                    self.length
                )));
            }
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(bad(
                    "attribute values must be finite and non-negative".into()
                ));
            }
        }
        Ok(())
    }
}

/// Generation metadata carried alongside a request set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadMeta {
    pub distribution: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSet {
    attributes: Vec<String>,
    requests: Vec<Request>,
    meta: Option<WorkloadMeta>,
}

impl RequestSet {
    pub fn new(attributes: Vec<String>, requests: Vec<Request>) -> Result<Self> {
        for (i, r) in requests.iter().enumerate() {
            r.validate(attributes.len())?;
            if requests[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidRequest {
                    id: r.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }
        Ok(Self {
            attributes,
            requests,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: WorkloadMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn meta(&self) -> Option<&WorkloadMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.requests.iter().position(|r| r.id == id)
    }

    /// Subset by request index, keeping attribute schema.
    pub fn subset(&self, indices: &[usize]) -> RequestSet {
        RequestSet {
            attributes: self.attributes.clone(),
            requests: indices.iter().map(|&i| self.requests[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Segments every request against the model.
    pub fn segment_all(&self, net: &TempCpNet) -> Result<Vec<SegmentedRequest>> {
        let order = self.schema_order(net)?;
        self.requests
            .iter()
            .map(|r| segment_ordered(r, &order, net))
            .collect()
    }

    /// Position in this set's attribute list of each model attribute.
    fn schema_order(&self, net: &TempCpNet) -> Result<Vec<usize>> {
        if self.attributes.len() != net.attributes().len() {
            return Err(Error::Schema(format!(
                "request set has attributes {:?}, model has {:?}",
                self.attributes,
                net.attribute_names()
            )));
        }
        net.attributes()
            .iter()
            .map(|a| {
                self.attributes
                    .iter()
                    .position(|n| *n == a.name)
                    .ok_or_else(|| {
                        Error::Schema(format!("request set lacks attribute `{}`", a.name))
                    })
            })
            .collect()
    }
}

/// A request's share of one interval, in model attribute order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub values: Vec<f64>,
    /// True when the request continues into a later interval.
    pub long_term: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedRequest {
    pub segments: Vec<Option<Segment>>,
}

impl SegmentedRequest {
    pub fn active_intervals(&self) -> impl Iterator<Item = usize> + '_ {
        self.segments
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.as_ref().map(|_| k))
    }

    pub fn active_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_active(&self, interval: usize) -> bool {
        self.segments[interval].is_some()
    }
}

/// Splits a request onto the model's intervals.
///
/// Temporal attributes are prorated by overlap length over span length;
/// other attributes take their peak value within the overlap.
pub fn segment(
    request: &Request,
    attributes: &[String],
    net: &TempCpNet,
) -> Result<SegmentedRequest> {
    let set = RequestSet {
        attributes: attributes.to_vec(),
        requests: Vec::new(),
        meta: None,
    };
    let order = set.schema_order(net)?;
    request.validate(attributes.len())?;
    segment_ordered(request, &order, net)
}

fn segment_ordered(
    request: &Request,
    order: &[usize],
    net: &TempCpNet,
) -> Result<SegmentedRequest> {
    if request.length == 0 {
        return Err(Error::InvalidRequest {
            id: request.id.clone(),
            reason: "zero-length span".into(),
        });
    }
    let (h0, h1) = net.horizon();
    if request.start < h0 || request.end() > h1 {
        return Err(Error::InvalidRequest {
            id: request.id.clone(),
            reason: format!(
                "span [{}, {}) is outside the composition horizon [{h0}, {h1})",
                request.start,
                request.end()
            ),
        });
    }
    let length = f64::from(request.length);
    let segments = net
        .intervals()
        .iter()
        .map(|iv| {
            let lo = request.start.max(iv.start);
            let hi = request.end().min(iv.end);
            if lo >= hi {
                return None;
            }
            let values = order
                .iter()
                .map(|&src| {
                    if request.temporal[src] {
                        request.total(src) * f64::from(hi - lo) / length
                    } else {
                        let from = (lo - request.start) as usize;
                        let to = (hi - request.start) as usize;
                        request.series[src][from..to]
                            .iter()
                            .copied()
                            .fold(0.0, f64::max)
                    }
                })
                .collect();
            Some(Segment {
                values,
                long_term: request.end() > iv.end,
            })
        })
        .collect();
    Ok(SegmentedRequest { segments })
}

/// Fraction of the model's intervals a request occupies.
pub fn overlap_ratio(request: &SegmentedRequest, total_intervals: usize) -> f64 {
    request.active_count() as f64 / total_intervals.max(1) as f64
}

/// Running combination of segments within one interval. The empty
/// aggregate is the all-zero configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub values: Vec<f64>,
    pub long_term: bool,
    pub count: usize,
}

impl Aggregate {
    pub fn empty(attributes: usize) -> Self {
        Self {
            values: vec![0.0; attributes],
            long_term: false,
            count: 0,
        }
    }

    pub fn add(&mut self, segment: &Segment, rules: &[AggregationRule]) {
        for ((acc, &v), rule) in self.values.iter_mut().zip(&segment.values).zip(rules) {
            match rule {
                AggregationRule::Sum => *acc += v,
                AggregationRule::Max => *acc = acc.max(v),
            }
        }
        self.long_term |= segment.long_term;
        self.count += 1;
    }
}

/// Combines concurrent segment values: summation or maximization per attribute.
pub fn aggregate(segments: &[&[f64]], rules: &[AggregationRule]) -> Result<Vec<f64>> {
    let first = segments
        .first()
        .ok_or_else(|| Error::Schema("cannot aggregate an empty segment list".into()))?;
    if segments.iter().any(|s| s.len() != rules.len()) {
        return Err(Error::Schema(format!(
            "segments must all carry {} attribute values",
            rules.len()
        )));
    }
    let mut out = first.to_vec();
    for s in &segments[1..] {
        for ((acc, &v), rule) in out.iter_mut().zip(s.iter()).zip(rules) {
            match rule {
                AggregationRule::Sum => *acc += v,
                AggregationRule::Max => *acc = acc.max(v),
            }
        }
    }
    Ok(out)
}
