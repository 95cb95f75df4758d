//! Exact-match k-d tree over ranked outcomes.
//!
//! Points are split at the median of the current dimension, cycling through
//! dimensions by depth. Ordering within a split uses the cyclic superkey
//! `(p[d], p[d+1], ..., p[d-1])`, so distinct points never tie and an exact
//! match descends a single root-to-leaf path.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::preference::RankedOutcomeSet;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    point: Vec<usize>,
    rank: u32,
    split: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankIndex {
    dims: usize,
    nodes: Vec<Node>,
    root: usize,
}

fn superkey_cmp(a: &[usize], b: &[usize], split: usize) -> Ordering {
    let k = a.len();
    for off in 0..k {
        let d = (split + off) % k;
        match a[d].cmp(&b[d]) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl RankIndex {
    /// Builds the index over every outcome of a ranked set.
    pub fn build(ranked: &RankedOutcomeSet) -> Result<Self> {
        Self::from_points(ranked.iter().collect())
    }

    /// Builds from explicit `(point, rank)` pairs. Points must be distinct and
    /// share one dimensionality.
    pub fn from_points(mut points: Vec<(Vec<usize>, u32)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let dims = points[0].0.len();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_rec(&mut points, 0, dims, &mut nodes);
        Ok(Self { dims, nodes, root })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn root_point(&self) -> (&[usize], u32) {
        let n = &self.nodes[self.root];
        (&n.point, n.rank)
    }

    /// Exact-match rank lookup; `None` when the configuration is not indexed.
    pub fn lookup(&self, config: &[usize]) -> Option<u32> {
        self.lookup_counted(config).0
    }

    /// Lookup that also reports how many nodes were compared.
    pub fn lookup_counted(&self, config: &[usize]) -> (Option<u32>, usize) {
        if config.len() != self.dims {
            return (None, 0);
        }
        let mut cursor = Some(self.root);
        let mut visited = 0;
        while let Some(i) = cursor {
            visited += 1;
            let node = &self.nodes[i];
            cursor = match superkey_cmp(config, &node.point, node.split) {
                Ordering::Equal => return (Some(node.rank), visited),
                Ordering::Less => node.left,
                Ordering::Greater => node.right,
            };
        }
        (None, visited)
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        fn h(nodes: &[Node], i: Option<usize>) -> usize {
            match i {
                None => 0,
                Some(i) => 1 + h(nodes, nodes[i].left).max(h(nodes, nodes[i].right)),
            }
        }
        h(&self.nodes, Some(self.root))
    }

    /// Number of nodes on the shortest path from the root to a missing child.
    pub fn min_depth(&self) -> usize {
        fn h(nodes: &[Node], i: Option<usize>) -> usize {
            match i {
                None => 0,
                Some(i) => 1 + h(nodes, nodes[i].left).min(h(nodes, nodes[i].right)),
            }
        }
        h(&self.nodes, Some(self.root))
    }

    /// Checks the search-tree ordering: every left descendant precedes and
    /// every right descendant follows its ancestor under that ancestor's superkey.
    pub fn is_ordered(&self) -> bool {
        fn collect(nodes: &[Node], i: Option<usize>, out: &mut Vec<usize>) {
            if let Some(i) = i {
                out.push(i);
                collect(nodes, nodes[i].left, out);
                collect(nodes, nodes[i].right, out);
            }
        }
        self.nodes.iter().all(|n| {
            let mut left = Vec::new();
            let mut right = Vec::new();
            collect(&self.nodes, n.left, &mut left);
            collect(&self.nodes, n.right, &mut right);
            left.iter()
                .all(|&l| superkey_cmp(&self.nodes[l].point, &n.point, n.split) == Ordering::Less)
                && right.iter().all(|&r| {
                    superkey_cmp(&self.nodes[r].point, &n.point, n.split) == Ordering::Greater
                })
        })
    }

    /// Indented text dump, one node per line: point, split dimension, rank.
    pub fn dump(&self, dim_names: Option<&[String]>) -> String {
        let mut out = String::new();
        self.dump_rec(Some(self.root), 0, "root", dim_names, &mut out);
        out
    }

    fn dump_rec(
        &self,
        i: Option<usize>,
        depth: usize,
        side: &str,
        names: Option<&[String]>,
        out: &mut String,
    ) {
        let Some(i) = i else { return };
        let n = &self.nodes[i];
        let coords: Vec<String> = n.point.iter().map(usize::to_string).collect();
        let split = match names {
            Some(names) => names[n.split].clone(),
            None => n.split.to_string(),
        };
        let _ = writeln!(
            out,
            "{:indent$}{side} ({}) split={split} rank={}",
            "",
            coords.join(","),
            n.rank,
            indent = depth * 2
        );
        self.dump_rec(n.left, depth + 1, "L", names, out);
        self.dump_rec(n.right, depth + 1, "R", names, out);
    }
}

fn build_rec(
    points: &mut [(Vec<usize>, u32)],
    depth: usize,
    dims: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let split = if dims == 0 { 0 } else { depth % dims };
    points.sort_by(|a, b| superkey_cmp(&a.0, &b.0, split));
    let mid = points.len() / 2;
    let slot = nodes.len();
    nodes.push(Node {
        point: points[mid].0.clone(),
        rank: points[mid].1,
        split,
        left: None,
        right: None,
    });
    let (lo, rest) = points.split_at_mut(mid);
    let hi = &mut rest[1..];
    let left = (!lo.is_empty()).then(|| build_rec(lo, depth + 1, dims, nodes));
    let right = (!hi.is_empty()).then(|| build_rec(hi, depth + 1, dims, nodes));
    nodes[slot].left = left;
    nodes[slot].right = right;
    slot
}
