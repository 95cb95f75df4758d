//! Agglomerative clustering of annotated requests and cophenetic correlation.
//!
//! Merges follow the nearest-neighbor chain scheme with Lance-Williams
//! distance updates. All three supported linkages are reducible, so the
//! chain yields the same hierarchy as greedy closest-pair merging.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Annotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// Nearest pair of members.
    Slink,
    /// Farthest pair of members.
    Clink,
    /// Mean over all member pairs.
    Upgma,
}

impl Linkage {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "slink" | "single" => Some(Linkage::Slink),
            "clink" | "complete" => Some(Linkage::Clink),
            "upgma" | "average" => Some(Linkage::Upgma),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Slink => "slink",
            Linkage::Clink => "clink",
            Linkage::Upgma => "upgma",
        }
    }

    fn combine(self, d_ak: f64, d_bk: f64, size_a: usize, size_b: usize) -> f64 {
        match self {
            Linkage::Slink => d_ak.min(d_bk),
            Linkage::Clink => d_ak.max(d_bk),
            Linkage::Upgma => {
                (size_a as f64 * d_ak + size_b as f64 * d_bk) / (size_a + size_b) as f64
            }
        }
    }
}

/// One merge. Ids below the leaf count are leaves; merge `i` creates
/// cluster `leaves + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub linkage: Linkage,
    pub leaves: usize,
    /// Merges in non-decreasing height order.
    pub merges: Vec<Merge>,
    /// Source distances, condensed row-major over `i < j`.
    pub distances: Vec<f64>,
}

/// Index of pair `(i, j)`, `i < j`, in a condensed matrix over `n` points.
pub fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

/// Condensed Euclidean distances between points.
pub fn euclidean(points: &[[f64; 2]]) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            out.push((dx * dx + dy * dy).sqrt());
        }
    }
    out
}

/// Clusters annotated requests by Euclidean distance of their normalized
/// `(gpr, overlap)` coordinates.
pub fn cluster(annotation: &Annotation, linkage: Linkage) -> Result<ClusterTree> {
    cluster_distances(annotation.len(), euclidean(&annotation.points()), linkage)
}

pub fn cluster_distances(n: usize, distances: Vec<f64>, linkage: Linkage) -> Result<ClusterTree> {
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = distances[condensed_index(n, i, j)];
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(
                active
                    .iter()
                    .position(|&a| a)
                    .expect("an active cluster remains"),
            );
        }
        let (a, b) = loop {
            let a = *chain.last().expect("chain is non-empty");
            let prev = chain.len().checked_sub(2).map(|k| chain[k]);
            // nearest neighbor of `a`; on ties keep the previous chain element
            let mut best: Option<(usize, f64)> = prev.map(|p| (p, d[a][p]));
            for k in 0..n {
                if k == a || !active[k] || Some(k) == prev {
                    continue;
                }
                if best.is_none_or(|(_, bd)| d[a][k] < bd) {
                    best = Some((k, d[a][k]));
                }
            }
            let (b, _) = best.expect("at least two active clusters");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                break (a, b);
            }
            chain.push(b);
        };
        let (keep, drop) = (a.min(b), a.max(b));
        raw.push((keep, drop, d[a][b]));
        for k in 0..n {
            if active[k] && k != keep && k != drop {
                let v = linkage.combine(d[keep][k], d[drop][k], size[keep], size[drop]);
                d[keep][k] = v;
                d[k][keep] = v;
            }
        }
        size[keep] += size[drop];
        active[drop] = false;
        remaining -= 1;
    }
    Ok(ClusterTree {
        linkage,
        leaves: n,
        merges: relabel(n, raw),
        distances,
    })
}

/// Orders raw slot merges by height and names clusters by merge index.
fn relabel(n: usize, mut raw: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    // stable: equal heights keep their discovery order
    raw.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut label: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    raw.iter()
        .enumerate()
        .map(|(i, &(a, b, h))| {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            let (la, lb) = (label[ra], label[rb]);
            parent[rb] = ra;
            size[ra] += size[rb];
            label[ra] = n + i;
            Merge {
                left: la.min(lb),
                right: la.max(lb),
                height: h,
                size: size[ra],
            }
        })
        .collect()
}

impl ClusterTree {
    fn members(&self) -> Vec<Vec<usize>> {
        let n = self.leaves;
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut both = members[m.left].clone();
            both.extend_from_slice(&members[m.right]);
            members.push(both);
        }
        members
    }

    /// Condensed matrix of merge heights at which each pair first joins.
    pub fn cophenetic_matrix(&self) -> Vec<f64> {
        let n = self.leaves;
        let members = self.members();
        let mut t = vec![0.0; n * (n - 1) / 2];
        for m in &self.merges {
            for &i in &members[m.left] {
                for &j in &members[m.right] {
                    t[condensed_index(n, i.min(j), i.max(j))] = m.height;
                }
            }
        }
        t
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.merges.windows(2).all(|w| w[0].height <= w[1].height)
    }

    /// Nested-parenthesis text of the dendrogram: `(left,right)height`.
    pub fn to_nested_text(&self, labels: &[String]) -> String {
        fn emit(tree: &ClusterTree, id: usize, labels: &[String], out: &mut String) {
            if id < tree.leaves {
                out.push_str(&labels[id]);
                return;
            }
            let m = &tree.merges[id - tree.leaves];
            out.push('(');
            emit(tree, m.left, labels, out);
            out.push(',');
            emit(tree, m.right, labels, out);
            let _ = write!(out, "){}", m.height);
        }
        let mut out = String::new();
        emit(self, self.leaves + self.merges.len() - 1, labels, &mut out);
        out
    }
}

/// Pearson correlation between source and cophenetic distances over all
/// pairs; undefined when either side has zero variance.
pub fn cophenetic(tree: &ClusterTree) -> Result<f64> {
    pearson(&tree.distances, &tree.cophenetic_matrix())
}

pub(crate) fn pearson(r: &[f64], t: &[f64]) -> Result<f64> {
    let k = r.len() as f64;
    if r.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two point pairs"));
    }
    let mr = r.iter().sum::<f64>() / k;
    let mt = t.iter().sum::<f64>() / k;
    let (mut num, mut vr, mut vt) = (0.0, 0.0, 0.0);
    for (&a, &b) in r.iter().zip(t) {
        num += (a - mr) * (b - mt);
        vr += (a - mr) * (a - mr);
        vt += (b - mt) * (b - mt);
    }
    if vr == 0.0 || vt == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero variance in pairwise distances",
        ));
    }
    Ok((num / (vr * vt).sqrt()).clamp(-1.0, 1.0))
}
