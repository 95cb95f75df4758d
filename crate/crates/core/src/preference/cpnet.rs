//! Conditional preference networks with boolean decision variables.

use serde::{Deserialize, Serialize};

/// A parent of a CPT node: another attribute or a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parent {
    Attribute(usize),
    Decision(usize),
}

/// Conditional preference table of one attribute.
///
/// Each row is a total preorder over the attribute's levels, stored as a tier
/// per level (tier 0 is most preferred, equal tiers are indifferent). Rows are
/// indexed by the mixed-radix encoding of the parent instantiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    parents: Vec<Parent>,
    parent_radices: Vec<usize>,
    rows: Vec<Vec<u8>>,
}

impl Cpt {
    pub fn new(
        parents: Vec<Parent>,
        parent_radices: Vec<usize>,
        rows: Vec<Vec<u8>>,
    ) -> Result<Self, String> {
        if parents.len() != parent_radices.len() {
            return Err("one radix per parent is required".into());
        }
        let expected: usize = parent_radices.iter().product();
        if rows.len() != expected {
            return Err(format!("expected {expected} rows, got {}", rows.len()));
        }
        Ok(Self {
            parents,
            parent_radices,
            rows,
        })
    }

    /// Unconditional table with a single row.
    pub fn unconditional(row: Vec<u8>) -> Self {
        Self {
            parents: Vec::new(),
            parent_radices: Vec::new(),
            rows: vec![row],
        }
    }

    pub fn parents(&self) -> &[Parent] {
        &self.parents
    }

    pub fn parent_radices(&self) -> &[usize] {
        &self.parent_radices
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Row index for the parent values taken from `outcome` and `decision`.
    pub fn row_index(&self, outcome: &[usize], decision: u32) -> usize {
        let mut idx = 0;
        for (p, &radix) in self.parents.iter().zip(&self.parent_radices) {
            let v = match *p {
                Parent::Attribute(a) => outcome[a],
                Parent::Decision(d) => ((decision >> d) & 1) as usize,
            };
            idx = idx * radix + v;
        }
        idx
    }

    pub fn row_for(&self, outcome: &[usize], decision: u32) -> &[u8] {
        &self.rows[self.row_index(outcome, decision)]
    }
}

/// An acyclic CP-net over a fixed attribute list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpNet {
    attributes: Vec<String>,
    radices: Vec<usize>,
    decisions: Vec<String>,
    cpts: Vec<Cpt>,
}

impl CpNet {
    /// Validates shape and acyclicity of the dependency graph.
    pub fn new(
        attributes: Vec<String>,
        radices: Vec<usize>,
        decisions: Vec<String>,
        cpts: Vec<Cpt>,
    ) -> Result<Self, String> {
        let n = attributes.len();
        if radices.len() != n || cpts.len() != n {
            return Err("one radix and one CPT per attribute are required".into());
        }
        if decisions.len() > 16 {
            return Err("at most 16 decision variables are supported".into());
        }
        for (x, cpt) in cpts.iter().enumerate() {
            for (p, &r) in cpt.parents.iter().zip(&cpt.parent_radices) {
                let want = match *p {
                    Parent::Attribute(a) if a >= n => {
                        return Err(format!(
                            "attribute `{}` has an unknown parent",
                            attributes[x]
                        ))
                    }
                    Parent::Attribute(a) if a == x => {
                        return Err(format!("attribute `{}` is its own parent", attributes[x]))
                    }
                    Parent::Attribute(a) => radices[a],
                    Parent::Decision(d) if d >= decisions.len() => {
                        return Err(format!(
                            "attribute `{}` has an unknown decision parent",
                            attributes[x]
                        ))
                    }
                    Parent::Decision(_) => 2,
                };
                if want != r {
                    return Err(format!(
                        "parent radix mismatch in CPT of `{}`",
                        attributes[x]
                    ));
                }
            }
            for row in &cpt.rows {
                if row.len() != radices[x] {
                    return Err(format!(
                        "CPT row of `{}` must order all {} levels",
                        attributes[x], radices[x]
                    ));
                }
            }
        }
        let net = Self {
            attributes,
            radices,
            decisions,
            cpts,
        };
        if let Some(cycle_at) = net.find_cycle() {
            return Err(format!(
                "dependency graph is cyclic through `{}`",
                net.attributes[cycle_at]
            ));
        }
        Ok(net)
    }

    fn find_cycle(&self) -> Option<usize> {
        let n = self.attributes.len();
        let mut indeg = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (x, cpt) in self.cpts.iter().enumerate() {
            for p in &cpt.parents {
                if let Parent::Attribute(a) = *p {
                    children[a].push(x);
                    indeg[x] += 1;
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&x| indeg[x] == 0).collect();
        let mut seen = 0;
        while let Some(x) = stack.pop() {
            seen += 1;
            for &c in &children[x] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        (seen < n).then(|| (0..n).find(|&x| indeg[x] > 0).unwrap())
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn decisions(&self) -> &[String] {
        &self.decisions
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn outcome_count(&self) -> usize {
        self.radices.iter().product()
    }

    /// Number of distinct decision assignments, `2^|DN|`.
    pub fn decision_assignments(&self) -> u32 {
        1 << self.decisions.len()
    }

    /// Mixed-radix index of an outcome; the first attribute is most significant.
    pub fn outcome_index(&self, outcome: &[usize]) -> Option<usize> {
        if outcome.len() != self.radices.len() {
            return None;
        }
        let mut idx = 0;
        for (&v, &r) in outcome.iter().zip(&self.radices) {
            if v >= r {
                return None;
            }
            idx = idx * r + v;
        }
        Some(idx)
    }

    pub fn outcome_at(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        out
    }
}
