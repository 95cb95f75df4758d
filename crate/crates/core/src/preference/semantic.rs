//! Semantic tables: the mapping from raw attribute values to qualitative levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered levels of one attribute and the numeric ranges that map onto them.
///
/// Level `i` owns the half-open range `[bounds[i], bounds[i + 1])`; the last
/// level's range is closed so the domain maximum is representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeScale {
    levels: Vec<String>,
    bounds: Vec<f64>,
}

impl AttributeScale {
    pub fn new(levels: Vec<String>, bounds: Vec<f64>) -> std::result::Result<Self, String> {
        if levels.is_empty() {
            return Err("at least one level is required".into());
        }
        if bounds.len() != levels.len() + 1 {
            return Err(format!(
                "{} levels need {} range boundaries, got {}",
                levels.len(),
                levels.len() + 1,
                bounds.len()
            ));
        }
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err("range boundaries must be finite".into());
        }
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err("range boundaries must be strictly increasing".into());
        }
        for (i, name) in levels.iter().enumerate() {
            if levels[..i].contains(name) {
                return Err(format!("duplicate level `{name}`"));
            }
        }
        Ok(Self { levels, bounds })
    }

    /// Evenly spaced levels over `[lo, hi]`.
    pub fn uniform(levels: Vec<String>, lo: f64, hi: f64) -> std::result::Result<Self, String> {
        let n = levels.len();
        let bounds = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        Self::new(levels, bounds)
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == name)
    }

    pub fn lower(&self) -> f64 {
        self.bounds[0]
    }

    pub fn upper(&self) -> f64 {
        self.bounds[self.bounds.len() - 1]
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower() && value <= self.upper()
    }

    /// Level ordinal owning `value`, or `None` outside the domain.
    pub fn map(&self, value: f64) -> Option<usize> {
        if !self.contains(value) {
            return None;
        }
        // partition_point gives the number of bounds <= value.
        let above = self.bounds.partition_point(|&b| b <= value);
        Some((above - 1).min(self.levels.len() - 1))
    }
}

/// Per-interval semantic table: one scale per attribute, in model attribute order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticTable {
    names: Vec<String>,
    scales: Vec<AttributeScale>,
}

impl SemanticTable {
    pub fn new(names: Vec<String>, scales: Vec<AttributeScale>) -> Self {
        assert_eq!(names.len(), scales.len(), "one scale per attribute");
        Self { names, scales }
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.names
    }

    pub fn scales(&self) -> &[AttributeScale] {
        &self.scales
    }

    pub fn scale(&self, attribute: usize) -> &AttributeScale {
        &self.scales[attribute]
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Level counts per attribute, the radices of the outcome space.
    pub fn radices(&self) -> Vec<usize> {
        self.scales
            .iter()
            .map(AttributeScale::level_count)
            .collect()
    }

    /// Maps a raw value of the named attribute onto its level name.
    pub fn semantic_map(&self, attribute: &str, value: f64) -> Result<&str> {
        let idx = self
            .attribute_index(attribute)
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))?;
        let level = self.map_index(idx, value)?;
        Ok(&self.scales[idx].levels[level])
    }

    pub fn map_index(&self, attribute: usize, value: f64) -> Result<usize> {
        self.scales[attribute]
            .map(value)
            .ok_or_else(|| Error::Domain {
                attribute: self.names[attribute].clone(),
                value,
            })
    }

    /// Maps a full raw assignment onto level ordinals; `None` when any value
    /// falls outside its domain.
    pub fn map_all(&self, values: &[f64]) -> Option<Vec<usize>> {
        values
            .iter()
            .zip(&self.scales)
            .map(|(&v, s)| s.map(v))
            .collect()
    }

    /// True when every value lies within its attribute domain.
    pub fn within(&self, values: &[f64]) -> bool {
        values.iter().zip(&self.scales).all(|(&v, s)| s.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn price_year1() -> SemanticTable {
        let scale = AttributeScale::new(
            names(&["low", "moderate", "high"]),
            vec![0.0, 500.0, 1000.0, 5000.0],
        )
        .unwrap();
        SemanticTable::new(names(&["price"]), vec![scale])
    }

    #[test]
    fn price_above_1000_is_high_in_year_one() {
        assert_eq!(price_year1().semantic_map("price", 1200.0).unwrap(), "high");
    }

    #[test]
    fn boundary_belongs_to_upper_half_open_side() {
        let t = price_year1();
        assert_eq!(t.semantic_map("price", 500.0).unwrap(), "moderate");
        assert_eq!(t.semantic_map("price", 1000.0).unwrap(), "high");
        assert_eq!(t.semantic_map("price", 0.0).unwrap(), "low");
        // final range is closed
        assert_eq!(t.semantic_map("price", 5000.0).unwrap(), "high");
    }

    #[test]
    fn five_uniform_levels_put_85_at_top() {
        let scale =
            AttributeScale::uniform(names(&["l1", "l2", "l3", "l4", "l5"]), 0.0, 100.0).unwrap();
        assert_eq!(scale.map(85.0), Some(4));
        assert_eq!(scale.map(80.0), Some(4));
        assert_eq!(scale.map(79.999), Some(3));
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let t = price_year1();
        assert!(matches!(
            t.semantic_map("price", 5000.5),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            t.semantic_map("price", -1.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            t.semantic_map("price", f64::NAN),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            t.semantic_map("cpu", 1.0),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn rejects_bad_scales() {
        assert!(AttributeScale::new(names(&["a", "b"]), vec![0.0, 1.0]).is_err());
        assert!(AttributeScale::new(names(&["a", "b"]), vec![0.0, 2.0, 1.0]).is_err());
        assert!(AttributeScale::new(names(&["a", "a"]), vec![0.0, 1.0, 2.0]).is_err());
        assert!(AttributeScale::new(vec![], vec![0.0]).is_err());
    }
}
