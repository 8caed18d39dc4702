//! Truncation parameters that stand in for the infinite index sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on explicitly enumerated search spaces (posets, orbits, name
/// universes). Overridden by the `SYMFORCE_BUDGET` environment variable.
pub const DEFAULT_BUDGET: usize = 200_000;

pub fn budget() -> usize {
    std::env::var("SYMFORCE_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Largest poset that is materialized with explicit order matrices. The
/// order is stored as two bit matrices, so cost grows with the square.
pub fn materialize_limit() -> usize {
    (budget() / 10).max(1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationConfig {
    /// Cohen conditions are partial maps on `0..cohen_domain`.
    pub cohen_domain: usize,
    /// Number of product copies.
    pub product_width: usize,
    /// Collapse conditions are partial maps on `0..coll_target_bound`.
    pub coll_target_bound: usize,
    /// Number of iteration stages.
    pub iteration_depth: usize,
    /// Rank bound for generated name universes.
    pub name_rank_bound: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            cohen_domain: 1,
            product_width: 2,
            coll_target_bound: 1,
            iteration_depth: 2,
            name_rank_bound: 2,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("cohen_domain", self.cohen_domain),
            ("product_width", self.product_width),
            ("coll_target_bound", self.coll_target_bound),
            ("iteration_depth", self.iteration_depth),
            ("name_rank_bound", self.name_rank_bound),
        ];
        for (field, v) in fields {
            if v == 0 {
                return Err(Error::input(format!("{field} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Size of the truncated Cohen poset: 3^N.
    pub fn cohen_size(&self) -> u128 {
        3u128.pow(self.cohen_domain as u32)
    }

    /// Size of the finite-support product of `product_width` Cohen copies.
    pub fn product_size(&self) -> u128 {
        (self.cohen_size() + 1).pow(self.product_width as u32)
    }
}
