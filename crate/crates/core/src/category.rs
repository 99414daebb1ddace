//! The closed set of scene-object categories and the priority order used to
//! break ties between them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Patient,
    Member,
    Screen,
    Device,
    Unknown,
}

impl Category {
    /// Report column order.
    pub const ALL: [Category; 5] = [
        Category::Patient,
        Category::Member,
        Category::Screen,
        Category::Device,
        Category::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Patient => "patient",
            Category::Member => "member",
            Category::Screen => "screen",
            Category::Device => "device",
            Category::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("'{s}' is not one of patient, member, screen, device, unknown"))
    }
}

/// Ranking of categories for mode tie-breaks: earlier wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryPriority(Vec<Category>);

impl Default for CategoryPriority {
    fn default() -> Self {
        Self(Category::ALL.to_vec())
    }
}

impl CategoryPriority {
    /// Builds a priority from a partial order; categories left out are appended
    /// in default order.
    pub fn new(order: Vec<Category>) -> Self {
        let mut v: Vec<Category> = Vec::with_capacity(5);
        for c in order.into_iter().chain(Category::ALL) {
            if !v.contains(&c) {
                v.push(c);
            }
        }
        Self(v)
    }

    pub fn rank(&self, c: Category) -> usize {
        self.0.iter().position(|&x| x == c).unwrap_or(self.0.len())
    }

    pub fn order(&self) -> &[Category] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_closed_set() {
        assert_eq!("screen".parse::<Category>(), Ok(Category::Screen));
        assert!("chair".parse::<Category>().is_err());
    }

    #[test]
    fn partial_priority_is_completed() {
        let p = CategoryPriority::new(vec![Category::Screen]);
        assert_eq!(p.rank(Category::Screen), 0);
        assert_eq!(p.rank(Category::Patient), 1);
        assert_eq!(p.rank(Category::Unknown), 4);
    }
}
