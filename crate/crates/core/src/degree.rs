//! Outdegree restrictions.
//!
//! A [`DegreeSet`] is either a finite set of nonnegative integers or a finite
//! set together with a tail `{k : k >= K}`. The textual form is a
//! comma-separated list with an optional trailing `K+` item, e.g. `0,2`,
//! `0,2,5`, `0,3+` or `0+` for all of ℕ₀.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PolyaError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeSet {
    explicit: Vec<usize>,
    tail_from: Option<usize>,
}

impl DegreeSet {
    /// Builds and validates a degree set. `explicit` may be given in any order
    /// but must not repeat entries or reach into the tail.
    pub fn new(explicit: Vec<usize>, tail_from: Option<usize>) -> Result<Self> {
        validate(Self::structural(explicit, tail_from)?)
    }

    /// Builds a set of integers without the tree axioms (0 admissible, some
    /// degree `>= 2`). Cycle index sums are meaningful for any such set.
    pub fn structural(mut explicit: Vec<usize>, tail_from: Option<usize>) -> Result<Self> {
        explicit.sort_unstable();
        if explicit.windows(2).any(|w| w[0] == w[1]) {
            return Err(PolyaError::MalformedTail("repeated entry".into()));
        }
        if let (Some(k), Some(&last)) = (tail_from, explicit.last()) {
            if last >= k {
                return Err(PolyaError::MalformedTail(format!(
                    "explicit entry {last} lies inside the tail {k}+"
                )));
            }
        }
        Ok(Self {
            explicit,
            tail_from,
        })
    }

    /// All of ℕ₀.
    pub fn naturals() -> Self {
        Self {
            explicit: Vec::new(),
            tail_from: Some(0),
        }
    }

    pub fn explicit(&self) -> &[usize] {
        &self.explicit
    }

    pub fn tail_from(&self) -> Option<usize> {
        self.tail_from
    }

    pub fn is_finite(&self) -> bool {
        self.tail_from.is_none()
    }

    pub fn contains(&self, k: usize) -> bool {
        match self.tail_from {
            Some(t) if k >= t => true,
            _ => self.explicit.binary_search(&k).is_ok(),
        }
    }

    /// Largest admissible degree, `None` when the set has a tail.
    pub fn max_degree(&self) -> Option<usize> {
        match self.tail_from {
            Some(_) => None,
            None => self.explicit.last().copied(),
        }
    }

    /// Every `k` below this bound is classified explicitly; all `k` at or above
    /// it are admissible (tail) or inadmissible (finite set).
    pub fn boundary(&self) -> usize {
        match self.tail_from {
            Some(t) => t,
            None => self.explicit.last().map_or(0, |&m| m + 1),
        }
    }

    /// gcd of the positive admissible degrees. A tail contributes gcd 1.
    pub fn span(&self) -> usize {
        if self.tail_from.is_some() {
            return 1;
        }
        self.explicit.iter().fold(0usize, |g, &k| g.gcd(&k)).max(1)
    }

    /// Admissible degrees `k <= limit`, in increasing order.
    pub fn iter_up_to(&self, limit: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=limit).filter(move |&k| self.contains(k))
    }
}

/// Checks the degree-set axioms: 0 is admissible and some degree `>= 2` is.
pub fn validate(set: DegreeSet) -> Result<DegreeSet> {
    if !set.contains(0) {
        return Err(PolyaError::MissingZero);
    }
    let branching = set.tail_from.is_some() || set.explicit.iter().any(|&k| k >= 2);
    if !branching {
        return Err(PolyaError::NoBranchingDegree);
    }
    Ok(set)
}

impl FromStr for DegreeSet {
    type Err = PolyaError;

    fn from_str(s: &str) -> Result<Self> {
        let items: Vec<&str> = s.split(',').map(str::trim).collect();
        if items.iter().any(|i| i.is_empty()) {
            return Err(PolyaError::MalformedTail(format!("empty item in {s:?}")));
        }
        let mut explicit = Vec::with_capacity(items.len());
        let mut tail_from = None;
        for (pos, item) in items.iter().enumerate() {
            if let Some(num) = item.strip_suffix('+') {
                if pos + 1 != items.len() {
                    return Err(PolyaError::MalformedTail(format!(
                        "tail item {item:?} must come last"
                    )));
                }
                tail_from = Some(num.trim().parse::<usize>().map_err(|_| {
                    PolyaError::MalformedTail(format!("bad tail item {item:?}"))
                })?);
            } else {
                explicit.push(item.parse::<usize>().map_err(|_| {
                    PolyaError::MalformedTail(format!("bad item {item:?}"))
                })?);
            }
        }
        DegreeSet::new(explicit, tail_from)
    }
}

impl fmt::Display for DegreeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for k in &self.explicit {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
            first = false;
        }
        if let Some(t) = self.tail_from {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{t}+")?;
        }
        Ok(())
    }
}

impl Serialize for DegreeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DegreeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(s: &str) -> Result<DegreeSet> {
        s.parse()
    }

    #[test]
    fn validation() {
        assert!(ds("0,2").is_ok());
        assert_eq!(ds("0,1"), Err(PolyaError::NoBranchingDegree));
        assert_eq!(ds("2,3"), Err(PolyaError::MissingZero));
        assert_eq!(ds("0"), Err(PolyaError::NoBranchingDegree));
        assert!(ds("0,1+").is_ok());
        assert!(ds("0+").is_ok());
        assert_eq!(ds("3+"), Err(PolyaError::MissingZero));
        assert!(matches!(ds("0,5,3+"), Err(PolyaError::MalformedTail(_))));
        assert!(matches!(ds("0,3+,5"), Err(PolyaError::MalformedTail(_))));
        assert!(matches!(ds("0,2,2"), Err(PolyaError::MalformedTail(_))));
        assert!(matches!(ds("0,,2"), Err(PolyaError::MalformedTail(_))));
        assert!(matches!(ds("0,x"), Err(PolyaError::MalformedTail(_))));
    }

    #[test]
    fn span_examples() {
        assert_eq!(ds("0,2").unwrap().span(), 2);
        assert_eq!(ds("0,2,3").unwrap().span(), 1);
        assert_eq!(ds("0,4,6").unwrap().span(), 2);
        assert_eq!(ds("0,3+").unwrap().span(), 1);
        assert_eq!(ds("0,1,4").unwrap().span(), 1);
        assert_eq!(ds("0,5").unwrap().span(), 5);
    }

    #[test]
    fn membership_and_display() {
        let s = ds(" 3, 0 ,7+").unwrap();
        assert_eq!(s.to_string(), "0,3,7+");
        assert!(s.contains(0) && s.contains(3) && s.contains(7) && s.contains(100));
        assert!(!s.contains(1) && !s.contains(6));
        assert_eq!(s.boundary(), 7);
        assert_eq!(DegreeSet::naturals().to_string(), "0+");
        assert_eq!(ds("0,2,5").unwrap().boundary(), 6);
        assert_eq!(ds("0,2,5").unwrap().max_degree(), Some(5));
    }

    #[test]
    fn serde_as_string() {
        let s = ds("0,2,3").unwrap();
        let back: DegreeSet = s.to_string().parse().unwrap();
        assert_eq!(s, back);
    }
}
