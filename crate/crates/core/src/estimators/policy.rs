//! Rules that pick one active component's gradient term when `|T(v)| > 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::Error;
use crate::radial::ComponentTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TiePolicy {
    LowestIndex,
    HighestIndex,
    /// Term with the largest coordinate `j` (0-based).
    MaxCoordinate(usize),
    /// Term with the smallest coordinate `j` (0-based).
    MinCoordinate(usize),
}

impl TiePolicy {
    /// Picks a term; `terms` is non-empty and sorted by component index.
    pub fn select<'a>(&self, terms: &'a [ComponentTerm]) -> &'a ComponentTerm {
        match *self {
            TiePolicy::LowestIndex => &terms[0],
            TiePolicy::HighestIndex => &terms[terms.len() - 1],
            TiePolicy::MaxCoordinate(j) => terms
                .iter()
                .reduce(|best, t| if t.value[j] > best.value[j] { t } else { best })
                .expect("non-empty active set"),
            TiePolicy::MinCoordinate(j) => terms
                .iter()
                .reduce(|best, t| if t.value[j] < best.value[j] { t } else { best })
                .expect("non-empty active set"),
        }
    }

    pub fn coordinate(&self) -> Option<usize> {
        match *self {
            TiePolicy::MaxCoordinate(j) | TiePolicy::MinCoordinate(j) => Some(j),
            _ => None,
        }
    }

    /// Lowest, highest and the per-coordinate extremes for an `n`-dimensional decision.
    pub fn all(n: usize) -> Vec<TiePolicy> {
        let mut out = vec![TiePolicy::LowestIndex, TiePolicy::HighestIndex];
        out.extend(Self::extremes(n));
        out
    }

    pub fn extremes(n: usize) -> Vec<TiePolicy> {
        (0..n).flat_map(|j| [TiePolicy::MaxCoordinate(j), TiePolicy::MinCoordinate(j)]).collect()
    }

    /// Parses a comma-separated list: `lowest`, `highest`, `max:J`, `min:J` with 1-based `J`,
    /// or `extremes` (all `max:J`/`min:J`) and `all`.
    pub fn parse_list(src: &str, n: usize) -> Result<Vec<TiePolicy>, Error> {
        let mut out = Vec::new();
        for item in src.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "extremes" => out.extend(Self::extremes(n)),
                "all" => out.extend(Self::all(n)),
                other => {
                    let p: TiePolicy = other.parse()?;
                    if let Some(j) = p.coordinate() {
                        if j >= n {
                            return Err(Error::InvalidArgument(format!("policy `{other}` refers to x{}", j + 1)));
                        }
                    }
                    out.push(p);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty policy list".into()));
        }
        let mut seen = Vec::with_capacity(out.len());
        out.retain(|p| {
            let fresh = !seen.contains(p);
            seen.push(*p);
            fresh
        });
        Ok(out)
    }
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let coord = |rest: &str| -> Result<usize, Error> {
            match rest.parse::<usize>() {
                Ok(j) if j >= 1 => Ok(j - 1),
                _ => Err(Error::InvalidArgument(format!("bad coordinate in policy `{s}`"))),
            }
        };
        match s {
            "lowest" => Ok(TiePolicy::LowestIndex),
            "highest" => Ok(TiePolicy::HighestIndex),
            _ => {
                if let Some(rest) = s.strip_prefix("max:") {
                    Ok(TiePolicy::MaxCoordinate(coord(rest)?))
                } else if let Some(rest) = s.strip_prefix("min:") {
                    Ok(TiePolicy::MinCoordinate(coord(rest)?))
                } else {
                    Err(Error::InvalidArgument(format!("unknown tie policy `{s}`")))
                }
            }
        }
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TiePolicy::LowestIndex => write!(f, "lowest"),
            TiePolicy::HighestIndex => write!(f, "highest"),
            TiePolicy::MaxCoordinate(j) => write!(f, "max:{}", j + 1),
            TiePolicy::MinCoordinate(j) => write!(f, "min:{}", j + 1),
        }
    }
}

impl Serialize for TiePolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(component: usize, value: Vec<f64>) -> ComponentTerm {
        ComponentTerm { component, denominator: 1.0, value }
    }

    #[test]
    fn selection() {
        let terms = vec![term(0, vec![1.0, -2.0]), term(3, vec![0.5, 4.0])];
        assert_eq!(TiePolicy::LowestIndex.select(&terms).component, 0);
        assert_eq!(TiePolicy::HighestIndex.select(&terms).component, 3);
        assert_eq!(TiePolicy::MaxCoordinate(0).select(&terms).component, 0);
        assert_eq!(TiePolicy::MaxCoordinate(1).select(&terms).component, 3);
        assert_eq!(TiePolicy::MinCoordinate(1).select(&terms).component, 0);
    }

    #[test]
    fn parsing_round_trip() {
        let list = TiePolicy::parse_list("lowest, highest,max:2,min:1", 2).unwrap();
        let text: Vec<String> = list.iter().map(|p| p.to_string()).collect();
        assert_eq!(text, ["lowest", "highest", "max:2", "min:1"]);
        assert_eq!(TiePolicy::parse_list("extremes", 2).unwrap().len(), 4);
        assert_eq!(TiePolicy::parse_list("all,lowest", 1).unwrap().len(), 4);
        assert!(TiePolicy::parse_list("max:3", 2).is_err());
        assert!(TiePolicy::parse_list("max:0", 2).is_err());
        assert!(TiePolicy::parse_list("sideways", 2).is_err());
        assert!(TiePolicy::parse_list("", 2).is_err());
    }
}
