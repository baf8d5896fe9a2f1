//! Parsers for the compact range and fold notations used in configs and on
//! the command line.

use crate::error::{Error, Result};

/// Parses `a..b` (inclusive) or a single rank `a`.
pub fn parse_rank_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("invalid rank range '{}', expected a..b", s));
    let s = s.trim();
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?)
        }
        None => {
            let k = s.parse::<usize>().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty rank range '{}'", s)));
    }
    Ok((lo..=hi).collect())
}

/// Formats ranks back as `a..b` when contiguous, else a comma list.
pub fn format_ranks(ranks: &[usize]) -> String {
    match (ranks.first(), ranks.last()) {
        (Some(&a), Some(&b)) if ranks.windows(2).all(|w| w[1] == w[0] + 1) => format!("{}..{}", a, b),
        _ => ranks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    }
}

/// Parses `HxL`, e.g. `3x3`.
pub fn parse_folds(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("invalid folds '{}', expected HxL such as 3x3", s));
    let (h, l) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let h = h.trim().parse::<usize>().map_err(|_| bad())?;
    let l = l.trim().parse::<usize>().map_err(|_| bad())?;
    if h < 2 || l < 2 {
        return Err(Error::InvalidArgument(format!("folds '{}' need at least 2 groups per side", s)));
    }
    Ok((h, l))
}
