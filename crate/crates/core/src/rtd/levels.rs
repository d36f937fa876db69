use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::Instance;

/// Difficulty of a candidate in a one-message game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    /// Identifiable by a unique attribute after removing `k` easier rounds.
    Finite(usize),
    /// Never acquires a unique attribute.
    Unreachable,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(k) => write!(f, "{k}"),
            Level::Unreachable => write!(f, "inf"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Level of every candidate.
///
/// Candidates owning an attribute shared with no other remaining candidate
/// form the current level and are removed together; the loop repeats until
/// nothing is left or no remaining candidate has a unique attribute.
pub fn game_levels<C: AsRef<Instance>>(candidates: &[C]) -> Result<Vec<Level>> {
    let cands: Vec<&Instance> = candidates.iter().map(AsRef::as_ref).collect();
    for i in 0..cands.len() {
        for j in 0..i {
            if cands[i] == cands[j] {
                return Err(Error::Argument(format!("candidates {j} and {i} are identical")));
            }
        }
    }
    let mut levels = vec![Level::Unreachable; cands.len()];
    let mut remaining: Vec<usize> = (0..cands.len()).collect();
    let mut k = 0;
    while !remaining.is_empty() {
        let unique: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                cands[i]
                    .attrs()
                    .iter()
                    .any(|&a| remaining.iter().all(|&j| j == i || !cands[j].has(a)))
            })
            .collect();
        if unique.is_empty() {
            break;
        }
        for &i in &unique {
            levels[i] = Level::Finite(k);
        }
        remaining.retain(|i| !unique.contains(i));
        k += 1;
    }
    Ok(levels)
}
