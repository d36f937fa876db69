use serde::Serialize;

use crate::error::{Error, Result};

/// Largest instance domain accepted by the exhaustive search.
pub const MAX_DOMAIN: usize = 20;
/// Largest class accepted by the exhaustive search.
pub const MAX_CONCEPTS: usize = 12;

/// A set of distinct binary concepts over `n` instances, stored as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptClass {
    n: usize,
    concepts: Vec<u32>,
}

impl ConceptClass {
    pub fn new(n: usize, concepts: Vec<Vec<bool>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("instance domain must be nonempty".into()));
        }
        if n > MAX_DOMAIN || concepts.len() > MAX_CONCEPTS {
            return Err(Error::Argument(format!(
                "exhaustive search limited to n <= {MAX_DOMAIN} and |C| <= {MAX_CONCEPTS}, got n = {n}, |C| = {}",
                concepts.len()
            )));
        }
        let mut masks = Vec::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if c.len() != n {
                return Err(Error::dim("concept", n, c.len()));
            }
            let m = c.iter().enumerate().fold(0u32, |acc, (x, &b)| acc | ((b as u32) << x));
            if masks.contains(&m) {
                return Err(Error::Argument(format!("concept {i} is a duplicate")));
            }
            masks.push(m);
        }
        Ok(ConceptClass { n, concepts: masks })
    }

    /// Parses one concept per line, written as a 0/1 string. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<bool> = line
                .chars()
                .filter(|c| !c.is_whitespace() && *c != ',')
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::Data(format!("line {}: unexpected character {other:?}", lineno + 1))),
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Data("concepts have different lengths".into()));
        }
        ConceptClass::new(n, rows).map_err(|e| match e {
            Error::Argument(msg) => Error::Data(msg),
            other => other,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, i: usize) -> Vec<bool> {
        (0..self.n).map(|x| self.concepts[i] >> x & 1 == 1).collect()
    }

    fn masks(&self) -> &[u32] {
        &self.concepts
    }
}

/// Smallest set of instances whose labels separate concept `c` from every
/// other concept in `others`, as an instance bitmask.
fn min_teaching_set(n: usize, c: u32, others: &[u32]) -> u32 {
    let rivals: Vec<u32> = others.iter().filter(|&&o| o != c).map(|&o| o ^ c).collect();
    if rivals.is_empty() {
        return 0;
    }
    for size in 1..=n {
        if let Some(s) = subsets_of_size(n, size).find(|s| rivals.iter().all(|d| d & s != 0)) {
            return s;
        }
    }
    unreachable!("distinct concepts always differ somewhere")
}

/// Bitmasks over `n` bits with exactly `k` ones, in increasing order.
fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u32> {
    let limit = 1u32 << n;
    let mut cur = if k == 0 { 0 } else { (1u32 << k) - 1 };
    let mut done = k > n;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = cur;
        if k == 0 {
            done = true;
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            cur = (((r ^ cur) >> 2) / c) | r;
            if cur >= limit {
                done = true;
            }
        }
        Some(out)
    })
}

fn check_index(class: &ConceptClass, c: usize) -> Result<()> {
    if c >= class.len() {
        return Err(Error::Argument(format!("concept {c} not in a class of {}", class.len())));
    }
    Ok(())
}

/// Instances of a minimum teaching set of concept `c`.
pub fn teaching_set(class: &ConceptClass, c: usize) -> Result<Vec<usize>> {
    check_index(class, c)?;
    let s = min_teaching_set(class.n, class.masks()[c], class.masks());
    Ok((0..class.n).filter(|x| s >> x & 1 == 1).collect())
}

/// `TD(c, C)`: size of the smallest labeled sample that leaves only `c`
/// consistent. Zero for a singleton class.
pub fn teaching_dimension(class: &ConceptClass, c: usize) -> Result<usize> {
    Ok(teaching_set(class, c)?.len())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TeachingHierarchy {
    /// `(concept indices, d_j)` in extraction order.
    pub levels: Vec<(Vec<usize>, usize)>,
}

/// Repeatedly removes every concept of minimum teaching dimension with
/// respect to the concepts still remaining.
pub fn teaching_hierarchy(class: &ConceptClass) -> TeachingHierarchy {
    let masks = class.masks();
    let mut remaining: Vec<usize> = (0..masks.len()).collect();
    let mut levels = Vec::new();
    while !remaining.is_empty() {
        let rest: Vec<u32> = remaining.iter().map(|&i| masks[i]).collect();
        let tds: Vec<usize> = remaining
            .iter()
            .map(|&i| min_teaching_set(class.n, masks[i], &rest).count_ones() as usize)
            .collect();
        let d = *tds.iter().min().expect("remaining is nonempty");
        let (level, keep): (Vec<_>, Vec<_>) = remaining.iter().zip(&tds).partition(|(_, &t)| t == d);
        levels.push((level.into_iter().map(|(&i, _)| i).collect(), d));
        remaining = keep.into_iter().map(|(&i, _)| i).collect();
    }
    TeachingHierarchy { levels }
}

/// `RTD(C) = max_j d_j`; zero for an empty class.
pub fn rtd(class: &ConceptClass) -> usize {
    teaching_hierarchy(class).levels.iter().map(|l| l.1).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // columns: blue, red, sphere, cone
    fn fig1() -> ConceptClass {
        ConceptClass::parse("1010\n0110\n1001\n").unwrap()
    }

    #[test]
    fn three_object_class() {
        let c = fig1();
        assert_eq!(teaching_dimension(&c, 0).unwrap(), 2);
        assert_eq!(teaching_dimension(&c, 1).unwrap(), 1);
        // either "red" or "not blue" singles out the red sphere
        let s = teaching_set(&c, 1).unwrap();
        assert!(s == vec![0] || s == vec![1]);
        assert_eq!(teaching_dimension(&c, 2).unwrap(), 1);
        let h = teaching_hierarchy(&c);
        assert_eq!(h.levels, vec![(vec![1, 2], 1), (vec![0], 0)]);
        assert_eq!(rtd(&c), 1);
    }

    #[test]
    fn singleton_and_complements() {
        let single = ConceptClass::new(3, vec![vec![true, false, true]]).unwrap();
        assert_eq!(teaching_dimension(&single, 0).unwrap(), 0);
        assert_eq!(rtd(&single), 0);
        let comp = ConceptClass::new(3, vec![vec![true, false, true], vec![false, true, false]]).unwrap();
        assert_eq!(teaching_hierarchy(&comp).levels, vec![(vec![0, 1], 1)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(teaching_dimension(&fig1(), 3), Err(Error::Argument(_))));
        assert!(ConceptClass::new(2, vec![vec![true, false], vec![true, false]]).is_err());
        assert!(ConceptClass::new(21, vec![vec![false; 21]]).is_err());
        assert!(ConceptClass::new(2, vec![vec![false; 2]; 13]).is_err());
        assert!(matches!(ConceptClass::parse("10\n1x\n"), Err(Error::Data(_))));
    }

    #[test]
    fn gosper_enumerates_binomial_counts() {
        for n in 1..=8 {
            for k in 0..=n {
                let all: Vec<u32> = subsets_of_size(n, k).collect();
                let brute: Vec<u32> = (0..1u32 << n).filter(|s| s.count_ones() as usize == k).collect();
                assert_eq!(all, brute);
            }
        }
    }

    fn class_strategy() -> impl Strategy<Value = ConceptClass> {
        (1usize..=8).prop_flat_map(|n| {
            prop::collection::btree_set(0u32..(1 << n), 1..=6.min(1 << n)).prop_map(move |set| {
                let rows = set.into_iter().map(|m| (0..n).map(|x| m >> x & 1 == 1).collect()).collect();
                ConceptClass::new(n, rows).unwrap()
            })
        })
    }

    /// Teaching dimension by checking every subset of instances.
    fn brute_td(class: &ConceptClass, c: usize) -> usize {
        let m = class.masks();
        (0..1u32 << class.n)
            .filter(|s| m.iter().all(|&o| o == m[c] || (o ^ m[c]) & s != 0))
            .map(|s| s.count_ones() as usize)
            .min()
            .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn hierarchy_partitions_and_rtd_bounded(class in class_strategy()) {
            let h = teaching_hierarchy(&class);
            let mut all: Vec<usize> = h.levels.iter().flat_map(|l| l.0.clone()).collect();
            all.sort();
            prop_assert_eq!(all, (0..class.len()).collect::<Vec<_>>());
            let max_td = (0..class.len()).map(|c| teaching_dimension(&class, c).unwrap()).max().unwrap();
            prop_assert!(rtd(&class) <= max_td);
            for c in 0..class.len() {
                prop_assert_eq!(teaching_dimension(&class, c).unwrap(), brute_td(&class, c));
            }
        }
    }
}
