use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A candidate: a non-empty set of attributes drawn from a vocabulary of
/// `vocab` symbols, stored as sorted attribute indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Instance {
    vocab: usize,
    attrs: Vec<usize>,
}

impl Instance {
    pub fn new(vocab: usize, mut attrs: Vec<usize>) -> Result<Self> {
        attrs.sort_unstable();
        attrs.dedup();
        if attrs.is_empty() {
            return Err(Error::Argument("an instance needs at least one attribute".into()));
        }
        if let Some(&a) = attrs.iter().find(|&&a| a >= vocab) {
            return Err(Error::Argument(format!(
                "attribute {a} outside vocabulary of size {vocab}"
            )));
        }
        Ok(Instance { vocab, attrs })
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn attrs(&self) -> &[usize] {
        &self.attrs
    }

    pub fn has(&self, attr: usize) -> bool {
        self.attrs.binary_search(&attr).is_ok()
    }

    pub fn multi_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab];
        for &a in &self.attrs {
            v[a] = 1.0;
        }
        v
    }
}

/// The universe candidates are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpace {
    /// Every non-empty subset of `0..vocab` with at most `max_attrs` members.
    NumberSet { vocab: usize, max_attrs: usize },
    /// Exactly one attribute per category; attributes of category `c` occupy a
    /// contiguous block of the vocabulary.
    ObjectAttributes { categories: Vec<(String, usize)> },
}

const COLORS: [&str; 6] = ["blue", "red", "yellow", "green", "magenta", "cyan"];
const SHAPES: [&str; 6] = ["sphere", "cone", "cube", "cylinder", "ellipsoid", "torus"];
const SIZES: [&str; 2] = ["small", "large"];
const LOCATIONS: [&str; 4] = ["upper-left", "upper-right", "lower-left", "lower-right"];

impl InstanceSpace {
    /// Numbers 0..=9, at most four per set (385 instances).
    pub fn number_set_4() -> Self {
        InstanceSpace::NumberSet {
            vocab: 10,
            max_attrs: 4,
        }
    }

    /// Numbers 0..=11, at most five per set (1585 instances).
    pub fn number_set_7() -> Self {
        InstanceSpace::NumberSet {
            vocab: 12,
            max_attrs: 5,
        }
    }

    /// Six colors, six shapes, two sizes, four locations: 288 objects over 18 attributes.
    pub fn objects() -> Self {
        InstanceSpace::ObjectAttributes {
            categories: vec![
                ("color".into(), 6),
                ("shape".into(), 6),
                ("size".into(), 2),
                ("location".into(), 4),
            ],
        }
    }

    pub fn vocab(&self) -> usize {
        match self {
            InstanceSpace::NumberSet { vocab, .. } => *vocab,
            InstanceSpace::ObjectAttributes { categories } => categories.iter().map(|c| c.1).sum(),
        }
    }

    /// Message space size: one message per attribute.
    pub fn num_messages(&self) -> usize {
        self.vocab()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InstanceSpace::NumberSet { vocab, max_attrs } => {
                if *vocab == 0 || *max_attrs == 0 {
                    return Err(Error::Config("number-set space needs vocab and max_attrs > 0".into()));
                }
                if max_attrs > vocab {
                    return Err(Error::Config(format!(
                        "max_attrs {max_attrs} exceeds vocabulary size {vocab}"
                    )));
                }
            }
            InstanceSpace::ObjectAttributes { categories } => {
                if categories.is_empty() || categories.iter().any(|c| c.1 == 0) {
                    return Err(Error::Config("object space needs non-empty categories".into()));
                }
            }
        }
        Ok(())
    }

    /// Attribute index ranges of the categories; a number-set space is one block.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        match self {
            #[allow(clippy::single_range_in_vec_init)]
            InstanceSpace::NumberSet { vocab, .. } => vec![0..*vocab],
            InstanceSpace::ObjectAttributes { categories } => {
                let mut start = 0;
                categories
                    .iter()
                    .map(|(_, n)| {
                        let r = start..start + n;
                        start += n;
                        r
                    })
                    .collect()
            }
        }
    }

    /// Human-readable name of an attribute.
    pub fn attr_name(&self, attr: usize) -> String {
        match self {
            InstanceSpace::NumberSet { .. } => attr.to_string(),
            InstanceSpace::ObjectAttributes { categories } => {
                let default_names: [&[&str]; 4] = [&COLORS, &SHAPES, &SIZES, &LOCATIONS];
                let mut start = 0;
                for (ci, (cat, n)) in categories.iter().enumerate() {
                    if attr < start + n {
                        let local = attr - start;
                        return match default_names.get(ci) {
                            Some(names) if names.len() == *n => names[local].to_string(),
                            _ => format!("{cat}{local}"),
                        };
                    }
                    start += n;
                }
                format!("attr{attr}")
            }
        }
    }

    /// Every instance of the space, in lexicographic order of attribute lists.
    pub fn enumerate(&self) -> Result<Vec<Instance>> {
        self.validate()?;
        let vocab = self.vocab();
        let mut out = match self {
            InstanceSpace::NumberSet { max_attrs, .. } => {
                let mut out = Vec::new();
                for size in 1..=*max_attrs {
                    for combo in combinations(vocab, size) {
                        out.push(Instance { vocab, attrs: combo });
                    }
                }
                out
            }
            InstanceSpace::ObjectAttributes { .. } => {
                let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
                for block in self.blocks() {
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            block.clone().map(move |a| {
                                let mut p = prefix.clone();
                                p.push(a);
                                p
                            })
                        })
                        .collect();
                }
                acc.into_iter()
                    .map(|attrs| Instance { vocab, attrs })
                    .collect()
            }
        };
        out.sort();
        Ok(out)
    }

    /// Whether `inst` belongs to this space.
    pub fn contains(&self, inst: &Instance) -> bool {
        if inst.vocab != self.vocab() {
            return false;
        }
        match self {
            InstanceSpace::NumberSet { max_attrs, .. } => inst.attrs.len() <= *max_attrs,
            InstanceSpace::ObjectAttributes { .. } => self
                .blocks()
                .iter()
                .all(|b| inst.attrs.iter().filter(|a| b.contains(a)).count() == 1),
        }
    }

    /// Parses `name` into an instance: attribute names (object space) or
    /// numbers, separated by whitespace or commas.
    pub fn parse_instance(&self, text: &str) -> Result<Instance> {
        let mut attrs = Vec::new();
        for tok in text
            .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')')
            .filter(|t| !t.is_empty())
        {
            let idx = match tok.parse::<usize>() {
                Ok(i) => i,
                Err(_) => (0..self.vocab())
                    .find(|&a| self.attr_name(a) == tok)
                    .ok_or_else(|| Error::Argument(format!("unknown attribute {tok}")))?,
            };
            attrs.push(idx);
        }
        let inst = Instance::new(self.vocab(), attrs)?;
        if !self.contains(&inst) {
            return Err(Error::Argument(format!("{text} is not an instance of this space")));
        }
        Ok(inst)
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
